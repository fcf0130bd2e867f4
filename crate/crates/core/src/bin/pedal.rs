fn main() {
    std::process::exit(sustain_pedal::cli::main_with_args(std::env::args_os()));
}
