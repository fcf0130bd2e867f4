//! Trains a reduced multi-shape network on a small synthetic pair set and
//! prints the per-epoch history.

use sustain_pedal::experiment::source_dataset;
use sustain_pedal::nn::{history_to_csv, train, NetworkConfig, TrainConfig};
use sustain_pedal::synth::SynthConfig;

fn main() -> sustain_pedal::Result<()> {
    let data = source_dataset(40, &SynthConfig::default())?;
    let tcfg = TrainConfig {
        batch_size: 8,
        max_epochs: 6,
        patience: 3,
        ..TrainConfig::default()
    };
    let outcome = train(&NetworkConfig::multi_reduced(6, 2), &tcfg, &data)?;
    print!("{}", history_to_csv(&outcome.history));
    println!("kept epoch {}", outcome.best_epoch);
    Ok(())
}
