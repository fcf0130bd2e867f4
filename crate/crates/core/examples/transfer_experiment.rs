//! Trains the source network on synthetic pairs, then compares the three
//! detection methods on ten passages from a differently voiced instrument.
//!
//! `cargo run --release --example transfer_experiment [seed] [network.ckpt]`
//! reuses the checkpoint if it exists.

use std::path::Path;

use sustain_pedal::experiment::{target_passages, train_source, ExperimentConfig};
use sustain_pedal::nn::{load_network, save_network};
use sustain_pedal::pipeline::logo_cv;

fn main() -> sustain_pedal::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = ExperimentConfig::new(seed);
    let network = match args.get(1).map(Path::new) {
        Some(p) if p.exists() => load_network(p)?,
        cached => {
            let outcome = train_source(&cfg)?;
            let best = outcome.best_record();
            print!("{}", sustain_pedal::nn::history_to_csv(&outcome.history));
            println!("source task: epoch {} val_acc {:.4} val_auc {:.4}", best.epoch, best.val_acc, best.val_auc);
            if let Some(p) = cached {
                save_network(&outcome.network, p)?;
            }
            outcome.network
        }
    };
    let report = logo_cv(&target_passages(&cfg)?, &network, &cfg.cv)?;
    print!("{}", report.to_table());
    for f in &report.folds {
        if let Some((g, c)) = f.svm_choice {
            println!("{}: gamma {g:.6} C {c}", f.held_out);
        }
    }
    Ok(())
}
