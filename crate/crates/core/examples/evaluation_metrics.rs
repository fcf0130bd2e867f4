//! Precision/recall/F of the pedal-on label, micro-averaged F and ROC AUC.

use sustain_pedal::metrics::{auc_roc, micro_f1, prf};

fn main() -> sustain_pedal::Result<()> {
    let truth = [true, true, true, false, false, true, false, false];
    let pred = [true, true, false, false, true, true, false, false];
    let m = prf(&pred, &truth)?;
    println!("P1 {:.4} R1 {:.4} F1 {:.4}", m.precision, m.recall, m.f1);

    let folds = vec![(pred.to_vec(), truth.to_vec()), (vec![true; 4], vec![true, false, true, false])];
    println!("micro-F over both labels {:.4}", micro_f1(&folds)?);

    let scores = [0.9, 0.8, 0.35, 0.2, 0.6, 0.7, 0.1, 0.3];
    println!("AUC {:.4}", auc_roc(&scores, &truth)?);
    Ok(())
}
