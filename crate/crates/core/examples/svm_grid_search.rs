//! RBF SVM with grid search over bandwidth and penalty on two noisy rings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sustain_pedal::svm::{grid_search, train_svm, GridSpec, SvmParams};

fn main() -> sustain_pedal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..200 {
        let inner = i % 2 == 0;
        let r = if inner { 1.0 } else { 2.5 } + rng.gen_range(-0.4..0.4);
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        x.push(vec![r * a.cos(), r * a.sin()]);
        y.push(if inner { 1 } else { -1 });
    }
    let grid = grid_search(&x, &y, &GridSpec::standard(2), 0.2, 0, false)?;
    print!("{}", grid.to_csv());
    let model = train_svm(&x, &y, &SvmParams::new(grid.best_c, grid.best_gamma))?;
    println!("gamma {} C {}: {} support vectors", grid.best_gamma, grid.best_c, model.support_vectors.len());
    for p in [[0.0, 1.0], [2.5, 0.0]] {
        let (on, decision) = model.predict(&p)?;
        println!("{p:?} -> {} ({decision:+.3})", if on { "inner" } else { "outer" });
    }
    Ok(())
}
