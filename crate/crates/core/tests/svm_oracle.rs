//! SMO against an independent dual QP solver on small random problems.

mod common;

use common::{gram, oracle_dual, random_problem, GAMMA_C};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sustain_pedal::svm::{smo, SvmParams};

#[test]
fn smo_matches_qp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for problem in 0..10 {
        let (x, y) = random_problem(&mut rng);
        let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
        for (gamma, c) in GAMMA_C {
            let sol = smo(&x, &y, &SvmParams::new(c, gamma)).unwrap();
            let oracle = oracle_dual(&gram(&x, gamma), &yf, c);
            assert!(
                sol.dual_objective >= oracle - 1e-6,
                "problem {problem} gamma={gamma} C={c}: smo {} oracle {oracle}",
                sol.dual_objective
            );
            assert!(sol.violation < 1e-3);
        }
    }
}
