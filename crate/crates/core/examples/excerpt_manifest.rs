//! Paired pedal/no-pedal excerpt list with a per-composer cap.

use sustain_pedal::midi::{build_excerpt_manifest, TaggedPerformance};
use sustain_pedal::synth::random_passage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let perfs: Vec<TaggedPerformance> = ["chopin", "chopin", "liszt"]
        .iter()
        .enumerate()
        .map(|(i, composer)| TaggedPerformance {
            source_id: format!("{composer}_{i}"),
            composer_id: composer.to_string(),
            performance: random_passage(20.0, &mut rng),
        })
        .collect();
    let manifest = build_excerpt_manifest(&perfs, 5, 7, Some(0.5));
    print!("{}", manifest.to_csv());
    println!("{} pairs", manifest.n_pairs());
}
