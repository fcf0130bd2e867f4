//! Frame-wise transfer features of a recording: 0.3 s windows every 0.1 s,
//! each tiled to two seconds and passed through the network.

use sustain_pedal::features::{extract_frame_features, features_to_csv};
use sustain_pedal::nn::{Network, NetworkConfig};
use sustain_pedal::synth::{random_passage, render, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> sustain_pedal::Result<()> {
    let network: Network<f32> = Network::new(NetworkConfig::multi_reduced(12, 3), 0)?;
    let perf = random_passage(3.0, &mut ChaCha8Rng::seed_from_u64(2));
    let signal = render(&perf, true, &SynthConfig::default())?.slice_seconds(0.0, 3.0);
    let rows = extract_frame_features(&network, &signal, "demo")?;
    println!("{} frames x {} features", rows.len(), rows[0].values.len());
    print!("{}", features_to_csv(&rows[..3]));
    Ok(())
}
