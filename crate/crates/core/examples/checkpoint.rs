//! Saves a network, loads it back and checks the bytes and outputs agree.

use sustain_pedal::nn::{load_network, network_to_bytes, save_network, Network, NetworkConfig, Tensor};

fn main() -> sustain_pedal::Result<()> {
    let net: Network<f32> = Network::new(NetworkConfig::multi_reduced(6, 2).with_input((48, 24)), 9)?;
    let path = std::env::temp_dir().join("pedal-demo.ckpt");
    save_network(&net, &path)?;
    let back = load_network(&path)?;
    println!("{} bytes, identical: {}", network_to_bytes(&net).len(), network_to_bytes(&back) == network_to_bytes(&net));

    let x = Tensor::new([1, 1, 48, 24], (0..48 * 24).map(|i| (i % 7) as f32 / 7.0).collect())?;
    println!("pedal probability {:?} vs {:?}", net.predict_pedal(&x)?, back.predict_pedal(&x)?);
    Ok(())
}
