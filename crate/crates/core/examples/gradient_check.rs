//! Compares back-propagated gradients of a small network with central
//! finite differences.

use sustain_pedal::nn::{Network, NetworkConfig, Tensor};

fn main() -> sustain_pedal::Result<()> {
    let cfg = NetworkConfig::single(3, (3, 3), 2).with_input((8, 10));
    let mut net: Network<f64> = Network::new(cfg, 5)?;
    let data: Vec<f64> = (0..2 * 80).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
    let x = Tensor::new([2, 1, 8, 10], data)?;
    let labels = [0, 1];

    net.compute_gradients(&x, &labels)?;
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();

    let h = 1e-5;
    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for (i, g) in grads.iter().enumerate() {
            let mut probe = |delta: f64| -> sustain_pedal::Result<f64> {
                net.params_mut()[pi].value[i] += delta;
                let loss = net.compute_gradients(&x, &labels)?;
                net.params_mut()[pi].value[i] -= delta;
                Ok(loss)
            };
            let fd = (probe(h)? - probe(-h)?) / (2.0 * h);
            worst = worst.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-6));
        }
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
