//! Network checkpoints in the shared binary container.
//!
//! Blocks: the trainable parameters in [`Network::params`] order, followed
//! by each block's running mean and running variance. The header holds the
//! architecture as `key=value` text.

use std::path::Path;

use super::network::{Network, NetworkConfig};
use crate::container::{Block, Container};
use crate::error::{Error, Result};

pub const NETWORK_KIND: &[u8; 4] = b"NET\0";

pub fn network_to_bytes(net: &Network<f32>) -> Vec<u8> {
    let mut blocks: Vec<Block> = net.params().iter().map(|p| Block::F32(p.value.clone())).collect();
    for layer in 0..net.config().layers {
        let bn = net.batch_norm(layer);
        blocks.push(Block::F32(bn.running_mean.clone()));
        blocks.push(Block::F32(bn.running_var.clone()));
    }
    Container {
        kind: *NETWORK_KIND,
        header: net.config().to_string(),
        blocks,
    }
    .to_bytes()
}

fn take_f32(block: Block, index: usize, expected: usize) -> Result<Vec<f32>> {
    match block {
        Block::F32(v) if v.len() == expected => Ok(v),
        Block::F32(v) => Err(Error::BlockMismatch(format!(
            "block {index} holds {} values, architecture needs {expected}",
            v.len()
        ))),
        Block::F64(_) => Err(Error::BlockMismatch(format!("block {index} is f64, expected f32"))),
    }
}

pub fn network_from_bytes(bytes: &[u8]) -> Result<Network<f32>> {
    let container = Container::from_bytes(bytes, NETWORK_KIND)?;
    let config: NetworkConfig = container
        .header
        .parse()
        .map_err(|e: Error| Error::BlockMismatch(format!("bad architecture header: {e}")))?;
    let mut net = Network::<f32>::new(config, 0)?;
    let layers = net.config().layers;
    let n_params = net.params().len();
    let expected = n_params + 2 * layers;
    if container.blocks.len() != expected {
        return Err(Error::BlockMismatch(format!(
            "{} blocks stored, architecture needs {expected}",
            container.blocks.len()
        )));
    }
    let mut blocks = container.blocks.into_iter().enumerate();
    for p in net.params_mut() {
        let (i, b) = blocks.next().unwrap();
        p.value = take_f32(b, i, p.len())?;
    }
    for layer in 0..layers {
        let c = net.batch_norm(layer).channels();
        let (i, b) = blocks.next().unwrap();
        let mean = take_f32(b, i, c)?;
        let (i, b) = blocks.next().unwrap();
        let var = take_f32(b, i, c)?;
        let bn = net.batch_norm_mut(layer);
        bn.running_mean = mean;
        bn.running_var = var;
    }
    Ok(net)
}

pub fn save_network(net: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, network_to_bytes(net))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network<f32>> {
    network_from_bytes(&std::fs::read(path)?)
}
