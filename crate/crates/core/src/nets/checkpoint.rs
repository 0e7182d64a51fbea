//! Checkpoint layout: one line of JSON header terminated by `\n`, then the
//! flat parameters as little-endian `f64`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{param_count, Activation, FeedforwardNet};
use crate::error::{Error, Result};
use crate::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

pub fn write_checkpoint<T: Scalar, W: Write>(net: &FeedforwardNet<T>, seed: u64, mut w: W) -> Result<()> {
    let header = CheckpointHeader { version: CHECKPOINT_VERSION, widths: net.widths().to_vec(), activation: net.activation, seed };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for x in net.flatten() {
        w.write_all(&x.to_f64_lossy().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(mut r: R) -> Result<(FeedforwardNet<T>, CheckpointHeader)> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Checkpoint("missing header line".into()));
    }
    let header: CheckpointHeader = serde_json::from_slice(&line[..line.len() - 1])?;
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", header.version)));
    }
    let d = param_count(&header.widths);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != d * 8 {
        return Err(Error::Checkpoint(format!("expected {d} parameters, found {} bytes", bytes.len())));
    }
    let flat: Vec<T> = bytes
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("chunk of 8"))))
        .collect();
    let mut net = FeedforwardNet::from_flat(&header.widths, &flat)?;
    net.activation = header.activation;
    Ok((net, header))
}

pub fn save_checkpoint<T: Scalar>(net: &FeedforwardNet<T>, seed: u64, path: &Path) -> Result<()> {
    write_checkpoint(net, seed, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(FeedforwardNet<T>, CheckpointHeader)> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let net = FeedforwardNet::<f64>::init_kaiming(&[3, 5, 2], 8).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, 8, &mut buf).unwrap();
        let (back, header) = read_checkpoint::<f64, _>(&buf[..]).unwrap();
        assert_eq!(back, net);
        assert_eq!(header.widths, vec![3, 5, 2]);
        assert_eq!(header.seed, 8);
        let text = String::from_utf8_lossy(&buf[..buf.iter().position(|&b| b == b'\n').unwrap()]).to_string();
        assert!(text.contains("\"activation\":\"relu\""));
    }

    #[test]
    fn truncated_payload_rejected() {
        let net = FeedforwardNet::<f64>::init_kaiming(&[2, 2], 1).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&net, 1, &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_checkpoint::<f64, _>(&buf[..]), Err(Error::Checkpoint(_))));
    }
}
