//! Self-describing binary network-state file: versioned header, the fully
//! resolved TOML config, little-endian 64-bit weights, trained adaptive
//! thresholds, the optional label assignment, and a trailing checksum.
//! Round trips are bit-exact.

use crate::config::NetworkConfig;
use crate::engine::LabelAssignment;
use crate::error::{Error, Result};
use crate::network::{Network, Synapses};
use crate::topology::{FcWeights, KernelBank};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CSNN";
const VERSION: u32 = 1;

const TAG_CONV: u8 = 0;
const TAG_FC: u8 = 1;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i16(&mut self, v: i16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let slice = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or(Error::ChecksumFailure)?;
        self.pos += n;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i16(&mut self) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.take(len)
    }
}

/// Serialize the trained network plus an optional label assignment.
pub fn save_network(
    network: &Network,
    assignment: Option<&LabelAssignment>,
    path: &Path,
) -> Result<()> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u64(network.config.seed);
    w.bytes(network.config.to_toml()?.as_bytes());

    match &network.synapses {
        Synapses::Conv(bank) => {
            w.u8(TAG_CONV);
            w.u32(bank.kernel_h as u32);
            w.u32(bank.kernel_w as u32);
            w.u32(bank.num_neurons() as u32);
            w.f64(bank.w_max);
            for kernel in &bank.kernels {
                for &weight in kernel {
                    w.f64(weight);
                }
            }
        }
        Synapses::Fc(fc) => {
            w.u8(TAG_FC);
            w.u32(fc.num_pixels as u32);
            w.u32(fc.num_neurons() as u32);
            w.f64(fc.w_max);
            for row in &fc.rows {
                for &weight in row {
                    w.f64(weight);
                }
            }
        }
    }

    for state in &network.exc_states {
        w.f64(state.theta_adapt);
    }

    match assignment {
        Some(a) => {
            w.u8(1);
            w.u32(a.num_classes as u32);
            w.u32(a.tags.len() as u32);
            for tag in &a.tags {
                w.i16(tag.map(|c| c as i16).unwrap_or(-1));
            }
            for row in &a.tallies {
                for &t in row {
                    w.u64(t);
                }
            }
        }
        None => w.u8(0),
    }

    let checksum = fnv1a64(&w.buf);
    w.u64(checksum);
    std::fs::write(path, &w.buf)?;
    Ok(())
}

/// Load a network-state file, verifying checksum, magic, and version
/// before reconstructing anything.
pub fn load_network(path: &Path) -> Result<(Network, Option<LabelAssignment>)> {
    let buf = std::fs::read(path)?;
    if buf.len() < MAGIC.len() + 4 + 8 {
        return Err(Error::ChecksumFailure);
    }
    let (body, tail) = buf.split_at(buf.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a64(body) != stored {
        return Err(Error::ChecksumFailure);
    }

    let mut r = Reader { buf: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format(format!(
            "{}: not a network-state file",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            expected: VERSION,
            found: version,
        });
    }
    let _seed = r.u64()?;
    let config_text = std::str::from_utf8(r.bytes()?)
        .map_err(|_| Error::Format("config block is not UTF-8".into()))?;
    let config = NetworkConfig::from_toml(config_text)?;

    let synapses = match r.u8()? {
        TAG_CONV => {
            let kernel_h = r.u32()? as usize;
            let kernel_w = r.u32()? as usize;
            let num = r.u32()? as usize;
            let w_max = r.f64()?;
            let mut kernels = Vec::with_capacity(num);
            for _ in 0..num {
                let mut kernel = Vec::with_capacity(kernel_h * kernel_w);
                for _ in 0..kernel_h * kernel_w {
                    kernel.push(r.f64()?);
                }
                kernels.push(kernel);
            }
            Synapses::Conv(KernelBank {
                kernel_h,
                kernel_w,
                w_max,
                kernels,
            })
        }
        TAG_FC => {
            let num_pixels = r.u32()? as usize;
            let num = r.u32()? as usize;
            let w_max = r.f64()?;
            let mut rows = Vec::with_capacity(num);
            for _ in 0..num {
                let mut row = Vec::with_capacity(num_pixels);
                for _ in 0..num_pixels {
                    row.push(r.f64()?);
                }
                rows.push(row);
            }
            Synapses::Fc(FcWeights {
                num_pixels,
                w_max,
                rows,
            })
        }
        tag => {
            return Err(Error::Format(format!("unknown synapse tag {tag}")));
        }
    };

    let mut theta = Vec::with_capacity(config.network.num_excitatory);
    for _ in 0..config.network.num_excitatory {
        theta.push(r.f64()?);
    }

    let assignment = match r.u8()? {
        0 => None,
        1 => {
            let num_classes = r.u32()? as usize;
            let num_neurons = r.u32()? as usize;
            let mut tags = Vec::with_capacity(num_neurons);
            for _ in 0..num_neurons {
                let raw = r.i16()?;
                tags.push(if raw < 0 { None } else { Some(raw as u8) });
            }
            let mut tallies = Vec::with_capacity(num_neurons);
            for _ in 0..num_neurons {
                let mut row = Vec::with_capacity(num_classes);
                for _ in 0..num_classes {
                    row.push(r.u64()?);
                }
                tallies.push(row);
            }
            Some(LabelAssignment {
                tags,
                tallies,
                num_classes,
            })
        }
        tag => {
            return Err(Error::Format(format!("unknown assignment tag {tag}")));
        }
    };

    let network = Network::restore(config, synapses, theta)?;
    Ok((network, assignment))
}
