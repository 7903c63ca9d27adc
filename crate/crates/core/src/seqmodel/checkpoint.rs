//! Binary checkpoint container.
//!
//! ```text
//! magic    8 bytes  "FGCKPT\0\0"
//! version  u32 LE   1
//! config   u32 LE length + UTF-8 TOML of the TrainConfig
//! vocab    32 bytes SHA-256 of the vocabulary file
//! count    u32 LE   number of tensors
//! tensor   u32 LE name length, name, u32 LE rank, rank × u64 LE dims,
//!          product(dims) × f64 LE values (row-major)
//! ```
//!
//! Tensor names are those of [`ModelParameters::tensors`], in that order.

use ndarray::ArrayD;
use thiserror::Error;

use super::params::{ModelDims, ModelParameters};
use super::train::TrainConfig;

const MAGIC: &[u8; 8] = b"FGCKPT\0\0";
const VERSION: u32 = 1;
const MAX_ELEMENTS: u64 = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("trailing bytes after last tensor")]
    Trailing,
    #[error("bad config section: {0}")]
    Config(String),
    #[error("bad tensor {name:?}: {message}")]
    Tensor { name: String, message: String },
    #[error("vocabulary hash mismatch")]
    VocabMismatch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParameters,
    pub config: TrainConfig,
    pub vocab_hash: [u8; 32],
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let config = toml::to_string(&self.config).expect("TrainConfig serializes");
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        out.extend_from_slice(&self.vocab_hash);
        let tensors = self.params.tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &x in t.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { buf: bytes };
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::Magic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let len = r.u32()? as usize;
        let text = std::str::from_utf8(r.take(len)?)
            .map_err(|e| CheckpointError::Config(e.to_string()))?;
        let config: TrainConfig =
            toml::from_str(text).map_err(|e| CheckpointError::Config(e.to_string()))?;
        let vocab_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        let count = r.u32()? as usize;
        let mut read = Vec::new();
        for _ in 0..count {
            let n = r.u32()? as usize;
            let name =
                String::from_utf8(r.take(n)?.to_vec()).map_err(|_| CheckpointError::Tensor {
                    name: String::new(),
                    message: "name is not UTF-8".into(),
                })?;
            let bad = |message: &str| CheckpointError::Tensor {
                name: name.clone(),
                message: message.to_string(),
            };
            let rank = r.u32()? as usize;
            if !(1..=2).contains(&rank) {
                return Err(bad("rank must be 1 or 2"));
            }
            let mut shape = Vec::with_capacity(rank);
            let mut elements: u64 = 1;
            for _ in 0..rank {
                let d = r.u64()?;
                elements = elements.saturating_mul(d);
                shape.push(d as usize);
            }
            if elements > MAX_ELEMENTS || elements.saturating_mul(8) > r.buf.len() as u64 {
                return Err(CheckpointError::Truncated);
            }
            let data: Vec<f64> = r
                .take(elements as usize * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if data.iter().any(|x| !x.is_finite()) {
                return Err(bad("non-finite value"));
            }
            let array = ArrayD::from_shape_vec(shape, data).map_err(|e| bad(&e.to_string()))?;
            read.push((name, array));
        }
        if !r.buf.is_empty() {
            return Err(CheckpointError::Trailing);
        }
        let params = assemble(read, &config)?;
        Ok(Checkpoint {
            params,
            config,
            vocab_hash,
        })
    }

    /// Errors unless the checkpoint was trained against `vocab_hash`.
    pub fn check_vocab(&self, vocab_hash: &[u8; 32]) -> Result<(), CheckpointError> {
        if &self.vocab_hash == vocab_hash {
            Ok(())
        } else {
            Err(CheckpointError::VocabMismatch)
        }
    }
}

fn assemble(
    read: Vec<(String, ArrayD<f64>)>,
    config: &TrainConfig,
) -> Result<ModelParameters, CheckpointError> {
    let shape_of = |name: &str| {
        read.iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a.shape().to_vec())
    };
    let missing = |name: &str| CheckpointError::Tensor {
        name: name.to_string(),
        message: "missing".into(),
    };
    let emb = shape_of("embedding").ok_or_else(|| missing("embedding"))?;
    if emb.len() != 2 {
        return Err(CheckpointError::Tensor {
            name: "embedding".into(),
            message: "must be a matrix".into(),
        });
    }
    let dims = ModelDims {
        vocab_size: emb[0],
        embed_dim: emb[1],
        hidden: config.hidden,
        latent: config.latent,
        layers: config.layers,
    };
    dims.validate()
        .map_err(|e| CheckpointError::Config(e.to_string()))?;
    if (dims.vocab_size as u64 + dims.hidden as u64)
        * (dims.hidden as u64 + dims.embed_dim as u64 + dims.latent as u64)
        * dims.layers as u64
        > MAX_ELEMENTS
    {
        return Err(CheckpointError::Config("model dimensions too large".into()));
    }
    let mut params = ModelParameters::zeros(dims);
    let expected = params.tensors().len();
    if read.len() != expected {
        return Err(CheckpointError::Tensor {
            name: String::new(),
            message: format!("expected {expected} tensors, found {}", read.len()),
        });
    }
    for ((name, mut slot), (got_name, array)) in params.tensors_mut().into_iter().zip(read) {
        if name != got_name {
            return Err(CheckpointError::Tensor {
                name: got_name,
                message: format!("expected {name} at this position"),
            });
        }
        if slot.shape() != array.shape() {
            return Err(CheckpointError::Tensor {
                name,
                message: format!("shape {:?}, expected {:?}", array.shape(), slot.shape()),
            });
        }
        slot.assign(&array);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let config = TrainConfig {
            hidden: 4,
            latent: 3,
            layers: 2,
            ..Default::default()
        };
        let dims = ModelDims {
            vocab_size: 6,
            embed_dim: 2,
            hidden: 4,
            latent: 3,
            layers: 2,
        };
        let params = ModelParameters::init(dims, None, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        Checkpoint {
            params,
            config,
            vocab_hash: [7; 32],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
        assert!(back.check_vocab(&[7; 32]).is_ok());
        assert_eq!(
            back.check_vocab(&[0; 32]),
            Err(CheckpointError::VocabMismatch)
        );
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        assert_eq!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 1]),
            Err(CheckpointError::Truncated)
        );
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(
            Checkpoint::from_bytes(&extra),
            Err(CheckpointError::Trailing)
        );
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert_eq!(Checkpoint::from_bytes(&magic), Err(CheckpointError::Magic));
        let mut version = bytes;
        version[8] = 9;
        assert_eq!(
            Checkpoint::from_bytes(&version),
            Err(CheckpointError::Version(9))
        );
    }
}
