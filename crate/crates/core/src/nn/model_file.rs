//! Versioned little-endian model container.
//!
//! ```text
//! "APGM" | u32 version (=1) | u32 layer count
//! per layer: u8 kind | u32 rank | rank x u32 dims | f32 weights... | f32 biases...
//! ```
//!
//! Kinds: 1 conv2d `[out, in, kh, kw]`, 2 maxpool `[size, size]`,
//! 3 dense `[out, in]`, 4 relu `[]`, 5 softmax `[]`. Weight and bias payloads
//! follow only conv2d and dense layers; the bias length is `dims[0]`. The file
//! has no padding and trailing bytes are rejected.

use std::fs;
use std::path::Path;

use super::layers::{Conv2d, Dense, Layer, MaxPool2d};
use super::network::Network;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 4] = *b"APGM";
pub const MODEL_VERSION: u32 = 1;

const KIND_CONV: u8 = 1;
const KIND_MAXPOOL: u8 = 2;
const KIND_DENSE: u8 = 3;
const KIND_RELU: u8 = 4;
const KIND_SOFTMAX: u8 = 5;

pub fn encode_model(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    let put_dims = |out: &mut Vec<u8>, kind: u8, dims: &[usize]| {
        out.push(kind);
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for &d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    };
    let put_floats = |out: &mut Vec<u8>, values: &[f32]| {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for layer in net.layers() {
        match layer {
            Layer::Conv2d(c) => {
                put_dims(
                    &mut out,
                    KIND_CONV,
                    &[c.out_channels, c.in_channels, c.kernel_h, c.kernel_w],
                );
                put_floats(&mut out, &c.weights);
                put_floats(&mut out, &c.bias);
            }
            Layer::MaxPool2d(p) => put_dims(&mut out, KIND_MAXPOOL, &[p.size, p.size]),
            Layer::Dense(d) => {
                put_dims(&mut out, KIND_DENSE, &[d.outputs, d.inputs]);
                put_floats(&mut out, &d.weights);
                put_floats(&mut out, &d.bias);
            }
            Layer::Relu => put_dims(&mut out, KIND_RELU, &[]),
            Layer::Softmax => put_dims(&mut out, KIND_SOFTMAX, &[]),
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::format(
                    field,
                    Some(self.pos),
                    format!("file truncated: need {n} bytes, {} left", self.bytes.len() - self.pos),
                )
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self, field: &str) -> Result<u8> {
        Ok(self.take(1, field)?[0])
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }

    fn floats(&mut self, n: usize, field: &str) -> Result<Vec<f32>> {
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::format(field, Some(self.pos), "size overflow"))?,
            field,
        )?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MODEL_MAGIC {
        return Err(Error::format(
            "magic",
            Some(0),
            format!("expected \"APGM\", found {magic:02x?}"),
        ));
    }
    let version = r.u32("version")?;
    if version != MODEL_VERSION {
        return Err(Error::format(
            "version",
            Some(4),
            format!("unsupported version {version}, expected {MODEL_VERSION}"),
        ));
    }
    let count = r.u32("layer_count")? as usize;
    let mut layers = Vec::with_capacity(count.min(64));
    for i in 0..count {
        let kind_at = r.pos;
        let kind = r.u8(&format!("layer[{i}].kind"))?;
        let rank = r.u32(&format!("layer[{i}].rank"))? as usize;
        let dims_field = format!("layer[{i}].dims");
        let expected_rank = match kind {
            KIND_CONV => 4,
            KIND_MAXPOOL => 2,
            KIND_DENSE => 2,
            KIND_RELU | KIND_SOFTMAX => 0,
            other => {
                return Err(Error::format(
                    format!("layer[{i}].kind"),
                    Some(kind_at),
                    format!("unknown layer kind {other}"),
                ))
            }
        };
        if rank != expected_rank {
            return Err(Error::format(
                format!("layer[{i}].rank"),
                Some(kind_at + 1),
                format!("kind {kind} needs rank {expected_rank}, found {rank}"),
            ));
        }
        let dims = (0..rank)
            .map(|_| r.u32(&dims_field).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let weights_field = format!("layer[{i}].weights");
        let bias_field = format!("layer[{i}].bias");
        let layer = match kind {
            KIND_CONV => {
                let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
                let n = n.ok_or_else(|| Error::format(&dims_field, Some(kind_at), "dimension overflow"))?;
                Layer::Conv2d(Conv2d {
                    out_channels: dims[0],
                    in_channels: dims[1],
                    kernel_h: dims[2],
                    kernel_w: dims[3],
                    weights: r.floats(n, &weights_field)?,
                    bias: r.floats(dims[0], &bias_field)?,
                })
            }
            KIND_MAXPOOL => {
                if dims[0] != dims[1] {
                    return Err(Error::format(
                        dims_field,
                        Some(kind_at),
                        "max-pool window must be square",
                    ));
                }
                Layer::MaxPool2d(MaxPool2d { size: dims[0] })
            }
            KIND_DENSE => {
                let n = dims[0]
                    .checked_mul(dims[1])
                    .ok_or_else(|| Error::format(&dims_field, Some(kind_at), "dimension overflow"))?;
                Layer::Dense(Dense {
                    outputs: dims[0],
                    inputs: dims[1],
                    weights: r.floats(n, &weights_field)?,
                    bias: r.floats(dims[0], &bias_field)?,
                })
            }
            KIND_RELU => Layer::Relu,
            _ => Layer::Softmax,
        };
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(
            "trailing",
            Some(r.pos),
            format!("{} unexpected bytes after the last layer", bytes.len() - r.pos),
        ));
    }
    Network::new(layers)
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(net))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    decode_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;

    #[test]
    fn round_trip_is_bit_identical() {
        for arch in [Architecture::Mlp, Architecture::Cnn] {
            let net = Network::init(arch, 3);
            let bytes = encode_model(&net);
            let back = decode_model(&bytes).unwrap();
            assert_eq!(back, net);
            assert_eq!(encode_model(&back), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_model(&Network::init(Architecture::Mlp, 0));
        assert_eq!(&bytes[..4], b"APGM");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[6, 0, 0, 0]);
        // first layer: dense [256, 784]
        assert_eq!(bytes[12], KIND_DENSE);
        assert_eq!(&bytes[13..17], &[2, 0, 0, 0]);
        assert_eq!(&bytes[17..21], &256u32.to_le_bytes());
        assert_eq!(&bytes[21..25], &784u32.to_le_bytes());
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Format { field, .. } => field,
            other => panic!("expected a format error, got {other}"),
        }
    }

    #[test]
    fn corrupt_files_name_the_field() {
        let good = encode_model(&Network::init(Architecture::Mlp, 1));

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert_eq!(field_of(decode_model(&bad_magic).unwrap_err()), "magic");

        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert_eq!(field_of(decode_model(&bad_version).unwrap_err()), "version");

        let truncated = &good[..good.len() - 3];
        assert_eq!(field_of(decode_model(truncated).unwrap_err()), "layer[5].rank");
        let cut_weights = &good[..good.len() - 100];
        assert_eq!(field_of(decode_model(cut_weights).unwrap_err()), "layer[4].weights");

        let mut trailing = good.clone();
        trailing.push(0);
        assert_eq!(field_of(decode_model(&trailing).unwrap_err()), "trailing");

        let mut bad_kind = good.clone();
        bad_kind[12] = 42;
        assert_eq!(field_of(decode_model(&bad_kind).unwrap_err()), "layer[0].kind");

        assert_eq!(field_of(decode_model(b"AP").unwrap_err()), "magic");
    }

    #[test]
    fn save_and_load_through_the_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.apgm");
        let net = Network::init(Architecture::Mlp, 8);
        save_model(&net, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), net);
    }
}
