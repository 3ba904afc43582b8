//! Binary model files.
//!
//! Layout, all integers and reals little-endian:
//!
//! ```text
//! "SAEM"                       4 bytes magic
//! version                      u32
//! layer count                  u64
//! per layer:
//!   n, m                       u64, u64
//!   w_enc (m·n), b_hidden (m), w_dec (n·m), b_out (n)     f64, row-major
//! head:
//!   k, d                       u64, u64
//!   w (k·d), b (k)             f64, row-major
//! per layer: rho, beta, lambda f64
//! head lambda                  f64
//! ```

use std::fs;
use std::path::Path;

use crate::autoencoder::{AutoencoderParams, SparsityConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::StackedNetwork;
use crate::softmax::SoftmaxParams;

pub const MAGIC: &[u8; 4] = b"SAEM";
pub const FORMAT_VERSION: u32 = 1;

pub fn serialize(net: &StackedNetwork) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u64(&mut out, net.encoders.len());
    for e in &net.encoders {
        put_u64(&mut out, e.n());
        put_u64(&mut out, e.m());
        for m in [&e.w_enc, &e.b_hidden, &e.w_dec, &e.b_out] {
            put_reals(&mut out, m.data());
        }
    }
    put_u64(&mut out, net.head.classes());
    put_u64(&mut out, net.head.input_width());
    put_reals(&mut out, net.head.w.data());
    put_reals(&mut out, net.head.b.data());
    for s in &net.sparsity {
        put_reals(&mut out, &[s.rho, s.beta, s.lambda]);
    }
    put_reals(&mut out, &[net.head.lambda]);
    out
}

pub fn deserialize(bytes: &[u8]) -> Result<StackedNetwork> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad magic {magic:?}, expected \"SAEM\""),
        });
    }
    let version = u32::from_le_bytes(r.take(4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let layers = r.dim("layer count")?;
    let mut encoders = Vec::new();
    for _ in 0..layers {
        let n = r.dim("layer n")?;
        let m = r.dim("layer m")?;
        encoders.push(AutoencoderParams {
            w_enc: r.matrix(m, n, "w_enc")?,
            b_hidden: r.matrix(m, 1, "b_hidden")?,
            w_dec: r.matrix(n, m, "w_dec")?,
            b_out: r.matrix(n, 1, "b_out")?,
        });
    }
    let k = r.dim("head k")?;
    let d = r.dim("head d")?;
    let w = r.matrix(k, d, "head w")?;
    let b = r.matrix(k, 1, "head b")?;
    let mut sparsity = Vec::with_capacity(layers);
    for _ in 0..layers {
        let v = r.reals(3, "sparsity config")?;
        sparsity.push(SparsityConfig {
            rho: v[0],
            beta: v[1],
            lambda: v[2],
        });
    }
    let lambda = r.reals(1, "head lambda")?[0];
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos,
            reason: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    let net = StackedNetwork {
        encoders,
        sparsity,
        head: SoftmaxParams { w, b, lambda },
    };
    net.validate().map_err(|e| Error::Format {
        offset: r.pos,
        reason: format!("invalid network: {e}"),
    })?;
    Ok(net)
}

/// Exact byte length of the file for a `[n, m1, ..., k]` network shape.
pub fn encoded_len(shape: &[usize]) -> usize {
    let layers = shape.len() - 2;
    let mut len = 4 + 4 + 8;
    for w in shape[..=layers].windows(2) {
        let (n, m) = (w[0], w[1]);
        len += 16 + 8 * (2 * n * m + n + m);
    }
    let (d, k) = (shape[layers], shape[layers + 1]);
    len += 16 + 8 * (k * d + k);
    len + 8 * (3 * layers + 1)
}

pub fn save(net: &StackedNetwork, path: &Path) -> Result<()> {
    fs::write(path, serialize(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<StackedNetwork> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize(&bytes)
}

fn put_u64(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_reals(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format {
                offset: self.pos,
                reason: format!(
                    "truncated reading {what}: need {len} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let offset = self.pos;
        let v = u64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        // Anything larger cannot be backed by the remaining bytes anyway.
        if v > (self.bytes.len() as u64) {
            return Err(Error::Format {
                offset,
                reason: format!("{what} = {v} exceeds file size"),
            });
        }
        Ok(v as usize)
    }

    fn reals(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let len = count.checked_mul(8).ok_or_else(|| Error::Format {
            offset: self.pos,
            reason: format!("{what} too large"),
        })?;
        let raw = self.take(len, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix> {
        let count = rows.checked_mul(cols).ok_or_else(|| Error::Format {
            offset: self.pos,
            reason: format!("{what} dimensions overflow"),
        })?;
        Matrix::from_vec(rows, cols, self.reals(count, what)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::Parameters;
    use crate::matrix::seeded_rng;
    use proptest::prelude::*;

    fn net(shape: &[usize], seed: u64) -> StackedNetwork {
        let layers = shape.len() - 2;
        let sp: Vec<SparsityConfig> = (0..layers)
            .map(|i| SparsityConfig::new(0.05 + 0.1 * i as f64, 1.5, 0.002).unwrap())
            .collect();
        let mut net = StackedNetwork::random(
            &shape[..=layers],
            shape[layers + 1],
            &sp,
            0.003,
            &mut seeded_rng(seed),
        )
        .unwrap();
        // Non-zero biases so they round-trip meaningfully.
        for (i, e) in net.encoders.iter_mut().enumerate() {
            e.b_out
                .data_mut()
                .iter_mut()
                .for_each(|b| *b = 0.25 + i as f64);
        }
        net
    }

    #[test]
    fn tiny_net_file_length() {
        // Hand arithmetic for 4→3→2→2:
        //   header 16; layer (4,3): 16 + 8·(24+3+4) = 264; layer (3,2): 16 + 8·(12+2+3) = 152;
        //   head (2,2): 16 + 8·(4+2) = 64; config echo 8·(3·2+1) = 56.
        let bytes = serialize(&net(&[4, 3, 2, 2], 1));
        assert_eq!(bytes.len(), 16 + 264 + 152 + 64 + 56);
        assert_eq!(bytes.len(), encoded_len(&[4, 3, 2, 2]));
        assert_eq!(&bytes[..4], b"SAEM");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let mut bytes = serialize(&net(&[4, 3, 2, 2], 1));
        bytes[0] = b'X';
        assert!(matches!(
            deserialize(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn bad_version_is_rejected() {
        let mut bytes = serialize(&net(&[4, 3, 2, 2], 1));
        bytes[4] = 9;
        assert!(matches!(
            deserialize(&bytes),
            Err(Error::Format { offset: 4, .. })
        ));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = serialize(&net(&[4, 3, 2, 2], 1));
        for cut in [3, 10, 20, 100, bytes.len() - 1] {
            match deserialize(&bytes[..cut]) {
                Err(Error::Format { offset, reason }) => {
                    assert!(offset <= cut, "{offset} > {cut}");
                    assert!(reason.contains("truncated"), "{reason}");
                }
                other => panic!("cut {cut}: {other:?}"),
            }
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(deserialize(&long).is_err());
    }

    #[test]
    fn inconsistent_chain_is_rejected() {
        let mut bytes = serialize(&net(&[4, 3, 2, 2], 1));
        // Second layer's n lives right after the first layer block.
        let off = 16 + 264;
        bytes[off..off + 8].copy_from_slice(&4u64.to_le_bytes());
        assert!(deserialize(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(seed in any::<u64>(), a in 1usize..6, b in 1usize..5, c in 1usize..4, k in 2usize..4) {
            let original = net(&[a, b, c, k], seed);
            let back = deserialize(&serialize(&original)).unwrap();
            let bits = |n: &StackedNetwork| -> Vec<u64> {
                let mut v: Vec<u64> = Vec::new();
                for e in &n.encoders {
                    v.extend(e.flatten().iter().map(|x| x.to_bits()));
                }
                v.extend(n.head.flatten().iter().map(|x| x.to_bits()));
                v.push(n.head.lambda.to_bits());
                v
            };
            prop_assert_eq!(bits(&back), bits(&original));
            prop_assert_eq!(back, original);
        }
    }
}
