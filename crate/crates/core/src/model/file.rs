//! Binary model files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "APCA" | version u32 | flavor u8 | inference u8 | decomp u8 | flags u8
//! | k u32 | p u32 | q u32 | mu f64 | seed u64
//! | x_means[p] | y_means[q] | eigenvalues[k] | W[p*k] | D[q*k] | A[k*p] (encoded only)
//! | crc32 of everything above
//! ```
//!
//! Flags: bit 0 center primary, bit 1 center augmenting, bit 2 singular-Gram
//! warning, bit 3 power-iteration budget exhausted.

use std::fs;
use std::path::Path;

use super::{ApcaConfig, ApcaModel, Decomp, Warnings};
use crate::apca::{Flavor, Inference};
use crate::error::{ModelFileError, Result};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 4] = b"APCA";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 4 + 3 * 4 + 8 + 8;
const CRC_LEN: usize = 4;

const FLAG_CENTER_PRIMARY: u8 = 1 << 0;
const FLAG_CENTER_AUGMENTING: u8 = 1 << 1;
const FLAG_SINGULAR_GRAM: u8 = 1 << 2;
const FLAG_NONCONVERGENCE: u8 = 1 << 3;
const KNOWN_FLAGS: u8 = 0b1111;

impl ApcaModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = &self.config;
        let (k, p, q) = (self.k(), self.p(), self.q());
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * (p + q + k + (p + q) * k + k * p) + CRC_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(match cfg.flavor {
            Flavor::Supervised => 0,
            Flavor::Adversarial => 1,
        });
        out.push(match cfg.inference {
            Inference::Local => 0,
            Inference::Encoded => 1,
        });
        out.push(match cfg.decomp {
            Decomp::Exact => 0,
            Decomp::Approx { .. } => 1,
        });
        let mut flags = 0;
        for (set, bit) in [
            (cfg.center_primary, FLAG_CENTER_PRIMARY),
            (cfg.center_augmenting, FLAG_CENTER_AUGMENTING),
            (self.warnings.singular_gram, FLAG_SINGULAR_GRAM),
            (self.warnings.nonconvergence, FLAG_NONCONVERGENCE),
        ] {
            if set {
                flags |= bit;
            }
        }
        out.push(flags);
        for dim in [k, p, q] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.extend_from_slice(&cfg.mu.to_le_bytes());
        out.extend_from_slice(&cfg.seed.to_le_bytes());

        let mut put = |values: &[f64]| {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        };
        put(&self.x_means);
        put(&self.y_means);
        put(&self.eigenvalues);
        put(self.w.as_slice());
        put(self.d.as_slice());
        if let Some(a) = &self.a {
            put(a.as_slice());
        }

        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, ModelFileError> {
        if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
            return Err(ModelFileError::BadMagic);
        }
        if bytes.len() < 8 {
            return Err(ModelFileError::Truncated {
                needed: 8,
                have: bytes.len(),
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(ModelFileError::UnsupportedVersion(version));
        }
        if bytes.len() < HEADER_LEN {
            return Err(ModelFileError::Truncated {
                needed: HEADER_LEN + CRC_LEN,
                have: bytes.len(),
            });
        }

        let mut cur = Cursor { bytes, pos: 8 };
        let flavor = cur.u8();
        let inference = cur.u8();
        let decomp = cur.u8();
        let flags = cur.u8();
        let k = cur.u32() as usize;
        let p = cur.u32() as usize;
        let q = cur.u32() as usize;
        let mu = cur.f64();
        let seed = cur.u64();

        let encoded = inference == 1;
        let (k128, p128, q128) = (k as u128, p as u128, q as u128);
        // x_means, y_means, eigenvalues, W, D, then A when encoded.
        let values = p128 + q128 + k128 + (p128 + q128) * k128 + if encoded { k128 * p128 } else { 0 };
        let needed = HEADER_LEN as u128 + 8 * values + CRC_LEN as u128;
        if (bytes.len() as u128) < needed {
            return Err(ModelFileError::Truncated {
                needed: needed.min(usize::MAX as u128) as usize,
                have: bytes.len(),
            });
        }
        let needed = needed as usize;
        if bytes.len() > needed {
            return Err(ModelFileError::TrailingBytes(bytes.len() - needed));
        }
        let body = &bytes[..needed - CRC_LEN];
        let stored = u32::from_le_bytes(bytes[needed - CRC_LEN..].try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(ModelFileError::Checksum);
        }

        let flavor = match flavor {
            0 => Flavor::Supervised,
            1 => Flavor::Adversarial,
            _ => return Err(ModelFileError::InvalidField("flavor")),
        };
        let inference = match inference {
            0 => Inference::Local,
            1 => Inference::Encoded,
            _ => return Err(ModelFileError::InvalidField("inference")),
        };
        let decomp = match decomp {
            0 => Decomp::Exact,
            1 => Decomp::approx_default(),
            _ => return Err(ModelFileError::InvalidField("decomp")),
        };
        if flags & !KNOWN_FLAGS != 0 {
            return Err(ModelFileError::InvalidField("flags"));
        }
        if k == 0 || k > p + q {
            return Err(ModelFileError::InvalidField("k"));
        }
        if !mu.is_finite() {
            return Err(ModelFileError::NonFinite("mu"));
        }
        if mu < 0.0 {
            return Err(ModelFileError::InvalidField("mu"));
        }

        let x_means = cur.finite_vec(p, "x_means")?;
        let y_means = cur.finite_vec(q, "y_means")?;
        let eigenvalues = cur.finite_vec(k, "eigenvalues")?;
        let w = cur.matrix(p, k, "W")?;
        let d = cur.matrix(q, k, "D")?;
        let a = if encoded { Some(cur.matrix(k, p, "A")?) } else { None };

        Ok(ApcaModel {
            config: ApcaConfig {
                flavor,
                inference,
                k,
                mu,
                decomp,
                center_primary: flags & FLAG_CENTER_PRIMARY != 0,
                center_augmenting: flags & FLAG_CENTER_AUGMENTING != 0,
                seed,
            },
            w,
            d,
            a,
            x_means,
            y_means,
            eigenvalues,
            warnings: Warnings {
                singular_gram: flags & FLAG_SINGULAR_GRAM != 0,
                nonconvergence: flags & FLAG_NONCONVERGENCE != 0,
            },
        })
    }
}

/// Reads past a length check already performed by the caller.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn finite_vec(&mut self, len: usize, field: &'static str) -> std::result::Result<Vec<f64>, ModelFileError> {
        let values: Vec<f64> = (0..len).map(|_| self.f64()).collect();
        if values.iter().all(|v| v.is_finite()) {
            Ok(values)
        } else {
            Err(ModelFileError::NonFinite(field))
        }
    }

    fn matrix(&mut self, rows: usize, cols: usize, field: &'static str) -> std::result::Result<Matrix, ModelFileError> {
        let data = self.finite_vec(rows * cols, field)?;
        Ok(Matrix::new(rows, cols, data).expect("length checked"))
    }
}

/// Writes `model` to `path`.
pub fn save(model: &ApcaModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_bytes())?;
    Ok(())
}

/// Reads and validates a model file.
pub fn load(path: impl AsRef<Path>) -> Result<ApcaModel> {
    let bytes = fs::read(path)?;
    Ok(ApcaModel::from_bytes(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fit;
    use crate::randomized::gaussian_matrix;

    fn sample_model(inference: Inference) -> ApcaModel {
        let x = gaussian_matrix(15, 4, 11);
        let y = gaussian_matrix(15, 2, 12);
        fit(&ApcaConfig::new(Flavor::Adversarial, inference, 3, 2.5).with_seed(9), &x, &y).unwrap()
    }

    fn with_crc(mut body: Vec<u8>) -> Vec<u8> {
        body.truncate(body.len() - CRC_LEN);
        let crc = crc32fast::hash(&body);
        body.extend_from_slice(&crc.to_le_bytes());
        body
    }

    #[test]
    fn round_trip_is_exact() {
        for inference in [Inference::Local, Inference::Encoded] {
            let m = sample_model(inference);
            let bytes = m.to_bytes();
            let back = ApcaModel::from_bytes(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn expected_length() {
        let m = sample_model(Inference::Encoded);
        let (k, p, q) = (3, 4, 2);
        assert_eq!(m.to_bytes().len(), HEADER_LEN + 8 * (p + q + k + p * k + q * k + k * p) + CRC_LEN);
        let m = sample_model(Inference::Local);
        assert_eq!(m.to_bytes().len(), HEADER_LEN + 8 * (p + q + k + p * k + q * k) + CRC_LEN);
    }

    #[test]
    fn corruption_classes() {
        let bytes = sample_model(Inference::Encoded).to_bytes();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(ApcaModel::from_bytes(&bad).unwrap_err(), ModelFileError::BadMagic);
        assert_eq!(ModelFileError::BadMagic.to_string(), "not an APCA model file");

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&999u32.to_le_bytes());
        let err = ApcaModel::from_bytes(&bad).unwrap_err();
        assert_eq!(err, ModelFileError::UnsupportedVersion(999));
        assert!(err.to_string().contains("unsupported model version"));

        let err = ApcaModel::from_bytes(&bytes[..bytes.len() - 9]).unwrap_err();
        assert!(matches!(err, ModelFileError::Truncated { .. }));
        let err = ApcaModel::from_bytes(&bytes[..20]).unwrap_err();
        assert!(matches!(err, ModelFileError::Truncated { .. }));

        let mut bad = bytes.clone();
        bad.push(0);
        assert_eq!(ApcaModel::from_bytes(&bad).unwrap_err(), ModelFileError::TrailingBytes(1));

        let mut bad = bytes.clone();
        bad[HEADER_LEN + 3] ^= 0x40;
        assert_eq!(ApcaModel::from_bytes(&bad).unwrap_err(), ModelFileError::Checksum);

        let mut bad = bytes.clone();
        bad[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(ApcaModel::from_bytes(&with_crc(bad)).unwrap_err(), ModelFileError::NonFinite("x_means"));

        let mut bad = bytes.clone();
        bad[8] = 7;
        assert_eq!(ApcaModel::from_bytes(&with_crc(bad)).unwrap_err(), ModelFileError::InvalidField("flavor"));
    }

    #[test]
    fn empty_input_is_bad_magic() {
        assert_eq!(ApcaModel::from_bytes(&[]).unwrap_err(), ModelFileError::BadMagic);
    }
}
