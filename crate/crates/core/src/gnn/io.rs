//! Binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    4 bytes  "GCNW"
//! version  u32      1
//! depth    u32      number of layers L
//! act      u8       0 = ReLU, 1 = identity (hidden layers)
//! dims     u32 × (L + 1)   in-dim of layer 0, then each layer's out-dim
//! per layer: weight in×out f64 row-major, then bias out f64
//! ```

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, GcnModel, Layer};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"GCNW";
pub const MODEL_VERSION: u32 = 1;

pub fn to_bytes(model: &GcnModel) -> Vec<u8> {
    let mut b = Vec::with_capacity(16 + 8 * model.num_params());
    b.extend_from_slice(MODEL_MAGIC);
    b.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    b.extend_from_slice(&(model.depth() as u32).to_le_bytes());
    b.push(match model.activation {
        Activation::Relu => 0,
        Activation::Identity => 1,
    });
    for d in model.dims() {
        b.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for l in &model.layers {
        for x in l.weight.iter().chain(l.bias.iter()) {
            b.extend_from_slice(&x.to_le_bytes());
        }
    }
    b
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::ModelFormat(format!("truncated at byte {}", self.buf.len())));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<GcnModel> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!("version mismatch: file {version}, expected {MODEL_VERSION}")));
    }
    let depth = r.u32()? as usize;
    if depth == 0 || depth > 1024 {
        return Err(Error::ModelFormat(format!("implausible depth {depth}")));
    }
    let activation = match r.take(1)?[0] {
        0 => Activation::Relu,
        1 => Activation::Identity,
        a => return Err(Error::ModelFormat(format!("unknown activation {a}"))),
    };
    let dims = (0..=depth).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(depth);
    for w in dims.windows(2) {
        let (i, o) = (w[0], w[1]);
        if i.checked_mul(o).is_none_or(|n| n * 8 > buf.len()) {
            return Err(Error::ModelFormat("truncated weights".into()));
        }
        let weight = (0..i * o).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let bias = (0..o).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        layers.push(Layer {
            weight: Array2::from_shape_vec((i, o), weight).expect("length checked"),
            bias: Array1::from(bias),
        });
    }
    if r.pos != buf.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(GcnModel { layers, activation })
}

pub fn save_model(model: &GcnModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<GcnModel> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::random_graph;
    use super::super::{forward_all, loss, train, TrainConfig};
    use super::*;

    #[test]
    fn round_trip_bitwise() {
        let m = GcnModel::new(7, 16, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.gcn");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        let g = random_graph(20, 30, 1);
        assert_eq!(forward_all(&m, &g).unwrap(), forward_all(&back, &g).unwrap());
    }

    #[test]
    fn version_mismatch() {
        let mut b = to_bytes(&GcnModel::new(3, 4, 0).unwrap());
        b[4] = 9;
        let e = from_bytes(&b).unwrap_err();
        assert!(e.to_string().contains("version mismatch"), "{e}");
    }

    #[test]
    fn bad_magic_and_truncation() {
        let b = to_bytes(&GcnModel::new(3, 4, 0).unwrap());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad).is_err());
        for cut in [3, 10, 20, b.len() - 1] {
            let e = from_bytes(&b[..cut]).unwrap_err();
            assert!(matches!(e, Error::ModelFormat(_)));
        }
        let mut long = b.clone();
        long.push(0);
        assert!(from_bytes(&long).is_err());
    }

    #[test]
    fn trained_then_reloaded_same_loss() {
        let g = random_graph(30, 60, 2);
        let labels: Vec<_> = (0..30).map(|v| (v, (v % 7) as f64 / 7.0)).collect();
        let cfg = TrainConfig { epochs: 3, batch_size: 10, ..Default::default() };
        let (m, _) = train(&GcnModel::new(7, 8, 2).unwrap(), &g, &labels, &cfg).unwrap();
        let back = from_bytes(&to_bytes(&m)).unwrap();
        assert_eq!(loss(&m, &g, &labels).unwrap(), loss(&back, &g, &labels).unwrap());
    }
}
