//! Comparison schemes: bit-string watermarks encoded by row parity, small
//! cell displacements or inserted buffers, and the window-scoring region
//! search.

mod buffer;
mod icmarks;
mod row_parity;
mod scatter;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{CellId, Netlist};
use crate::rng::SplitMix64;

pub use buffer::{buffer_extract, buffer_insert, BufferKey, BufferKeyEntry};
pub use icmarks::{icmarks_scores, icmarks_search, IcmarksScore};
pub use row_parity::{row_parity_extract, row_parity_insert, RowParityKey};
pub use scatter::{cell_scatter_extract, cell_scatter_insert, ScatterKey, ScatterKeyEntry};

/// A bit string plus the seed that keys which cells or nets carry it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub bits: Vec<bool>,
    pub seed: u64,
}

impl Signature {
    pub fn new(bits: Vec<bool>, seed: u64) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("signature has no bits".into()));
        }
        Ok(Signature { bits, seed })
    }

    /// `len` pseudorandom bits drawn from `seed`.
    pub fn random(len: usize, seed: u64) -> Result<Self> {
        let mut sm = SplitMix64::new(seed ^ 0x5157_4e41_5455_5245);
        Self::new((0..len).map(|_| sm.next_u64() & 1 == 1).collect(), seed)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Movable standard cells outside fences, by id.
fn candidate_cells(netlist: &Netlist) -> Vec<CellId> {
    netlist.placeable_cells().filter(|c| netlist.fence_of[c.id].is_none()).map(|c| c.id).collect()
}

/// One distinct candidate cell per bit, in bit order.
fn select_cells(netlist: &Netlist, sig: &Signature) -> Result<Vec<CellId>> {
    let pool = candidate_cells(netlist);
    if sig.len() > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "signature of {} bits exceeds the {} movable cells",
            sig.len(),
            pool.len()
        )));
    }
    let mut sm = SplitMix64::new(sig.seed);
    Ok(sm.choose_distinct(pool.len(), sig.len()).into_iter().map(|i| pool[i]).collect())
}

fn check_len(key_len: usize, sig: &Signature) -> Result<()> {
    if key_len == 0 {
        return Err(Error::Empty("key is empty".into()));
    }
    if key_len != sig.len() {
        return Err(Error::DimensionMismatch(format!("key has {key_len} entries, signature {} bits", sig.len())));
    }
    Ok(())
}

fn cell_id(netlist: &Netlist, name: &str) -> Result<CellId> {
    netlist.cell_by_name(name).ok_or_else(|| Error::UnknownCell(name.to_string()))
}

/// Writes any key as TOML.
pub fn save_key<K: Serialize>(key: &K, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(key).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_key<K: DeserializeOwned>(path: &Path) -> Result<K> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), 0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::fixtures::*;
    use crate::netlist::{synth_design, SynthParams};

    #[test]
    fn empty_signature_rejected() {
        assert!(Signature::new(vec![], 1).is_err());
    }

    #[test]
    fn random_signature_is_seeded() {
        let a = Signature::random(64, 3).unwrap();
        assert_eq!(a, Signature::random(64, 3).unwrap());
        assert_ne!(a.bits, Signature::random(64, 4).unwrap().bits);
        let ones = a.bits.iter().filter(|&&b| b).count();
        assert!((16..=48).contains(&ones));
    }

    #[test]
    fn selection_skips_fences_and_is_keyed() {
        let (nl, _) = synth_design(SynthParams::new(300, 330, 0.6, 1, 1, 2)).unwrap();
        let sig = Signature::random(40, 9).unwrap();
        let a = select_cells(&nl, &sig).unwrap();
        assert_eq!(a, select_cells(&nl, &sig).unwrap());
        assert!(a.iter().all(|&c| nl.fence_of[c].is_none() && nl.cells[c].is_placeable()));
        let mut d = a.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 40);
    }

    #[test]
    fn oversized_signature_rejected() {
        let (nl, _) = three_cell();
        assert!(select_cells(&nl, &Signature::random(4, 0).unwrap()).is_err());
    }

    #[test]
    fn key_round_trip() {
        let key = RowParityKey { cells: vec!["a".into(), "b".into()], bits: vec![true, false] };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.toml");
        save_key(&key, &p).unwrap();
        assert_eq!(load_key::<RowParityKey>(&p).unwrap(), key);
    }
}
