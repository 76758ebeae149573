//! Deterministic name embeddings: hashed character trigrams, PCA to four dimensions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rng::fnv1a;

pub const HASH_DIM: usize = 64;
pub const EMBED_DIM: usize = 4;

/// Minimum number of distinct names for a PCA fit; below it each distinct
/// name gets a one-hot vector instead.
pub const MIN_PCA_NAMES: usize = 5;

/// Counts of `^`/`$`-padded character trigrams hashed into 64 buckets, ℓ2-normalized.
pub fn trigram_vector(name: &str) -> Result<[f64; HASH_DIM]> {
    if name.is_empty() {
        return Err(Error::InvalidArgument("empty cell name".into()));
    }
    let mut chars: Vec<char> = Vec::with_capacity(name.len() + 2);
    chars.push('^');
    chars.extend(name.chars());
    chars.push('$');
    let mut v = [0.0; HASH_DIM];
    let mut buf = String::new();
    for w in chars.windows(3) {
        buf.clear();
        buf.extend(w);
        v[(fnv1a(buf.as_bytes()) % HASH_DIM as u64) as usize] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

/// Embeds every name into four dimensions. The projection is fit over the
/// distinct names, so repeated names do not bias it and identical names map
/// to identical vectors.
pub fn name_embedding(names: &[&str]) -> Result<Vec<[f64; EMBED_DIM]>> {
    let mut distinct: BTreeMap<&str, usize> = BTreeMap::new();
    for &n in names {
        if n.is_empty() {
            return Err(Error::InvalidArgument("empty cell name".into()));
        }
        distinct.insert(n, 0);
    }
    for (i, v) in distinct.values_mut().enumerate() {
        *v = i;
    }
    let uniq: Vec<&str> = distinct.keys().copied().collect();

    let table: Vec<[f64; EMBED_DIM]> = if uniq.len() < MIN_PCA_NAMES {
        (0..uniq.len())
            .map(|i| {
                let mut e = [0.0; EMBED_DIM];
                e[i] = 1.0;
                e
            })
            .collect()
    } else {
        pca_project(&uniq)?
    };
    Ok(names.iter().map(|n| table[distinct[n]]).collect())
}

fn pca_project(uniq: &[&str]) -> Result<Vec<[f64; EMBED_DIM]>> {
    let m = uniq.len();
    let mut data = DMatrix::<f64>::zeros(m, HASH_DIM);
    for (i, n) in uniq.iter().enumerate() {
        let v = trigram_vector(n)?;
        for (j, x) in v.iter().enumerate() {
            data[(i, j)] = *x;
        }
    }
    let mean = data.row_mean();
    for mut row in data.row_iter_mut() {
        row -= &mean;
    }
    let cov = data.transpose() * &data / (m as f64);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..HASH_DIM).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut out = vec![[0.0; EMBED_DIM]; m];
    for (k, &c) in order.iter().take(EMBED_DIM).enumerate() {
        let mut axis = eig.eigenvectors.column(c).clone_owned();
        // Sign convention: largest-magnitude loading positive.
        let mut big = 0usize;
        for j in 0..HASH_DIM {
            if axis[j].abs() > axis[big].abs() + 1e-12 {
                big = j;
            }
        }
        if axis[big] < 0.0 {
            axis = -axis;
        }
        let proj = &data * axis;
        for i in 0..m {
            out[i][k] = proj[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::rng::rng;

    fn random_names(n: usize, seed: u64) -> Vec<String> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                let len = r.random_range(3..10);
                (0..len).map(|_| (b'a' + r.random_range(0..26u8)) as char).collect()
            })
            .collect()
    }

    #[test]
    fn identical_names_identical_vectors() {
        let mut names = random_names(10, 1);
        names.push(names[3].clone());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let e = name_embedding(&refs).unwrap();
        assert_eq!(e[3], e[10]);
    }

    #[test]
    fn empty_name_is_error() {
        assert!(name_embedding(&["a", ""]).is_err());
    }

    #[test]
    fn few_names_fall_back_to_one_hot() {
        let e = name_embedding(&["b", "a", "b"]).unwrap();
        assert_eq!(e[0], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(e[1], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(e[2], e[0]);
    }

    #[test]
    fn macro_nearest_neighbor_is_not_a_buffer() {
        for seed in 0..5 {
            let mut names: Vec<String> = vec!["buf_1".into(), "buf_2".into(), "macro_ram".into()];
            names.extend(random_names(20, seed));
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let e = name_embedding(&refs).unwrap();
            let d = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            let nn = (0..names.len())
                .filter(|&i| i != 2)
                .min_by(|&a, &b| d(&e[2], &e[a]).total_cmp(&d(&e[2], &e[b])))
                .unwrap();
            assert!(!names[nn].starts_with("buf_"), "seed {seed}: nearest is {}", names[nn]);
        }
    }

    #[test]
    fn component_variance_non_increasing() {
        for seed in 0..10 {
            let names = random_names(40, seed);
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let e = name_embedding(&refs).unwrap();
            let mut uniq: Vec<[f64; 4]> = Vec::new();
            let mut seen = std::collections::BTreeSet::new();
            for (n, v) in names.iter().zip(&e) {
                if seen.insert(n.clone()) {
                    uniq.push(*v);
                }
            }
            let m = uniq.len() as f64;
            let var: Vec<f64> = (0..4)
                .map(|k| {
                    let mu = uniq.iter().map(|v| v[k]).sum::<f64>() / m;
                    uniq.iter().map(|v| (v[k] - mu).powi(2)).sum::<f64>() / m
                })
                .collect();
            for k in 1..4 {
                assert!(var[k] <= var[k - 1] + 1e-12, "seed {seed}: {var:?}");
            }
        }
    }
}
