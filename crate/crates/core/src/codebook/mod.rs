//! Symbol learning and the symbol-to-symbol distance table.
//!
//! Three trainers produce a [`Codebook`]:
//!
//! - [`kmeans_geodesic`]: Lloyd iterations with geodesic assignment and
//!   Karcher (or extrinsic) mean updates. Low quantization error, but symbol
//!   frequencies follow the data density.
//! - [`conscience_learn`]: competitive learning with a frequency-dependent
//!   bias. Each presented point pulls the biased winner towards itself along
//!   the manifold; symbols that win too often are handicapped until every
//!   symbol wins roughly `1/K` of the time.
//! - [`hybrid_learn`]: K-means with a few clusters, then conscience learning
//!   inside each cluster with a sub-cluster count proportional to its mass.

mod conscience;
mod hybrid;
mod kmeans;

pub use conscience::{conscience_learn, ConscienceConfig, ConscienceFit, WinRateRule};
pub use hybrid::{hybrid_learn, split_counts, HybridConfig, HybridFit};
pub use kmeans::{kmeans_geodesic, KMeansConfig, KMeansFit};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{self, Manifold, ManifoldPoint};
use crate::par::Execution;

/// Tolerance for comparing a stored table against recomputed distances.
pub const LUT_TOL: f64 = 1e-10;

/// Dense symmetric K x K table of symbol distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut {
    k: usize,
    values: Vec<f64>,
}

impl Lut {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let mut values = Vec::with_capacity(k * k);
        for r in rows {
            if r.len() != k {
                return Err(Error::Format(format!("lookup table row of length {} for K={k}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Ok(Self { k, values })
    }

    /// Symbol-mismatch table: 0 on the diagonal, 1 elsewhere.
    pub fn discrete(k: usize) -> Self {
        let values = (0..k * k).map(|i| if i / k == i % k { 0.0 } else { 1.0 }).collect();
        Self { k, values }
    }

    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.k.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Largest entry-wise difference to another table of the same size.
    pub fn max_abs_diff(&self, other: &Lut) -> f64 {
        if self.k != other.k {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Pairwise geodesic distances between symbols (offline, once per codebook).
pub fn build_lut(symbols: &[ManifoldPoint]) -> Result<Lut> {
    build_lut_with(symbols, Execution::default())
}

pub fn build_lut_with(symbols: &[ManifoldPoint], exec: Execution) -> Result<Lut> {
    let k = symbols.len();
    if let Some(first) = symbols.first() {
        ensure_manifold(symbols, first.manifold())?;
    }
    let manifold = symbols.first().map(|s| *s.manifold());
    // upper triangle, row by row
    let rows = exec.map_range(k, |i| {
        ((i + 1)..k)
            .map(|j| {
                geometry::distance_unchecked(
                    manifold.as_ref().expect("non-empty"),
                    symbols[i].data(),
                    symbols[j].data(),
                )
            })
            .collect::<Vec<f64>>()
    });
    let mut values = vec![0.0; k * k];
    for (i, row) in rows.iter().enumerate() {
        for (off, d) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * k + j] = *d;
            values[j * k + i] = *d;
        }
    }
    Ok(Lut { k, values })
}

fn ensure_manifold(points: &[ManifoldPoint], manifold: &Manifold) -> Result<()> {
    match points.iter().find(|p| p.manifold() != manifold) {
        Some(p) => Err(Error::IncompatibleManifolds {
            expected: *manifold,
            found: *p.manifold(),
        }),
        None => Ok(()),
    }
}

/// Printable token for symbol `index` in an alphabet of size `k`: base-62
/// characters (`a-z`, `A-Z`, `0-9`) up to 62 symbols, decimal beyond that.
pub fn token(index: usize, k: usize) -> String {
    const DIGITS: &[u8; 62] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    if k <= DIGITS.len() {
        (DIGITS[index] as char).to_string()
    } else {
        index.to_string()
    }
}

/// Renders a symbol string: concatenated characters for K <= 62, otherwise
/// space-separated decimal indices.
pub fn render(symbols: &[u32], k: usize) -> String {
    let sep = if k <= 62 { "" } else { " " };
    symbols
        .iter()
        .map(|&s| token(s as usize, k))
        .collect::<Vec<_>>()
        .join(sep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMethod {
    Kmeans,
    Conscience,
    Hybrid,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub method: TrainingMethod,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

impl TrainingMeta {
    pub fn manual() -> Self {
        Self {
            method: TrainingMethod::Manual,
            seed: 0,
            params: BTreeMap::new(),
        }
    }
}

/// K prototypes on one manifold plus their distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    manifold: Manifold,
    symbols: Vec<ManifoldPoint>,
    lut: Lut,
    id: String,
    pub training: TrainingMeta,
}

impl Codebook {
    pub fn new(symbols: Vec<ManifoldPoint>, training: TrainingMeta) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a codebook needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        let manifold = *symbols[0].manifold();
        ensure_manifold(&symbols, &manifold)?;
        let lut = build_lut(&symbols)?;
        let id = content_id(&manifold, &symbols);
        Ok(Self {
            manifold,
            symbols,
            lut,
            id,
            training,
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn symbols(&self) -> &[ManifoldPoint] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn lut(&self) -> &Lut {
        &self.lut
    }

    /// Hex digest of the manifold descriptor and symbol coordinates.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn alphabet(&self) -> Vec<String> {
        (0..self.len()).map(|i| token(i, self.len())).collect()
    }

    pub fn render(&self, symbols: &[u32]) -> String {
        render(symbols, self.len())
    }

    pub(crate) fn ensure_manifold(&self, m: &Manifold) -> Result<()> {
        if &self.manifold == m {
            Ok(())
        } else {
            Err(Error::IncompatibleManifolds {
                expected: self.manifold,
                found: *m,
            })
        }
    }

    /// `CodebookMismatch` unless `id` is this codebook's id.
    pub fn ensure_id(&self, id: &str) -> Result<()> {
        if self.id == id {
            Ok(())
        } else {
            Err(Error::CodebookMismatch {
                expected: self.id.clone(),
                found: id.to_string(),
            })
        }
    }
}

fn content_id(manifold: &Manifold, symbols: &[ManifoldPoint]) -> String {
    let mut h = Sha256::new();
    h.update(manifold.to_string().as_bytes());
    for s in symbols {
        for x in s.data() {
            h.update(x.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..16])
}

/// Index of the nearest symbol; ties go to the lowest index.
pub fn assign(p: &ManifoldPoint, cb: &Codebook) -> Result<usize> {
    cb.ensure_manifold(p.manifold())?;
    Ok(nearest(cb.manifold(), cb.symbols(), p.data()).0)
}

/// Nearest symbol by geodesic distance and that distance.
pub(crate) fn nearest(manifold: &Manifold, symbols: &[ManifoldPoint], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, s) in symbols.iter().enumerate() {
        let d = geometry::distance_unchecked(manifold, s.data(), x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub(crate) fn nearest_labels(
    manifold: &Manifold,
    symbols: &[ManifoldPoint],
    data: &[ManifoldPoint],
    exec: Execution,
) -> Vec<usize> {
    exec.map(data, |x| nearest(manifold, symbols, x.data()).0)
}

/// Shannon entropy in bits of the label histogram.
pub fn entropy(labels: &[usize], k: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("entropy labels"));
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::LabelOutOfRange { label: l, k });
        }
        counts[l] += 1;
    }
    Ok(entropy_of_counts(&counts))
}

pub(crate) fn entropy_of_counts(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Random K distinct indices, used to seed trainers from the data.
pub(crate) fn sample_indices<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, n, k).into_vec()
}
