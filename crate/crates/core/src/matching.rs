//! Distances between encoded sequences, DTW, and nearest-neighbour search.
//!
//! Everything that takes a [`SymbolSequence`] reads distances from the
//! codebook's lookup table and never calls into [`crate::geometry`]. The
//! geodesic variants exist as the baseline they approximate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, Lut};
use crate::encode::SymbolSequence;
use crate::error::{Error, Result};
use crate::geometry::distance_unchecked;
use crate::par::Execution;
use crate::stats::ManifoldSequence;

/// Rigid distance between equal-length encodings: `Σ lut[p_i][q_i]`.
pub fn symbol_distance(p: &SymbolSequence, q: &SymbolSequence, cb: &Codebook) -> Result<f64> {
    cb.ensure_id(&p.codebook_id)?;
    cb.ensure_id(&q.codebook_id)?;
    check_symbols(p, cb)?;
    check_symbols(q, cb)?;
    rigid(&p.symbols, &q.symbols, cb.lut())
}

pub(crate) fn rigid(p: &[u32], q: &[u32], lut: &Lut) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(&a, &b)| lut.get(a as usize, b as usize)).sum())
}

fn check_symbols(s: &SymbolSequence, cb: &Codebook) -> Result<()> {
    match s.symbols.iter().find(|&&x| x as usize >= cb.len()) {
        Some(&x) => Err(Error::LabelOutOfRange {
            label: x as usize,
            k: cb.len(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub distance: f64,
    /// Index pairs from `(0, 0)` to `(n-1, m-1)`.
    pub path: Vec<(usize, usize)>,
}

fn in_band(i: usize, j: usize, n: usize, m: usize, band: Option<usize>) -> bool {
    match band {
        None => true,
        Some(w) => i.abs_diff(j) <= w.max(n.abs_diff(m)),
    }
}

fn check_lengths(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("DTW operand"));
    }
    Ok(())
}

/// DTW with steps (1,0), (0,1), (1,1), anchored at both corners.
///
/// `cost(i, j)` is the local cost of aligning element `i` of the first
/// sequence with element `j` of the second. `band` is an optional
/// Sakoe-Chiba half-width, widened to `|n - m|` so a path always exists.
pub fn dtw<F>(n: usize, m: usize, cost: F, band: Option<usize>) -> Result<Alignment>
where
    F: Fn(usize, usize) -> f64,
{
    check_lengths(n, m)?;
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j, n, m, band) {
                continue;
            }
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = acc[(i - 1) * m + j - 1];
                }
                if i > 0 {
                    best = best.min(acc[(i - 1) * m + j]);
                }
                if j > 0 {
                    best = best.min(acc[i * m + j - 1]);
                }
                best
            };
            acc[i * m + j] = prev + cost(i, j);
        }
    }

    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let mut step = None;
        let mut best = f64::INFINITY;
        // diagonal first on ties
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            if i >= di && j >= dj {
                let v = acc[(i - di) * m + j - dj];
                if v < best {
                    best = v;
                    step = Some((di, dj));
                }
            }
        }
        let (di, dj) = step.expect("band keeps a path to the origin");
        i -= di;
        j -= dj;
        path.push((i, j));
    }
    path.reverse();
    Ok(Alignment {
        distance: acc[n * m - 1],
        path,
    })
}

/// Distance-only DTW in O(m) memory.
pub fn dtw_distance<F>(n: usize, m: usize, cost: F, band: Option<usize>) -> Result<f64>
where
    F: Fn(usize, usize) -> f64,
{
    check_lengths(n, m)?;
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j, n, m, band) {
                cur[j] = f64::INFINITY;
                continue;
            }
            let before = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 {
                    best = prev[j];
                    if j > 0 {
                        best = best.min(prev[j - 1]);
                    }
                }
                if j > 0 {
                    best = best.min(cur[j - 1]);
                }
                best
            };
            cur[j] = before + cost(i, j);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// DTW with lookup-table costs.
pub fn symbolic_dtw(p: &SymbolSequence, q: &SymbolSequence, cb: &Codebook) -> Result<f64> {
    cb.ensure_id(&p.codebook_id)?;
    cb.ensure_id(&q.codebook_id)?;
    check_symbols(p, cb)?;
    check_symbols(q, cb)?;
    lut_dtw(&p.symbols, &q.symbols, cb.lut())
}

pub(crate) fn lut_dtw(p: &[u32], q: &[u32], lut: &Lut) -> Result<f64> {
    dtw_distance(p.len(), q.len(), |i, j| lut.get(p[i] as usize, q[j] as usize), None)
}

/// DTW with geodesic costs on the raw points.
pub fn geodesic_dtw(a: &ManifoldSequence, b: &ManifoldSequence) -> Result<f64> {
    if a.manifold() != b.manifold() {
        return Err(Error::IncompatibleManifolds {
            expected: *a.manifold(),
            found: *b.manifold(),
        });
    }
    let m = *a.manifold();
    let (pa, pb) = (a.points(), b.points());
    dtw_distance(pa.len(), pb.len(), |i, j| distance_unchecked(&m, pa[i].data(), pb[j].data()), None)
}

/// Encoded sequences sharing one codebook, optionally with their raw sources.
#[derive(Debug, Clone, Default)]
pub struct SequenceDatabase {
    pub codebook_id: String,
    entries: Vec<SymbolSequence>,
    raw: Option<Vec<ManifoldSequence>>,
}

impl SequenceDatabase {
    pub fn new(codebook_id: impl Into<String>) -> Self {
        Self {
            codebook_id: codebook_id.into(),
            entries: Vec::new(),
            raw: None,
        }
    }

    pub fn from_entries(codebook_id: impl Into<String>, entries: Vec<SymbolSequence>) -> Result<Self> {
        let mut db = Self::new(codebook_id);
        for e in entries {
            db.push(e)?;
        }
        Ok(db)
    }

    pub fn push(&mut self, entry: SymbolSequence) -> Result<()> {
        if entry.codebook_id != self.codebook_id {
            return Err(Error::CodebookMismatch {
                expected: self.codebook_id.clone(),
                found: entry.codebook_id,
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Attaches the raw sequences, one per entry and in the same order.
    pub fn with_raw(mut self, raw: Vec<ManifoldSequence>) -> Result<Self> {
        if raw.len() != self.entries.len() {
            return Err(Error::LengthMismatch {
                left: self.entries.len(),
                right: raw.len(),
            });
        }
        self.raw = Some(raw);
        Ok(self)
    }

    pub fn entries(&self) -> &[SymbolSequence] {
        &self.entries
    }

    pub fn raw(&self) -> Option<&[ManifoldSequence]> {
        self.raw.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub id: String,
    pub label: Option<String>,
    pub distance: f64,
}

fn by_distance_then_id(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.id.cmp(&b.id))
        .then_with(|| a.index.cmp(&b.index))
}

fn rank(mut all: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    all.sort_by(by_distance_then_id);
    all.truncate(k);
    all
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyInput("database"));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} with {n} database entries")));
    }
    Ok(())
}

/// The `k` entries closest to `query` under lookup-table DTW, ascending,
/// ties broken by entry id.
pub fn knn(
    query: &SymbolSequence,
    db: &SequenceDatabase,
    cb: &Codebook,
    k: usize,
    exec: Execution,
) -> Result<Vec<Neighbor>> {
    check_k(k, db.len())?;
    cb.ensure_id(&db.codebook_id)?;
    cb.ensure_id(&query.codebook_id)?;
    check_symbols(query, cb)?;
    for e in db.entries() {
        check_symbols(e, cb)?;
    }
    let all = exec.try_map_range(db.len(), |i| -> Result<Neighbor> {
        let e = &db.entries[i];
        Ok(Neighbor {
            index: i,
            id: e.id.clone(),
            label: e.label.clone(),
            distance: lut_dtw(&query.symbols, &e.symbols, cb.lut())?,
        })
    })?;
    Ok(rank(all, k))
}

/// Geodesic-DTW counterpart of [`knn`] over raw sequences.
pub fn knn_geodesic(
    query: &ManifoldSequence,
    db: &[ManifoldSequence],
    k: usize,
    exec: Execution,
) -> Result<Vec<Neighbor>> {
    check_k(k, db.len())?;
    let all = exec.try_map_range(db.len(), |i| -> Result<Neighbor> {
        Ok(Neighbor {
            index: i,
            id: db[i].id.clone(),
            label: db[i].label.clone(),
            distance: geodesic_dtw(query, &db[i])?,
        })
    })?;
    Ok(rank(all, k))
}

fn require_labels<'a>(labels: impl Iterator<Item = (&'a str, Option<&'a String>)>) -> Result<()> {
    for (id, l) in labels {
        if l.is_none() {
            return Err(Error::Unlabeled(id.to_string()));
        }
    }
    Ok(())
}

/// Label of the nearest database entry under lookup-table DTW.
pub fn nn_classify(query: &SymbolSequence, db: &SequenceDatabase, cb: &Codebook) -> Result<String> {
    require_labels(db.entries().iter().map(|e| (e.id.as_str(), e.label.as_ref())))?;
    let best = knn(query, db, cb, 1, Execution::Sequential)?;
    Ok(best[0].label.clone().expect("labels checked"))
}

/// Outcome of a leave-one-out evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub predictions: Vec<String>,
    pub truth: Vec<String>,
    pub accuracy: f64,
}

/// 1-NN leave-one-out given a symmetric distance between items `i` and `j`.
fn leave_one_out<F>(ids: &[&str], labels: Vec<String>, exec: Execution, dist: F) -> Result<LooReport>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let n = labels.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let rows = exec.try_map_range(n, |i| -> Result<Vec<f64>> { (i + 1..n).map(|j| dist(i, j)).collect() })?;
    let d = |i: usize, j: usize| if i < j { rows[i][j - i - 1] } else { rows[j][i - j - 1] };
    let predictions: Vec<String> = (0..n)
        .map(|i| {
            let best = (0..n)
                .filter(|&j| j != i)
                .min_by(|&a, &b| d(i, a).total_cmp(&d(i, b)).then_with(|| ids[a].cmp(ids[b])).then(a.cmp(&b)))
                .expect("n >= 2");
            labels[best].clone()
        })
        .collect();
    let correct = predictions.iter().zip(&labels).filter(|(p, t)| p == t).count();
    Ok(LooReport {
        accuracy: correct as f64 / n as f64,
        predictions,
        truth: labels,
    })
}

/// Leave-one-out 1-NN accuracy with lookup-table DTW.
pub fn loo_symbolic(db: &SequenceDatabase, cb: &Codebook, exec: Execution) -> Result<LooReport> {
    cb.ensure_id(&db.codebook_id)?;
    let e = db.entries();
    require_labels(e.iter().map(|s| (s.id.as_str(), s.label.as_ref())))?;
    for s in e {
        check_symbols(s, cb)?;
    }
    let ids: Vec<&str> = e.iter().map(|s| s.id.as_str()).collect();
    let labels = e.iter().map(|s| s.label.clone().expect("checked")).collect();
    leave_one_out(&ids, labels, exec, |i, j| lut_dtw(&e[i].symbols, &e[j].symbols, cb.lut()))
}

/// Leave-one-out 1-NN accuracy with geodesic DTW.
pub fn loo_geodesic(seqs: &[ManifoldSequence], exec: Execution) -> Result<LooReport> {
    require_labels(seqs.iter().map(|s| (s.id.as_str(), s.label.as_ref())))?;
    let ids: Vec<&str> = seqs.iter().map(|s| s.id.as_str()).collect();
    let labels = seqs.iter().map(|s| s.label.clone().expect("checked")).collect();
    leave_one_out(&ids, labels, exec, |i, j| geodesic_dtw(&seqs[i], &seqs[j]))
}

/// Every start position of `needle` in `haystack`, overlaps included.
pub fn find_substring(haystack: &[u32], needle: &[u32]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    haystack
        .windows(needle.len())
        .enumerate()
        .filter(|(_, w)| *w == needle)
        .map(|(i, _)| i)
        .collect()
}

/// Exact-substring hits across several encodings as `(entry, position)`.
pub fn find_in(entries: &[SymbolSequence], needle: &[u32]) -> Vec<(usize, usize)> {
    entries
        .iter()
        .enumerate()
        .flat_map(|(e, s)| find_substring(&s.symbols, needle).into_iter().map(move |p| (e, p)))
        .collect()
}
