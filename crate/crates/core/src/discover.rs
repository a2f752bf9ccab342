//! Motif discovery over a single long encoding.
//!
//! Positions are 0-based symbol offsets. Two positions `p`, `q` are a trivial
//! match when `|p - q| < m`, so every reported motif has members at least `m`
//! apart.
//!
//! The search is exhaustive. For each candidate start `i` it collects the
//! non-trivial positions `j` with `d(T[i..i+l], T[j..j+l]) < R`. Motifs are
//! then emitted greedily. Each round takes the candidate whose largest
//! pairwise non-trivial member set (containing the candidate itself) is
//! biggest, ties going to the lower position. Its members are claimed, and
//! every position within `m - 1` of a claimed one is dropped from later rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, Lut};
use crate::encode::SymbolSequence;
use crate::error::{Error, Result};
use crate::matching::{lut_dtw, rigid};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsequenceMetric {
    /// Position-by-position lookup-table sum.
    #[default]
    Rigid,
    Dtw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotifQuery {
    /// Motif length in symbols.
    pub len: usize,
    /// Strict similarity threshold in lookup-table distance units.
    pub radius: f64,
    /// Trivial-match neighbourhood.
    pub trivial: usize,
    /// Maximum number of motifs.
    pub top: usize,
    #[serde(default)]
    pub metric: SubsequenceMetric,
}

impl MotifQuery {
    pub fn new(len: usize, radius: f64, trivial: usize, top: usize) -> Self {
        Self {
            len,
            radius,
            trivial,
            top,
            metric: SubsequenceMetric::Rigid,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.len == 0 || self.trivial == 0 || self.top == 0 {
            return Err(Error::InvalidParameter("motif len, trivial and top must be positive".into()));
        }
        if !(self.radius >= 0.0) {
            return Err(Error::InvalidParameter(format!("radius {} must be non-negative", self.radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifResult {
    pub center_pos: usize,
    /// Ascending.
    pub member_positions: Vec<usize>,
    /// Distance from each member to the center.
    pub member_distances: Vec<f64>,
    /// Number of occurrences, center included.
    pub count: usize,
}

/// `T[i..i+n]` as its own encoding.
pub fn subsequence(t: &SymbolSequence, i: usize, n: usize) -> Result<SymbolSequence> {
    if n == 0 || i + n > t.len() {
        return Err(Error::OutOfRange {
            position: i,
            len: n,
            total: t.len(),
        });
    }
    let first_frame = i * t.window;
    let end_frame = ((i + n) * t.window).min(t.source_len);
    Ok(SymbolSequence {
        codebook_id: t.codebook_id.clone(),
        window: t.window,
        symbols: t.symbols[i..i + n].to_vec(),
        source_len: end_frame - first_frame,
        label: t.label.clone(),
        id: format!("{}[{}..{}]", t.id, i, i + n),
    })
}

pub fn is_trivial_match(p: usize, q: usize, m: usize) -> bool {
    p.abs_diff(q) < m
}

fn window_distance(s: &[u32], i: usize, j: usize, q: &MotifQuery, lut: &Lut) -> f64 {
    let (a, b) = (&s[i..i + q.len], &s[j..j + q.len]);
    match q.metric {
        SubsequenceMetric::Rigid => rigid(a, b, lut),
        SubsequenceMetric::Dtw => lut_dtw(a, b, lut),
    }
    .expect("equal non-empty windows")
}

fn prepare<'a>(t: &'a SymbolSequence, q: &MotifQuery, lut: &Lut) -> Result<(&'a [u32], usize)> {
    q.check()?;
    t.check(lut.size())?;
    if t.len() < q.len {
        return Err(Error::InsufficientData {
            needed: q.len,
            got: t.len(),
        });
    }
    Ok((&t.symbols, t.len() - q.len + 1))
}

pub fn find_motifs(t: &SymbolSequence, q: &MotifQuery, cb: &Codebook) -> Result<Vec<MotifResult>> {
    find_motifs_with(t, q, cb, Execution::default())
}

pub fn find_motifs_with(t: &SymbolSequence, q: &MotifQuery, cb: &Codebook, exec: Execution) -> Result<Vec<MotifResult>> {
    cb.ensure_id(&t.codebook_id)?;
    find_motifs_lut(t, q, cb.lut(), exec)
}

/// Motif search against a bare lookup table; the codebook id is not checked.
pub fn find_motifs_lut(t: &SymbolSequence, q: &MotifQuery, lut: &Lut, exec: Execution) -> Result<Vec<MotifResult>> {
    let (s, n) = prepare(t, q, lut)?;
    let m = q.trivial;

    // non-trivial neighbours of every candidate, ascending by position
    let neighbours: Vec<Vec<usize>> = exec.map_range(n, |i| {
        (0..n)
            .filter(|&j| !is_trivial_match(i, j, m) && window_distance(s, i, j, q, lut) < q.radius)
            .collect()
    });

    let mut blocked = vec![false; n];
    let mut motifs = Vec::new();
    while motifs.len() < q.top {
        let mut best: Option<Vec<usize>> = None;
        for i in (0..n).filter(|&i| !blocked[i]) {
            let members = member_set(i, &neighbours[i], &blocked, m);
            if best.as_ref().is_none_or(|b| members.len() > b.len()) {
                best = Some(members);
            }
        }
        let Some(members) = best else { break };
        for &p in &members {
            for b in &mut blocked[p.saturating_sub(m - 1)..(p + m).min(n)] {
                *b = true;
            }
        }
        motifs.push(summarize(members, s, q, lut));
    }
    Ok(motifs)
}

/// Largest set of positions, pairwise at least `m` apart, containing `i` and
/// drawn from its unblocked neighbours. Greedy nearest-first on each side is
/// optimal for points on a line.
fn member_set(i: usize, neighbours: &[usize], blocked: &[bool], m: usize) -> Vec<usize> {
    let mut left = Vec::new();
    let mut last = i;
    for &j in neighbours.iter().rev().filter(|&&j| j < i && !blocked[j]) {
        if last - j >= m {
            left.push(j);
            last = j;
        }
    }
    left.reverse();
    let mut members = left;
    members.push(i);
    let mut last = i;
    for &j in neighbours.iter().filter(|&&j| j > i && !blocked[j]) {
        if j - last >= m {
            members.push(j);
            last = j;
        }
    }
    members
}

/// Picks the member with the smallest distance sum to the others, among
/// members within the radius of all others.
fn summarize(members: Vec<usize>, s: &[u32], q: &MotifQuery, lut: &Lut) -> MotifResult {
    let k = members.len();
    let mut d = vec![0.0; k * k];
    for a in 0..k {
        for b in a + 1..k {
            let v = window_distance(s, members[a], members[b], q, lut);
            d[a * k + b] = v;
            d[b * k + a] = v;
        }
    }
    let row = |a: usize| &d[a * k..(a + 1) * k];
    let center = (0..k)
        .filter(|&a| row(a).iter().enumerate().all(|(b, &v)| a == b || v < q.radius))
        .min_by(|&a, &b| {
            let sa: f64 = row(a).iter().sum();
            let sb: f64 = row(b).iter().sum();
            sa.total_cmp(&sb).then(a.cmp(&b))
        })
        .expect("the seeding candidate is within the radius of every member");
    MotifResult {
        center_pos: members[center],
        member_distances: row(center).to_vec(),
        count: k,
        member_positions: members,
    }
}

/// Radius for automatic mode: the 5th percentile of non-trivial pairwise
/// subsequence distances, computed exactly when there are at most
/// `max_pairs` pairs and on a seeded sample otherwise. A zero percentile is
/// raised to the smallest positive distance seen, since matching is strict.
pub fn auto_radius(
    t: &SymbolSequence,
    len: usize,
    trivial: usize,
    cb: &Codebook,
    max_pairs: usize,
    seed: u64,
) -> Result<f64> {
    cb.ensure_id(&t.codebook_id)?;
    auto_radius_lut(t, len, trivial, cb.lut(), max_pairs, seed)
}

pub fn auto_radius_lut(t: &SymbolSequence, len: usize, trivial: usize, lut: &Lut, max_pairs: usize, seed: u64) -> Result<f64> {
    let q = MotifQuery::new(len, 0.0, trivial, 1);
    let (s, n) = prepare(t, &q, lut)?;
    let all: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + trivial..n).map(move |j| (i, j)))
        .take(max_pairs.saturating_add(1))
        .collect();
    let pairs = if all.len() <= max_pairs {
        all
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(max_pairs);
        while out.len() < max_pairs {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if !is_trivial_match(i, j, trivial) {
                out.push((i.min(j), i.max(j)));
            }
        }
        out
    };
    if pairs.is_empty() {
        return Err(Error::InsufficientData {
            needed: len + trivial,
            got: t.len(),
        });
    }
    let mut d: Vec<f64> = pairs.iter().map(|&(i, j)| window_distance(s, i, j, &q, lut)).collect();
    d.sort_by(f64::total_cmp);
    let r = d[((d.len() - 1) as f64 * 0.05).round() as usize];
    if r > 0.0 {
        return Ok(r);
    }
    Ok(d.iter().copied().find(|&x| x > 0.0).unwrap_or(0.0))
}
