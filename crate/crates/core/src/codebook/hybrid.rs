use std::collections::BTreeMap;

use super::conscience::{train, ConscienceConfig};
use super::kmeans::{lloyd, KMeansConfig};
use super::{Codebook, TrainingMeta, TrainingMethod};
use crate::error::{Error, Result};
use crate::geometry::ManifoldPoint;

#[derive(Debug, Clone)]
pub struct HybridConfig {
    /// Number of K-means clusters in the first stage (typically 5 to 10).
    pub stage1_k: usize,
    /// Sub-clusters assigned to the smallest stage-1 cluster (typically 1 to 5).
    pub r: usize,
    pub kmeans_iters: usize,
    /// Stage-2 settings; `k` and `seed` are overridden per cluster.
    pub conscience: ConscienceConfig,
}

impl HybridConfig {
    pub fn new(stage1_k: usize, r: usize, seed: u64) -> Self {
        Self {
            stage1_k,
            r,
            kmeans_iters: 100,
            conscience: ConscienceConfig::new(2, seed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HybridFit {
    pub codebook: Codebook,
    pub stage1_counts: Vec<usize>,
    pub sub_counts: Vec<usize>,
}

/// Sub-cluster count per stage-1 cluster: `ceil(p_i / p_s * r)` where `p_s`
/// is the smallest cluster probability. Computed on integer counts, so
/// `p_i / p_s = count_i / count_s` exactly.
pub fn split_counts(counts: &[usize], r: usize) -> Result<Vec<usize>> {
    let smallest = *counts.iter().min().ok_or(Error::EmptyInput("cluster counts"))?;
    if smallest == 0 {
        return Err(Error::EmptyInput("stage-1 cluster"));
    }
    Ok(counts.iter().map(|&c| (c * r).div_ceil(smallest)).collect())
}

/// Two-stage training: geodesic K-means with `stage1_k` clusters, then
/// conscience learning inside each cluster. The final codebook is the union
/// of all sub-cluster symbols.
pub fn hybrid_learn(data: &[ManifoldPoint], cfg: &HybridConfig) -> Result<HybridFit> {
    if cfg.stage1_k == 0 || cfg.r == 0 {
        return Err(Error::InvalidParameter("stage1_k and r must be positive".into()));
    }
    let seed = cfg.conscience.seed;
    let mut km = KMeansConfig::new(cfg.stage1_k, seed);
    km.max_iters = cfg.kmeans_iters;
    km.exec = cfg.conscience.exec;
    let (centers, labels, _, _) = lloyd(data, &km)?;

    let mut members: Vec<Vec<ManifoldPoint>> = vec![Vec::new(); cfg.stage1_k];
    for (x, &l) in data.iter().zip(&labels) {
        members[l].push(x.clone());
    }
    let stage1_counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let wanted = split_counts(&stage1_counts, cfg.r)?;

    let mut symbols = Vec::new();
    let mut sub_counts = Vec::with_capacity(wanted.len());
    for (c, (pts, &want)) in members.iter().zip(&wanted).enumerate() {
        let n_sub = want.min(pts.len());
        let mut sub = cfg.conscience.clone();
        sub.k = n_sub;
        sub.seed = seed.wrapping_add(c as u64 + 1);
        sub.track_entropy = false;
        let init = (n_sub == 1).then(|| vec![centers[c].clone()]);
        let trained = train(pts, &sub, init.as_deref())?;
        symbols.extend(trained.symbols);
        sub_counts.push(n_sub);
    }

    let mut params = BTreeMap::new();
    params.insert("stage1_k".into(), cfg.stage1_k as f64);
    params.insert("r".into(), cfg.r as f64);
    params.insert("k".into(), symbols.len() as f64);
    params.insert("alpha".into(), cfg.conscience.alpha);
    params.insert("B".into(), cfg.conscience.win_rate_factor);
    params.insert("C".into(), cfg.conscience.conscience_factor);
    params.insert("passes".into(), cfg.conscience.max_passes as f64);
    let codebook = Codebook::new(
        symbols,
        TrainingMeta {
            method: TrainingMethod::Hybrid,
            seed,
            params,
        },
    )?;
    Ok(HybridFit {
        codebook,
        stage1_counts,
        sub_counts,
    })
}
