use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ensure_manifold, nearest, Codebook, TrainingMeta, TrainingMethod};
use crate::error::{Error, Result};
use crate::geometry::{self, ManifoldPoint};
use crate::par::Execution;
use crate::stats::{karcher_mean, KarcherConfig};

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub karcher: KarcherConfig,
    pub exec: Execution,
    /// Initial centers; k-means++ when absent.
    pub init: Option<Vec<ManifoldPoint>>,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: 100,
            seed,
            karcher: KarcherConfig::default(),
            exec: Execution::default(),
            init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub codebook: Codebook,
    /// Cluster of every training point under the final centers.
    pub labels: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Intrinsic K-means: nearest-center assignment by geodesic distance, centers
/// recomputed as Karcher means (extrinsic means on Grassmann).
///
/// Centers start from a seeded k-means++ draw unless given. A recomputed center is only
/// accepted when it does not raise its cluster's cost, so the objective is
/// non-increasing. Empty clusters take over the point farthest from its
/// current center.
pub fn kmeans_geodesic(data: &[ManifoldPoint], cfg: &KMeansConfig) -> Result<KMeansFit> {
    let (centers, labels, objective, iterations) = lloyd(data, cfg)?;
    let mut params = BTreeMap::new();
    params.insert("k".into(), cfg.k as f64);
    params.insert("max_iters".into(), cfg.max_iters as f64);
    let codebook = Codebook::new(
        centers,
        TrainingMeta {
            method: TrainingMethod::Kmeans,
            seed: cfg.seed,
            params,
        },
    )?;
    Ok(KMeansFit {
        codebook,
        labels,
        objective,
        iterations,
    })
}

type LloydOutput = (Vec<ManifoldPoint>, Vec<usize>, Vec<f64>, usize);

/// Lloyd iterations without wrapping the result in a codebook, so K = 1 works.
pub(crate) fn lloyd(data: &[ManifoldPoint], cfg: &KMeansConfig) -> Result<LloydOutput> {
    let k = cfg.k;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if data.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: data.len(),
        });
    }
    let manifold = *data[0].manifold();
    ensure_manifold(data, &manifold)?;
    let mut centers = match &cfg.init {
        Some(init) => {
            if init.len() != k {
                return Err(Error::InvalidParameter(format!("{} initial centers for K = {k}", init.len())));
            }
            ensure_manifold(init, &manifold)?;
            init.clone()
        }
        None => plus_plus_init(data, k, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
    };

    let assign_all = |centers: &[ManifoldPoint]| -> Vec<(usize, f64)> {
        cfg.exec.map(data, |x| nearest(&manifold, centers, x.data()))
    };

    let mut assignment = assign_all(&centers);
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        reseed_empty(&mut centers, &mut assignment, data);
        objective.push(assignment.iter().map(|(_, d)| d * d).sum());
        if converged || iterations == cfg.max_iters {
            break;
        }
        iterations += 1;

        let mut members = vec![Vec::new(); k];
        for (i, (c, _)) in assignment.iter().enumerate() {
            members[*c].push(i);
        }
        let updated = cfg.exec.try_map_range(k, |c| -> Result<ManifoldPoint> {
            let pts: Vec<ManifoldPoint> = members[c].iter().map(|&i| data[i].clone()).collect();
            let candidate = karcher_mean(&pts, &cfg.karcher)?.mean;
            let cost = |center: &ManifoldPoint| -> f64 {
                pts.iter()
                    .map(|p| {
                        let d = geometry::distance_unchecked(&manifold, center.data(), p.data());
                        d * d
                    })
                    .sum()
            };
            if cost(&candidate) <= cost(&centers[c]) {
                Ok(candidate)
            } else {
                Ok(centers[c].clone())
            }
        })?;
        let moved = updated != centers;
        centers = updated;
        let next = assign_all(&centers);
        let changed = next.iter().zip(&assignment).any(|(a, b)| a.0 != b.0);
        assignment = next;
        converged = !changed && !moved;
    }
    let labels = assignment.into_iter().map(|(c, _)| c).collect();
    Ok((centers, labels, objective, iterations))
}

fn plus_plus_init<R: Rng>(data: &[ManifoldPoint], k: usize, rng: &mut R) -> Vec<ManifoldPoint> {
    let manifold = *data[0].manifold();
    let mut chosen = vec![rng.random_range(0..data.len())];
    let mut d2: Vec<f64> = data
        .iter()
        .map(|x| {
            let d = geometry::distance_unchecked(&manifold, data[chosen[0]].data(), x.data());
            d * d
        })
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 {
                    pick = Some(i);
                    if target < *w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // fewer distinct points than k
            (0..data.len()).find(|i| !chosen.contains(i)).expect("n >= k")
        };
        chosen.push(next);
        for (i, x) in data.iter().enumerate() {
            let d = geometry::distance_unchecked(&manifold, data[next].data(), x.data());
            d2[i] = d2[i].min(d * d);
        }
    }
    chosen.into_iter().map(|i| data[i].clone()).collect()
}

/// Moves the globally farthest point (from a cluster with spare members) into
/// each empty cluster.
fn reseed_empty(centers: &mut [ManifoldPoint], assignment: &mut [(usize, f64)], data: &[ManifoldPoint]) {
    let k = centers.len();
    loop {
        let mut sizes = vec![0usize; k];
        for (c, _) in assignment.iter() {
            sizes[*c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = assignment
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| sizes[*c] > 1)
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("n >= k leaves a cluster with spare members");
        centers[empty] = data[donor].clone();
        assignment[donor] = (empty, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_point, Manifold};

    #[test]
    fn distinct_points_become_centers() {
        let m = Manifold::Hypersphere { ambient: 4 };
        let data: Vec<_> = (0..6).map(|s| geometry::random_point(m, s).unwrap()).collect();
        let fit = kmeans_geodesic(&data, &KMeansConfig::new(6, 3)).unwrap();
        assert_eq!(*fit.objective.last().unwrap(), 0.0);
        for p in &data {
            assert!(fit.codebook.symbols().contains(p));
        }
    }

    #[test]
    fn objective_is_monotone() {
        let m = Manifold::ProductSe3 { factors: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<_> = (0..120).map(|_| sample_point(m, &mut rng).unwrap()).collect();
        let fit = kmeans_geodesic(&data, &KMeansConfig::new(7, 1)).unwrap();
        for w in fit.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", fit.objective);
        }
    }

    #[test]
    fn too_little_data_is_an_error() {
        let m = Manifold::Euclidean { dim: 2 };
        let data: Vec<_> = (0..3).map(|s| geometry::random_point(m, s).unwrap()).collect();
        assert!(matches!(
            kmeans_geodesic(&data, &KMeansConfig::new(4, 0)),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn duplicate_heavy_data_still_fills_every_cluster() {
        let m = Manifold::Euclidean { dim: 1 };
        let mut data: Vec<_> = (0..20).map(|_| ManifoldPoint::new(m, vec![1.0]).unwrap()).collect();
        data.push(ManifoldPoint::new(m, vec![2.0]).unwrap());
        data.push(ManifoldPoint::new(m, vec![3.0]).unwrap());
        let fit = kmeans_geodesic(&data, &KMeansConfig::new(4, 5)).unwrap();
        let mut sizes = [0; 4];
        for l in &fit.labels {
            sizes[*l] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0), "{sizes:?}");
    }

    #[test]
    fn execution_modes_agree() {
        let m = Manifold::Hypersphere { ambient: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<_> = (0..300).map(|_| sample_point(m, &mut rng).unwrap()).collect();
        let mut cfg = KMeansConfig::new(6, 9);
        cfg.exec = Execution::Sequential;
        let a = kmeans_geodesic(&data, &cfg).unwrap();
        cfg.exec = Execution::Parallel;
        let b = kmeans_geodesic(&data, &cfg).unwrap();
        assert_eq!(a.codebook, b.codebook);
        assert_eq!(a.labels, b.labels);
    }
}
