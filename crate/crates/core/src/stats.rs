//! Intrinsic and extrinsic means, and piecewise aggregate approximation.

use crate::error::{Error, Result};
use crate::geometry::{self, Manifold, ManifoldPoint, TangentVector};
use crate::par::Execution;

/// An ordered list of points on one manifold, e.g. one execution of an activity.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSequence {
    manifold: Manifold,
    points: Vec<ManifoldPoint>,
    pub label: Option<String>,
    pub id: String,
}

impl ManifoldSequence {
    pub fn new(id: impl Into<String>, label: Option<String>, points: Vec<ManifoldPoint>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput("sequence"))?;
        let manifold = *first.manifold();
        if let Some(p) = points.iter().find(|p| p.manifold() != &manifold) {
            return Err(Error::IncompatibleManifolds {
                expected: manifold,
                found: *p.manifold(),
            });
        }
        Ok(Self {
            manifold,
            points,
            label,
            id: id.into(),
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<ManifoldPoint> {
        self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KarcherConfig {
    pub max_iters: usize,
    /// Threshold on the norm of the mean log vector.
    pub tol: f64,
    pub step: f64,
}

impl Default for KarcherConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-8,
            step: 1.0,
        }
    }
}

impl KarcherConfig {
    fn check(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.tol > 0.0) || !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidParameter(format!("bad Karcher configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MeanEstimate {
    pub mean: ManifoldPoint,
    pub iterations: usize,
    /// Norm of `(1/N) Σ log_μ(x_i)` at the returned point.
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Fréchet mean by the fixed-point iteration `μ ← exp_μ(step · mean_i log_μ(x_i))`.
///
/// Points are visited in a canonical (lexicographic) order and the iteration
/// starts from the first of them, so the result depends only on the multiset
/// of inputs. Grassmann inputs use [`extrinsic_mean`] instead.
pub fn karcher_mean(points: &[ManifoldPoint], cfg: &KarcherConfig) -> Result<MeanEstimate> {
    cfg.check()?;
    let first = points.first().ok_or(Error::EmptyInput("karcher_mean"))?;
    let manifold = *first.manifold();
    if let Manifold::Grassmann { .. } = manifold {
        let mean = extrinsic_mean(points)?;
        return Ok(MeanEstimate {
            mean,
            iterations: 0,
            gradient_norm: 0.0,
            converged: true,
        });
    }
    let ordered = canonical_order(points);
    let n = points.len() as f64;
    let mut mu = ordered[0].clone();
    let mut iterations = 0;
    loop {
        let mut grad = TangentVector::zeros(manifold);
        for p in &ordered {
            grad.add_scaled(&geometry::log_map(&mu, p)?, 1.0);
        }
        let grad = grad.scale(1.0 / n);
        let gradient_norm = grad.norm();
        if gradient_norm <= cfg.tol || iterations == cfg.max_iters {
            return Ok(MeanEstimate {
                mean: mu,
                iterations,
                gradient_norm,
                converged: gradient_norm <= cfg.tol,
            });
        }
        mu = geometry::exp_map(&mu, &grad.scale(cfg.step))?;
        iterations += 1;
    }
}

fn canonical_order(points: &[ManifoldPoint]) -> Vec<&ManifoldPoint> {
    let mut ordered: Vec<&ManifoldPoint> = points.iter().collect();
    ordered.sort_by(|a, b| {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    ordered
}

/// `Π((1/N) Σ P_i)` for Grassmann projectors.
pub fn extrinsic_mean(points: &[ManifoldPoint]) -> Result<ManifoldPoint> {
    let first = points.first().ok_or(Error::EmptyInput("extrinsic_mean"))?;
    let manifold = *first.manifold();
    let Manifold::Grassmann { ambient, rank } = manifold else {
        return Err(Error::InvalidParameter(format!(
            "extrinsic mean is defined for Grassmann points, got {manifold}"
        )));
    };
    let mut avg = vec![0.0; ambient * ambient];
    for p in canonical_order(points) {
        if p.manifold() != &manifold {
            return Err(Error::IncompatibleManifolds {
                expected: manifold,
                found: *p.manifold(),
            });
        }
        for (a, x) in avg.iter_mut().zip(p.data()) {
            *a += x;
        }
    }
    let n = points.len() as f64;
    avg.iter_mut().for_each(|a| *a /= n);
    geometry::grassmann_project_gapped(&avg, ambient, rank)
}

/// Piecewise aggregate approximation with consecutive windows of `window`
/// frames; the last window may be short. Output length is `ceil(N / window)`.
pub fn paa(seq: &ManifoldSequence, window: usize) -> Result<ManifoldSequence> {
    paa_with(seq, window, &KarcherConfig::default(), Execution::default())
}

pub fn paa_with(
    seq: &ManifoldSequence,
    window: usize,
    cfg: &KarcherConfig,
    exec: Execution,
) -> Result<ManifoldSequence> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    if window == 1 {
        return Ok(seq.clone());
    }
    let chunks: Vec<&[ManifoldPoint]> = seq.points.chunks(window).collect();
    let means = exec.try_map(&chunks, |w| karcher_mean(w, cfg).map(|m| m.mean))?;
    Ok(ManifoldSequence {
        manifold: seq.manifold,
        points: means,
        label: seq.label.clone(),
        id: seq.id.clone(),
    })
}
