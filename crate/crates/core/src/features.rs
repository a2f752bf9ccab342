//! Raw-feature constructors: optical-flow histograms onto the sphere and
//! landmark configurations onto the Grassmannian.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Manifold, ManifoldPoint};

/// Flow vectors shorter than this are ignored.
pub const FLOW_FLOOR: f64 = 1e-12;

/// Relative singular-value floor for landmark matrices.
pub const LANDMARK_RANK_TOL: f64 = 1e-10;

/// Angle bin of a flow vector. The primary angle `atan(y/x)` lies in
/// `(-π/2, π/2)` and bin `b` covers `[-π/2 + πb/B, -π/2 + π(b+1)/B)`.
/// Vertical vectors (`x = 0`) go to the last bin.
pub fn hoof_bin(x: f64, y: f64, bins: usize) -> usize {
    if x == 0.0 {
        return bins - 1;
    }
    let theta = (y / x).atan();
    let b = ((theta + PI / 2.0) * bins as f64 / PI).floor();
    (b.max(0.0) as usize).min(bins - 1)
}

/// Magnitude-weighted angle histogram normalised to unit mass.
pub fn hoof_histogram(flow: &[(f64, f64)], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("HOOF needs at least 2 bins, got {bins}")));
    }
    let mut h = vec![0.0; bins];
    for &(x, y) in flow {
        let mag = x.hypot(y);
        if !mag.is_finite() {
            return Err(Error::InvalidParameter("non-finite flow vector".into()));
        }
        if mag < FLOW_FLOOR {
            continue;
        }
        h[hoof_bin(x, y, bins)] += mag;
    }
    let total: f64 = h.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateHistogram);
    }
    h.iter_mut().for_each(|v| *v /= total);
    Ok(h)
}

/// Square-root HOOF representation on `S^{B-1}`.
pub fn hoof(flow: &[(f64, f64)], bins: usize) -> Result<ManifoldPoint> {
    let h = hoof_histogram(flow, bins)?;
    let mut s: Vec<f64> = h.iter().map(|v| v.sqrt()).collect();
    let n = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    s.iter_mut().for_each(|v| *v /= n);
    ManifoldPoint::new(Manifold::Hypersphere { ambient: bins }, s)
}

/// Subtracts the column means of a row-major `m x 2` landmark matrix.
pub fn center_landmarks(landmarks: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = landmarks.len().max(1) as f64;
    let (sx, sy) = landmarks.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (cx, cy) = (sx / n, sy / n);
    landmarks.iter().map(|&(x, y)| (x - cx, y - cy)).collect()
}

/// Projector onto the column space of the `m x 2` landmark matrix `L`,
/// one row per landmark. Invariant to `L -> L A^T` for invertible `A`.
pub fn landmarks_to_grassmann(landmarks: &[(f64, f64)]) -> Result<ManifoldPoint> {
    let m = landmarks.len();
    let manifold = Manifold::Grassmann { ambient: m, rank: 2 };
    manifold.check()?;
    let l = DMatrix::from_fn(m, 2, |i, j| if j == 0 { landmarks[i].0 } else { landmarks[i].1 });
    let svd = l.svd(true, false);
    let (s0, s1) = (svd.singular_values[0], svd.singular_values[1]);
    let (hi, lo) = (s0.max(s1), s0.min(s1));
    if !(lo > LANDMARK_RANK_TOL * hi) {
        return Err(Error::RankDeficient(lo));
    }
    let u = svd.u.expect("left singular vectors requested");
    let mut p = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = u[(i, 0)] * u[(j, 0)] + u[(i, 1)] * u[(j, 1)];
            p[i * m + j] = v;
            p[j * m + i] = v;
        }
    }
    ManifoldPoint::new(manifold, p)
}
