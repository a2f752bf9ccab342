//! Grassmann manifold in the projection-matrix embedding.
//!
//! A point is an m x m rank-d orthogonal projector stored row-major. Distances
//! are inherited from the Frobenius norm of the embedding and the map back onto
//! the manifold is the rank-d SVD projection `UU^T`.

use nalgebra::DMatrix;

/// Singular values at or below this level count as zero.
pub(crate) const RANK_FLOOR: f64 = 1e-10;

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) enum ProjectError {
    /// sigma_d too small.
    Rank(f64),
    /// sigma_d - sigma_{d+1} too small.
    Gap(f64),
}

/// `UU^T` from the top-`rank` left singular vectors of `m`.
pub(crate) fn project(
    data: &[f64],
    ambient: usize,
    rank: usize,
    require_gap: bool,
) -> Result<Vec<f64>, ProjectError> {
    let mat = DMatrix::from_row_slice(ambient, ambient, data);
    let svd = mat.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma_d = svd.singular_values[order[rank - 1]];
    if sigma_d <= RANK_FLOOR {
        return Err(ProjectError::Rank(sigma_d));
    }
    if require_gap && rank < ambient {
        let gap = sigma_d - svd.singular_values[order[rank]];
        if gap <= RANK_FLOOR {
            return Err(ProjectError::Gap(gap));
        }
    }
    let mut out = vec![0.0; ambient * ambient];
    for &c in &order[..rank] {
        let col = u.column(c);
        for i in 0..ambient {
            let ui = col[i];
            for j in 0..ambient {
                out[i * ambient + j] += ui * col[j];
            }
        }
    }
    // exact symmetry
    for i in 0..ambient {
        for j in (i + 1)..ambient {
            let s = 0.5 * (out[i * ambient + j] + out[j * ambient + i]);
            out[i * ambient + j] = s;
            out[j * ambient + i] = s;
        }
    }
    Ok(out)
}

/// Symmetric, idempotence and trace residuals of a candidate projector.
pub(crate) fn residuals(data: &[f64], ambient: usize, rank: usize) -> (f64, f64, f64) {
    let p = DMatrix::from_row_slice(ambient, ambient, data);
    let asym = (&p - p.transpose()).norm();
    let idem = (&p * &p - &p).norm();
    let trace = (p.trace() - rank as f64).abs();
    (asym, idem, trace)
}
