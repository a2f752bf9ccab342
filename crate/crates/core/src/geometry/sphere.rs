//! Unit hypersphere S^{B-1} with the arc-length metric.

use std::f64::consts::PI;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Arc length `acos<a, b>`, evaluated as `2 asin(|a - b| / 2)` which agrees
/// with the arccosine but stays accurate for nearby points.
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    let chord = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    (2.0 * (0.5 * chord).min(1.0).asin()).clamp(0.0, PI)
}

pub(crate) fn exp(base: &[f64], v: &[f64]) -> Result<Vec<f64>, f64> {
    let theta = norm(v);
    if theta == 0.0 {
        return Ok(base.to_vec());
    }
    if theta > PI + 1e-12 {
        return Err(theta);
    }
    let (s, c) = theta.sin_cos();
    let mut out: Vec<f64> = base
        .iter()
        .zip(v)
        .map(|(b, x)| c * b + s * x / theta)
        .collect();
    let n = norm(&out);
    out.iter_mut().for_each(|x| *x /= n);
    Ok(out)
}

/// Tangent at `base` pointing to `target`: `u = target - <base, target> base`,
/// rescaled to the arc length.
pub(crate) fn log(base: &[f64], target: &[f64]) -> Result<Vec<f64>, f64> {
    let ip = dot(base, target).clamp(-1.0, 1.0);
    if ip <= -1.0 + 1e-9 {
        return Err(ip);
    }
    let mut u: Vec<f64> = target.iter().zip(base).map(|(t, b)| t - ip * b).collect();
    let un = norm(&u);
    let theta = distance(base, target);
    if un == 0.0 || theta == 0.0 {
        u.iter_mut().for_each(|x| *x = 0.0);
        return Ok(u);
    }
    let scale = theta / un;
    u.iter_mut().for_each(|x| *x *= scale);
    Ok(u)
}
