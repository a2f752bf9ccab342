//! Closed-form SE(3) exponential and logarithm.
//!
//! Each factor is stored as a row-major homogeneous 4x4 matrix (16 values).
//! Lie algebra elements use `vec(B) = [u1, u2, u3, w1, w2, w3]`: `u` is the
//! rotation generator, `w` the translational part of the algebra element.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

pub(crate) const BLOCK: usize = 16;
pub(crate) const DOF: usize = 6;

/// Below this angle the trigonometric ratios switch to Taylor series.
const SMALL_ANGLE: f64 = 1e-2;
/// Above this value of `cos(theta)` (i.e. close to pi) the axis is read off the
/// symmetric part of R instead of the skew part.
const NEAR_PI_COS: f64 = -0.9;

pub(crate) fn unpack(block: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let r = Matrix3::new(
        block[0], block[1], block[2], block[4], block[5], block[6], block[8], block[9], block[10],
    );
    let t = Vector3::new(block[3], block[7], block[11]);
    (r, t)
}

pub(crate) fn pack(r: &Matrix3<f64>, t: &Vector3<f64>, out: &mut [f64]) {
    for i in 0..3 {
        for j in 0..3 {
            out[4 * i + j] = r[(i, j)];
        }
        out[4 * i + 3] = t[i];
    }
    out[12] = 0.0;
    out[13] = 0.0;
    out[14] = 0.0;
    out[15] = 1.0;
}

pub(crate) fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// sin(t)/t
fn sinc(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0
    } else {
        theta.sin() / theta
    }
}

/// (1 - cos t)/t^2, written without cancellation.
fn one_minus_cos_ratio(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.5;
    }
    let h = 0.5 * theta;
    let s = if h < SMALL_ANGLE {
        let h2 = h * h;
        1.0 - h2 / 6.0 + h2 * h2 / 120.0
    } else {
        h.sin() / h
    };
    0.5 * s * s
}

/// (t - sin t)/t^3
fn third_ratio(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362_880.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// Group exponential of one se(3) element.
pub(crate) fn exp(xi: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let omega = Vector3::new(xi[0], xi[1], xi[2]);
    let rho = Vector3::new(xi[3], xi[4], xi[5]);
    let theta = omega.norm();
    let a = sinc(theta);
    let b = one_minus_cos_ratio(theta);
    let c = third_ratio(theta);
    let w = hat(&omega);
    let w2 = w * w;
    let r = Matrix3::identity() + w * a + w2 * b;
    let v = Matrix3::identity() + w * b + w2 * c;
    (r, v * rho)
}

/// Rotation angle in [0, pi] and the rotation vector `theta * axis`.
fn rotation_log(r: &Matrix3<f64>) -> (f64, Vector3<f64>) {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    // s = sin(theta) * axis
    let s = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let sin = s.norm();
    let theta = sin.atan2(cos);
    if cos > NEAR_PI_COS {
        (theta, s / sinc(theta))
    } else {
        // (R + R^T)/2 = cos I + (1 - cos) n n^T
        let sym = (r + r.transpose()) * 0.5;
        let nn = (sym - Matrix3::identity() * cos) / (1.0 - cos);
        let mut col = 0;
        for k in 1..3 {
            if nn[(k, k)] > nn[(col, col)] {
                col = k;
            }
        }
        let mut axis = Vector3::new(nn[(0, col)], nn[(1, col)], nn[(2, col)]);
        axis /= axis.norm();
        if axis.dot(&s) < 0.0 {
            axis = -axis;
        }
        (theta, axis * theta)
    }
}

/// Group logarithm of one SE(3) element, returned as `[u, w]`.
///
/// Rotation angles at pi (up to `1e-12`) have no unique logarithm; for those
/// `strict` reports an error and the lenient path picks one of the two axes.
pub(crate) fn log(r: &Matrix3<f64>, t: &Vector3<f64>, strict: bool) -> Result<[f64; 6], f64> {
    let (theta, omega) = rotation_log(r);
    if strict && PI - theta < 1e-12 {
        return Err(theta);
    }
    let d = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30_240.0
    } else {
        let a = sinc(theta);
        let b = one_minus_cos_ratio(theta);
        (1.0 - a / (2.0 * b)) / (theta * theta)
    };
    let w = hat(&omega);
    let v_inv = Matrix3::identity() - w * 0.5 + w * w * d;
    let rho = v_inv * t;
    Ok([omega.x, omega.y, omega.z, rho.x, rho.y, rho.z])
}

/// `a^{-1} b` for two factors.
pub(crate) fn relative(a: &[f64], b: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let (ra, ta) = unpack(a);
    let (rb, tb) = unpack(b);
    let rat = ra.transpose();
    (rat * rb, rat * (tb - ta))
}

/// `a * exp(xi)` for one factor, written into `out`.
pub(crate) fn compose_exp(a: &[f64], xi: &[f64], out: &mut [f64]) {
    let (ra, ta) = unpack(a);
    let (re, te) = exp(xi);
    pack(&(ra * re), &(ra * te + ta), out);
}

/// Squared norm of `log(a^{-1} b)` for one factor.
pub(crate) fn factor_sq_distance(a: &[f64], b: &[f64]) -> f64 {
    let (r, t) = relative(a, b);
    let xi = log(&r, &t, false).unwrap_or([0.0; 6]);
    xi.iter().map(|v| v * v).sum()
}
