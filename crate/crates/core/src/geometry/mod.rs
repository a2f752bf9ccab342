//! Manifold descriptors, points, tangent vectors and the geometric primitives
//! (distance, exponential map, logarithm map, projection) for Euclidean space,
//! the unit hypersphere, the Grassmann manifold and products of SE(3).
//!
//! Points are immutable and validated on construction, so the primitives only
//! check that their arguments live on the same manifold.
//!
//! | manifold     | point layout                   | tangent layout        |
//! |--------------|--------------------------------|-----------------------|
//! | Euclidean n  | n values                       | n values              |
//! | Hypersphere B| B values, unit norm            | B values, orthogonal  |
//! | Grassmann m,d| m x m projector, row-major     | m x m ambient matrix  |
//! | SE(3)^J      | J homogeneous 4x4, row-major   | J x `[u1..u3, w1..w3]`|
//!
//! The Grassmann exponential/logarithm pair is the extrinsic surrogate
//! `exp_P(V) = Π(P + V)`, `log_P(Q) = Q - P`. SE(3)^J uses the left-invariant
//! pair `exp_P(ξ) = P·exp(ξ)`, `log_P(Q) = log(P⁻¹Q)` with distance
//! `|log(P⁻¹Q)|`, so `distance(a, b) == |log_map(a, b)|` on every manifold.

mod grassmann;
mod se3;
mod sphere;

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural tolerance used by [`validate`] for matrix-valued manifolds.
pub const STRUCTURAL_TOL: f64 = 1e-6;
/// Unit-norm tolerance for hypersphere points.
pub const SPHERE_NORM_TOL: f64 = 1e-9;

thread_local! {
    static GEOMETRY_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of distance / exp / log evaluations performed on the current thread.
///
/// Work dispatched to the rayon pool is counted on the pool's threads, so
/// measurements should run with [`crate::Execution::Sequential`].
pub fn geometry_calls() -> u64 {
    GEOMETRY_CALLS.with(Cell::get)
}

fn count_call() {
    GEOMETRY_CALLS.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    Euclidean { dim: usize },
    /// Points on S^{ambient-1}.
    Hypersphere { ambient: usize },
    /// Rank-`rank` subspaces of R^`ambient`.
    Grassmann { ambient: usize, rank: usize },
    /// SE(3) x ... x SE(3), `factors` copies.
    ProductSe3 { factors: usize },
}

impl Manifold {
    pub fn check(&self) -> Result<()> {
        let ok = match *self {
            Manifold::Euclidean { dim } => dim > 0,
            Manifold::Hypersphere { ambient } => ambient > 0,
            Manifold::Grassmann { ambient, rank } => rank > 0 && rank < ambient,
            Manifold::ProductSe3 { factors } => factors > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid manifold descriptor {self}")))
        }
    }

    /// Length of the flat point representation.
    pub fn point_len(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } => dim,
            Manifold::Hypersphere { ambient } => ambient,
            Manifold::Grassmann { ambient, .. } => ambient * ambient,
            Manifold::ProductSe3 { factors } => se3::BLOCK * factors,
        }
    }

    /// Length of the flat tangent representation.
    pub fn tangent_len(&self) -> usize {
        match *self {
            Manifold::ProductSe3 { factors } => se3::DOF * factors,
            _ => self.point_len(),
        }
    }

    /// Dimension of the manifold itself.
    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } => dim,
            Manifold::Hypersphere { ambient } => ambient - 1,
            Manifold::Grassmann { ambient, rank } => rank * (ambient - rank),
            Manifold::ProductSe3 { factors } => se3::DOF * factors,
        }
    }

    /// Scalars in a compact raw feature encoding (histogram bins, an m x d
    /// basis, 3x4 rigid transforms), used for storage comparisons.
    pub fn feature_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean { dim } => dim,
            Manifold::Hypersphere { ambient } => ambient,
            Manifold::Grassmann { ambient, rank } => ambient * rank,
            Manifold::ProductSe3 { factors } => 12 * factors,
        }
    }

    fn ensure_same(&self, other: &Manifold) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::IncompatibleManifolds {
                expected: *self,
                found: *other,
            })
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Manifold::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Manifold::Hypersphere { ambient } => write!(f, "sphere:{ambient}"),
            Manifold::Grassmann { ambient, rank } => write!(f, "grassmann:{ambient}:{rank}"),
            Manifold::ProductSe3 { factors } => write!(f, "se3:{factors}"),
        }
    }
}

impl FromStr for Manifold {
    type Err = Error;

    /// Parses `euclidean:<n>`, `sphere:<B>`, `grassmann:<m>:<d>` or `se3:<J>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse manifold `{s}`"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().ok_or_else(bad)?.to_ascii_lowercase();
        let nums: Vec<usize> = parts
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let m = match (kind.as_str(), nums.as_slice()) {
            ("euclidean" | "r", [n]) => Manifold::Euclidean { dim: *n },
            ("sphere" | "hypersphere", [b]) => Manifold::Hypersphere { ambient: *b },
            ("grassmann", [m, d]) => Manifold::Grassmann {
                ambient: *m,
                rank: *d,
            },
            ("se3", [j]) => Manifold::ProductSe3 { factors: *j },
            _ => return Err(bad()),
        };
        m.check()?;
        Ok(m)
    }
}

/// First violated point invariant and how badly it is violated.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    WrongLength { expected: usize, found: usize },
    NonFinite { index: usize },
    UnitNorm { deviation: f64 },
    Asymmetric { magnitude: f64 },
    NotIdempotent { magnitude: f64 },
    WrongTrace { magnitude: f64 },
    NotOrthogonal { factor: usize, magnitude: f64 },
    Reflection { factor: usize, det: f64 },
    BadBottomRow { factor: usize, magnitude: f64 },
}

impl Violation {
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::WrongLength { expected, found } => expected.abs_diff(found) as f64,
            Violation::NonFinite { .. } => f64::INFINITY,
            Violation::UnitNorm { deviation } => deviation,
            Violation::Asymmetric { magnitude }
            | Violation::NotIdempotent { magnitude }
            | Violation::WrongTrace { magnitude }
            | Violation::NotOrthogonal { magnitude, .. }
            | Violation::BadBottomRow { magnitude, .. } => magnitude,
            Violation::Reflection { det, .. } => det,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongLength { expected, found } => {
                write!(f, "expected {expected} values, found {found}")
            }
            Violation::NonFinite { index } => write!(f, "non-finite value at index {index}"),
            Violation::UnitNorm { deviation } => write!(f, "norm deviates from 1 by {deviation:e}"),
            Violation::Asymmetric { magnitude } => write!(f, "projector asymmetric by {magnitude:e}"),
            Violation::NotIdempotent { magnitude } => {
                write!(f, "projector not idempotent: |P^2 - P| = {magnitude:e}")
            }
            Violation::WrongTrace { magnitude } => write!(f, "projector trace off by {magnitude:e}"),
            Violation::NotOrthogonal { factor, magnitude } => {
                write!(f, "factor {factor}: |R^T R - I| = {magnitude:e}")
            }
            Violation::Reflection { factor, det } => write!(f, "factor {factor}: det(R) = {det}"),
            Violation::BadBottomRow { factor, magnitude } => {
                write!(f, "factor {factor}: bottom row deviates by {magnitude:e}")
            }
        }
    }
}

/// Checks raw data against the point invariants of `manifold`.
pub fn validate(manifold: &Manifold, data: &[f64]) -> std::result::Result<(), Violation> {
    let expected = manifold.point_len();
    if data.len() != expected {
        return Err(Violation::WrongLength {
            expected,
            found: data.len(),
        });
    }
    if let Some(index) = data.iter().position(|x| !x.is_finite()) {
        return Err(Violation::NonFinite { index });
    }
    match *manifold {
        Manifold::Euclidean { .. } => Ok(()),
        Manifold::Hypersphere { .. } => {
            let deviation = (sphere::norm(data) - 1.0).abs();
            if deviation < SPHERE_NORM_TOL {
                Ok(())
            } else {
                Err(Violation::UnitNorm { deviation })
            }
        }
        Manifold::Grassmann { ambient, rank } => {
            let (asym, idem, trace) = grassmann::residuals(data, ambient, rank);
            if asym >= STRUCTURAL_TOL {
                Err(Violation::Asymmetric { magnitude: asym })
            } else if idem >= STRUCTURAL_TOL {
                Err(Violation::NotIdempotent { magnitude: idem })
            } else if trace >= STRUCTURAL_TOL {
                Err(Violation::WrongTrace { magnitude: trace })
            } else {
                Ok(())
            }
        }
        Manifold::ProductSe3 { .. } => {
            for (factor, block) in data.chunks_exact(se3::BLOCK).enumerate() {
                let bottom = block[12].abs() + block[13].abs() + block[14].abs() + (block[15] - 1.0).abs();
                if bottom >= STRUCTURAL_TOL {
                    return Err(Violation::BadBottomRow {
                        factor,
                        magnitude: bottom,
                    });
                }
                let (r, _) = se3::unpack(block);
                let orth = (r.transpose() * r - nalgebra::Matrix3::identity()).norm();
                if orth >= STRUCTURAL_TOL {
                    return Err(Violation::NotOrthogonal {
                        factor,
                        magnitude: orth,
                    });
                }
                let det = r.determinant();
                if det <= 0.0 {
                    return Err(Violation::Reflection { factor, det });
                }
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    manifold: Manifold,
    data: Vec<f64>,
}

impl ManifoldPoint {
    /// Validates `data` against `manifold`.
    pub fn new(manifold: Manifold, data: Vec<f64>) -> Result<Self> {
        manifold.check()?;
        validate(&manifold, &data).map_err(Error::Validation)?;
        Ok(Self { manifold, data })
    }

    /// Caller guarantees the invariants hold.
    pub(crate) fn from_trusted(manifold: Manifold, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), manifold.point_len());
        Self { manifold, data }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Identity element / north pole / origin style base point.
    pub fn origin(manifold: Manifold) -> Result<Self> {
        manifold.check()?;
        let mut data = vec![0.0; manifold.point_len()];
        match manifold {
            Manifold::Euclidean { .. } => {}
            Manifold::Hypersphere { .. } => data[0] = 1.0,
            Manifold::Grassmann { ambient, rank } => {
                for i in 0..rank {
                    data[i * ambient + i] = 1.0;
                }
            }
            Manifold::ProductSe3 { .. } => {
                for block in data.chunks_exact_mut(se3::BLOCK) {
                    block[0] = 1.0;
                    block[5] = 1.0;
                    block[10] = 1.0;
                    block[15] = 1.0;
                }
            }
        }
        Ok(Self { manifold, data })
    }
}

/// Reports whether an existing point satisfies its manifold's invariants.
pub fn validate_point(p: &ManifoldPoint) -> std::result::Result<(), Violation> {
    validate(&p.manifold, &p.data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    manifold: Manifold,
    data: Vec<f64>,
}

impl TangentVector {
    pub fn new(manifold: Manifold, data: Vec<f64>) -> Result<Self> {
        if data.len() != manifold.tangent_len() {
            return Err(Error::Validation(Violation::WrongLength {
                expected: manifold.tangent_len(),
                found: data.len(),
            }));
        }
        Ok(Self { manifold, data })
    }

    pub fn zeros(manifold: Manifold) -> Self {
        Self {
            data: vec![0.0; manifold.tangent_len()],
            manifold,
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        sphere::norm(&self.data)
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.data.iter_mut().for_each(|x| *x *= factor);
        self
    }

    pub(crate) fn add_scaled(&mut self, other: &TangentVector, factor: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }
}

pub(crate) fn distance_unchecked(manifold: &Manifold, a: &[f64], b: &[f64]) -> f64 {
    count_call();
    match *manifold {
        Manifold::Euclidean { .. } | Manifold::Grassmann { .. } => grassmann::distance(a, b),
        Manifold::Hypersphere { .. } => sphere::distance(a, b),
        Manifold::ProductSe3 { .. } => a
            .chunks_exact(se3::BLOCK)
            .zip(b.chunks_exact(se3::BLOCK))
            .map(|(x, y)| se3::factor_sq_distance(x, y))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Geodesic (or embedding, for Grassmann) distance between two points.
pub fn distance(a: &ManifoldPoint, b: &ManifoldPoint) -> Result<f64> {
    a.manifold.ensure_same(&b.manifold)?;
    Ok(distance_unchecked(&a.manifold, &a.data, &b.data))
}

/// Exponential map at `base`. A zero tangent returns `base` unchanged.
pub fn exp_map(base: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    base.manifold.ensure_same(&v.manifold)?;
    count_call();
    if v.data.iter().all(|x| *x == 0.0) {
        return Ok(base.clone());
    }
    let data = match base.manifold {
        Manifold::Euclidean { .. } => base.data.iter().zip(&v.data).map(|(a, b)| a + b).collect(),
        Manifold::Hypersphere { .. } => sphere::exp(&base.data, &v.data).map_err(|n| {
            Error::Injectivity(format!("tangent norm {n} exceeds pi on the hypersphere"))
        })?,
        Manifold::Grassmann { ambient, rank } => {
            let moved: Vec<f64> = base.data.iter().zip(&v.data).map(|(a, b)| a + b).collect();
            project_raw(&moved, ambient, rank, false)?
        }
        Manifold::ProductSe3 { .. } => {
            let mut out = vec![0.0; base.data.len()];
            for ((b, xi), o) in base
                .data
                .chunks_exact(se3::BLOCK)
                .zip(v.data.chunks_exact(se3::DOF))
                .zip(out.chunks_exact_mut(se3::BLOCK))
            {
                se3::compose_exp(b, xi, o);
            }
            out
        }
    };
    Ok(ManifoldPoint::from_trusted(base.manifold, data))
}

/// Logarithm (inverse exponential) map: the tangent at `base` pointing to `target`.
pub fn log_map(base: &ManifoldPoint, target: &ManifoldPoint) -> Result<TangentVector> {
    base.manifold.ensure_same(&target.manifold)?;
    count_call();
    let data = match base.manifold {
        Manifold::Euclidean { .. } | Manifold::Grassmann { .. } => target
            .data
            .iter()
            .zip(&base.data)
            .map(|(t, b)| t - b)
            .collect(),
        Manifold::Hypersphere { .. } => sphere::log(&base.data, &target.data).map_err(|ip| {
            Error::Injectivity(format!("antipodal points on the hypersphere (<a,b> = {ip})"))
        })?,
        Manifold::ProductSe3 { factors } => {
            let mut out = Vec::with_capacity(se3::DOF * factors);
            for (k, (b, t)) in base
                .data
                .chunks_exact(se3::BLOCK)
                .zip(target.data.chunks_exact(se3::BLOCK))
                .enumerate()
            {
                let (r, tr) = se3::relative(b, t);
                let xi = se3::log(&r, &tr, true).map_err(|theta| {
                    Error::Injectivity(format!("factor {k}: relative rotation angle {theta} at pi"))
                })?;
                out.extend_from_slice(&xi);
            }
            out
        }
    };
    Ok(TangentVector {
        manifold: base.manifold,
        data,
    })
}

fn project_raw(data: &[f64], ambient: usize, rank: usize, require_gap: bool) -> Result<Vec<f64>> {
    grassmann::project(data, ambient, rank, require_gap).map_err(|e| match e {
        grassmann::ProjectError::Rank(sigma) => Error::DegenerateProjection { rank, sigma },
        grassmann::ProjectError::Gap(gap) => Error::DegenerateMean { rank, gap },
    })
}

/// `Π(M) = UU^T` with `U` the top-`rank` left singular vectors of the
/// row-major `ambient x ambient` matrix `m`.
pub fn grassmann_project(m: &[f64], ambient: usize, rank: usize) -> Result<ManifoldPoint> {
    let manifold = Manifold::Grassmann { ambient, rank };
    manifold.check()?;
    if m.len() != ambient * ambient {
        return Err(Error::Validation(Violation::WrongLength {
            expected: ambient * ambient,
            found: m.len(),
        }));
    }
    let data = project_raw(m, ambient, rank, false)?;
    Ok(ManifoldPoint::from_trusted(manifold, data))
}

/// Like [`grassmann_project`] but also demands `σ_d - σ_{d+1}` above the rank floor.
pub(crate) fn grassmann_project_gapped(m: &[f64], ambient: usize, rank: usize) -> Result<ManifoldPoint> {
    let data = project_raw(m, ambient, rank, true)?;
    Ok(ManifoldPoint::from_trusted(Manifold::Grassmann { ambient, rank }, data))
}

/// Deterministic random point; see [`sample_point`].
pub fn random_point(manifold: Manifold, seed: u64) -> Result<ManifoldPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_point(manifold, &mut rng)
}

fn gaussian_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Hypersphere: normalized Gaussian. Grassmann: projection of a Gaussian
/// matrix. SE(3): rotation with angle uniform in [0, pi/2] about a uniform
/// axis, Gaussian translation. Euclidean: standard Gaussian.
pub fn sample_point<R: Rng + ?Sized>(manifold: Manifold, rng: &mut R) -> Result<ManifoldPoint> {
    manifold.check()?;
    let data = match manifold {
        Manifold::Euclidean { dim } => gaussian_vec(dim, rng),
        Manifold::Hypersphere { ambient } => loop {
            let mut v = gaussian_vec(ambient, rng);
            let n = sphere::norm(&v);
            if n > 1e-12 {
                v.iter_mut().for_each(|x| *x /= n);
                break v;
            }
        },
        Manifold::Grassmann { ambient, rank } => loop {
            let g = gaussian_vec(ambient * ambient, rng);
            if let Ok(p) = project_raw(&g, ambient, rank, false) {
                break p;
            }
        },
        Manifold::ProductSe3 { factors } => {
            let mut out = vec![0.0; se3::BLOCK * factors];
            for block in out.chunks_exact_mut(se3::BLOCK) {
                let axis = loop {
                    let a = Vector3::from_iterator(gaussian_vec(3, rng));
                    if a.norm() > 1e-12 {
                        break a.normalize();
                    }
                };
                let angle = rng.random::<f64>() * PI / 2.0;
                let w = axis * angle;
                let (r, _) = se3::exp(&[w.x, w.y, w.z, 0.0, 0.0, 0.0]);
                let t = Vector3::from_iterator(gaussian_vec(3, rng));
                se3::pack(&r, &t, block);
            }
            out
        }
    };
    Ok(ManifoldPoint::from_trusted(manifold, data))
}

/// Random tangent at `base` with isotropic Gaussian coordinates, scaled so the
/// expected squared norm is `scale^2`.
pub fn gaussian_tangent<R: Rng + ?Sized>(base: &ManifoldPoint, scale: f64, rng: &mut R) -> TangentVector {
    let m = base.manifold;
    let per_coord = scale / (m.intrinsic_dim() as f64).sqrt();
    let raw = gaussian_vec(m.tangent_len(), rng);
    let mut v = project_to_tangent(base, raw);
    v.iter_mut().for_each(|x| *x *= per_coord);
    TangentVector { manifold: m, data: v }
}

/// Uniformly oriented tangent of exactly unit norm.
pub fn random_direction<R: Rng + ?Sized>(base: &ManifoldPoint, rng: &mut R) -> TangentVector {
    loop {
        let raw = gaussian_vec(base.manifold.tangent_len(), rng);
        let v = project_to_tangent(base, raw);
        let n = sphere::norm(&v);
        if n > 1e-9 {
            return TangentVector {
                manifold: base.manifold,
                data: v.into_iter().map(|x| x / n).collect(),
            };
        }
    }
}

/// Removes the normal component of an ambient vector. For Grassmann the
/// result is `(I - P) G_s P + P G_s (I - P)` with `G_s` the symmetric part.
fn project_to_tangent(base: &ManifoldPoint, mut raw: Vec<f64>) -> Vec<f64> {
    match base.manifold {
        Manifold::Euclidean { .. } | Manifold::ProductSe3 { .. } => raw,
        Manifold::Hypersphere { .. } => {
            let ip = sphere::dot(&raw, &base.data);
            for (x, b) in raw.iter_mut().zip(&base.data) {
                *x -= ip * b;
            }
            raw
        }
        Manifold::Grassmann { ambient, .. } => {
            let g = DMatrix::from_row_slice(ambient, ambient, &raw);
            let g = (&g + g.transpose()) * 0.5;
            let p = DMatrix::from_row_slice(ambient, ambient, &base.data);
            let q = DMatrix::identity(ambient, ambient) - &p;
            let t = &q * &g * &p + &p * &g * &q;
            // row-major
            let mut out = vec![0.0; ambient * ambient];
            for i in 0..ambient {
                for j in 0..ambient {
                    out[i * ambient + j] = t[(i, j)];
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(data: &[f64]) -> ManifoldPoint {
        ManifoldPoint::new(Manifold::Hypersphere { ambient: data.len() }, data.to_vec()).unwrap()
    }

    #[test]
    fn orthogonal_unit_vectors_are_a_quarter_turn_apart() {
        let d = distance(&sphere(&[1.0, 0.0, 0.0]), &sphere(&[0.0, 1.0, 0.0])).unwrap();
        assert!((d - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn grassmann_axis_projectors() {
        let m = Manifold::Grassmann { ambient: 2, rank: 1 };
        let a = ManifoldPoint::new(m, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = ManifoldPoint::new(m, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn se3_identity_distance_is_zero() {
        let id = ManifoldPoint::origin(Manifold::ProductSe3 { factors: 1 }).unwrap();
        assert_eq!(distance(&id, &id).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_manifolds_are_rejected() {
        let a = sphere(&[1.0, 0.0, 0.0]);
        let b = sphere(&[1.0, 0.0]);
        assert!(matches!(distance(&a, &b), Err(Error::IncompatibleManifolds { .. })));
    }

    #[test]
    fn quarter_great_circle() {
        let e1 = sphere(&[1.0, 0.0, 0.0]);
        let v = TangentVector::new(*e1.manifold(), vec![0.0, PI / 2.0, 0.0]).unwrap();
        let p = exp_map(&e1, &v).unwrap();
        assert!((p.data()[0]).abs() < 1e-15);
        assert!((p.data()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_tangent_returns_base_exactly() {
        for m in [
            Manifold::Euclidean { dim: 3 },
            Manifold::Hypersphere { ambient: 5 },
            Manifold::Grassmann { ambient: 5, rank: 2 },
            Manifold::ProductSe3 { factors: 3 },
        ] {
            let p = random_point(m, 11).unwrap();
            assert_eq!(exp_map(&p, &TangentVector::zeros(m)).unwrap(), p);
        }
    }

    #[test]
    fn hypersphere_rejects_tangents_beyond_pi() {
        let e1 = sphere(&[1.0, 0.0]);
        let v = TangentVector::new(*e1.manifold(), vec![0.0, 3.5]).unwrap();
        assert!(matches!(exp_map(&e1, &v), Err(Error::Injectivity(_))));
    }

    #[test]
    fn pure_translation_on_se3() {
        let m = Manifold::ProductSe3 { factors: 1 };
        let id = ManifoldPoint::origin(m).unwrap();
        let v = TangentVector::new(m, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let p = exp_map(&id, &v).unwrap();
        let mut expected = id.data().to_vec();
        expected[3] = 1.0;
        assert_eq!(p.data(), expected.as_slice());
    }

    #[test]
    fn log_of_self_is_zero_and_orthogonal_case() {
        let e1 = sphere(&[1.0, 0.0, 0.0]);
        let e2 = sphere(&[0.0, 1.0, 0.0]);
        assert!(log_map(&e1, &e1).unwrap().data().iter().all(|x| *x == 0.0));
        let v = log_map(&e1, &e2).unwrap();
        assert!((v.norm() - PI / 2.0).abs() < 1e-15);
        assert!((v.data()[1] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn antipodal_log_is_an_injectivity_error() {
        let a = sphere(&[1.0, 0.0]);
        let b = sphere(&[-1.0, 0.0]);
        assert!(matches!(log_map(&a, &b), Err(Error::Injectivity(_))));
    }

    #[test]
    fn projection_examples() {
        let p = grassmann_project(&[2.0, 0.0, 0.0, 1.0], 2, 1).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (a, b) in p.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let again = grassmann_project(p.data(), 2, 1).unwrap();
        for (a, b) in again.data().iter().zip(p.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(
            grassmann_project(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 3, 2),
            Err(Error::DegenerateProjection { .. })
        ));
    }

    #[test]
    fn validation_reports() {
        let s1 = Manifold::Hypersphere { ambient: 2 };
        match validate(&s1, &[1.0, 1.0]) {
            Err(Violation::UnitNorm { deviation }) => assert!((deviation - 0.41421356).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(validate(&Manifold::Hypersphere { ambient: 3 }, &[1.0, 0.0, 0.0]).is_ok());
        let g = Manifold::Grassmann { ambient: 2, rank: 1 };
        assert!(matches!(
            validate(&g, &[0.5, 0.0, 0.0, 0.5]),
            Err(Violation::NotIdempotent { .. })
        ));
        let se = Manifold::ProductSe3 { factors: 1 };
        let mut refl = ManifoldPoint::origin(se).unwrap().into_data();
        refl[0] = -1.0;
        assert!(matches!(validate(&se, &refl), Err(Violation::Reflection { .. })));
    }

    #[test]
    fn random_points_are_deterministic() {
        let m = Manifold::Hypersphere { ambient: 8 };
        assert_eq!(random_point(m, 7).unwrap(), random_point(m, 7).unwrap());
        let g = random_point(Manifold::Grassmann { ambient: 10, rank: 2 }, 1).unwrap();
        let trace: f64 = (0..10).map(|i| g.data()[i * 10 + i]).sum();
        assert!((trace - 2.0).abs() < 1e-6);
    }

    #[test]
    fn manifold_strings_round_trip() {
        for s in ["euclidean:3", "sphere:8", "grassmann:10:2", "se3:19"] {
            assert_eq!(s.parse::<Manifold>().unwrap().to_string(), s);
        }
        assert!("grassmann:2:2".parse::<Manifold>().is_err());
        assert!("torus:3".parse::<Manifold>().is_err());
    }

    #[test]
    fn counter_tracks_calls_on_this_thread() {
        let a = sphere(&[1.0, 0.0]);
        let before = geometry_calls();
        distance(&a, &a).unwrap();
        log_map(&a, &a).unwrap();
        assert_eq!(geometry_calls() - before, 2);
    }
}
