//! Seeded synthetic datasets.
//!
//! Scenarios are written as `name:key=value,...`:
//!
//! | scenario   | keys (defaults)                                                      |
//! |------------|----------------------------------------------------------------------|
//! | `clusters` | `n=1000`, `spread=0.15`, `weights=1/1/1`                             |
//! | `classes`  | `c=5`, `per=10`, `len=60`, `noise=0.05`, `warp=0.3`, `anchors=4`, `style=0` |
//! | `concat`   | `classes=5`, `reps=10`, `len=80`, `noise=0.05`, `warp=0.3`, `anchors=4`, `style=0` |
//!
//! `clusters` draws one pooled sequence from a mixture of Gaussian bumps in
//! the tangent spaces of random centres. `classes` builds one template per
//! class as a piecewise geodesic through random anchors and emits executions
//! with a random monotone time warp, optional per-execution anchor
//! displacement (`style`) and tangent noise. `concat` strings
//! `classes x reps` such executions together in shuffled order and records
//! the ground-truth segments.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{exp_map, gaussian_tangent, log_map, sample_point, Manifold, ManifoldPoint};
use crate::io::{Annotations, DatasetFile, Provenance, Segment};
use crate::stats::ManifoldSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityParams {
    pub len: usize,
    /// Expected tangent norm of the per-frame noise.
    pub noise: f64,
    /// Time-warp amplitude in `[0, 1)`.
    pub warp: f64,
    /// Geodesic pieces per template plus one.
    pub anchors: usize,
    /// Tangent scale of the per-execution anchor displacement.
    pub style: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Clusters { n: usize, spread: f64, weights: Vec<f64> },
    Classes { classes: usize, per_class: usize, activity: ActivityParams },
    Concat { classes: usize, reps: usize, activity: ActivityParams },
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

struct Keys<'a>(Vec<(&'a str, &'a str)>);

impl<'a> Keys<'a> {
    fn parse(body: &'a str, allowed: &[&str]) -> Result<Self> {
        let mut out = Vec::new();
        for kv in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(bad(format!("unknown scenario key `{k}`")));
            }
            out.push((k, v.trim()));
        }
        Ok(Keys(out))
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.iter().rev().find(|(k, _)| *k == key) {
            None => Ok(default),
            Some((_, v)) => v.parse().map_err(|_| bad(format!("bad value `{v}` for `{key}`"))),
        }
    }
}

fn activity(keys: &Keys, default_len: usize) -> Result<ActivityParams> {
    Ok(ActivityParams {
        len: keys.get("len", default_len)?,
        noise: keys.get("noise", 0.05)?,
        warp: keys.get("warp", 0.3)?,
        anchors: keys.get("anchors", 4)?,
        style: keys.get("style", 0.0)?,
    })
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let activity_keys = ["len", "noise", "warp", "anchors", "style"];
        let scenario = match name.trim() {
            "clusters" => {
                let keys = Keys::parse(body, &["n", "spread", "weights"])?;
                let weights = keys
                    .get::<String>("weights", "1/1/1".into())?
                    .split('/')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| bad(format!("bad weight `{x}`"))))
                    .collect::<Result<Vec<_>>>()?;
                Scenario::Clusters {
                    n: keys.get("n", 1000)?,
                    spread: keys.get("spread", 0.15)?,
                    weights,
                }
            }
            "classes" => {
                let keys = Keys::parse(body, &[&["c", "per"][..], &activity_keys].concat())?;
                Scenario::Classes {
                    classes: keys.get("c", 5)?,
                    per_class: keys.get("per", 10)?,
                    activity: activity(&keys, 60)?,
                }
            }
            "concat" => {
                let keys = Keys::parse(body, &[&["classes", "reps"][..], &activity_keys].concat())?;
                Scenario::Concat {
                    classes: keys.get("classes", 5)?,
                    reps: keys.get("reps", 10)?,
                    activity: activity(&keys, 80)?,
                }
            }
            other => return Err(bad(format!("unknown scenario `{other}`"))),
        };
        scenario.check()?;
        Ok(scenario)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let act = |a: &ActivityParams| {
            format!(
                "len={},noise={},warp={},anchors={},style={}",
                a.len, a.noise, a.warp, a.anchors, a.style
            )
        };
        match self {
            Scenario::Clusters { n, spread, weights } => {
                let w: Vec<String> = weights.iter().map(f64::to_string).collect();
                write!(f, "clusters:n={n},spread={spread},weights={}", w.join("/"))
            }
            Scenario::Classes {
                classes,
                per_class,
                activity,
            } => write!(f, "classes:c={classes},per={per_class},{}", act(activity)),
            Scenario::Concat { classes, reps, activity } => {
                write!(f, "concat:classes={classes},reps={reps},{}", act(activity))
            }
        }
    }
}

impl ActivityParams {
    fn check(&self) -> Result<()> {
        if self.len < 2 || self.anchors < 2 {
            return Err(bad("activities need len >= 2 and anchors >= 2"));
        }
        if !(self.noise >= 0.0) || !(self.style >= 0.0) || !(0.0..1.0).contains(&self.warp) {
            return Err(bad("noise and style must be >= 0 and warp in [0, 1)"));
        }
        Ok(())
    }
}

impl Scenario {
    pub fn check(&self) -> Result<()> {
        match self {
            Scenario::Clusters { n, spread, weights } => {
                if *n == 0 || weights.is_empty() {
                    return Err(bad("clusters need n > 0 and at least one weight"));
                }
                if !(*spread >= 0.0) || weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(bad("spread and weights must be non-negative with positive total weight"));
                }
                Ok(())
            }
            Scenario::Classes {
                classes,
                per_class,
                activity,
            } => {
                if *classes == 0 || *per_class == 0 {
                    return Err(bad("classes need c > 0 and per > 0"));
                }
                activity.check()
            }
            Scenario::Concat { classes, reps, activity } => {
                if *classes == 0 || *reps == 0 {
                    return Err(bad("concat needs classes > 0 and reps > 0"));
                }
                activity.check()
            }
        }
    }
}

/// `exp_p(v)` with `v` redrawn until the map succeeds.
fn perturb<R: Rng + ?Sized>(p: &ManifoldPoint, scale: f64, rng: &mut R) -> ManifoldPoint {
    if scale == 0.0 {
        return p.clone();
    }
    loop {
        if let Ok(q) = exp_map(p, &gaussian_tangent(p, scale, rng)) {
            return q;
        }
    }
}

/// Piecewise-geodesic class template.
#[derive(Debug, Clone)]
pub struct Template {
    pub anchors: Vec<ManifoldPoint>,
}

impl Template {
    /// Random anchors, redrawn until every consecutive geodesic is defined.
    pub fn random<R: Rng + ?Sized>(manifold: Manifold, anchors: usize, rng: &mut R) -> Result<Self> {
        let mut pts: Vec<ManifoldPoint> = vec![sample_point(manifold, rng)?];
        while pts.len() < anchors {
            let q = sample_point(manifold, rng)?;
            let last = pts.last().expect("non-empty");
            if log_map(last, &q).is_ok() {
                pts.push(q);
            }
        }
        Ok(Self { anchors: pts })
    }

    /// Point at time `t` in `[0, 1]`.
    pub fn at(&self, t: f64) -> Result<ManifoldPoint> {
        let pieces = self.anchors.len() - 1;
        let x = t.clamp(0.0, 1.0) * pieces as f64;
        let k = (x.floor() as usize).min(pieces - 1);
        let s = x - k as f64;
        let (a, b) = (&self.anchors[k], &self.anchors[k + 1]);
        exp_map(a, &log_map(a, b)?.scale(s))
    }

    /// Template with every anchor displaced by tangent noise of scale `style`.
    pub fn restyled<R: Rng + ?Sized>(&self, style: f64, rng: &mut R) -> Self {
        if style == 0.0 {
            return self.clone();
        }
        loop {
            let anchors: Vec<ManifoldPoint> = self.anchors.iter().map(|a| perturb(a, style, rng)).collect();
            if anchors.windows(2).all(|w| log_map(&w[0], &w[1]).is_ok()) {
                return Self { anchors };
            }
        }
    }

    /// One noisy execution: `len` frames at warped times `u + a sin(pi u) / pi`
    /// along a restyled copy of the template.
    pub fn execution<R: Rng + ?Sized>(&self, p: &ActivityParams, rng: &mut R) -> Result<Vec<ManifoldPoint>> {
        let styled = self.restyled(p.style, rng);
        let a = if p.warp > 0.0 { rng.random_range(-p.warp..p.warp) } else { 0.0 };
        (0..p.len)
            .map(|i| {
                let u = i as f64 / (p.len - 1) as f64;
                let t = u + a * (std::f64::consts::PI * u).sin() / std::f64::consts::PI;
                Ok(perturb(&styled.at(t)?, p.noise, rng))
            })
            .collect()
    }
}

pub fn class_label(c: usize) -> String {
    format!("class{c}")
}

fn templates<R: Rng + ?Sized>(manifold: Manifold, classes: usize, p: &ActivityParams, rng: &mut R) -> Result<Vec<Template>> {
    (0..classes).map(|_| Template::random(manifold, p.anchors, rng)).collect()
}

fn flatten(templates: &[Template]) -> Vec<Vec<f64>> {
    templates
        .iter()
        .flat_map(|t| t.anchors.iter().map(|a| a.data().to_vec()))
        .collect()
}

/// Deterministic dataset for `(manifold, scenario, seed)`.
pub fn gen_synthetic(manifold: Manifold, scenario: &Scenario, seed: u64) -> Result<DatasetFile> {
    manifold.check()?;
    scenario.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut annotations = Annotations::default();
    let sequences = match scenario {
        Scenario::Clusters { n, spread, weights } => {
            let centers: Vec<ManifoldPoint> = (0..weights.len())
                .map(|_| sample_point(manifold, &mut rng))
                .collect::<Result<_>>()?;
            let pick = WeightedIndex::new(weights).map_err(|e| bad(e.to_string()))?;
            let mut points = Vec::with_capacity(*n);
            for _ in 0..*n {
                let c = pick.sample(&mut rng);
                points.push(perturb(&centers[c], *spread, &mut rng));
                annotations.point_labels.push(c);
            }
            annotations.templates = centers.iter().map(|c| c.data().to_vec()).collect();
            vec![ManifoldSequence::new("pool", None, points)?]
        }
        Scenario::Classes {
            classes,
            per_class,
            activity,
        } => {
            let ts = templates(manifold, *classes, activity, &mut rng)?;
            let mut out = Vec::with_capacity(classes * per_class);
            for (c, t) in ts.iter().enumerate() {
                for e in 0..*per_class {
                    let pts = t.execution(activity, &mut rng)?;
                    out.push(ManifoldSequence::new(format!("c{c}_e{e}"), Some(class_label(c)), pts)?);
                }
            }
            annotations.templates = flatten(&ts);
            out
        }
        Scenario::Concat { classes, reps, activity } => {
            let ts = templates(manifold, *classes, activity, &mut rng)?;
            let mut order: Vec<usize> = (0..*classes).flat_map(|c| std::iter::repeat_n(c, *reps)).collect();
            order.shuffle(&mut rng);
            let mut points = Vec::with_capacity(order.len() * activity.len);
            for &c in &order {
                annotations.segments.push(Segment {
                    sequence: 0,
                    start: points.len(),
                    len: activity.len,
                    label: class_label(c),
                });
                points.extend(ts[c].execution(activity, &mut rng)?);
            }
            annotations.templates = flatten(&ts);
            vec![ManifoldSequence::new("concat", None, points)?]
        }
    };
    Ok(DatasetFile {
        descriptor: manifold,
        sequences,
        provenance: Some(Provenance {
            generator: format!("msax-synth {}", env!("CARGO_PKG_VERSION")),
            scenario: scenario.to_string(),
            seed,
            notes: Vec::new(),
        }),
        annotations,
    })
}
