//! Benchmark suites behind `msax bench`.
//!
//! - `speed`: symbolic vs geodesic DTW over a length sweep on SE(3)^19,
//!   kNN time, encoding throughput, geometry-call counts.
//! - `tradeoff`: mean relative error `|d_geo - W d_sym| / d_geo` over a K x W
//!   grid on sphere sequences.
//! - `bits`: storage of raw sequences against their encodings.
//! - `entropy`: symbol entropy per pass of conscience learning on a skewed
//!   mixture, with K-means and hybrid codebooks for reference.
//!
//! Timings are medians over repeated runs; single-threaded unless the config
//! asks for parallel execution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{
    conscience_learn, entropy, hybrid_learn, kmeans_geodesic, Codebook, ConscienceConfig, HybridConfig, KMeansConfig,
};
use crate::encode::{budget, encode_batch, encode_with, SymbolSequence};
use crate::error::{Error, Result};
use crate::geometry::{geometry_calls, Manifold, ManifoldPoint};
use crate::matching::{geodesic_dtw, knn, knn_geodesic, lut_dtw, SequenceDatabase};
use crate::par::Execution;
use crate::stats::ManifoldSequence;
use crate::synth::{gen_synthetic, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Speed,
    Tradeoff,
    Bits,
    Entropy,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speed" => Ok(Suite::Speed),
            "tradeoff" => Ok(Suite::Tradeoff),
            "bits" => Ok(Suite::Bits),
            "entropy" => Ok(Suite::Entropy),
            other => Err(Error::InvalidParameter(format!("unknown suite `{other}`"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Speed => "speed",
            Suite::Tradeoff => "tradeoff",
            Suite::Bits => "bits",
            Suite::Entropy => "entropy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub suite: Suite,
    /// Timing repetitions; at least 20 in a full run.
    pub reps: usize,
    pub seed: u64,
    pub exec: Execution,
    /// Shrinks every workload, for tests.
    pub smoke: bool,
}

impl BenchConfig {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            reps: 20,
            seed: 0,
            exec: Execution::Sequential,
            smoke: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub threads: usize,
    pub parallel: bool,
    pub optimized: bool,
    pub version: String,
}

impl Environment {
    pub fn capture(exec: Execution) -> Self {
        #[cfg(feature = "parallel")]
        let threads = if exec.is_parallel() { rayon::current_num_threads() } else { 1 };
        #[cfg(not(feature = "parallel"))]
        let threads = 1;
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads,
            parallel: exec.is_parallel(),
            optimized: !cfg!(debug_assertions),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStat {
    pub task: String,
    pub params: BTreeMap<String, f64>,
    pub reps: usize,
    pub median_s: f64,
    pub mean_s: f64,
    pub std_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCell {
    pub k: usize,
    pub window: usize,
    pub pairs: usize,
    pub mean_relative_error: f64,
    pub mean_absolute_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitRow {
    pub case: String,
    pub frames: usize,
    pub dim: usize,
    pub k: usize,
    pub window: usize,
    pub original_bits: u64,
    pub symbolic_bits: u64,
    pub compression_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub method: String,
    pub k: usize,
    /// Label entropy after each pass (a single value for one-shot methods).
    pub per_pass: Vec<f64>,
    pub max_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub environment: Environment,
    #[serde(default)]
    pub timings: Vec<TimingStat>,
    #[serde(default)]
    pub geometry_calls: BTreeMap<String, u64>,
    #[serde(default)]
    pub tradeoff: Vec<TradeoffCell>,
    #[serde(default)]
    pub bits: Vec<BitRow>,
    #[serde(default)]
    pub entropy: Vec<EntropyCurve>,
    #[serde(default)]
    pub notes: BTreeMap<String, f64>,
}

/// Median, mean and population standard deviation of `reps` timed runs.
pub fn time_reps<F: FnMut()>(task: &str, params: BTreeMap<String, f64>, reps: usize, mut f: F) -> TimingStat {
    let reps = reps.max(1);
    let mut t: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    t.sort_by(f64::total_cmp);
    let mean = t.iter().sum::<f64>() / reps as f64;
    let var = t.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / reps as f64;
    TimingStat {
        task: task.into(),
        params,
        reps,
        median_s: median_sorted(&t),
        mean_s: mean,
        std_s: var.sqrt(),
    }
}

fn median_sorted(t: &[f64]) -> f64 {
    let n = t.len();
    if n % 2 == 1 {
        t[n / 2]
    } else {
        0.5 * (t[n / 2 - 1] + t[n / 2])
    }
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `count` distinct unordered index pairs drawn with a seeded generator.
pub fn random_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    let count = count.min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && seen.insert((i.min(j), i.max(j))) {
            out.push((i.min(j), i.max(j)));
        }
    }
    out
}

fn pooled(seqs: &[ManifoldSequence]) -> Vec<ManifoldPoint> {
    seqs.iter().flat_map(|s| s.points().iter().cloned()).collect()
}

/// K-means codebook on pooled frames.
pub fn kmeans_codebook(points: &[ManifoldPoint], k: usize, iters: usize, seed: u64, exec: Execution) -> Result<Codebook> {
    let mut cfg = KMeansConfig::new(k, seed);
    cfg.max_iters = iters;
    cfg.exec = exec;
    Ok(kmeans_geodesic(points, &cfg)?.codebook)
}

/// Mean relative and absolute error of `W * symbolic DTW` against geodesic
/// DTW on the given pairs, for every `(K, W)` combination. Codebooks are
/// K-means on all frames of `seqs`.
pub fn tradeoff_grid(
    seqs: &[ManifoldSequence],
    pairs: &[(usize, usize)],
    ks: &[usize],
    windows: &[usize],
    seed: u64,
    exec: Execution,
) -> Result<Vec<TradeoffCell>> {
    let geo = exec.try_map(pairs, |&(i, j)| geodesic_dtw(&seqs[i], &seqs[j]))?;
    let frames = pooled(seqs);
    let mut cells = Vec::new();
    for &k in ks {
        let cb = kmeans_codebook(&frames, k, 100, seed, exec)?;
        for &w in windows {
            let enc = encode_batch(seqs, &cb, w, exec)?;
            let mut rel = 0.0;
            let mut abs = 0.0;
            for (&(i, j), &g) in pairs.iter().zip(&geo) {
                let s = w as f64 * lut_dtw(&enc[i].symbols, &enc[j].symbols, cb.lut())?;
                abs += (g - s).abs();
                rel += (g - s).abs() / g;
            }
            cells.push(TradeoffCell {
                k,
                window: w,
                pairs: pairs.len(),
                mean_relative_error: rel / pairs.len() as f64,
                mean_absolute_error: abs / pairs.len() as f64,
            });
        }
    }
    Ok(cells)
}

pub fn run(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let mut report = BenchReport {
        config: *cfg,
        environment: Environment::capture(cfg.exec),
        timings: Vec::new(),
        geometry_calls: BTreeMap::new(),
        tradeoff: Vec::new(),
        bits: Vec::new(),
        entropy: Vec::new(),
        notes: BTreeMap::new(),
    };
    match cfg.suite {
        Suite::Speed => speed(cfg, &mut report)?,
        Suite::Tradeoff => tradeoff(cfg, &mut report)?,
        Suite::Bits => bits(&mut report)?,
        Suite::Entropy => entropy_suite(cfg, &mut report)?,
    }
    Ok(report)
}

fn speed(cfg: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    let factors = if cfg.smoke { 3 } else { 19 };
    let manifold = Manifold::ProductSe3 { factors };
    let lengths: &[usize] = if cfg.smoke { &[10, 20] } else { &[25, 50, 100] };
    let k = if cfg.smoke { 8 } else { 40 };
    let exec = cfg.exec;

    let longest = *lengths.last().expect("non-empty sweep");
    let scenario: Scenario = format!("classes:c=5,per=4,len={longest},noise=0.1").parse()?;
    let data = gen_synthetic(manifold, &scenario, cfg.seed)?;
    let frames = pooled(&data.sequences);
    let train: Vec<ManifoldPoint> = frames.iter().step_by(2).cloned().collect();
    let cb = kmeans_codebook(&train, k, 10, cfg.seed, exec)?;

    for &n in lengths {
        let cut = |s: &ManifoldSequence| ManifoldSequence::new(s.id.clone(), s.label.clone(), s.points()[..n].to_vec());
        let a = cut(&data.sequences[0])?;
        let b = cut(&data.sequences[5])?;
        let (ea, eb) = (encode_with(&a, &cb, 1, exec)?, encode_with(&b, &cb, 1, exec)?);
        let p = params(&[("len", n as f64), ("k", k as f64), ("factors", factors as f64)]);

        let before = geometry_calls();
        let sym = time_reps("symbolic_dtw", p.clone(), cfg.reps, || {
            std::hint::black_box(lut_dtw(&ea.symbols, &eb.symbols, cb.lut()).expect("non-empty"));
        });
        report.geometry_calls.insert(format!("symbolic_dtw_len{n}"), geometry_calls() - before);

        let before = geometry_calls();
        let geo = time_reps("geodesic_dtw", p, cfg.reps, || {
            std::hint::black_box(geodesic_dtw(&a, &b).expect("same manifold"));
        });
        report.geometry_calls.insert(format!("geodesic_dtw_len{n}"), geometry_calls() - before);
        report
            .notes
            .insert(format!("speed_ratio_len{n}"), sym.median_s / geo.median_s);
        report.timings.push(sym);
        report.timings.push(geo);
    }

    // kNN over the whole database at the middle length
    let n = lengths[lengths.len() / 2];
    let seqs: Vec<ManifoldSequence> = data
        .sequences
        .iter()
        .map(|s| ManifoldSequence::new(s.id.clone(), s.label.clone(), s.points()[..n].to_vec()))
        .collect::<Result<_>>()?;
    let enc = encode_batch(&seqs, &cb, 1, exec)?;
    let db = SequenceDatabase::from_entries(cb.id(), enc.clone())?;
    let query: &SymbolSequence = &enc[0];
    let p = params(&[("len", n as f64), ("db", seqs.len() as f64), ("k", 5.0)]);
    let knn_reps = if cfg.smoke { cfg.reps } else { cfg.reps.min(20) };
    let before = geometry_calls();
    let sym = time_reps("knn_symbolic", p.clone(), cfg.reps, || {
        std::hint::black_box(knn(query, &db, &cb, 5, exec).expect("valid query"));
    });
    report.geometry_calls.insert("knn_symbolic".into(), geometry_calls() - before);
    let geo = time_reps("knn_geodesic", p, knn_reps, || {
        std::hint::black_box(knn_geodesic(&seqs[0], &seqs, 5, exec).expect("valid query"));
    });
    report.notes.insert("knn_ratio".into(), sym.median_s / geo.median_s);
    report.timings.push(sym);
    report.timings.push(geo);

    let frames_n: usize = seqs.iter().map(ManifoldSequence::len).sum();
    let enc_t = time_reps(
        "encode_batch",
        params(&[("frames", frames_n as f64), ("window", 1.0)]),
        cfg.reps,
        || {
            std::hint::black_box(encode_batch(&seqs, &cb, 1, exec).expect("encodable"));
        },
    );
    report.notes.insert("encode_frames_per_s".into(), frames_n as f64 / enc_t.median_s);
    report.timings.push(enc_t);
    Ok(())
}

/// Sphere and scenario of the approximation trade-off suite.
pub const TRADEOFF_MANIFOLD: Manifold = Manifold::Hypersphere { ambient: 3 };
pub const TRADEOFF_SCENARIO: &str = "classes:c=5,per=10,len=60,noise=0.02,style=0.3";

fn tradeoff(cfg: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    let manifold = TRADEOFF_MANIFOLD;
    let (scenario, n_pairs, ks): (&str, usize, &[usize]) = if cfg.smoke {
        ("classes:c=3,per=4,len=12,noise=0.02,style=0.3", 10, &[4, 8])
    } else {
        (TRADEOFF_SCENARIO, 50, &[10, 20, 40, 60])
    };
    let data = gen_synthetic(manifold, &scenario.parse()?, cfg.seed)?;
    let pairs = random_pairs(data.sequences.len(), n_pairs, cfg.seed);
    report.tradeoff = tradeoff_grid(&data.sequences, &pairs, ks, &[1, 2, 3, 5], cfg.seed, cfg.exec)?;
    Ok(())
}

fn bits(report: &mut BenchReport) -> Result<()> {
    let frames: usize = 100;
    let cases = [
        ("arithmetic", 100, 64),
        ("hoof_sphere_b30", 30, 40),
        ("shape_grassmann_m20_d2", 40, 45),
        ("skeleton_se3_j19", 228, 45),
        ("minimum_dim24", 24, 64),
    ];
    for (case, dim, k) in cases {
        for window in [1, 3] {
            let symbols = frames.div_ceil(window);
            let b = budget(frames, symbols, k, dim, 32);
            report.bits.push(BitRow {
                case: case.into(),
                frames,
                dim,
                k,
                window,
                original_bits: b.original_bits,
                symbolic_bits: b.symbolic_bits,
                compression_ratio: b.compression_ratio,
            });
        }
    }
    report.notes.insert("bits_per_scalar".into(), 32.0);
    Ok(())
}

fn entropy_suite(cfg: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    let manifold = Manifold::Hypersphere { ambient: 8 };
    let n = if cfg.smoke { 600 } else { 10_000 };
    let passes = if cfg.smoke { 5 } else { 50 };
    let k = 10;
    let scenario: Scenario = format!("clusters:n={n},spread=0.15,weights=0.8/0.15/0.05").parse()?;
    let data = gen_synthetic(manifold, &scenario, cfg.seed)?;
    let points = data.pooled_points();
    let max = (k as f64).log2();

    let mut cc = ConscienceConfig::new(k, cfg.seed);
    cc.max_passes = passes;
    cc.exec = cfg.exec;
    let fit = conscience_learn(&points, &cc, None)?;
    report.entropy.push(EntropyCurve {
        method: "conscience".into(),
        k,
        per_pass: fit.entropy_per_pass,
        max_entropy: max,
    });

    let mut kc = KMeansConfig::new(k, cfg.seed);
    kc.exec = cfg.exec;
    let km = kmeans_geodesic(&points, &kc)?;
    report.entropy.push(EntropyCurve {
        method: "kmeans".into(),
        k,
        per_pass: vec![entropy(&km.labels, k)?],
        max_entropy: max,
    });

    let mut hc = HybridConfig::new(3, 2, cfg.seed);
    hc.conscience.max_passes = passes;
    hc.conscience.exec = cfg.exec;
    let hy = hybrid_learn(&points, &hc)?;
    let labels: Vec<usize> = crate::codebook::nearest_labels(hy.codebook.manifold(), hy.codebook.symbols(), &points, cfg.exec);
    report.entropy.push(EntropyCurve {
        method: "hybrid".into(),
        k: hy.codebook.len(),
        per_pass: vec![entropy(&labels, hy.codebook.len())?],
        max_entropy: (hy.codebook.len() as f64).log2(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke(suite: Suite) -> BenchReport {
        let mut cfg = BenchConfig::new(suite);
        cfg.reps = 3;
        cfg.smoke = true;
        run(&cfg).unwrap()
    }

    #[test]
    fn timing_stats() {
        let t = time_reps("noop", BTreeMap::new(), 5, || {});
        assert_eq!(t.reps, 5);
        assert!(t.median_s >= 0.0 && t.std_s >= 0.0);
        assert_eq!(median_sorted(&[1.0, 2.0, 3.0, 10.0]), 2.5);
    }

    #[test]
    fn pairs_are_distinct() {
        let p = random_pairs(6, 15, 1);
        let set: std::collections::BTreeSet<_> = p.iter().collect();
        assert_eq!(set.len(), 15);
        assert!(p.iter().all(|&(i, j)| i < j && j < 6));
    }

    #[test]
    fn bits_suite_contains_arithmetic_case() {
        let r = smoke(Suite::Bits);
        let row = r.bits.iter().find(|b| b.case == "arithmetic" && b.window == 1).unwrap();
        assert_eq!(row.compression_ratio, 0.998125);
    }

    #[test]
    fn speed_suite_counts_no_geometry_for_symbols() {
        let r = smoke(Suite::Speed);
        for (task, calls) in &r.geometry_calls {
            if task.starts_with("symbolic") || task == "knn_symbolic" {
                assert_eq!(*calls, 0, "{task}");
            } else {
                assert!(*calls > 0, "{task}");
            }
        }
    }

    #[test]
    fn tradeoff_and_entropy_suites_run() {
        assert_eq!(smoke(Suite::Tradeoff).tradeoff.len(), 8);
        assert_eq!(smoke(Suite::Entropy).entropy.len(), 3);
    }
}
