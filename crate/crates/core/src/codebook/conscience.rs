use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ensure_manifold, entropy_of_counts, nearest_labels, sample_indices, Codebook, TrainingMeta, TrainingMethod};
use crate::error::{Error, Result};
use crate::geometry::{self, Manifold, ManifoldPoint};
use crate::par::Execution;

/// Which competition result drives the win-rate estimates `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WinRateRule {
    /// The biased winner `z` (the one that also gets moved).
    Biased,
    /// The plain nearest symbol `y`.
    Unbiased,
}

#[derive(Debug, Clone)]
pub struct ConscienceConfig {
    pub k: usize,
    /// Learning rate on the first pass.
    pub alpha: f64,
    /// Learning rate on the last pass; intermediate passes interpolate linearly.
    pub alpha_final: f64,
    /// Win-rate smoothing factor `B`, `0 < B << 1`.
    pub win_rate_factor: f64,
    /// Conscience factor `C` in `b_i = C (1/K - p_i)`.
    pub conscience_factor: f64,
    /// Multiply `C` by the mean squared pairwise distance of the data so the
    /// bias is commensurate with squared distances on any manifold.
    pub scale_by_data: bool,
    pub max_passes: usize,
    pub seed: u64,
    pub rule: WinRateRule,
    /// Used for the per-pass entropy evaluation only; training itself is sequential.
    pub exec: Execution,
    pub track_entropy: bool,
}

impl ConscienceConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            alpha: 0.05,
            alpha_final: 0.005,
            win_rate_factor: 1e-4,
            conscience_factor: 10.0,
            scale_by_data: true,
            max_passes: 50,
            seed,
            rule: WinRateRule::Biased,
            exec: Execution::default(),
            track_entropy: true,
        }
    }

    fn check(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if self.k == 0
            || self.max_passes == 0
            || !open_unit(self.alpha)
            || !open_unit(self.alpha_final)
            || !open_unit(self.win_rate_factor)
            || !(self.conscience_factor >= 0.0)
        {
            return Err(Error::InvalidParameter(format!("bad conscience configuration {self:?}")));
        }
        Ok(())
    }

    fn learning_rate(&self, pass: usize) -> f64 {
        if self.max_passes == 1 {
            return self.alpha;
        }
        let t = pass as f64 / (self.max_passes - 1) as f64;
        self.alpha + (self.alpha_final - self.alpha) * t
    }
}

#[derive(Debug, Clone)]
pub struct ConscienceFit {
    pub codebook: Codebook,
    /// Running win-rate estimates `p_i` at the end of training.
    pub win_rates: Vec<f64>,
    /// Nearest-symbol label of every training point under the final codebook.
    pub labels: Vec<usize>,
    /// Entropy (bits) of the nearest-symbol labels after each pass.
    pub entropy_per_pass: Vec<f64>,
    /// `C` after optional data scaling.
    pub effective_conscience: f64,
}

pub(crate) struct Trained {
    pub symbols: Vec<ManifoldPoint>,
    pub win_rates: Vec<f64>,
    pub entropy_per_pass: Vec<f64>,
    pub effective_conscience: f64,
}

/// Equiprobable symbol learning by conscience-driven competitive learning.
///
/// For every presented point `X` (data reshuffled each pass):
///
/// 1. the winner `z` minimizes `d²(S_i, X) - b_i`;
/// 2. `S_z ← exp_{S_z}(α · log_{S_z}(X))`;
/// 3. `p_i ← p_i + B (w_i - p_i)` with `w` the indicator of the winner
///    selected by [`WinRateRule`];
/// 4. `b_i ← C (1/K - p_i)`.
///
/// `p` starts at `1/K` and biases at zero. Without `init`, symbols start at
/// K distinct data points drawn with the seeded generator.
pub fn conscience_learn(
    data: &[ManifoldPoint],
    cfg: &ConscienceConfig,
    init: Option<&[ManifoldPoint]>,
) -> Result<ConscienceFit> {
    if cfg.k < 2 {
        return Err(Error::InvalidParameter(format!(
            "a codebook needs at least 2 symbols, got {}",
            cfg.k
        )));
    }
    let trained = train(data, cfg, init)?;
    let mut params = BTreeMap::new();
    params.insert("k".into(), cfg.k as f64);
    params.insert("alpha".into(), cfg.alpha);
    params.insert("alpha_final".into(), cfg.alpha_final);
    params.insert("B".into(), cfg.win_rate_factor);
    params.insert("C".into(), cfg.conscience_factor);
    params.insert("C_effective".into(), trained.effective_conscience);
    params.insert("passes".into(), cfg.max_passes as f64);
    let codebook = Codebook::new(
        trained.symbols,
        TrainingMeta {
            method: TrainingMethod::Conscience,
            seed: cfg.seed,
            params,
        },
    )?;
    let labels = nearest_labels(codebook.manifold(), codebook.symbols(), data, cfg.exec);
    Ok(ConscienceFit {
        codebook,
        win_rates: trained.win_rates,
        labels,
        entropy_per_pass: trained.entropy_per_pass,
        effective_conscience: trained.effective_conscience,
    })
}

pub(crate) fn train(data: &[ManifoldPoint], cfg: &ConscienceConfig, init: Option<&[ManifoldPoint]>) -> Result<Trained> {
    cfg.check()?;
    let k = cfg.k;
    if data.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: data.len(),
        });
    }
    let manifold = *data[0].manifold();
    ensure_manifold(data, &manifold)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut symbols: Vec<ManifoldPoint> = match init {
        Some(s) => {
            if s.len() != k {
                return Err(Error::InvalidParameter(format!(
                    "{} initial symbols for K = {k}",
                    s.len()
                )));
            }
            ensure_manifold(s, &manifold)?;
            s.to_vec()
        }
        None => sample_indices(&mut rng, data.len(), k)
            .into_iter()
            .map(|i| data[i].clone())
            .collect(),
    };

    let effective = if cfg.scale_by_data {
        cfg.conscience_factor * mean_sq_pairwise(data, &manifold, cfg.seed)
    } else {
        cfg.conscience_factor
    };

    let inv_k = 1.0 / k as f64;
    let mut p = vec![inv_k; k];
    let mut bias = vec![0.0; k];
    let mut d2 = vec![0.0; k];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut entropy_per_pass = Vec::new();

    for pass in 0..cfg.max_passes {
        let alpha = cfg.learning_rate(pass);
        order.shuffle(&mut rng);
        for &j in &order {
            let x = &data[j];
            for (slot, s) in d2.iter_mut().zip(&symbols) {
                let d = geometry::distance_unchecked(&manifold, s.data(), x.data());
                *slot = d * d;
            }
            let z = argmin_by(k, |i| d2[i] - bias[i]);
            let step = geometry::log_map(&symbols[z], x)?.scale(alpha);
            symbols[z] = geometry::exp_map(&symbols[z], &step)?;

            let winner = match cfg.rule {
                WinRateRule::Biased => z,
                WinRateRule::Unbiased => argmin_by(k, |i| d2[i]),
            };
            for i in 0..k {
                let w = if i == winner { 1.0 } else { 0.0 };
                p[i] += cfg.win_rate_factor * (w - p[i]);
                bias[i] = effective * (inv_k - p[i]);
            }
            debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        if cfg.track_entropy {
            let labels = nearest_labels(&manifold, &symbols, data, cfg.exec);
            let mut counts = vec![0usize; k];
            for l in labels {
                counts[l] += 1;
            }
            entropy_per_pass.push(entropy_of_counts(&counts));
        }
    }
    Ok(Trained {
        symbols,
        win_rates: p,
        entropy_per_pass,
        effective_conscience: effective,
    })
}

fn argmin_by(k: usize, f: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_v = f(0);
    for i in 1..k {
        let v = f(i);
        if v < best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Mean squared distance over up to 2000 seeded random pairs.
fn mean_sq_pairwise(data: &[ManifoldPoint], manifold: &Manifold, seed: u64) -> f64 {
    let n = data.len();
    if n < 2 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de_5eed_c0de);
    let pairs = 2000.min(n * (n - 1) / 2);
    let mut total = 0.0;
    for _ in 0..pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let d = geometry::distance_unchecked(manifold, data[i].data(), data[j].data());
        total += d * d;
    }
    let mean = total / pairs as f64;
    if mean > 0.0 {
        mean
    } else {
        1.0
    }
}
