//! Sequence to symbol string and back.

use serde::{Deserialize, Serialize};

use crate::codebook::{nearest, Codebook};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::stats::{paa_with, KarcherConfig, ManifoldSequence};

/// Encoded form of a [`ManifoldSequence`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    pub codebook_id: String,
    pub window: usize,
    pub symbols: Vec<u32>,
    /// Frame count of the source sequence.
    pub source_len: usize,
    pub label: Option<String>,
    pub id: String,
}

impl SymbolSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Checks `len == ceil(source_len / window)` and every index `< k`.
    pub fn check(&self, k: usize) -> Result<()> {
        if self.window == 0 || self.symbols.len() != self.source_len.div_ceil(self.window) {
            return Err(Error::Format(format!(
                "sequence `{}`: {} symbols for {} frames at window {}",
                self.id,
                self.symbols.len(),
                self.source_len,
                self.window
            )));
        }
        if let Some(&s) = self.symbols.iter().find(|&&s| s as usize >= k) {
            return Err(Error::LabelOutOfRange { label: s as usize, k });
        }
        Ok(())
    }
}

/// Windowed intrinsic means followed by nearest-symbol assignment.
pub fn encode(seq: &ManifoldSequence, cb: &Codebook, window: usize) -> Result<SymbolSequence> {
    encode_with(seq, cb, window, Execution::default())
}

pub fn encode_with(seq: &ManifoldSequence, cb: &Codebook, window: usize, exec: Execution) -> Result<SymbolSequence> {
    cb.ensure_manifold(seq.manifold())?;
    let means = paa_with(seq, window, &KarcherConfig::default(), exec)?;
    let symbols = exec.map(means.points(), |p| nearest(cb.manifold(), cb.symbols(), p.data()).0 as u32);
    Ok(SymbolSequence {
        codebook_id: cb.id().to_string(),
        window,
        symbols,
        source_len: seq.len(),
        label: seq.label.clone(),
        id: seq.id.clone(),
    })
}

/// Encodes many sequences against one shared codebook, one task per sequence.
pub fn encode_batch(
    seqs: &[ManifoldSequence],
    cb: &Codebook,
    window: usize,
    exec: Execution,
) -> Result<Vec<SymbolSequence>> {
    exec.try_map(seqs, |s| encode_with(s, cb, window, Execution::Sequential))
}

/// Zero-order-hold reconstruction: each prototype repeated `window` times,
/// truncated to the source length.
pub fn reconstruct(ss: &SymbolSequence, cb: &Codebook) -> Result<ManifoldSequence> {
    cb.ensure_id(&ss.codebook_id)?;
    ss.check(cb.len())?;
    let points = ss
        .symbols
        .iter()
        .flat_map(|&s| std::iter::repeat_n(&cb.symbols()[s as usize], ss.window))
        .take(ss.source_len)
        .cloned()
        .collect();
    ManifoldSequence::new(ss.id.clone(), ss.label.clone(), points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitBudget {
    pub original_bits: u64,
    pub symbolic_bits: u64,
    /// `1 - symbolic / original`.
    pub compression_ratio: f64,
}

/// Storage of the raw sequence (`N · dim · bits_per_scalar`) against its
/// symbols (`M · ceil(log2 K)`).
pub fn bit_budget(ss: &SymbolSequence, alphabet_size: usize, original_dim: usize, bits_per_scalar: u32) -> BitBudget {
    budget(ss.source_len, ss.symbols.len(), alphabet_size, original_dim, bits_per_scalar)
}

pub fn budget(frames: usize, symbols: usize, alphabet_size: usize, original_dim: usize, bits_per_scalar: u32) -> BitBudget {
    let original_bits = frames as u64 * original_dim as u64 * bits_per_scalar as u64;
    let symbolic_bits = symbols as u64 * bits_per_symbol(alphabet_size);
    BitBudget {
        original_bits,
        symbolic_bits,
        compression_ratio: compression_ratio(original_bits, symbolic_bits),
    }
}

/// `ceil(log2 k)`, zero for a single-symbol alphabet.
pub fn bits_per_symbol(k: usize) -> u64 {
    if k <= 1 {
        0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as u64
    }
}

pub fn compression_ratio(original_bits: u64, symbolic_bits: u64) -> f64 {
    if original_bits == 0 {
        return 0.0;
    }
    (original_bits as f64 - symbolic_bits as f64) / original_bits as f64
}
