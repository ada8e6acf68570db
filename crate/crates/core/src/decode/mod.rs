//! Successive-cancellation (SC) and SC-list decoding on the joint graph.
//!
//! Static frozen bits decode to 0, target bits of the honored
//! pre-transformations decode to their rule value, and information bits are
//! decided (SC) or forked (SCL). LLRs are `f32`; path metrics are `f64`.

mod sc;
mod scl;

use serde::{Deserialize, Serialize};

use crate::polar::{Bit, Codeword, PaddedWord};
use crate::pretransform::{JointGraph, PreTransform};

pub use sc::{sc_decode, ScDecoder};
pub use scl::{scl_decode, SclDecoder};

/// Default LLR saturation magnitude.
pub const DEFAULT_LLR_CLAMP: f32 = 40.0;

/// Channel LLRs, positive values favoring bit 0. Entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrWord(Vec<f32>);

impl LlrWord {
    /// Clamps to `±DEFAULT_LLR_CLAMP`; NaN becomes 0.
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        Self::with_clamp(values, DEFAULT_LLR_CLAMP)
    }

    pub fn with_clamp(values: impl IntoIterator<Item = f64>, clamp: f32) -> Self {
        LlrWord(
            values
                .into_iter()
                .map(|v| {
                    if v.is_nan() {
                        0.0
                    } else {
                        (v as f32).clamp(-clamp, clamp)
                    }
                })
                .collect(),
        )
    }

    pub fn from_f32(values: Vec<f32>) -> Self {
        Self::new(values.into_iter().map(f64::from))
    }

    /// Noiseless LLRs `clamp * (1 - 2 x)`.
    pub fn noiseless(x: &Codeword) -> Self {
        LlrWord(
            x.bits()
                .iter()
                .map(|&b| if b == 0 { DEFAULT_LLR_CLAMP } else { -DEFAULT_LLR_CLAMP })
                .collect(),
        )
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// sum_j (1 - 2 x_j) llr_j, the BI-AWGN log-likelihood up to an affine map.
    pub fn correlation(&self, x: &Codeword) -> f64 {
        self.0
            .iter()
            .zip(x.bits())
            .map(|(&l, &b)| if b == 0 { l as f64 } else { -(l as f64) })
            .sum()
    }
}

/// One decoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    /// Decided (pre-transformed) padded word.
    pub u_p_hat: PaddedWord,
    pub x_hat: Codeword,
    pub path_metric: f64,
    pub in_subcode: bool,
}

/// Final SCL list, ascending by path metric, ties by path index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateList {
    pub entries: Vec<DecodeResult>,
}

/// Check-node update used for the left child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckNode {
    /// sign(a) sign(b) min(|a|, |b|)
    #[default]
    MinSum,
    /// 2 atanh(tanh(a/2) tanh(b/2)), evaluated with log corrections.
    BoxPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMetric {
    /// Add |llr| when the decision contradicts the LLR sign.
    #[default]
    Approximate,
    /// Add ln(1 + exp(-(1 - 2u) llr)).
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecoderOptions {
    #[serde(default)]
    pub check_node: CheckNode,
    #[serde(default)]
    pub path_metric: PathMetric,
}

/// Approximate path metric update.
#[inline]
pub fn path_metric_update(pm: f64, llr_bit: f64, decision: Bit) -> f64 {
    if (decision == 0 && llr_bit < 0.0) || (decision == 1 && llr_bit > 0.0) {
        pm + llr_bit.abs()
    } else {
        pm
    }
}

/// Path metric update under the chosen rule.
#[inline]
pub fn path_metric_update_with(metric: PathMetric, pm: f64, llr_bit: f64, decision: Bit) -> f64 {
    match metric {
        PathMetric::Approximate => path_metric_update(pm, llr_bit, decision),
        PathMetric::Exact => {
            let s = if decision == 0 { llr_bit } else { -llr_bit };
            // ln(1 + e^{-s}), stable for both signs
            pm + (-s).max(0.0) + (-s.abs()).exp().ln_1p()
        }
    }
}

#[inline]
pub(crate) fn f_min_sum(a: f32, b: f32) -> f32 {
    let m = a.abs().min(b.abs());
    let sign = (a.to_bits() ^ b.to_bits()) & 0x8000_0000;
    f32::from_bits(m.to_bits() | sign)
}

#[inline]
pub(crate) fn f_box_plus(a: f32, b: f32) -> f32 {
    f_min_sum(a, b) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn g(a: f32, b: f32, left: Bit) -> f32 {
    // flipping the sign bit of a is exact, so this is b + a or b - a
    b + f32::from_bits(a.to_bits() ^ ((left as u32) << 31))
}

/// Left-child LLRs: out[j] = f(input[j], input[j + half]).
#[inline]
pub(crate) fn f_layer(check: CheckNode, input: &[f32], out: &mut [f32]) {
    let (a, b) = input.split_at(out.len());
    match check {
        CheckNode::MinSum => {
            for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                *o = f_min_sum(x, y);
            }
        }
        CheckNode::BoxPlus => {
            for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                *o = f_box_plus(x, y);
            }
        }
    }
}

/// Right-child LLRs given the left child's codeword.
#[inline]
pub(crate) fn g_layer(input: &[f32], left: &[Bit], out: &mut [f32]) {
    let (a, b) = input.split_at(out.len());
    for (((o, &x), &y), &c) in out.iter_mut().zip(a).zip(b).zip(left) {
        *o = g(x, y, c);
    }
}

/// Builds the joint graph for `decode_pts` and checks the LLR length.
pub(crate) fn joint_graph(
    code: &crate::polar::CodeSpec,
    decode_pts: &[&PreTransform],
    llr: &LlrWord,
) -> crate::error::Result<JointGraph> {
    if llr.len() != code.block_len() {
        return Err(crate::error::Error::invalid(format!(
            "LLR word has length {}, expected {}",
            llr.len(),
            code.block_len()
        )));
    }
    JointGraph::new(code, decode_pts.iter().copied())
}
