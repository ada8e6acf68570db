//! Polar transform, code description and plain (untransformed) encoding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::construction::{self, Construction};
use crate::error::{Error, Result};

/// A single binary digit, always 0 or 1.
pub type Bit = u8;

/// Description of a polar code C(N, kappa).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCodeSpec", into = "RawCodeSpec")]
pub struct CodeSpec {
    log_len: u32,
    info_set: Vec<usize>,
    construction: Construction,
}

#[derive(Serialize, Deserialize)]
struct RawCodeSpec {
    n: u32,
    kappa: usize,
    info_set: Vec<usize>,
    construction: Construction,
}

impl TryFrom<RawCodeSpec> for CodeSpec {
    type Error = Error;

    fn try_from(raw: RawCodeSpec) -> Result<Self> {
        if raw.n > 20 {
            return Err(Error::invalid(format!("n = {} is too large", raw.n)));
        }
        let spec = CodeSpec::from_info_set(1usize << raw.n, raw.info_set, raw.construction)?;
        if spec.kappa() != raw.kappa {
            return Err(Error::invalid(format!(
                "kappa = {} does not match |info_set| = {}",
                raw.kappa,
                spec.kappa()
            )));
        }
        Ok(spec)
    }
}

impl From<CodeSpec> for RawCodeSpec {
    fn from(spec: CodeSpec) -> Self {
        RawCodeSpec {
            n: spec.log_len,
            kappa: spec.kappa(),
            info_set: spec.info_set,
            construction: spec.construction,
        }
    }
}

impl CodeSpec {
    /// Builds C(N, kappa) with the information set chosen by `construction`.
    pub fn new(block_len: usize, kappa: usize, construction: Construction) -> Result<Self> {
        let info_set = construction::construct_info_set(block_len, kappa, &construction)?;
        Self::from_info_set(block_len, info_set, construction)
    }

    /// Builds a code from an explicit information set.
    pub fn from_info_set(block_len: usize, mut info_set: Vec<usize>, construction: Construction) -> Result<Self> {
        if block_len == 0 || !block_len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "block length must be a power of two, got {block_len}"
            )));
        }
        info_set.sort_unstable();
        if info_set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("information set contains duplicates"));
        }
        if info_set.last().is_some_and(|&i| i >= block_len) {
            return Err(Error::invalid("information index out of range"));
        }
        Ok(CodeSpec {
            log_len: block_len.trailing_zeros(),
            info_set,
            construction,
        })
    }

    /// n = log2(N).
    pub fn n(&self) -> u32 {
        self.log_len
    }

    /// Block length N.
    pub fn block_len(&self) -> usize {
        1 << self.log_len
    }

    /// Dimension kappa = |I| of the underlying polar code.
    pub fn kappa(&self) -> usize {
        self.info_set.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    /// Frozen set F = [0, N) \ I, ascending.
    pub fn frozen_set(&self) -> Vec<usize> {
        let mask = self.info_mask();
        (0..self.block_len()).filter(|&i| !mask[i]).collect()
    }

    /// `mask[i]` is true iff `i` is an information index.
    pub fn info_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.block_len()];
        for &i in &self.info_set {
            mask[i] = true;
        }
        mask
    }

    pub fn is_info(&self, index: usize) -> bool {
        self.info_set.binary_search(&index).is_ok()
    }

    /// All indices in ascending order of reliability under this code's
    /// construction.
    pub fn reliability_order(&self) -> Vec<usize> {
        construction::reliability_order(self.block_len(), &self.construction).expect("validated block length")
    }

    /// Stable 64-bit fingerprint of the code (FNV-1a over the canonical
    /// description), used to tie artifacts to the code they were made for.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(&self.log_len.to_le_bytes());
        for &i in &self.info_set {
            feed(&(i as u64).to_le_bytes());
        }
        h
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C({}, {})", self.block_len(), self.kappa())
    }
}

/// Padded data word u_p of length N.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PaddedWord(pub Vec<Bit>);

/// Codeword x = u_p G_N of length N.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword(pub Vec<Bit>);

impl PaddedWord {
    pub fn zeros(len: usize) -> Self {
        PaddedWord(vec![0; len])
    }

    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// x = u_p G_N.
    pub fn to_codeword(&self) -> Codeword {
        let mut bits = self.0.clone();
        transform_in_place(&mut bits);
        Codeword(bits)
    }
}

impl Codeword {
    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// u_p = x G_N (the transform is an involution).
    pub fn to_padded(&self) -> PaddedWord {
        let mut bits = self.0.clone();
        transform_in_place(&mut bits);
        PaddedWord(bits)
    }
}

/// Returns v G_N over GF(2).
pub fn polar_transform(v: &[Bit]) -> Result<Vec<Bit>> {
    if v.is_empty() || !v.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "transform length must be a power of two, got {}",
            v.len()
        )));
    }
    let mut out = v.to_vec();
    transform_in_place(&mut out);
    Ok(out)
}

/// In-place butterfly computing v G_N. The length must be a power of two.
pub(crate) fn transform_in_place(bits: &mut [Bit]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for base in (0..n).step_by(2 * half) {
            let (lo, hi) = bits[base..base + 2 * half].split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// Places `u` on the information set and returns the padded word.
pub fn pad(code: &CodeSpec, u: &[Bit]) -> Result<PaddedWord> {
    if u.len() != code.kappa() {
        return Err(Error::invalid(format!(
            "data word has length {}, expected kappa = {}",
            u.len(),
            code.kappa()
        )));
    }
    let mut padded = PaddedWord::zeros(code.block_len());
    for (&i, &b) in code.info_set().iter().zip(u) {
        padded.0[i] = b & 1;
    }
    Ok(padded)
}

/// Encodes a kappa-bit data word without any pre-transformation.
pub fn encode(code: &CodeSpec, u: &[Bit]) -> Result<Codeword> {
    Ok(pad(code, u)?.to_codeword())
}
