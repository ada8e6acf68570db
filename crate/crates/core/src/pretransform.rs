//! Affine pre-transformations of the padded data word.
//!
//! A pre-transformation is stored row-sparse: one [`TargetRule`] per target
//! bit, listing the origin bits it depends on and a constant offset. Rules are
//! evaluated in ascending target order on the word being built, which is the
//! same order in which a successive-cancellation decoder resolves them.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crc::CrcPoly;
use crate::error::{Error, Result};
use crate::polar::{Bit, CodeSpec, Codeword, PaddedWord};
use crate::rng::{self, Domain};

/// How a pre-transformation takes part in encoding and decoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    /// Encoding and decision genie (e.g. a CRC). Targets in I.
    A,
    /// Encoding and decoding (dynamic frozen bits). Targets in F.
    B,
    /// Decoding only; selects a subcode. Targets in I.
    C,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Role::A => "A",
            Role::B => "B",
            Role::C => "C",
        };
        f.write_str(c)
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Role::A),
            "B" => Ok(Role::B),
            "C" => Ok(Role::C),
            _ => Err(Error::invalid(format!("unknown role '{s}'"))),
        }
    }
}

/// u~[target] = XOR of u~[origins] XOR offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TargetRule {
    pub target: usize,
    pub origins: Vec<usize>,
    pub offset: Bit,
}

impl TargetRule {
    pub fn new(target: usize, mut origins: Vec<usize>, offset: Bit) -> Self {
        origins.sort_unstable();
        TargetRule {
            target,
            origins,
            offset,
        }
    }

    /// Value the rule forces given the word decided so far.
    #[inline]
    pub fn evaluate(&self, word: &[Bit]) -> Bit {
        self.origins.iter().fold(self.offset, |acc, &o| acc ^ word[o])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreTransform {
    pub role: Role,
    pub rules: Vec<TargetRule>,
}

impl PreTransform {
    /// Rules are put in ascending target order; nothing else is checked here,
    /// see [`validate`].
    pub fn new(role: Role, mut rules: Vec<TargetRule>) -> Self {
        rules.sort_by_key(|r| r.target);
        PreTransform { role, rules }
    }

    pub fn empty(role: Role) -> Self {
        PreTransform {
            role,
            rules: Vec::new(),
        }
    }

    /// Depth d_p, the number of target bits.
    pub fn depth(&self) -> usize {
        self.rules.len()
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.rules.iter().map(|r| r.target)
    }

    /// True iff every rule holds on `word`.
    pub fn holds_on(&self, word: &[Bit]) -> bool {
        self.rules.iter().all(|r| word[r.target] == r.evaluate(word))
    }
}

/// First broken invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    TargetOutOfRange { target: usize },
    TargetsNotIncreasing { target: usize },
    OriginNotBeforeTarget { target: usize, origin: usize },
    OriginsNotIncreasing { target: usize },
    BadOffset { target: usize, offset: Bit },
    TargetInFrozenSet { role: Role, target: usize },
    TargetInInfoSet { role: Role, target: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TargetOutOfRange { target } => write!(f, "target {target} out of range"),
            Violation::TargetsNotIncreasing { target } => {
                write!(f, "target {target} repeated or out of order")
            }
            Violation::OriginNotBeforeTarget { target, origin } => {
                write!(f, "origin {origin} of target {target} is not an earlier index")
            }
            Violation::OriginsNotIncreasing { target } => {
                write!(f, "origins of target {target} repeated or out of order")
            }
            Violation::BadOffset { target, offset } => {
                write!(f, "offset {offset} of target {target} is not a bit")
            }
            Violation::TargetInFrozenSet { role, target } => {
                write!(f, "role {role} target {target} lies in the frozen set")
            }
            Violation::TargetInInfoSet { role, target } => {
                write!(f, "role {role} target {target} lies in the information set")
            }
        }
    }
}

/// Checks rule invariants and role-vs-set membership against `code`.
pub fn validate(pt: &PreTransform, code: &CodeSpec) -> std::result::Result<(), Violation> {
    let n = code.block_len();
    let mut prev_target: Option<usize> = None;
    for rule in &pt.rules {
        let t = rule.target;
        if t >= n {
            return Err(Violation::TargetOutOfRange { target: t });
        }
        if prev_target.is_some_and(|p| p >= t) {
            return Err(Violation::TargetsNotIncreasing { target: t });
        }
        prev_target = Some(t);
        if let Some(&o) = rule.origins.iter().find(|&&o| o >= t) {
            return Err(Violation::OriginNotBeforeTarget { target: t, origin: o });
        }
        if rule.origins.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Violation::OriginsNotIncreasing { target: t });
        }
        if rule.offset > 1 {
            return Err(Violation::BadOffset {
                target: t,
                offset: rule.offset,
            });
        }
        match (pt.role, code.is_info(t)) {
            (Role::B, true) => {
                return Err(Violation::TargetInInfoSet {
                    role: pt.role,
                    target: t,
                })
            }
            (Role::A | Role::C, false) => {
                return Err(Violation::TargetInFrozenSet {
                    role: pt.role,
                    target: t,
                })
            }
            _ => {}
        }
    }
    Ok(())
}

fn validate_all<'a>(pts: impl IntoIterator<Item = &'a PreTransform>, code: &CodeSpec) -> Result<Vec<&'a TargetRule>> {
    let mut rules: Vec<&TargetRule> = Vec::new();
    for pt in pts {
        validate(pt, code).map_err(|v| Error::invalid(v.to_string()))?;
        rules.extend(pt.rules.iter());
    }
    rules.sort_by_key(|r| r.target);
    if let Some(w) = rules.windows(2).find(|w| w[0].target == w[1].target) {
        return Err(Error::invalid(format!(
            "target {} is used by more than one pre-transformation",
            w[0].target
        )));
    }
    Ok(rules)
}

/// Applies the pre-transformations to a padded word. Non-target positions are
/// left unchanged.
pub fn apply(pts: &[&PreTransform], u_p: &PaddedWord) -> Result<PaddedWord> {
    let mut rules: Vec<&TargetRule> = pts.iter().flat_map(|pt| pt.rules.iter()).collect();
    rules.sort_by_key(|r| r.target);
    if let Some(w) = rules.windows(2).find(|w| w[0].target == w[1].target) {
        return Err(Error::invalid(format!("overlapping target {}", w[0].target)));
    }
    let mut out = u_p.clone();
    for rule in rules {
        if rule.target >= out.len() || rule.origins.iter().any(|&o| o >= rule.target) {
            return Err(Error::invalid(format!("malformed rule for target {}", rule.target)));
        }
        out.0[rule.target] = rule.evaluate(&out.0);
    }
    Ok(out)
}

/// Information positions not claimed by a target of `pts`, ascending. These
/// carry the payload when encoding with `pts`.
pub fn payload_positions(code: &CodeSpec, pts: &[&PreTransform]) -> Vec<usize> {
    let mut claimed = vec![false; code.block_len()];
    for pt in pts {
        for t in pt.targets() {
            claimed[t] = true;
        }
    }
    code.info_set().iter().copied().filter(|&i| !claimed[i]).collect()
}

/// Encodes a payload with the given (role A and/or B) pre-transformations.
/// The payload length is kappa minus the number of targets in I.
pub fn encode_with(code: &CodeSpec, pts: &[&PreTransform], payload: &[Bit]) -> Result<(PaddedWord, Codeword)> {
    validate_all(pts.iter().copied(), code)?;
    let positions = payload_positions(code, pts);
    if payload.len() != positions.len() {
        return Err(Error::invalid(format!(
            "payload has length {}, expected {}",
            payload.len(),
            positions.len()
        )));
    }
    let mut u_p = PaddedWord::zeros(code.block_len());
    for (&i, &b) in positions.iter().zip(payload) {
        u_p.0[i] = b & 1;
    }
    let u_t = apply(pts, &u_p)?;
    let x = u_t.to_codeword();
    Ok((u_t, x))
}

/// Expresses a CRC as a role-A pre-transformation.
///
/// The CRC bits sit on the `r` highest information indices in MSB-first
/// order; the payload occupies the remaining information indices with the
/// lowest index as the first (highest-degree) message bit. Each target's
/// origins are found by running the CRC on unit payloads.
pub fn crc_to_pretransform(poly: &CrcPoly, code: &CodeSpec) -> Result<PreTransform> {
    let r = poly.degree();
    let kappa = code.kappa();
    if r >= kappa {
        return Err(Error::invalid(format!(
            "CRC degree {r} must be smaller than kappa = {kappa}"
        )));
    }
    let info = code.info_set();
    let (payload, targets) = info.split_at(kappa - r);
    let mut origins: Vec<Vec<usize>> = vec![Vec::new(); r];
    let mut unit = vec![0u8; payload.len()];
    for (j, &pos) in payload.iter().enumerate() {
        unit[j] = 1;
        for (bit, &rem) in poly.remainder(&unit).iter().enumerate() {
            if rem == 1 {
                origins[bit].push(pos);
            }
        }
        unit[j] = 0;
    }
    let rules = targets
        .iter()
        .zip(origins)
        .map(|(&t, o)| TargetRule::new(t, o, 0))
        .collect();
    Ok(PreTransform::new(Role::A, rules))
}

/// A subcode C_T of a polar code, defined by the pre-transformations honored
/// when testing membership.
#[derive(Clone, Debug)]
pub struct SubcodeSpec {
    code: CodeSpec,
    pts: Vec<PreTransform>,
    graph: JointGraph,
}

impl SubcodeSpec {
    pub fn new(code: CodeSpec, pts: Vec<PreTransform>) -> Result<Self> {
        let graph = JointGraph::new(&code, pts.iter())?;
        Ok(SubcodeSpec { code, pts, graph })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn pts(&self) -> &[PreTransform] {
        &self.pts
    }

    /// k = kappa minus the targets placed on information indices.
    pub fn dimension(&self) -> usize {
        self.code.kappa() - self.graph.info_targets
    }

    pub fn graph(&self) -> &JointGraph {
        &self.graph
    }

    pub fn contains(&self, x: &Codeword) -> bool {
        membership(x, self)
    }
}

/// True iff `x` belongs to the subcode: its padded word has zeros on the
/// static frozen positions and satisfies every target rule.
pub fn membership(x: &Codeword, sub: &SubcodeSpec) -> bool {
    if x.len() != sub.code.block_len() {
        return false;
    }
    sub.graph.admits(&x.to_padded().0)
}

/// Per-index decoding role of a bit on the joint graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitKind {
    /// Static frozen, always 0.
    Frozen,
    /// Free information bit.
    Info,
    /// Dynamic frozen bit resolved by the rule with this index.
    Dynamic(u32),
}

/// Compiled view of a code plus the pre-transformations a decoder honors.
#[derive(Clone, Debug)]
pub struct JointGraph {
    kinds: Vec<BitKind>,
    rules: Vec<TargetRule>,
    info_targets: usize,
}

impl JointGraph {
    /// Validates `pts` against `code` and checks that targets are disjoint.
    pub fn new<'a>(code: &CodeSpec, pts: impl IntoIterator<Item = &'a PreTransform>) -> Result<Self> {
        let rules = validate_all(pts, code)?;
        let mut kinds: Vec<BitKind> = code
            .info_mask()
            .into_iter()
            .map(|info| if info { BitKind::Info } else { BitKind::Frozen })
            .collect();
        let mut info_targets = 0;
        let mut owned = Vec::with_capacity(rules.len());
        for (idx, rule) in rules.into_iter().enumerate() {
            if kinds[rule.target] == BitKind::Info {
                info_targets += 1;
            }
            kinds[rule.target] = BitKind::Dynamic(idx as u32);
            owned.push(rule.clone());
        }
        Ok(JointGraph {
            kinds,
            rules: owned,
            info_targets,
        })
    }

    pub fn block_len(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[BitKind] {
        &self.kinds
    }

    pub fn rule(&self, idx: u32) -> &TargetRule {
        &self.rules[idx as usize]
    }

    /// True iff the padded word is consistent with the graph.
    pub fn admits(&self, u: &[Bit]) -> bool {
        self.kinds.iter().enumerate().all(|(i, kind)| match kind {
            BitKind::Info => true,
            BitKind::Frozen => u[i] == 0,
            BitKind::Dynamic(r) => u[i] == self.rules[*r as usize].evaluate(u),
        })
    }
}

/// How targets of sampled role-C pre-transformations are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPolicy {
    /// Uniform over eligible information indices.
    #[default]
    UniformInfo,
    /// Probability proportional to 1 / rank, where rank 1 is the least
    /// reliable eligible information index.
    ReliabilityWeighted,
}

/// Samples a role-C pre-transformation of the given depth.
///
/// Targets are information indices that have at least one earlier
/// information index. Each target gets a nonempty uniformly random subset of
/// the earlier information indices as origins and a uniform offset bit.
pub fn sample_ptc(code: &CodeSpec, depth: usize, policy: TargetPolicy, seed: u64) -> Result<PreTransform> {
    let mut rng = rng::stream(seed, Domain::Candidate, 0, 0);
    sample_ptc_with(code, depth, policy, &mut rng)
}

/// [`sample_ptc`] drawing from a caller-supplied generator.
pub fn sample_ptc_with<R: Rng + ?Sized>(
    code: &CodeSpec,
    depth: usize,
    policy: TargetPolicy,
    rng: &mut R,
) -> Result<PreTransform> {
    let info = code.info_set();
    let eligible = &info[1.min(info.len())..];
    if depth > eligible.len() {
        return Err(Error::invalid(format!(
            "depth {depth} exceeds the {} eligible target positions",
            eligible.len()
        )));
    }
    let targets: Vec<usize> = match policy {
        TargetPolicy::UniformInfo => index::sample(rng, eligible.len(), depth)
            .into_iter()
            .map(|j| eligible[j])
            .collect(),
        TargetPolicy::ReliabilityWeighted => {
            let ranked = eligible_by_reliability(code, eligible);
            let mut weights: Vec<f64> = (1..=ranked.len()).map(|r| 1.0 / r as f64).collect();
            let mut picked = Vec::with_capacity(depth);
            for _ in 0..depth {
                let total: f64 = weights.iter().sum();
                let mut draw = rng.random::<f64>() * total;
                let mut choice = weights.iter().rposition(|&w| w > 0.0).expect("weights left");
                for (j, &w) in weights.iter().enumerate() {
                    if w > 0.0 && draw < w {
                        choice = j;
                        break;
                    }
                    draw -= w;
                }
                weights[choice] = 0.0;
                picked.push(ranked[choice]);
            }
            picked
        }
    };
    let rules = targets
        .into_iter()
        .map(|t| {
            let earlier = &info[..info.partition_point(|&i| i < t)];
            let origins = loop {
                let chosen: Vec<usize> = earlier.iter().copied().filter(|_| rng.random::<bool>()).collect();
                if !chosen.is_empty() {
                    break chosen;
                }
            };
            TargetRule::new(t, origins, rng.random::<bool>() as Bit)
        })
        .collect();
    Ok(PreTransform::new(Role::C, rules))
}

/// Eligible indices sorted from least to most reliable.
fn eligible_by_reliability(code: &CodeSpec, eligible: &[usize]) -> Vec<usize> {
    code.reliability_order()
        .into_iter()
        .filter(|i| eligible.binary_search(i).is_ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Construction;
    use crate::polar::transform_in_place;
    use proptest::prelude::*;

    fn c84() -> CodeSpec {
        CodeSpec::from_info_set(8, vec![3, 5, 6, 7], Construction::Sequence5g).unwrap()
    }

    fn example_pts() -> (PreTransform, PreTransform) {
        let b = PreTransform::new(Role::B, vec![TargetRule::new(4, vec![3], 1)]);
        let a = PreTransform::new(Role::A, vec![TargetRule::new(7, vec![5, 6], 0)]);
        (b, a)
    }

    #[test]
    fn example_pre_transform_is_valid() {
        let code = c84();
        let (b, a) = example_pts();
        assert_eq!(validate(&b, &code), Ok(()));
        assert_eq!(validate(&a, &code), Ok(()));
    }

    #[test]
    fn validation_failures() {
        let code = c84();
        let later_origin = PreTransform::new(Role::B, vec![TargetRule::new(4, vec![5], 0)]);
        assert_eq!(
            validate(&later_origin, &code),
            Err(Violation::OriginNotBeforeTarget { target: 4, origin: 5 })
        );
        let self_origin = PreTransform::new(Role::B, vec![TargetRule::new(4, vec![4], 0)]);
        assert!(validate(&self_origin, &code).is_err());
        let b_in_info = PreTransform::new(Role::B, vec![TargetRule::new(3, vec![0], 0)]);
        assert_eq!(
            validate(&b_in_info, &code),
            Err(Violation::TargetInInfoSet {
                role: Role::B,
                target: 3
            })
        );
        let c_in_frozen = PreTransform::new(Role::C, vec![TargetRule::new(4, vec![3], 0)]);
        assert!(matches!(
            validate(&c_in_frozen, &code),
            Err(Violation::TargetInFrozenSet { .. })
        ));
        let dup = PreTransform {
            role: Role::C,
            rules: vec![TargetRule::new(5, vec![3], 0), TargetRule::new(5, vec![3], 1)],
        };
        assert!(validate(&dup, &code).is_err());
    }

    #[test]
    fn example_apply() {
        let (b, a) = example_pts();
        let u_p = PaddedWord(vec![0, 0, 0, 1, 0, 1, 0, 0]);
        let out = apply(&[&b, &a], &u_p).unwrap();
        assert_eq!(out.0, vec![0, 0, 0, 1, 0, 1, 0, 1]);
        assert_eq!(apply(&[], &u_p).unwrap(), u_p);
        let offset_only = PreTransform::new(Role::C, vec![TargetRule::new(6, vec![], 1)]);
        assert_eq!(apply(&[&offset_only], &u_p).unwrap().0[6], 1);
        assert!(apply(&[&b, &b], &u_p).is_err());
    }

    #[test]
    fn example_encoding_with_roles_a_and_b() {
        let code = c84();
        let (b, a) = example_pts();
        // u = (u0, u1, u2) = (1, 1, 0) on positions 3, 5, 6
        let (u_t, x) = encode_with(&code, &[&b, &a], &[1, 1, 0]).unwrap();
        assert_eq!(u_t.0, vec![0, 0, 0, 1, 0, 1, 0, 1]);
        let mut check = u_t.0.clone();
        transform_in_place(&mut check);
        assert_eq!(x.0, check);
        let sub = SubcodeSpec::new(code, vec![b, a]).unwrap();
        assert_eq!(sub.dimension(), 3);
        assert!(membership(&x, &sub));
    }

    #[test]
    fn crc_pretransform_matches_crc() {
        let code = CodeSpec::new(64, 38, Construction::Sequence5g).unwrap();
        let pt = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
        assert_eq!(pt.depth(), 6);
        assert_eq!(pt.targets().collect::<Vec<_>>(), code.info_set()[32..].to_vec());
        assert_eq!(validate(&pt, &code), Ok(()));
        let (_, x) = encode_with(&code, &[&pt], &[0; 32]).unwrap();
        assert_eq!(x.0, vec![0; 64]);
        // single payload bit: target pattern is the CRC of the unit vector
        let payload_pos = payload_positions(&code, &[&pt]);
        for j in 0..32 {
            let mut m = vec![0u8; 32];
            m[j] = 1;
            let (u_t, _) = encode_with(&code, &[&pt], &m).unwrap();
            let crc: Vec<Bit> = code.info_set()[32..].iter().map(|&t| u_t.0[t]).collect();
            assert_eq!(crc, CrcPoly::CRC6.remainder(&m));
            assert!(payload_pos.iter().enumerate().all(|(i, &p)| u_t.0[p] == m[i]));
        }
        let small = CodeSpec::new(8, 4, Construction::Sequence5g).unwrap();
        assert!(crc_to_pretransform(&CrcPoly::CRC6, &small).is_err());
    }

    #[test]
    fn membership_rejects_flips() {
        let code = c84();
        let pt = PreTransform::new(Role::C, vec![TargetRule::new(6, vec![3], 0)]);
        let sub = SubcodeSpec::new(code.clone(), vec![pt.clone()]).unwrap();
        // u = (1, 0, 0, 0) on I gives u6 = 0 != u3: outside the subcode
        let x = crate::polar::encode(&code, &[1, 0, 0, 0]).unwrap();
        assert!(!membership(&x, &sub));
        let x = crate::polar::encode(&code, &[1, 0, 1, 0]).unwrap();
        assert!(membership(&x, &sub));
        let mut bad = PaddedWord(vec![0; 8]);
        bad.0[0] = 1;
        assert!(!membership(&bad.to_codeword(), &sub));
        assert!(!membership(&Codeword(vec![0; 4]), &sub));
    }

    #[test]
    fn sample_ptc_contract() {
        let code = CodeSpec::new(64, 32, Construction::Sequence5g).unwrap();
        assert_eq!(sample_ptc(&code, 0, TargetPolicy::UniformInfo, 1).unwrap().depth(), 0);
        let a = sample_ptc(&code, 3, TargetPolicy::ReliabilityWeighted, 9).unwrap();
        let b = sample_ptc(&code, 3, TargetPolicy::ReliabilityWeighted, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(validate(&a, &code), Ok(()));
        assert!(a
            .rules
            .iter()
            .all(|r| !r.origins.is_empty() && r.origins.iter().all(|&o| code.is_info(o))));
        assert!(sample_ptc(&code, 32, TargetPolicy::UniformInfo, 1).is_err());
        assert_eq!(sample_ptc(&code, 31, TargetPolicy::UniformInfo, 1).unwrap().depth(), 31);
    }

    #[test]
    fn uniform_targets_are_uniform() {
        let code = CodeSpec::new(32, 12, Construction::Sequence5g).unwrap();
        let eligible = &code.info_set()[1..];
        let trials = 10_000;
        let mut counts = vec![0usize; 32];
        let mut rng = rng::stream(3, Domain::Candidate, 0, 0);
        for _ in 0..trials {
            let pt = sample_ptc_with(&code, 1, TargetPolicy::UniformInfo, &mut rng).unwrap();
            counts[pt.rules[0].target] += 1;
        }
        let p = 1.0 / eligible.len() as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for &t in eligible {
            let dev = (counts[t] as f64 - trials as f64 * p).abs();
            assert!(dev <= 3.0 * sigma, "target {t}: {} draws", counts[t]);
        }
        assert_eq!(counts[code.info_set()[0]], 0);
    }

    #[test]
    fn weighted_targets_prefer_unreliable_bits() {
        let code = CodeSpec::new(64, 32, Construction::Sequence5g).unwrap();
        let eligible = &code.info_set()[1..];
        let ranked = eligible_by_reliability(&code, eligible);
        let mut rng = rng::stream(4, Domain::Candidate, 0, 0);
        let mut first = 0;
        let mut last = 0;
        for _ in 0..5000 {
            let t = sample_ptc_with(&code, 1, TargetPolicy::ReliabilityWeighted, &mut rng)
                .unwrap()
                .rules[0]
                .target;
            first += (t == ranked[0]) as usize;
            last += (t == *ranked.last().unwrap()) as usize;
        }
        assert!(first > 10 * last.max(1));
    }

    fn all_words(code: &CodeSpec) -> Vec<Codeword> {
        let k = code.kappa();
        (0u32..1 << k)
            .map(|m| {
                let u: Vec<Bit> = (0..k).map(|b| ((m >> b) & 1) as Bit).collect();
                crate::polar::encode(code, &u).unwrap()
            })
            .collect()
    }

    #[test]
    fn complementary_offsets_partition_the_code() {
        let code = CodeSpec::new(16, 8, Construction::GaussianApprox { design_snr_db: 0.0 }).unwrap();
        for seed in 0..20 {
            let pt = sample_ptc(&code, 2, TargetPolicy::UniformInfo, seed).unwrap();
            let mut twin = pt.clone();
            twin.rules[0].offset ^= 1;
            let s0 = SubcodeSpec::new(code.clone(), vec![pt]).unwrap();
            let s1 = SubcodeSpec::new(code.clone(), vec![twin]).unwrap();
            let mut in0 = 0;
            let mut in1 = 0;
            let mut both = 0;
            for x in all_words(&code) {
                let (a, b) = (s0.contains(&x), s1.contains(&x));
                in0 += a as usize;
                in1 += b as usize;
                both += (a && b) as usize;
            }
            assert_eq!((in0, in1, both), (64, 64, 0));
        }
    }

    proptest! {
        #[test]
        fn apply_is_affine(
            seed in any::<u64>(),
            a in proptest::collection::vec(0u8..2, 32),
            b in proptest::collection::vec(0u8..2, 32),
            c in proptest::collection::vec(0u8..2, 32),
        ) {
            let code = CodeSpec::new(32, 16, Construction::Sequence5g).unwrap();
            let pt = sample_ptc(&code, 4, TargetPolicy::UniformInfo, seed).unwrap();
            let crc = crc_to_pretransform(&CrcPoly::new(3, 0x3).unwrap(), &code).unwrap();
            let pts: Vec<&PreTransform> = if pt.targets().any(|t| crc.targets().any(|s| s == t)) {
                vec![&pt]
            } else {
                vec![&pt, &crc]
            };
            let xor3 = |p: &[u8], q: &[u8], r: &[u8]| -> Vec<u8> {
                p.iter().zip(q).zip(r).map(|((x, y), z)| x ^ y ^ z).collect()
            };
            let lhs = apply(&pts, &PaddedWord(xor3(&a, &b, &c))).unwrap();
            let rhs = xor3(
                &apply(&pts, &PaddedWord(a.clone())).unwrap().0,
                &apply(&pts, &PaddedWord(b.clone())).unwrap().0,
                &apply(&pts, &PaddedWord(c.clone())).unwrap().0,
            );
            prop_assert_eq!(lhs.0, rhs);
        }

        #[test]
        fn subcode_cardinality(seed in any::<u64>(), depth in 1usize..=3) {
            let code = CodeSpec::new(16, 8, Construction::GaussianApprox { design_snr_db: 1.0 }).unwrap();
            let pt = sample_ptc(&code, depth, TargetPolicy::UniformInfo, seed).unwrap();
            let sub = SubcodeSpec::new(code.clone(), vec![pt]).unwrap();
            let members = all_words(&code).iter().filter(|x| sub.contains(x)).count();
            prop_assert_eq!(members, 1 << (8 - depth));
            prop_assert_eq!(sub.dimension(), 8 - depth);
        }

        #[test]
        fn encoded_words_are_members(seed in any::<u64>(), payload in proptest::collection::vec(0u8..2, 26)) {
            let code = CodeSpec::new(64, 32, Construction::Sequence5g).unwrap();
            let crc = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
            let frozen = code.frozen_set();
            let t = frozen[frozen.len() - 1];
            let b = PreTransform::new(Role::B, vec![TargetRule::new(t, vec![code.info_set()[0]], (seed & 1) as u8)]);
            let (u_t, x) = encode_with(&code, &[&crc, &b], &payload).unwrap();
            let sub = SubcodeSpec::new(code.clone(), vec![crc.clone(), b]).unwrap();
            prop_assert!(membership(&x, &sub));
            // independent CRC check on the extracted payload
            let positions = payload_positions(&code, &[&crc]);
            let mut word: Vec<Bit> = positions.iter().map(|&p| u_t.0[p]).collect();
            word.extend(crc.targets().map(|t| u_t.0[t]));
            prop_assert!(CrcPoly::CRC6.check(&word));
        }
    }
}
