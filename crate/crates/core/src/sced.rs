//! Subcode ensemble decoding.
//!
//! Each ensemble member is a role-C pre-transformation selecting a subcode.
//! The word is decoded once per member on the joint graph of the shared
//! role-B rules and the member's rules; the pooled candidates are then
//! filtered by the role-B rules and the genie and the one with the largest
//! correlation with the channel LLRs is returned.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decode::{DecodeResult, DecoderOptions, LlrWord, SclDecoder};
use crate::error::{Error, Result};
use crate::polar::{transform_in_place, Bit, CodeSpec, Codeword};
use crate::pretransform::{validate, JointGraph, PreTransform, Role};
use crate::rng::{self, Domain};

/// One ScED configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    code: CodeSpec,
    pt_b: Vec<PreTransform>,
    pt_a: Option<PreTransform>,
    pt_cs: Vec<PreTransform>,
}

impl Ensemble {
    /// Validates every pre-transformation and checks that each member's
    /// targets are disjoint from the role-B targets.
    pub fn new(
        code: CodeSpec,
        pt_b: Vec<PreTransform>,
        pt_a: Option<PreTransform>,
        pt_cs: Vec<PreTransform>,
    ) -> Result<Self> {
        if pt_cs.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one member"));
        }
        let expect_role = |pt: &PreTransform, role: Role| -> Result<()> {
            if pt.role != role {
                return Err(Error::invalid(format!(
                    "expected a role {role} pre-transformation, got role {}",
                    pt.role
                )));
            }
            validate(pt, &code).map_err(|v| Error::invalid(v.to_string()))
        };
        for pt in &pt_b {
            expect_role(pt, Role::B)?;
        }
        if let Some(a) = &pt_a {
            expect_role(a, Role::A)?;
        }
        for pt in &pt_cs {
            expect_role(pt, Role::C)?;
            JointGraph::new(&code, pt_b.iter().chain(std::iter::once(pt)))?;
        }
        Ok(Ensemble {
            code,
            pt_b,
            pt_a,
            pt_cs,
        })
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn pt_b(&self) -> &[PreTransform] {
        &self.pt_b
    }

    pub fn pt_a(&self) -> Option<&PreTransform> {
        self.pt_a.as_ref()
    }

    pub fn members(&self) -> &[PreTransform] {
        &self.pt_cs
    }

    /// Number of paths M.
    pub fn paths(&self) -> usize {
        self.pt_cs.len()
    }

    /// Joint decoding graph of member `i`.
    pub fn member_graph(&self, i: usize) -> JointGraph {
        JointGraph::new(&self.code, self.pt_b.iter().chain(std::iter::once(&self.pt_cs[i])))
            .expect("checked at construction")
    }

    /// True iff the padded word satisfies the role-B rules and the genie.
    pub fn is_valid(&self, u: &[Bit]) -> bool {
        self.pt_b.iter().all(|pt| pt.holds_on(u)) && self.pt_a.as_ref().is_none_or(|a| a.holds_on(u))
    }
}

/// Which candidates each path hands to the final decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// The whole final list of every path.
    #[default]
    FullList,
    /// One estimate per path: its lowest-metric valid entry, or its
    /// lowest-metric entry when none is valid.
    BestOnly,
}

/// ScED decoder with one reusable SCL decoder shared by the paths.
#[derive(Clone, Debug)]
pub struct ScedDecoder {
    ens: Ensemble,
    graphs: Vec<JointGraph>,
    scl: SclDecoder,
    pooling: Pooling,
}

impl ScedDecoder {
    pub fn new(ens: Ensemble, list_size: usize, opts: DecoderOptions, pooling: Pooling) -> Result<Self> {
        let scl = SclDecoder::new(ens.code.block_len(), list_size, opts)?;
        let graphs = (0..ens.paths()).map(|i| ens.member_graph(i)).collect();
        Ok(ScedDecoder {
            ens,
            graphs,
            scl,
            pooling,
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ens
    }

    pub fn decode(&mut self, llr: &LlrWord) -> DecodeResult {
        let mut best: Option<(f64, DecodeResult)> = None;
        let mut fallback: Option<(f64, DecodeResult)> = None;
        for graph in &self.graphs {
            let list = self.scl.decode_list(graph, llr, None);
            let mut entries: Vec<(bool, DecodeResult)> = list
                .entries
                .into_iter()
                .map(|e| (self.ens.is_valid(&e.u_p_hat.0), e))
                .collect();
            if self.pooling == Pooling::BestOnly {
                let k = entries.iter().position(|(v, _)| *v).unwrap_or(0);
                entries = vec![entries.swap_remove(k)];
            }
            for (valid, mut e) in entries {
                let corr = llr.correlation(&e.x_hat);
                e.in_subcode = valid;
                let slot = if valid { &mut best } else { &mut fallback };
                if slot.as_ref().is_none_or(|(c, _)| corr > *c) {
                    *slot = Some((corr, e));
                }
            }
        }
        best.or(fallback).expect("every path returns at least one candidate").1
    }
}

/// Decodes with `ens` and list size `list_size` per path.
pub fn sced_decode(ens: &Ensemble, llr: &LlrWord, list_size: usize) -> Result<DecodeResult> {
    if llr.len() != ens.code.block_len() {
        return Err(Error::invalid("LLR length does not match the code"));
    }
    let mut dec = ScedDecoder::new(ens.clone(), list_size, DecoderOptions::default(), Pooling::FullList)?;
    Ok(dec.decode(llr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverageMode {
    /// All codewords; needs kappa <= 20.
    Exhaustive,
    /// Random codewords drawn from a seeded stream.
    Sampled { trials: u64, seed: u64 },
}

/// Outcome of [`verify_coverage`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coverage {
    pub covered: bool,
    /// First codeword found outside every member subcode.
    pub counterexample: Option<Codeword>,
}

/// Checks that every codeword of the code (with the role-B rules applied)
/// lies in at least one member subcode.
pub fn verify_coverage(ens: &Ensemble, mode: CoverageMode) -> Result<Coverage> {
    let info = ens.code.info_set();
    let kappa = info.len();
    let mut u = vec![0 as Bit; ens.code.block_len()];
    let mut b_rules: Vec<_> = ens.pt_b.iter().flat_map(|pt| pt.rules.iter()).collect();
    b_rules.sort_by_key(|r| r.target);
    let mut check = |bits: &mut dyn FnMut(usize) -> Bit| -> Option<Codeword> {
        u.iter_mut().for_each(|b| *b = 0);
        for (j, &i) in info.iter().enumerate() {
            u[i] = bits(j);
        }
        for r in &b_rules {
            u[r.target] = r.evaluate(&u);
        }
        if ens.pt_cs.iter().any(|pt| pt.holds_on(&u)) {
            None
        } else {
            let mut x = u.clone();
            transform_in_place(&mut x);
            Some(Codeword(x))
        }
    };
    let counterexample = match mode {
        CoverageMode::Exhaustive => {
            if kappa > 20 {
                return Err(Error::invalid(format!(
                    "exhaustive coverage check needs kappa <= 20, got {kappa}"
                )));
            }
            (0u64..1 << kappa).find_map(|m| check(&mut |j| ((m >> j) & 1) as Bit))
        }
        CoverageMode::Sampled { trials, seed } => {
            let mut rng = rng::stream(seed, Domain::Coverage, 0, 0);
            (0..trials).find_map(|_| check(&mut |_| rng.random::<bool>() as Bit))
        }
    };
    Ok(Coverage {
        covered: counterexample.is_none(),
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Construction;
    use crate::decode::scl_decode;
    use crate::pretransform::{crc_to_pretransform, sample_ptc, SubcodeSpec, TargetPolicy, TargetRule};
    use crate::{encode, CrcPoly};

    fn c84() -> CodeSpec {
        CodeSpec::from_info_set(8, vec![3, 5, 6, 7], Construction::Sequence5g).unwrap()
    }

    #[test]
    fn complementary_pair_covers() {
        let code = c84();
        let a = PreTransform::new(Role::C, vec![TargetRule::new(6, vec![3, 5], 0)]);
        let mut b = a.clone();
        b.rules[0].offset = 1;
        let ens = Ensemble::new(code.clone(), vec![], None, vec![a.clone(), b]).unwrap();
        assert!(verify_coverage(&ens, CoverageMode::Exhaustive).unwrap().covered);

        let single = Ensemble::new(code.clone(), vec![], None, vec![a.clone()]).unwrap();
        let cov = verify_coverage(&single, CoverageMode::Exhaustive).unwrap();
        assert!(!cov.covered);
        let x = cov.counterexample.unwrap();
        assert!(!SubcodeSpec::new(code, vec![a]).unwrap().contains(&x));
        let sampled = verify_coverage(&single, CoverageMode::Sampled { trials: 100, seed: 1 }).unwrap();
        assert!(!sampled.covered);
    }

    #[test]
    fn exhaustive_coverage_needs_small_codes() {
        let code = CodeSpec::new(64, 32, Construction::Sequence5g).unwrap();
        let pt = sample_ptc(&code, 1, TargetPolicy::UniformInfo, 0).unwrap();
        let ens = Ensemble::new(code, vec![], None, vec![pt]).unwrap();
        assert!(verify_coverage(&ens, CoverageMode::Exhaustive).is_err());
    }

    #[test]
    fn selects_largest_correlation() {
        // the LLR (2, -1) on the length-2 code with both bits free
        let code = CodeSpec::from_info_set(2, vec![0, 1], Construction::Sequence5g).unwrap();
        let llr = LlrWord::new([2.0, -1.0]);
        let xa = Codeword(vec![0, 0]);
        let xb = Codeword(vec![0, 1]);
        assert_eq!(llr.correlation(&xa), 1.0);
        assert_eq!(llr.correlation(&xb), 3.0);
        // member 0 only admits u1 = 0, i.e. x = (u0, 0); member 1 only u0 = u1
        let m0 = PreTransform::new(Role::C, vec![TargetRule::new(1, vec![], 0)]);
        let m1 = PreTransform::new(Role::C, vec![TargetRule::new(1, vec![0], 0)]);
        let ens = Ensemble::new(code, vec![], None, vec![m0, m1]).unwrap();
        let out = sced_decode(&ens, &llr, 1).unwrap();
        assert_eq!(out.x_hat, xb);
        assert!(out.in_subcode);
    }

    #[test]
    fn unanimous_paths() {
        let code = CodeSpec::new(32, 16, Construction::Sequence5g).unwrap();
        let x = encode(&code, &[0; 16]).unwrap();
        let members = (0..4)
            .map(|s| {
                let mut pt = sample_ptc(&code, 2, TargetPolicy::UniformInfo, s).unwrap();
                pt.rules.iter_mut().for_each(|r| r.offset = 0);
                pt
            })
            .collect();
        let ens = Ensemble::new(code, vec![], None, members).unwrap();
        assert_eq!(sced_decode(&ens, &LlrWord::noiseless(&x), 4).unwrap().x_hat, x);
    }

    #[test]
    fn single_empty_member_matches_scl() {
        let code = CodeSpec::new(64, 38, Construction::Sequence5g).unwrap();
        let crc = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
        let ens = Ensemble::new(
            code.clone(),
            vec![],
            Some(crc.clone()),
            vec![PreTransform::empty(Role::C)],
        )
        .unwrap();
        let mut rng = rng::stream(5, Domain::Frame, 0, 0);
        for _ in 0..200 {
            let llr = LlrWord::new((0..64).map(|_| rng.random_range(-1.0..3.0)));
            let (scl, list) = scl_decode(&code, &[], &llr, 4, Some(&crc)).unwrap();
            let sced = sced_decode(&ens, &llr, 4).unwrap();
            assert_eq!(sced.in_subcode, scl.in_subcode);
            if scl.in_subcode {
                // the genie-passing entry with the best correlation
                let best = list
                    .entries
                    .iter()
                    .filter(|e| e.in_subcode)
                    .map(|e| llr.correlation(&e.x_hat))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(llr.correlation(&sced.x_hat), best);
            }
        }
    }

    #[test]
    fn best_only_pooling_uses_one_entry_per_path() {
        let code = CodeSpec::new(32, 16, Construction::Sequence5g).unwrap();
        let members: Vec<_> = (0..3)
            .map(|s| sample_ptc(&code, 1, TargetPolicy::UniformInfo, s).unwrap())
            .collect();
        let ens = Ensemble::new(code, vec![], None, members).unwrap();
        let mut full = ScedDecoder::new(ens.clone(), 4, DecoderOptions::default(), Pooling::FullList).unwrap();
        let mut best = ScedDecoder::new(ens.clone(), 4, DecoderOptions::default(), Pooling::BestOnly).unwrap();
        let mut rng = rng::stream(6, Domain::Frame, 0, 0);
        for _ in 0..100 {
            let llr = LlrWord::new((0..32).map(|_| rng.random_range(-1.0..2.0)));
            let a = full.decode(&llr);
            let b = best.decode(&llr);
            assert!(llr.correlation(&a.x_hat) >= llr.correlation(&b.x_hat));
        }
    }

    #[test]
    fn rejects_role_mismatch() {
        let code = c84();
        let b = PreTransform::new(Role::B, vec![TargetRule::new(4, vec![3], 1)]);
        assert!(Ensemble::new(code.clone(), vec![], None, vec![b.clone()]).is_err());
        assert!(Ensemble::new(code, vec![b], None, vec![]).is_err());
    }
}
