//! Ensemble design from undecodable received patterns (URPs).
//!
//! A URP is a channel LLR word on which a reference decoder (SC or SCL-L)
//! returns a wrong codeword. Candidate role-C pre-transformations are scored
//! by the set of URPs their subcode decoder recovers, and a greedy
//! max-coverage pass picks the ensemble.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{worker_pool, ChannelConfig, DecoderSpec, FrameDecoder, SimSetup, CHUNK_FRAMES};
use crate::decode::{LlrWord, ScDecoder, SclDecoder};
use crate::error::{Error, Result};
use crate::polar::{transform_in_place, Bit, CodeSpec, Codeword};
use crate::pretransform::{sample_ptc_with, JointGraph, PreTransform, Role, TargetPolicy};
use crate::rng::{self, Domain};
use crate::sced::Ensemble;

/// Decoder whose failures define a URP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Sc,
    Scl { list_size: usize },
}

impl Reference {
    /// Short tag such as `SC` or `SCL-8`.
    pub fn tag(&self) -> String {
        match self {
            Reference::Sc => "SC".into(),
            Reference::Scl { list_size } => format!("SCL-{list_size}"),
        }
    }

    /// Inverse of [`Reference::tag`].
    pub fn from_tag(tag: &str) -> Result<Self> {
        if tag == "SC" {
            return Ok(Reference::Sc);
        }
        tag.strip_prefix("SCL-")
            .and_then(|l| l.parse().ok())
            .filter(|&l: &usize| l >= 1)
            .map(|list_size| Reference::Scl { list_size })
            .ok_or_else(|| Error::invalid(format!("unknown reference decoder '{tag}'")))
    }

    fn spec(&self) -> DecoderSpec {
        match *self {
            Reference::Sc => DecoderSpec::Sc,
            Reference::Scl { list_size } => DecoderSpec::Scl { list_size },
        }
    }
}

/// One stored URP. `frame` is the index of the `(seed, Urp, 0, frame)`
/// stream that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct UrpRecord {
    pub llr: LlrWord,
    pub tx: Codeword,
    pub ebno_db: f64,
    pub seed: u64,
    pub frame: u64,
}

/// Simulates transmissions at `ebno_db` and keeps the first `count` frames,
/// in frame order, on which `reference` fails.
pub fn collect_urps(
    setup: &SimSetup,
    reference: Reference,
    ebno_db: f64,
    count: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<UrpRecord>> {
    if count == 0 {
        return Err(Error::invalid("URP count must be at least 1"));
    }
    let sigma2 = ChannelConfig::new(ebno_db, setup.rate())?.sigma2();
    let spec = reference.spec();
    FrameDecoder::new(setup, &spec)?;
    let pool = worker_pool(workers)?;
    let wave = workers.max(1) as u64;
    let mut out = Vec::with_capacity(count);
    let mut next_chunk = 0u64;
    while out.len() < count {
        let chunks: Vec<u64> = (next_chunk..next_chunk + wave).collect();
        next_chunk += wave;
        let found: Vec<Vec<UrpRecord>> = pool.install(|| {
            chunks
                .par_iter()
                .map(|&c| {
                    let mut dec = FrameDecoder::new(setup, &spec).expect("checked above");
                    let mut urps = Vec::new();
                    for frame in c * CHUNK_FRAMES..(c + 1) * CHUNK_FRAMES {
                        let mut rng = rng::stream(seed, Domain::Urp, 0, frame);
                        let f = setup.transmit(sigma2, &mut rng);
                        if dec.decode(setup, &f.llr).x_hat != f.x {
                            urps.push(UrpRecord {
                                llr: f.llr,
                                tx: f.x,
                                ebno_db,
                                seed,
                                frame,
                            });
                        }
                    }
                    urps
                })
                .collect()
        });
        out.extend(found.into_iter().flatten().take(count - out.len()));
    }
    Ok(out)
}

/// URPs recovered by candidate `candidate_index`, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateScore {
    pub candidate_index: usize,
    pub decoded: Vec<u32>,
}

fn padded(x: &Codeword) -> Vec<Bit> {
    let mut u = x.0.clone();
    transform_in_place(&mut u);
    u
}

/// Scores each candidate against each URP with SCL-`list_size` on the joint
/// graph of the setup's role-B rules and the candidate, selecting with the
/// setup's genie. URP `j` counts for candidate `i` iff the transmitted word
/// lies in the candidate's subcode, the subcode decoder returns it, and its
/// path metric is below that of the stand-alone SCL estimate.
pub fn evaluate_candidates(
    setup: &SimSetup,
    candidates: &[PreTransform],
    urps: &[UrpRecord],
    list_size: usize,
    workers: usize,
) -> Result<Vec<CandidateScore>> {
    let code = setup.code();
    let n = code.block_len();
    if urps.iter().any(|r| r.llr.len() != n || r.tx.len() != n) {
        return Err(Error::invalid("URP length does not match the code"));
    }
    let graphs: Vec<JointGraph> = candidates
        .iter()
        .map(|c| {
            if c.role != Role::C {
                return Err(Error::invalid("candidates must be role C pre-transformations"));
            }
            JointGraph::new(code, setup.pt_b().iter().chain(std::iter::once(c)))
        })
        .collect::<Result<_>>()?;
    let opts = setup.options();
    SclDecoder::new(n, list_size, opts)?;
    let pool = worker_pool(workers)?;
    let genie = setup.pt_a();

    let words: Vec<Vec<Bit>> = urps.iter().map(|r| padded(&r.tx)).collect();
    let standalone: Vec<f64> = pool.install(|| {
        urps.par_iter()
            .map_init(
                || SclDecoder::new(n, list_size, opts).expect("checked above"),
                |dec, r| dec.decode(setup.graph(), &r.llr, genie).0.path_metric,
            )
            .collect()
    });

    Ok(pool.install(|| {
        candidates
            .par_iter()
            .zip(graphs.par_iter())
            .enumerate()
            .map_init(
                || SclDecoder::new(n, list_size, opts).expect("checked above"),
                |dec, (i, (cand, graph))| {
                    let decoded = urps
                        .iter()
                        .enumerate()
                        .filter(|&(j, r)| {
                            cand.holds_on(&words[j]) && {
                                let sel = dec.decode(graph, &r.llr, genie).0;
                                sel.x_hat == r.tx && sel.path_metric < standalone[j]
                            }
                        })
                        .map(|(j, _)| j as u32)
                        .collect();
                    CandidateScore {
                        candidate_index: i,
                        decoded,
                    }
                },
            )
            .collect()
    }))
}

/// Greedy max-coverage: repeatedly takes the score adding the most
/// uncovered URPs. Equal gains go to the larger set, then to the lower
/// `candidate_index`. Once no score adds anything, the remaining picks are
/// the lowest unpicked indices. Returns candidate indices in pick order;
/// asking for more than available returns all of them.
pub fn greedy_select(scores: &[CandidateScore], paths: usize) -> Vec<usize> {
    let mut order: Vec<&CandidateScore> = scores.iter().collect();
    order.sort_by_key(|s| s.candidate_index);
    let universe = scores
        .iter()
        .flat_map(|s| s.decoded.iter())
        .map(|&j| j as usize + 1)
        .max()
        .unwrap_or(0);
    let mut covered = vec![false; universe];
    let mut picked = vec![false; order.len()];
    let mut out = Vec::with_capacity(paths.min(order.len()));
    while out.len() < paths.min(order.len()) {
        let mut best: Option<(usize, (usize, usize))> = None;
        for (pos, s) in order.iter().enumerate() {
            if picked[pos] {
                continue;
            }
            let gain = s.decoded.iter().filter(|&&j| !covered[j as usize]).count();
            let key = (gain, s.decoded.len());
            if gain > 0 && best.is_none_or(|(_, k)| key > k) {
                best = Some((pos, key));
            }
        }
        let pos = match best {
            Some((pos, _)) => pos,
            None => picked.iter().position(|&p| !p).expect("fewer picks than candidates"),
        };
        picked[pos] = true;
        for &j in &order[pos].decoded {
            covered[j as usize] = true;
        }
        out.push(order[pos].candidate_index);
    }
    out
}

/// Number of distinct URPs decoded by the chosen candidates.
pub fn union_coverage(scores: &[CandidateScore], chosen: &[usize]) -> usize {
    let mut all: Vec<u32> = scores
        .iter()
        .filter(|s| chosen.contains(&s.candidate_index))
        .flat_map(|s| s.decoded.iter().copied())
        .collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// Parameters of the design pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Number r of sampled role-C pre-transformations, counted over all
    /// family members.
    pub candidates: usize,
    /// Largest candidate depth; see [`family_depth`].
    pub depth: usize,
    pub policy: TargetPolicy,
    /// Ensemble size M.
    pub paths: usize,
    /// List size L of every subcode decoder.
    pub list_size: usize,
    pub seed: u64,
}

/// Depth of the offset families used for an ensemble of `paths` members:
/// `depth` capped so that a family of 2^d members fits into the ensemble.
/// `paths` must be a multiple of the family size.
pub fn family_depth(depth: usize, paths: usize) -> Result<usize> {
    if paths < 2 {
        return Err(Error::invalid("a covering ensemble needs at least 2 paths"));
    }
    let d = depth.min(paths.ilog2() as usize);
    if d == 0 {
        return Err(Error::invalid("candidate depth must be at least 1"));
    }
    if !paths.is_multiple_of(1 << d) {
        return Err(Error::invalid(format!(
            "ensemble size {paths} is not a multiple of the family size {}",
            1 << d
        )));
    }
    Ok(d)
}

/// All 2^d offset variants of `base`; variant `v` flips the offset of rule
/// `q` iff bit `q` of `v` is set, so variant 0 is `base`. The variants'
/// subcodes partition the parent code.
pub fn offset_family(base: &PreTransform) -> Vec<PreTransform> {
    let d = base.depth();
    (0..1usize << d)
        .map(|v| {
            let mut pt = base.clone();
            for (q, rule) in pt.rules.iter_mut().enumerate() {
                rule.offset ^= ((v >> q) & 1) as Bit;
            }
            pt
        })
        .collect()
}

/// Outcome of [`design_ensemble`].
#[derive(Clone, Debug)]
pub struct Design {
    pub ensemble: Ensemble,
    /// Selected family indices in pick order.
    pub selected: Vec<usize>,
    pub family_depth: usize,
    /// URPs decoded by the selected families jointly.
    pub coverage: usize,
    /// URPs decoded by the best single family.
    pub best_single: usize,
    /// Per-family scores: the union of the members' decoded sets.
    pub scores: Vec<CandidateScore>,
}

/// Samples `candidates / 2^d` offset families; the base of family `f` is
/// drawn from the stream `(seed, Candidate, 0, f)`.
pub fn sample_families(code: &CodeSpec, params: &DesignParams) -> Result<Vec<Vec<PreTransform>>> {
    let d = family_depth(params.depth, params.paths)?;
    let count = (params.candidates >> d).max(1);
    (0..count)
        .map(|f| {
            let mut rng = rng::stream(params.seed, Domain::Candidate, 0, f as u64);
            sample_ptc_with(code, d, params.policy, &mut rng).map(|base| offset_family(&base))
        })
        .collect()
}

/// Samples offset families, scores every member on `urps`, and greedily
/// picks `paths / 2^d` families by the union of their members' scores.
/// The resulting ensemble covers the code by construction.
pub fn design_ensemble(setup: &SimSetup, urps: &[UrpRecord], params: &DesignParams, workers: usize) -> Result<Design> {
    let d = family_depth(params.depth, params.paths)?;
    let families = sample_families(setup.code(), params)?;
    let flat: Vec<PreTransform> = families.iter().flatten().cloned().collect();
    let member_scores = evaluate_candidates(setup, &flat, urps, params.list_size, workers)?;
    let scores: Vec<CandidateScore> = member_scores
        .chunks(1 << d)
        .enumerate()
        .map(|(f, members)| {
            let mut decoded: Vec<u32> = members.iter().flat_map(|m| m.decoded.iter().copied()).collect();
            decoded.sort_unstable();
            decoded.dedup();
            CandidateScore {
                candidate_index: f,
                decoded,
            }
        })
        .collect();
    let selected = greedy_select(&scores, params.paths >> d);
    let coverage = union_coverage(&scores, &selected);
    let best_single = scores.iter().map(|s| s.decoded.len()).max().unwrap_or(0);
    let members = selected.iter().flat_map(|&f| families[f].iter().cloned()).collect();
    let ensemble = Ensemble::new(
        setup.code().clone(),
        setup.pt_b().to_vec(),
        setup.pt_a().cloned(),
        members,
    )?;
    Ok(Design {
        ensemble,
        selected,
        family_depth: d,
        coverage,
        best_single,
        scores,
    })
}

/// Settings shared by the SC-based URP analyses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    /// URPs per batch; every batch gets fresh pre-transformations.
    pub batch_size: usize,
    /// Pre-transformations sampled per batch.
    pub samples_per_batch: usize,
    pub policy: TargetPolicy,
    pub seed: u64,
}

/// Decoded and attempted (pre-transformation, URP) pairs for one bin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub decoded: u64,
}

impl Tally {
    /// decoded / trials, or 0 without trials.
    pub fn ratio(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.decoded as f64 / self.trials as f64
        }
    }
}

/// Runs `samples_per_batch` sampled pre-transformations of batch `b` from
/// stream `(seed, Analysis, b, t)` against the batch's URPs with joint-graph
/// SC. A pair counts as decoded iff the transmitted word is in the subcode
/// and SC returns it; non-members count as trials.
fn run_analysis(
    setup: &SimSetup,
    urps: &[UrpRecord],
    params: &AnalysisParams,
    workers: usize,
    sample: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Result<PreTransform> + Sync,
) -> Result<Vec<(PreTransform, Tally)>> {
    if params.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let code = setup.code();
    let n = code.block_len();
    if urps.iter().any(|r| r.llr.len() != n || r.tx.len() != n) {
        return Err(Error::invalid("URP length does not match the code"));
    }
    let words: Vec<Vec<Bit>> = urps.iter().map(|r| padded(&r.tx)).collect();
    let batches = urps.len().div_ceil(params.batch_size);
    let items: Vec<(usize, usize)> = (0..batches)
        .flat_map(|b| (0..params.samples_per_batch).map(move |t| (b, t)))
        .collect();
    let pool = worker_pool(workers)?;
    pool.install(|| {
        items
            .par_iter()
            .map_init(
                || ScDecoder::new(n, setup.options()),
                |dec, &(b, t)| {
                    let mut rng = rng::stream(params.seed, Domain::Analysis, b as u64, t as u64);
                    let pt = sample(&mut rng)?;
                    let graph = JointGraph::new(code, setup.pt_b().iter().chain(std::iter::once(&pt)))?;
                    let range = b * params.batch_size..((b + 1) * params.batch_size).min(urps.len());
                    let mut tally = Tally::default();
                    for j in range {
                        tally.trials += 1;
                        if pt.holds_on(&words[j]) && dec.decodes_to(&graph, &urps[j].llr, &urps[j].tx) {
                            tally.decoded += 1;
                        }
                    }
                    Ok((pt, tally))
                },
            )
            .collect()
    })
}

/// Per-target decoded-URP ratios of depth-1 pre-transformations, listed for
/// every eligible target from least to most reliable.
pub fn analyze_target_bits(
    setup: &SimSetup,
    urps: &[UrpRecord],
    params: &AnalysisParams,
    workers: usize,
) -> Result<Vec<(usize, Tally)>> {
    let code = setup.code();
    let info = code.info_set();
    let eligible = &info[1.min(info.len())..];
    let runs = run_analysis(setup, urps, params, workers, |rng| {
        sample_ptc_with(code, 1, params.policy, rng)
    })?;
    let mut by_target = vec![Tally::default(); code.block_len()];
    for (pt, tally) in runs {
        let t = &mut by_target[pt.rules[0].target];
        t.trials += tally.trials;
        t.decoded += tally.decoded;
    }
    Ok(code
        .reliability_order()
        .into_iter()
        .filter(|i| eligible.binary_search(i).is_ok())
        .map(|i| (i, by_target[i]))
        .collect())
}

/// Per-depth decoded-URP ratios with the depth of each sampled
/// pre-transformation drawn uniformly from `depths`.
pub fn analyze_depth(
    setup: &SimSetup,
    urps: &[UrpRecord],
    depths: RangeInclusive<usize>,
    params: &AnalysisParams,
    workers: usize,
) -> Result<Vec<(usize, Tally)>> {
    if depths.is_empty() || *depths.start() == 0 {
        return Err(Error::invalid("depth range must be nonempty and start at 1 or more"));
    }
    let code = setup.code();
    let runs = run_analysis(setup, urps, params, workers, |rng| {
        let d = rand::Rng::random_range(rng, depths.clone());
        sample_ptc_with(code, d, params.policy, rng)
    })?;
    let mut out: Vec<(usize, Tally)> = depths.clone().map(|d| (d, Tally::default())).collect();
    for (pt, tally) in runs {
        let t = &mut out[pt.depth() - depths.start()].1;
        t.trials += tally.trials;
        t.decoded += tally.decoded;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Construction;
    use crate::pretransform::crc_to_pretransform;
    use crate::sced::{verify_coverage, CoverageMode};
    use crate::CrcPoly;
    use proptest::prelude::*;

    fn score(i: usize, s: &[u32]) -> CandidateScore {
        CandidateScore {
            candidate_index: i,
            decoded: s.to_vec(),
        }
    }

    fn crc_setup() -> SimSetup {
        let code = CodeSpec::new(64, 38, Construction::Sequence5g).unwrap();
        let crc = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
        SimSetup::new(code, Some(crc), vec![]).unwrap()
    }

    #[test]
    fn greedy_example() {
        let scores = [score(0, &[0, 1]), score(1, &[2]), score(2, &[1, 2])];
        let picked = greedy_select(&scores, 2);
        assert_eq!(picked, vec![0, 2]);
        assert_eq!(union_coverage(&scores, &picked), 3);
    }

    #[test]
    fn greedy_edge_cases() {
        let scores = [score(0, &[0, 1]), score(1, &[2]), score(2, &[1, 2])];
        assert_eq!(greedy_select(&scores, 5).len(), 3);
        let same = [
            score(0, &[4, 5]),
            score(1, &[4, 5]),
            score(2, &[4, 5]),
            score(3, &[4, 5]),
        ];
        assert_eq!(greedy_select(&same, 3), vec![0, 1, 2]);
        let empty = [score(0, &[]), score(1, &[]), score(2, &[7])];
        assert_eq!(greedy_select(&empty, 2), vec![2, 0]);
    }

    proptest! {
        #[test]
        fn greedy_covers_at_least_the_best_single(
            sets in prop::collection::vec(prop::collection::btree_set(0u32..40, 0..12), 1..12),
            m in 1usize..6,
        ) {
            let scores: Vec<CandidateScore> = sets
                .iter()
                .enumerate()
                .map(|(i, s)| score(i, &s.iter().copied().collect::<Vec<_>>()))
                .collect();
            let picked = greedy_select(&scores, m);
            prop_assert_eq!(picked.len(), m.min(scores.len()));
            let best = scores.iter().map(|s| s.decoded.len()).max().unwrap();
            prop_assert!(union_coverage(&scores, &picked) >= best);
            let mut uniq = picked.clone();
            uniq.sort_unstable();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), picked.len());
        }
    }

    #[test]
    fn collected_urps_fail_on_replay() {
        let setup = crc_setup();
        let urps = collect_urps(&setup, Reference::Scl { list_size: 4 }, 1.5, 20, 9, 1).unwrap();
        assert_eq!(urps.len(), 20);
        assert!(urps.windows(2).all(|w| w[0].frame < w[1].frame));
        let mut dec = SclDecoder::new(64, 4, setup.options()).unwrap();
        for r in &urps {
            assert_ne!(dec.decode(setup.graph(), &r.llr, setup.pt_a()).0.x_hat, r.tx);
            assert!(setup.graph().admits(&padded(&r.tx)));
        }
        assert_eq!(
            urps,
            collect_urps(&setup, Reference::Scl { list_size: 4 }, 1.5, 20, 9, 3).unwrap()
        );
        assert!(collect_urps(&setup, Reference::Sc, 1.5, 0, 9, 1).is_err());
    }

    #[test]
    fn reference_tags_round_trip() {
        for r in [Reference::Sc, Reference::Scl { list_size: 8 }] {
            assert_eq!(Reference::from_tag(&r.tag()).unwrap(), r);
        }
        assert!(Reference::from_tag("SCL-0").is_err());
        assert!(Reference::from_tag("ML").is_err());
    }

    #[test]
    fn candidate_scores_follow_the_contract() {
        let setup = crc_setup();
        let urps = collect_urps(&setup, Reference::Scl { list_size: 4 }, 1.5, 40, 3, 1).unwrap();
        let params = DesignParams {
            candidates: 30,
            depth: 2,
            policy: TargetPolicy::ReliabilityWeighted,
            paths: 2,
            list_size: 4,
            seed: 5,
        };
        let mut cands: Vec<PreTransform> = sample_families(setup.code(), &params).unwrap().concat();
        cands.push(PreTransform::empty(Role::C));
        let scores = evaluate_candidates(&setup, &cands, &urps, 4, 2).unwrap();
        assert!(scores.last().unwrap().decoded.is_empty(), "identity decodes a URP");
        assert!(
            scores.iter().any(|s| !s.decoded.is_empty()),
            "no candidate decoded anything"
        );

        let mut dec = SclDecoder::new(64, 4, setup.options()).unwrap();
        for (s, cand) in scores.iter().zip(&cands) {
            let graph = JointGraph::new(setup.code(), [cand]).unwrap();
            for &j in &s.decoded {
                let r = &urps[j as usize];
                assert!(cand.holds_on(&padded(&r.tx)));
                let sel = dec.decode(&graph, &r.llr, setup.pt_a()).0;
                let alone = dec.decode(setup.graph(), &r.llr, setup.pt_a()).0;
                assert_eq!(sel.x_hat, r.tx);
                assert!(sel.path_metric < alone.path_metric);
            }
        }

        // permuting candidates permutes the scores
        let rev: Vec<PreTransform> = cands.iter().rev().cloned().collect();
        let rev_scores = evaluate_candidates(&setup, &rev, &urps, 4, 1).unwrap();
        for (a, b) in scores.iter().zip(rev_scores.iter().rev()) {
            assert_eq!(a.decoded, b.decoded);
        }
    }

    #[test]
    fn design_picks_covering_families() {
        let setup = crc_setup();
        let urps = collect_urps(&setup, Reference::Scl { list_size: 2 }, 2.0, 30, 1, 1).unwrap();
        let params = DesignParams {
            candidates: 40,
            depth: 2,
            policy: TargetPolicy::UniformInfo,
            paths: 8,
            list_size: 2,
            seed: 2,
        };
        let d = design_ensemble(&setup, &urps, &params, 1).unwrap();
        assert_eq!(d.family_depth, 2);
        assert_eq!(d.scores.len(), 10);
        assert_eq!(d.selected.len(), 2);
        assert_eq!(d.ensemble.paths(), 8);
        assert!(d.coverage >= d.best_single);
        assert_eq!(d.ensemble.pt_a(), setup.pt_a());
        let cov = verify_coverage(&d.ensemble, CoverageMode::Sampled { trials: 2000, seed: 1 }).unwrap();
        assert!(cov.covered);
    }

    #[test]
    fn family_depth_rules() {
        assert_eq!(family_depth(2, 2).unwrap(), 1);
        assert_eq!(family_depth(2, 8).unwrap(), 2);
        assert_eq!(family_depth(3, 8).unwrap(), 3);
        assert_eq!(family_depth(1, 6).unwrap(), 1);
        assert!(family_depth(2, 6).is_err());
        assert!(family_depth(2, 1).is_err());
        assert!(family_depth(0, 4).is_err());
    }

    #[test]
    fn offset_families_partition_the_code() {
        let code = CodeSpec::new(16, 8, Construction::Sequence5g).unwrap();
        for seed in 0..20 {
            let mut rng = rng::stream(seed, Domain::Candidate, 0, 0);
            let base = sample_ptc_with(&code, 1 + seed as usize % 3, TargetPolicy::UniformInfo, &mut rng).unwrap();
            let family = offset_family(&base);
            assert_eq!(family.len(), 1 << base.depth());
            assert_eq!(family[0], base);
            for m in 0..256u32 {
                let u: Vec<Bit> = (0..8).map(|j| ((m >> j) & 1) as Bit).collect();
                let word = crate::polar::pad(&code, &u).unwrap();
                let hits = family.iter().filter(|pt| pt.holds_on(word.bits())).count();
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn analysis_without_urps_is_all_zero() {
        let code = CodeSpec::new(32, 16, Construction::Sequence5g).unwrap();
        let setup = SimSetup::new(code, None, vec![]).unwrap();
        let params = AnalysisParams {
            batch_size: 100,
            samples_per_batch: 10,
            policy: TargetPolicy::UniformInfo,
            seed: 0,
        };
        let bits = analyze_target_bits(&setup, &[], &params, 1).unwrap();
        assert_eq!(bits.len(), 15);
        assert!(bits.iter().all(|(_, t)| t.ratio() == 0.0));
        let depth = analyze_depth(&setup, &[], 1..=3, &params, 1).unwrap();
        assert_eq!(depth.iter().map(|d| d.0).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(depth.iter().all(|(_, t)| t.trials == 0));
    }

    #[test]
    fn analysis_counts_every_pair() {
        let code = CodeSpec::new(64, 32, Construction::Sequence5g).unwrap();
        let setup = SimSetup::new(code, None, vec![]).unwrap();
        let urps = collect_urps(&setup, Reference::Sc, 1.0, 150, 4, 1).unwrap();
        let params = AnalysisParams {
            batch_size: 100,
            samples_per_batch: 40,
            policy: TargetPolicy::UniformInfo,
            seed: 8,
        };
        let bits = analyze_target_bits(&setup, &urps, &params, 2).unwrap();
        let trials: u64 = bits.iter().map(|(_, t)| t.trials).sum();
        assert_eq!(trials, 40 * 150);
        assert!(bits.iter().any(|(_, t)| t.decoded > 0));
        let depth = analyze_depth(&setup, &urps, 1..=4, &params, 1).unwrap();
        assert_eq!(depth.iter().map(|(_, t)| t.trials).sum::<u64>(), 40 * 150);
        assert_eq!(depth, analyze_depth(&setup, &urps, 1..=4, &params, 3).unwrap());
    }
}
