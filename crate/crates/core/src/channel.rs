//! BPSK over the BI-AWGN channel and the Monte Carlo FER/BER loop.
//!
//! Frame `f` of grid point `p` draws its payload and noise from the stream
//! `(seed, Frame, p, f)`. Frames are simulated in fixed-size chunks, several
//! chunks at a time on a thread pool, and tallied in frame order, so the
//! stopping frame and every count are independent of the worker count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{DecodeResult, DecoderOptions, LlrWord, ScDecoder, SclDecoder, DEFAULT_LLR_CLAMP};
use crate::error::{Error, Result};
use crate::polar::{transform_in_place, Bit, CodeSpec, Codeword};
use crate::pretransform::{payload_positions, JointGraph, PreTransform, Role, TargetRule};
use crate::rng::{self, Domain};
use crate::sced::{Ensemble, Pooling, ScedDecoder};

/// Frames per work item.
pub const CHUNK_FRAMES: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelConfig {
    pub ebno_db: f64,
    pub rate: f64,
}

impl ChannelConfig {
    pub fn new(ebno_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::invalid(format!("rate must lie in (0, 1], got {rate}")));
        }
        if !ebno_db.is_finite() {
            return Err(Error::invalid("Eb/N0 must be finite"));
        }
        Ok(ChannelConfig { ebno_db, rate })
    }

    /// Noise variance per real dimension, 1 / (2 R Eb/N0).
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebno_db / 10.0))
    }
}

/// One simulated grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerPoint {
    pub ebno_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// The frame budget ran out before the error target was met.
    pub censored: bool,
}

/// Bit 0 maps to +1, bit 1 to -1.
pub fn modulate(x: &Codeword) -> Vec<f64> {
    x.bits().iter().map(|&b| 1.0 - 2.0 * b as f64).collect()
}

/// Element-wise 2 y / sigma2, clamped.
pub fn channel_llr(y: &[f64], sigma2: f64) -> Result<LlrWord> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::invalid(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(LlrWord::new(y.iter().map(|&v| 2.0 * v / sigma2)))
}

/// Code plus the pre-transformations applied at the transmitter.
#[derive(Clone, Debug)]
pub struct SimSetup {
    code: CodeSpec,
    pt_a: Option<PreTransform>,
    pt_b: Vec<PreTransform>,
    options: DecoderOptions,
    positions: Vec<usize>,
    rules: Vec<TargetRule>,
    graph: JointGraph,
}

impl SimSetup {
    pub fn new(code: CodeSpec, pt_a: Option<PreTransform>, pt_b: Vec<PreTransform>) -> Result<Self> {
        if pt_a.as_ref().is_some_and(|a| a.role != Role::A) || pt_b.iter().any(|b| b.role != Role::B) {
            return Err(Error::invalid(
                "transmitter pre-transformations must have roles A and B",
            ));
        }
        let all: Vec<&PreTransform> = pt_a.iter().chain(pt_b.iter()).collect();
        // validates roles, ranges and disjointness
        JointGraph::new(&code, all.iter().copied())?;
        let positions = payload_positions(&code, &all);
        let mut rules: Vec<TargetRule> = all.iter().flat_map(|pt| pt.rules.iter().cloned()).collect();
        rules.sort_by_key(|r| r.target);
        let graph = JointGraph::new(&code, pt_b.iter())?;
        Ok(SimSetup {
            code,
            pt_a,
            pt_b,
            options: DecoderOptions::default(),
            positions,
            rules,
            graph,
        })
    }

    pub fn with_options(mut self, options: DecoderOptions) -> Self {
        self.options = options;
        self
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn pt_a(&self) -> Option<&PreTransform> {
        self.pt_a.as_ref()
    }

    pub fn pt_b(&self) -> &[PreTransform] {
        &self.pt_b
    }

    pub fn options(&self) -> DecoderOptions {
        self.options
    }

    /// Positions carrying the payload, ascending.
    pub fn payload_positions(&self) -> &[usize] {
        &self.positions
    }

    /// Payload dimension k.
    pub fn payload_len(&self) -> usize {
        self.positions.len()
    }

    /// k / N.
    pub fn rate(&self) -> f64 {
        self.payload_len() as f64 / self.code.block_len() as f64
    }

    /// Joint graph of the role-B rules, used by SC and SCL.
    pub fn graph(&self) -> &JointGraph {
        &self.graph
    }

    /// Encodes a payload of length `payload_len()` into (padded word, codeword).
    pub fn encode(&self, payload: &[Bit]) -> (Vec<Bit>, Codeword) {
        let mut u = vec![0; self.code.block_len()];
        for (&p, &b) in self.positions.iter().zip(payload) {
            u[p] = b;
        }
        for r in &self.rules {
            u[r.target] = r.evaluate(&u);
        }
        let mut x = u.clone();
        transform_in_place(&mut x);
        (u, Codeword(x))
    }

    /// Simulates one transmission: random payload, encoding, BPSK and noise.
    pub fn transmit<R: Rng + ?Sized>(&self, sigma2: f64, rng: &mut R) -> Frame {
        let payload: Vec<Bit> = (0..self.payload_len()).map(|_| rng.random::<bool>() as Bit).collect();
        let (u, x) = self.encode(&payload);
        let sigma = sigma2.sqrt();
        let scale = 2.0 / sigma2;
        let llr = LlrWord::with_clamp(
            x.bits().iter().map(|&b| {
                let n: f64 = rng.sample(StandardNormal);
                scale * (1.0 - 2.0 * b as f64 + sigma * n)
            }),
            DEFAULT_LLR_CLAMP,
        );
        Frame { payload, u, x, llr }
    }

    fn check_ensemble(&self, ens: &Ensemble) -> Result<()> {
        if ens.code() != &self.code || ens.pt_b() != self.pt_b.as_slice() || ens.pt_a() != self.pt_a.as_ref() {
            return Err(Error::invalid(
                "ensemble code, shared role-B rules or genie differ from the simulated setup",
            ));
        }
        Ok(())
    }
}

/// One simulated transmission.
#[derive(Clone, Debug)]
pub struct Frame {
    pub payload: Vec<Bit>,
    pub u: Vec<Bit>,
    pub x: Codeword,
    pub llr: LlrWord,
}

/// Decoder under test.
#[derive(Clone, Debug)]
pub enum DecoderSpec {
    Sc,
    Scl {
        list_size: usize,
    },
    Sced {
        ensemble: Ensemble,
        list_size: usize,
        pooling: Pooling,
    },
}

impl DecoderSpec {
    pub fn label(&self) -> String {
        match self {
            DecoderSpec::Sc => "SC".into(),
            DecoderSpec::Scl { list_size } => format!("SCL-{list_size}"),
            DecoderSpec::Sced {
                ensemble, list_size, ..
            } => format!("ScED-{}-SCL-{list_size}", ensemble.paths()),
        }
    }
}

/// A ready-to-run decoder for one [`SimSetup`].
#[derive(Clone, Debug)]
pub enum FrameDecoder {
    Sc(ScDecoder),
    Scl(SclDecoder),
    Sced(Box<ScedDecoder>),
}

impl FrameDecoder {
    pub fn new(setup: &SimSetup, spec: &DecoderSpec) -> Result<Self> {
        let n = setup.code.block_len();
        Ok(match spec {
            DecoderSpec::Sc => FrameDecoder::Sc(ScDecoder::new(n, setup.options)),
            DecoderSpec::Scl { list_size } => FrameDecoder::Scl(SclDecoder::new(n, *list_size, setup.options)?),
            DecoderSpec::Sced {
                ensemble,
                list_size,
                pooling,
            } => {
                setup.check_ensemble(ensemble)?;
                FrameDecoder::Sced(Box::new(ScedDecoder::new(
                    ensemble.clone(),
                    *list_size,
                    setup.options,
                    *pooling,
                )?))
            }
        })
    }

    pub fn decode(&mut self, setup: &SimSetup, llr: &LlrWord) -> DecodeResult {
        match self {
            FrameDecoder::Sc(d) => d.decode(&setup.graph, llr),
            FrameDecoder::Scl(d) => d.decode(&setup.graph, llr, setup.pt_a.as_ref()).0,
            FrameDecoder::Sced(d) => d.decode(llr),
        }
    }
}

/// When to stop simulating a grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

/// Thread pool with `workers` threads (at least one).
pub(crate) fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Simulates every grid point; point `p` uses stream major index `p`.
pub fn run_fer(
    setup: &SimSetup,
    decoder: &DecoderSpec,
    grid: &[f64],
    stop: StopCriteria,
    seed: u64,
    workers: usize,
) -> Result<Vec<FerPoint>> {
    if grid.is_empty() {
        return Err(Error::invalid("the Eb/N0 grid is empty"));
    }
    grid.iter()
        .enumerate()
        .map(|(p, &ebno)| run_fer_point(setup, decoder, ebno, p as u64, stop, seed, workers))
        .collect()
}

/// Simulates a single point with stream major index `point`.
pub fn run_fer_point(
    setup: &SimSetup,
    decoder: &DecoderSpec,
    ebno_db: f64,
    point: u64,
    stop: StopCriteria,
    seed: u64,
    workers: usize,
) -> Result<FerPoint> {
    if stop.max_frames == 0 {
        return Err(Error::invalid("max_frames must be at least 1"));
    }
    let sigma2 = ChannelConfig::new(ebno_db, setup.rate())?.sigma2();
    // fail early on a bad decoder spec
    FrameDecoder::new(setup, decoder)?;
    let pool = worker_pool(workers)?;

    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    let mut next_chunk = 0u64;
    let wave = workers.max(1) as u64;
    'outer: loop {
        let chunks: Vec<u64> = (next_chunk..next_chunk + wave)
            .take_while(|c| c * CHUNK_FRAMES < stop.max_frames)
            .collect();
        if chunks.is_empty() {
            break;
        }
        next_chunk += chunks.len() as u64;
        let results: Vec<Vec<u32>> = pool.install(|| {
            chunks
                .par_iter()
                .map(|&c| simulate_chunk(setup, decoder, sigma2, seed, point, c, stop.max_frames))
                .collect()
        });
        for errs in results.into_iter().flatten() {
            frames += 1;
            if errs > 0 {
                frame_errors += 1;
                bit_errors += errs as u64;
            }
            if frame_errors >= stop.min_frame_errors || frames >= stop.max_frames {
                break 'outer;
            }
        }
    }
    let k = setup.payload_len().max(1) as f64;
    Ok(FerPoint {
        ebno_db,
        frames,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / frames as f64,
        ber: bit_errors as f64 / (frames as f64 * k),
        censored: frame_errors < stop.min_frame_errors,
    })
}

/// Per-frame payload bit errors of one chunk; a frame error with zero
/// payload bit errors counts as one so that the frame is still flagged.
fn simulate_chunk(
    setup: &SimSetup,
    spec: &DecoderSpec,
    sigma2: f64,
    seed: u64,
    point: u64,
    chunk: u64,
    max_frames: u64,
) -> Vec<u32> {
    let mut dec = FrameDecoder::new(setup, spec).expect("checked by caller");
    let start = chunk * CHUNK_FRAMES;
    let end = (start + CHUNK_FRAMES).min(max_frames);
    (start..end)
        .map(|f| {
            let mut rng = rng::stream(seed, Domain::Frame, point, f);
            let frame = setup.transmit(sigma2, &mut rng);
            let out = dec.decode(setup, &frame.llr);
            if out.x_hat == frame.x {
                0
            } else {
                let errs = setup
                    .positions
                    .iter()
                    .filter(|&&p| out.u_p_hat.0[p] != frame.u[p])
                    .count() as u32;
                errs.max(1)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::Construction;
    use crate::pretransform::crc_to_pretransform;
    use crate::CrcPoly;

    #[test]
    fn modulation_and_llrs() {
        assert_eq!(modulate(&Codeword(vec![0, 1, 0])), vec![1.0, -1.0, 1.0]);
        assert_eq!(modulate(&Codeword(vec![0; 4])), vec![1.0; 4]);
        let llr = channel_llr(&[0.0, 1.0, -0.5], 1.0).unwrap();
        assert_eq!(llr.values(), &[0.0, 2.0, -1.0]);
        assert!(channel_llr(&[1.0], 0.0).is_err());
        assert_eq!(ChannelConfig::new(0.0, 0.5).unwrap().sigma2(), 1.0);
        assert!(ChannelConfig::new(0.0, 1.5).is_err());
        let x = Codeword(vec![1, 0, 1, 1]);
        let back: Vec<Bit> = modulate(&x).iter().map(|&s| (s < 0.0) as Bit).collect();
        assert_eq!(back, x.0);
    }

    #[test]
    fn noise_variance() {
        let sigma2: f64 = 0.37;
        let mut rng = rng::stream(11, Domain::Frame, 0, 0);
        let sigma: f64 = sigma2.sqrt();
        let draws = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let n: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
            s += n;
            s2 += n * n;
        }
        let mean = s / draws as f64;
        let var = s2 / draws as f64 - mean * mean;
        assert!((var / sigma2 - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        let code = CodeSpec::new(64, 38, Construction::Sequence5g).unwrap();
        let crc = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
        let setup = SimSetup::new(code, Some(crc), vec![]).unwrap();
        assert_eq!(setup.payload_len(), 32);
        let stop = StopCriteria {
            min_frame_errors: 10,
            max_frames: 600,
        };
        let pts = run_fer(&setup, &DecoderSpec::Scl { list_size: 4 }, &[30.0], stop, 1, 1).unwrap();
        assert_eq!(pts[0].frames, 600);
        assert_eq!(pts[0].frame_errors, 0);
        assert!(pts[0].censored);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let code = CodeSpec::new(64, 38, Construction::Sequence5g).unwrap();
        let crc = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
        let setup = SimSetup::new(code, Some(crc), vec![]).unwrap();
        let stop = StopCriteria {
            min_frame_errors: 40,
            max_frames: 5000,
        };
        let a = run_fer(&setup, &DecoderSpec::Scl { list_size: 2 }, &[1.0, 2.0], stop, 9, 1).unwrap();
        let b = run_fer(&setup, &DecoderSpec::Scl { list_size: 2 }, &[1.0, 2.0], stop, 9, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].frame_errors, 40);
    }

    #[test]
    fn transmitted_words_are_codewords() {
        let code = CodeSpec::new(64, 38, Construction::Sequence5g).unwrap();
        let crc = crc_to_pretransform(&CrcPoly::CRC6, &code).unwrap();
        let setup = SimSetup::new(code.clone(), Some(crc.clone()), vec![]).unwrap();
        let sub = crate::pretransform::SubcodeSpec::new(code, vec![crc]).unwrap();
        let mut rng = rng::stream(2, Domain::Frame, 0, 0);
        for _ in 0..100 {
            let f = setup.transmit(0.5, &mut rng);
            assert!(sub.contains(&f.x));
        }
    }
}
