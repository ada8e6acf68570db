use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};

use polar_sced::channel::{run_fer, ChannelConfig, DecoderSpec, FrameDecoder, SimSetup};
use polar_sced::config::{CodeConfig, CodeRef, DecoderKind, ExperimentConfig};
use polar_sced::decode::LlrWord;
use polar_sced::design::{analyze_depth, analyze_target_bits, collect_urps, design_ensemble};
use polar_sced::design::{AnalysisParams, DesignParams, Reference, UrpRecord};
use polar_sced::io;
use polar_sced::pretransform::{PreTransform, Role, TargetPolicy};
use polar_sced::rng::{stream, Domain};
use polar_sced::sced::{verify_coverage, CoverageMode, Ensemble, Pooling};
use polar_sced::Bit;

#[derive(Parser)]
#[command(
    name = "polar-sced",
    version,
    about = "Polar code decoding and subcode ensemble experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Preset name (e.g. 5g-64-32-crc6) or N/K[/crc].
    #[arg(long, global = true)]
    code: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the information set of a code.
    Construct,
    /// Encode a payload (random if --bits is absent).
    Encode {
        /// Payload as a 0/1 string.
        #[arg(long)]
        bits: Option<String>,
    },
    /// Decode one word of LLRs from a file, or one simulated frame.
    Decode {
        #[command(flatten)]
        dec: DecoderArgs,
        /// Whitespace-separated channel LLRs.
        #[arg(long, conflicts_with = "ebno")]
        llr: Option<PathBuf>,
        #[arg(long)]
        ebno: Option<f64>,
    },
    /// Collect frames on which a reference decoder fails.
    CollectUrps {
        #[arg(long, value_enum, default_value_t = RefKind::Scl)]
        reference: RefKind,
        #[arg(long)]
        list_size: Option<usize>,
        #[arg(long)]
        ebno: Option<f64>,
        /// Number of URPs to keep.
        #[arg(long)]
        urps: Option<usize>,
    },
    /// Greedily select an ensemble of role-C pre-transformations.
    DesignEnsemble {
        #[command(flatten)]
        urp: UrpSource,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        list_size: Option<usize>,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Simulate FER/BER over an Eb/N0 grid and write CSV.
    Simulate {
        #[command(flatten)]
        dec: DecoderArgs,
        /// Comma-separated Eb/N0 values in dB.
        #[arg(long, value_delimiter = ',')]
        ebno: Vec<f64>,
        #[arg(long)]
        min_errors: Option<u64>,
        #[arg(long)]
        max_frames: Option<u64>,
    },
    /// SC decodability of URPs under random pre-transformations.
    Analyze {
        #[arg(long, value_enum, default_value_t = AnalysisKind::Depth)]
        kind: AnalysisKind,
        #[command(flatten)]
        urp: UrpSource,
        /// Largest depth for the depth analysis.
        #[arg(long)]
        depth: Option<usize>,
        /// Pre-transformations sampled per batch.
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Check that an ensemble's subcodes cover the code.
    VerifyCoverage {
        #[arg(long)]
        ensemble: PathBuf,
        /// Sample this many codewords instead of enumerating all.
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Args)]
struct DecoderArgs {
    #[arg(long, value_enum)]
    decoder: Option<Kind>,
    #[arg(long)]
    list_size: Option<usize>,
    /// Ensemble file; implies --decoder sced.
    #[arg(long)]
    ensemble: Option<PathBuf>,
    /// Keep only each path's best candidate when pooling.
    #[arg(long)]
    best_only: bool,
}

#[derive(Args)]
struct UrpSource {
    /// Read URPs from this file instead of collecting them.
    #[arg(long, conflicts_with_all = ["urps", "ebno"])]
    urp_file: Option<PathBuf>,
    /// Number of URPs to collect.
    #[arg(long)]
    urps: Option<usize>,
    /// Eb/N0 for URP collection; defaults to the preset's value.
    #[arg(long)]
    ebno: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sc,
    Scl,
    Sced,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefKind {
    Sc,
    Scl,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisKind {
    Depth,
    Targets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Uniform,
    Weighted,
}

impl From<Policy> for TargetPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Uniform => TargetPolicy::UniformInfo,
            Policy::Weighted => TargetPolicy::ReliabilityWeighted,
        }
    }
}

/// Failure classes with distinct exit codes.
enum Failure {
    /// Bad flags or configuration: exit 2.
    Usage(anyhow::Error),
    /// An input file could not be read or parsed: exit 1.
    File(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<polar_sced::Error> for Failure {
    fn from(e: polar_sced::Error) -> Self {
        match e {
            polar_sced::Error::Io(_) => Failure::File(e.into()),
            e => Failure::Usage(e.into()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::File(anyhow!("cannot read {}: {e}", path.display())))
}

/// Reads and parses an input artifact; both steps fail with exit code 1.
fn load<T>(path: &Path, parse: impl FnOnce(&str) -> polar_sced::Result<T>) -> Outcome<T> {
    let text = read_text(path)?;
    parse(&text).map_err(|e| Failure::File(anyhow!("{}: {e}", path.display())))
}

fn write_out(path: &Path, bytes: &[u8]) -> Outcome<()> {
    fs::write(path, bytes).map_err(|e| Failure::File(anyhow!("cannot write {}: {e}", path.display())))
}

/// Resolved run context shared by all subcommands.
struct Ctx {
    cfg: ExperimentConfig,
    code: CodeConfig,
    setup: SimSetup,
    out: Option<PathBuf>,
}

impl Ctx {
    fn new(common: &Common) -> Outcome<Self> {
        let mut cfg = match &common.config {
            Some(p) => {
                let text = read_text(p)?;
                ExperimentConfig::from_toml(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(c) = &common.code {
            cfg.code = Some(CodeRef::Named(c.clone()));
        }
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        if let Some(w) = common.workers {
            cfg.workers = w;
        }
        let code = cfg
            .code
            .as_ref()
            .ok_or_else(|| anyhow!("no code given; use --code or a config file"))?
            .resolve()?;
        let pt_b = match &cfg.pt_b {
            Some(p) => load(p, io::read_pts)?,
            None => Vec::new(),
        };
        if pt_b.iter().any(|pt| pt.role != Role::B) {
            return Err(anyhow!("the pt_b file may only contain role-B sections").into());
        }
        let setup = code.setup(pt_b, cfg.options)?;
        Ok(Ctx {
            cfg,
            code,
            setup,
            out: common.out.clone(),
        })
    }

    fn log(&self, cmd: &str) {
        eprintln!(
            "polar-sced {cmd}: code {} seed {} workers {}",
            self.code, self.cfg.seed, self.cfg.workers
        );
        for line in self.cfg.to_toml().lines() {
            eprintln!("# {line}");
        }
    }

    fn default_urp_ebno(&self) -> Outcome<f64> {
        self.cfg
            .preset()
            .map(|p| p.urp_ebno_db)
            .ok_or_else(|| Failure::Usage(anyhow!("--ebno is required for codes without a preset")))
    }

    fn ensemble(&self, path: &Path) -> Outcome<(Ensemble, usize)> {
        load(path, |t| io::read_ensemble(t, self.setup.code()))
    }

    fn decoder(&self, args: &DecoderArgs) -> Outcome<DecoderSpec> {
        let d = &self.cfg.decoder;
        let ensemble = args.ensemble.clone().or_else(|| d.ensemble.clone());
        let kind = match (args.decoder, &args.ensemble) {
            (Some(k), _) => k,
            (None, Some(_)) => Kind::Sced,
            (None, None) => match d.kind {
                DecoderKind::Sc => Kind::Sc,
                DecoderKind::Scl => Kind::Scl,
                DecoderKind::Sced => Kind::Sced,
            },
        };
        let list_size = args.list_size.unwrap_or(d.list_size);
        Ok(match kind {
            Kind::Sc => DecoderSpec::Sc,
            Kind::Scl => DecoderSpec::Scl { list_size },
            Kind::Sced => {
                let path = ensemble.ok_or_else(|| anyhow!("--decoder sced needs --ensemble"))?;
                let (ensemble, file_l) = self.ensemble(&path)?;
                DecoderSpec::Sced {
                    ensemble,
                    list_size: args.list_size.unwrap_or(file_l),
                    pooling: if args.best_only { Pooling::BestOnly } else { d.pooling },
                }
            }
        })
    }

    fn urps(&self, src: &UrpSource, reference: Reference, default_count: usize) -> Outcome<Vec<UrpRecord>> {
        if let Some(p) = &src.urp_file {
            let file = fs::File::open(p).map_err(|e| Failure::File(anyhow!("cannot read {}: {e}", p.display())))?;
            let (header, urps) = io::read_urps(std::io::BufReader::new(file), self.setup.code())
                .map_err(|e| Failure::File(anyhow!("{}: {e}", p.display())))?;
            eprintln!(
                "loaded {} URPs-{} at {} dB from {}",
                urps.len(),
                header.reference.tag(),
                header.ebno_db,
                p.display()
            );
            return Ok(urps);
        }
        let ebno = match src.ebno {
            Some(e) => e,
            None => self.default_urp_ebno()?,
        };
        let count = src.urps.unwrap_or(default_count);
        let urps = collect_urps(&self.setup, reference, ebno, count, self.cfg.seed, self.cfg.workers)?;
        eprintln!("collected {} URPs-{} at {ebno} dB", urps.len(), reference.tag());
        Ok(urps)
    }

    /// Writes `bytes` to --out, or to stdout when no path is given.
    fn emit(&self, bytes: &[u8], summary: &str) -> Outcome<()> {
        match &self.out {
            Some(p) => {
                write_out(p, bytes)?;
                println!("{summary} -> {}", p.display());
            }
            None => print!("{}", String::from_utf8_lossy(bytes)),
        }
        Ok(())
    }
}

fn bit_string(bits: &[Bit]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

fn run(cli: Cli) -> Outcome<()> {
    let ctx = Ctx::new(&cli.common)?;
    let setup = &ctx.setup;
    let cfg = &ctx.cfg;
    match cli.cmd {
        Cmd::Construct => {
            ctx.log("construct");
            let code = setup.code();
            let info: Vec<String> = code.info_set().iter().map(|i| i.to_string()).collect();
            let line = format!(
                "{}: N={} kappa={} fingerprint={:016x} info=[{}]",
                ctx.code,
                code.block_len(),
                code.kappa(),
                code.fingerprint(),
                info.join(",")
            );
            match &ctx.out {
                Some(p) => {
                    let pts: Vec<&PreTransform> = setup.pt_a().into_iter().collect();
                    write_out(p, io::write_pts(&pts).as_bytes())?;
                    println!("{line} -> {}", p.display());
                }
                None => println!("{line}"),
            }
        }
        Cmd::Encode { bits } => {
            ctx.log("encode");
            let k = setup.payload_len();
            let payload: Vec<Bit> = match bits {
                Some(s) => {
                    let b: Vec<Bit> = s
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(0),
                            '1' => Ok(1),
                            _ => Err(anyhow!("--bits may only contain 0 and 1")),
                        })
                        .collect::<Result<_, _>>()?;
                    if b.len() != k {
                        return Err(anyhow!("--bits has {} bits, the code carries {k}", b.len()).into());
                    }
                    b
                }
                None => setup.transmit(1.0, &mut stream(cfg.seed, Domain::Frame, 0, 0)).payload,
            };
            let (_, x) = setup.encode(&payload);
            println!("payload {}", bit_string(&payload));
            println!("codeword {}", bit_string(x.bits()));
        }
        Cmd::Decode { dec, llr, ebno } => {
            ctx.log("decode");
            let spec = ctx.decoder(&dec)?;
            let (llr, tx) = match (llr, ebno) {
                (Some(p), _) => {
                    let values = load(&p, |t| {
                        t.split_whitespace()
                            .map(|w| {
                                w.parse::<f64>()
                                    .map_err(|_| polar_sced::Error::InvalidArgument(format!("bad LLR '{w}'")))
                            })
                            .collect::<polar_sced::Result<Vec<f64>>>()
                    })?;
                    if values.len() != setup.code().block_len() {
                        return Err(Failure::File(anyhow!(
                            "{}: expected {} LLRs, found {}",
                            p.display(),
                            setup.code().block_len(),
                            values.len()
                        )));
                    }
                    (LlrWord::new(values), None)
                }
                (None, Some(e)) => {
                    let sigma2 = ChannelConfig::new(e, setup.rate())?.sigma2();
                    let f = setup.transmit(sigma2, &mut stream(cfg.seed, Domain::Frame, 0, 0));
                    (f.llr, Some(f.x))
                }
                (None, None) => return Err(anyhow!("decode needs --llr or --ebno").into()),
            };
            let mut d = FrameDecoder::new(setup, &spec)?;
            let r = d.decode(setup, &llr);
            let verdict = match tx {
                Some(x) if x == r.x_hat => " correct",
                Some(_) => " error",
                None => "",
            };
            println!(
                "{} x_hat {} pm {:.4} in_subcode {}{verdict}",
                spec.label(),
                bit_string(r.x_hat.bits()),
                r.path_metric,
                r.in_subcode
            );
        }
        Cmd::CollectUrps {
            reference,
            list_size,
            ebno,
            urps,
        } => {
            ctx.log("collect-urps");
            let reference = match reference {
                RefKind::Sc => Reference::Sc,
                RefKind::Scl => Reference::Scl {
                    list_size: list_size.unwrap_or(cfg.decoder.list_size),
                },
            };
            let out = ctx.out.as_ref().ok_or_else(|| anyhow!("collect-urps needs --out"))?;
            let src = UrpSource {
                urp_file: None,
                urps: urps.or(Some(cfg.design.urps)),
                ebno,
            };
            let records = ctx.urps(&src, reference, cfg.design.urps)?;
            let mut buf = Vec::new();
            io::write_urps(&mut buf, setup.code(), reference, &records)?;
            write_out(out, &buf)?;
            let frames = records.last().map_or(0, |r| r.frame + 1);
            println!(
                "{} URPs-{} over {frames} frames -> {}",
                records.len(),
                reference.tag(),
                out.display()
            );
        }
        Cmd::DesignEnsemble {
            urp,
            candidates,
            depth,
            paths,
            list_size,
            policy,
        } => {
            ctx.log("design-ensemble");
            let d = &cfg.design;
            let params = DesignParams {
                candidates: candidates.unwrap_or(d.candidates),
                depth: depth.unwrap_or(d.depth),
                policy: policy.map_or(d.policy, Into::into),
                paths: paths.unwrap_or(d.paths),
                list_size: list_size.unwrap_or(d.list_size),
                seed: cfg.seed,
            };
            let reference = Reference::Scl {
                list_size: params.list_size,
            };
            let urps = ctx.urps(&urp, reference, d.urps)?;
            let design = design_ensemble(setup, &urps, &params, cfg.workers)?;
            let text = io::write_ensemble(&design.ensemble, params.list_size);
            let summary = format!(
                "ScED-{}-SCL-{}: {} families of depth {}, {}/{} URPs decoded (best single family {})",
                design.ensemble.paths(),
                params.list_size,
                design.selected.len(),
                design.family_depth,
                design.coverage,
                urps.len(),
                design.best_single
            );
            match &ctx.out {
                Some(_) => ctx.emit(text.as_bytes(), &summary)?,
                None => {
                    eprintln!("{summary}");
                    print!("{text}");
                }
            }
        }
        Cmd::Simulate {
            dec,
            ebno,
            min_errors,
            max_frames,
        } => {
            ctx.log("simulate");
            let spec = ctx.decoder(&dec)?;
            let s = &cfg.simulate;
            let grid = match (ebno.is_empty(), s.ebno.is_empty(), cfg.preset()) {
                (false, _, _) => ebno,
                (true, false, _) => s.ebno.clone(),
                (true, true, Some(p)) => p.grid.to_vec(),
                (true, true, None) => return Err(anyhow!("simulate needs --ebno").into()),
            };
            let mut stop = s.stop();
            stop.min_frame_errors = min_errors.unwrap_or(stop.min_frame_errors);
            stop.max_frames = max_frames.unwrap_or(stop.max_frames);
            let out = ctx.out.clone().or_else(|| s.out.clone());
            let points = run_fer(setup, &spec, &grid, stop, cfg.seed, cfg.workers)?;
            for p in &points {
                eprintln!(
                    "{} {} dB: FER {:.3e} BER {:.3e} ({} errors / {} frames{})",
                    spec.label(),
                    p.ebno_db,
                    p.fer,
                    p.ber,
                    p.frame_errors,
                    p.frames,
                    if p.censored { ", censored" } else { "" }
                );
            }
            let csv = io::write_fer_csv(&points);
            match out {
                Some(p) => {
                    write_out(&p, csv.as_bytes())?;
                    println!("{} points for {} -> {}", points.len(), spec.label(), p.display());
                }
                None => print!("{csv}"),
            }
        }
        Cmd::Analyze {
            kind,
            urp,
            depth,
            candidates,
            policy,
        } => {
            ctx.log("analyze");
            let a = &cfg.analysis;
            let params = AnalysisParams {
                batch_size: a.batch_size,
                samples_per_batch: candidates.unwrap_or(a.samples_per_batch),
                policy: policy.map_or(a.policy, Into::into),
                seed: cfg.seed,
            };
            let urps = ctx.urps(&urp, Reference::Sc, a.urps)?;
            let (head, rows) = match kind {
                AnalysisKind::Depth => (
                    "depth",
                    analyze_depth(setup, &urps, 1..=depth.unwrap_or(a.max_depth), &params, cfg.workers)?,
                ),
                AnalysisKind::Targets => ("target", analyze_target_bits(setup, &urps, &params, cfg.workers)?),
            };
            let mut csv = format!("{head},trials,decoded,ratio\n");
            for (k, t) in &rows {
                csv.push_str(&format!("{k},{},{},{:e}\n", t.trials, t.decoded, t.ratio()));
            }
            ctx.emit(
                csv.as_bytes(),
                &format!("{} {head} rows over {} URPs", rows.len(), urps.len()),
            )?;
        }
        Cmd::VerifyCoverage { ensemble, trials } => {
            ctx.log("verify-coverage");
            let (ens, _) = ctx.ensemble(&ensemble)?;
            let mode = match trials {
                Some(trials) => CoverageMode::Sampled { trials, seed: cfg.seed },
                None => CoverageMode::Exhaustive,
            };
            let c = verify_coverage(&ens, mode)?;
            match c.counterexample {
                None => println!("covered: {} members", ens.paths()),
                Some(x) => println!("not covered: codeword {} lies in no member", bit_string(x.bits())),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::File(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
