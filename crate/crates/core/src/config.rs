//! Experiment configuration (TOML) and named code presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{SimSetup, StopCriteria};
use crate::construction::{esn0_from_ebn0, Construction};
use crate::crc::CrcPoly;
use crate::decode::DecoderOptions;
use crate::error::{Error, Result};
use crate::polar::CodeSpec;
use crate::pretransform::{crc_to_pretransform, PreTransform, TargetPolicy};
use crate::sced::Pooling;

/// Frozen-set construction as written in configs. The GA design point is
/// given as Eb/N0 and converted with the payload rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstructionChoice {
    Sequence5g,
    GaussianApprox { design_ebno_db: f64 },
}

/// A code: block length, payload length and optional CRC genie.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    pub block_len: usize,
    pub payload: usize,
    #[serde(default)]
    pub crc: Option<CrcPoly>,
    pub construction: ConstructionChoice,
}

impl CodeConfig {
    pub fn kappa(&self) -> usize {
        self.payload + self.crc.map_or(0, |c| c.degree())
    }

    /// The code and its role-A CRC pre-transformation.
    pub fn build(&self) -> Result<(CodeSpec, Option<PreTransform>)> {
        if self.payload == 0 {
            return Err(Error::invalid("payload length must be positive"));
        }
        let construction = match self.construction {
            ConstructionChoice::Sequence5g => Construction::Sequence5g,
            ConstructionChoice::GaussianApprox { design_ebno_db } => Construction::GaussianApprox {
                design_snr_db: esn0_from_ebn0(design_ebno_db, self.payload as f64 / self.block_len as f64),
            },
        };
        let code = CodeSpec::new(self.block_len, self.kappa(), construction)?;
        let pt_a = self.crc.map(|c| crc_to_pretransform(&c, &code)).transpose()?;
        Ok((code, pt_a))
    }

    pub fn setup(&self, pt_b: Vec<PreTransform>, options: DecoderOptions) -> Result<SimSetup> {
        let (code, pt_a) = self.build()?;
        Ok(SimSetup::new(code, pt_a, pt_b)?.with_options(options))
    }
}

/// Accepts a preset name or `N/K[/crc]` with the 5G sequence, e.g.
/// `64/32/crc6`.
impl FromStr for CodeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(p) = preset(s) {
            return Ok(p.code);
        }
        let parts: Vec<&str> = s.split('/').collect();
        let num = |w: &str| {
            w.parse::<usize>()
                .map_err(|_| Error::invalid(format!("unknown code '{s}'; use a preset name or N/K[/crc]")))
        };
        match parts.as_slice() {
            [n, k] | [n, k, _] => Ok(CodeConfig {
                block_len: num(n)?,
                payload: num(k)?,
                crc: parts.get(2).map(|c| c.parse()).transpose()?,
                construction: ConstructionChoice::Sequence5g,
            }),
            _ => Err(Error::invalid(format!(
                "unknown code '{s}'; use a preset name or N/K[/crc]"
            ))),
        }
    }
}

impl fmt::Display for CodeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C({},{})", self.block_len, self.payload)?;
        if let Some(c) = self.crc {
            write!(f, "+CRC{}", c.degree())?;
        }
        match self.construction {
            ConstructionChoice::Sequence5g => write!(f, " 5G"),
            ConstructionChoice::GaussianApprox { design_ebno_db } => write!(f, " GA@{design_ebno_db}dB"),
        }
    }
}

/// Named code with the Eb/N0 used for URP collection and a default grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub code: CodeConfig,
    pub urp_ebno_db: f64,
    pub grid: &'static [f64],
}

pub fn presets() -> Vec<Preset> {
    let g5 = |n, k, crc, urp, grid| Preset {
        name: "",
        code: CodeConfig {
            block_len: n,
            payload: k,
            crc: Some(crc),
            construction: ConstructionChoice::Sequence5g,
        },
        urp_ebno_db: urp,
        grid,
    };
    vec![
        Preset {
            name: "5g-64-32-crc6",
            ..g5(64, 32, CrcPoly::CRC6, 3.0, &[3.0, 3.5, 4.0])
        },
        Preset {
            name: "5g-256-64-crc11",
            ..g5(256, 64, CrcPoly::CRC11, 1.75, &[1.5, 2.0, 2.5])
        },
        Preset {
            name: "5g-256-128-crc11",
            ..g5(256, 128, CrcPoly::CRC11, 2.25, &[2.0, 2.5, 3.0])
        },
        Preset {
            name: "5g-256-192-crc11",
            ..g5(256, 192, CrcPoly::CRC11, 3.75, &[3.5, 4.0, 4.5])
        },
        Preset {
            name: "ga-256-128",
            code: CodeConfig {
                block_len: 256,
                payload: 128,
                crc: None,
                construction: ConstructionChoice::GaussianApprox { design_ebno_db: 2.5 },
            },
            urp_ebno_db: 2.5,
            grid: &[2.0, 2.5, 3.0],
        },
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    presets().into_iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = presets().iter().map(|p| p.name).collect();
        Error::invalid(format!("unknown preset '{name}' (known: {})", names.join(", ")))
    })
}

/// `code = "5g-64-32-crc6"` or an inline `[code]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeRef {
    Named(String),
    Inline(CodeConfig),
}

impl CodeRef {
    pub fn resolve(&self) -> Result<CodeConfig> {
        match self {
            CodeRef::Named(s) => s.parse(),
            CodeRef::Inline(c) => Ok(c.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Sc,
    #[default]
    Scl,
    Sced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub kind: DecoderKind,
    pub list_size: usize,
    /// Ensemble file, required for `sced`.
    pub ensemble: Option<PathBuf>,
    pub pooling: Pooling,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            kind: DecoderKind::Scl,
            list_size: 8,
            ensemble: None,
            pooling: Pooling::FullList,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Eb/N0 grid in dB; empty means the preset grid.
    pub ebno: Vec<f64>,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub out: Option<PathBuf>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            ebno: Vec::new(),
            min_frame_errors: 100,
            max_frames: 1_000_000,
            out: None,
        }
    }
}

impl SimulateConfig {
    pub fn stop(&self) -> StopCriteria {
        StopCriteria {
            min_frame_errors: self.min_frame_errors,
            max_frames: self.max_frames,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub candidates: usize,
    pub depth: usize,
    pub paths: usize,
    pub list_size: usize,
    /// Number of URPs to collect when no URP file is given.
    pub urps: usize,
    /// Defaults to the preset's URP Eb/N0.
    pub urp_ebno_db: Option<f64>,
    pub policy: TargetPolicy,
    pub out: Option<PathBuf>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            candidates: 3000,
            depth: 2,
            paths: 2,
            list_size: 8,
            urps: 1000,
            urp_ebno_db: None,
            policy: TargetPolicy::ReliabilityWeighted,
            out: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub urps: usize,
    pub urp_ebno_db: Option<f64>,
    pub batch_size: usize,
    pub samples_per_batch: usize,
    pub max_depth: usize,
    pub policy: TargetPolicy,
    pub out: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            urps: 200,
            urp_ebno_db: None,
            batch_size: 100,
            samples_per_batch: 1000,
            max_depth: 15,
            policy: TargetPolicy::ReliabilityWeighted,
            out: None,
        }
    }
}

/// Top-level TOML file. Every section is optional; command-line flags
/// override individual fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub workers: usize,
    pub code: Option<CodeRef>,
    /// File of role-B pre-transformations applied to every decoder.
    pub pt_b: Option<PathBuf>,
    pub options: DecoderOptions,
    pub decoder: DecoderConfig,
    pub simulate: SimulateConfig,
    pub design: DesignConfig,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            workers: 1,
            code: None,
            pt_b: None,
            options: DecoderOptions::default(),
            decoder: DecoderConfig::default(),
            simulate: SimulateConfig::default(),
            design: DesignConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::parse_line(line, e.message().to_owned())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Preset whose code equals the configured one.
    pub fn preset(&self) -> Option<Preset> {
        let code = self.code.as_ref()?.resolve().ok()?;
        presets().into_iter().find(|p| p.code == code)
    }
}
