//! Scenario configuration and the runner behind the command-line tool.
//!
//! Configurations are TOML. Every table rejects unknown keys and all values
//! are validated before any computation starts.
//!
//! ```toml
//! output = "out/fig2"
//! engine = "analytic"                  # or [engine.montecarlo] n_pairs = .., seed = ..
//!
//! [source]
//! splitting_S = 2.5                    # µeV
//! exciton_lifetime_tau_X = 769.0       # ps
//! jitter_fwhm = 577.0                  # ps
//! coherence = { constant = { v = 0.78 } }
//!
//! [scan.gate_width_scan]
//! tau_g = 0.0
//! widths = [49.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 2000.0]
//! ```
//!
//! Output files, all comma-separated with one header row:
//! - `<output>_gate_width_scan.csv`: `w_ps,fidelity,sigma,retained_fraction`
//! - `<output>_gate_delay_scan.csv`: `tau_g_ps,fidelity,sigma`
//! - `<output>_spectrum_tcut<t>.csv`: `energy_uev,power_normalized`, plus
//!   `<output>_spectrum_fwhm.csv`: `t_cut_ps,fwhm_uev`
//! - `<output>_timetags.csv`: see [`crate::timetag`]
//! - `<output>_manifest.toml`: the resolved configuration at full precision.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::{fidelity_curve, CurvePoint};
use crate::error::{Error, Result};
use crate::gating::GateWindow;
use crate::montecarlo::{scan, simulate_pairs, BasisPlan};
use crate::spectral::{fwhm, truncated_decay_spectrum, EnergyGrid};
use crate::timetag::write_events;
use crate::types::{BellTarget, SourceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub source: SourceModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub engine: EngineConfig,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanConfig {
    GateWidthScan {
        tau_g: f64,
        widths: Vec<f64>,
    },
    GateDelayScan {
        delays: Vec<f64>,
        w: f64,
    },
    Spectrum {
        t_cut: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<EnergyGrid>,
    },
}

impl ScanConfig {
    fn name(&self) -> &'static str {
        match self {
            ScanConfig::GateWidthScan { .. } => "gate_width_scan",
            ScanConfig::GateDelayScan { .. } => "gate_delay_scan",
            ScanConfig::Spectrum { .. } => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineConfig {
    #[default]
    Analytic,
    Montecarlo {
        n_pairs: u64,
        #[serde(with = "seed_repr")]
        seed: u64,
    },
}

/// TOML integers are signed 64-bit; larger seeds round-trip as strings.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| de::Error::custom("seed must be >= 0")),
            Repr::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// Which subcommand is being run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ScanWidth,
    ScanDelay,
    Spectrum,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ScanWidth => "scan-width",
            Command::ScanDelay => "scan-delay",
            Command::Spectrum => "spectrum",
            Command::Simulate => "simulate",
        }
    }

    fn expected_scan(self) -> Option<&'static str> {
        match self {
            Command::ScanWidth => Some("gate_width_scan"),
            Command::ScanDelay => Some("gate_delay_scan"),
            Command::Spectrum => Some("spectrum"),
            Command::Simulate => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Analytic,
    MonteCarlo,
}

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub pairs: Option<u64>,
    pub output: Option<String>,
    pub engine: Option<EngineChoice>,
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    toml::from_str(text).map_err(|e| config_error("<config>", e.to_string().trim().to_string()))
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

impl ScenarioConfig {
    pub fn apply(mut self, overrides: &Overrides) -> Result<Self> {
        if let Some(out) = &overrides.output {
            self.output = out.clone();
        }
        let wants_mc = match overrides.engine {
            Some(EngineChoice::MonteCarlo) => true,
            Some(EngineChoice::Analytic) => false,
            None => matches!(self.engine, EngineConfig::Montecarlo { .. }),
        };
        self.engine = if wants_mc {
            let (cfg_pairs, cfg_seed) = match self.engine {
                EngineConfig::Montecarlo { n_pairs, seed } => (Some(n_pairs), Some(seed)),
                EngineConfig::Analytic => (None, None),
            };
            let n_pairs = overrides.pairs.or(cfg_pairs).ok_or_else(|| {
                config_error(
                    "engine.montecarlo.n_pairs",
                    "Monte-Carlo engine needs a pair count (--pairs)",
                )
            })?;
            let seed = overrides.seed.or(cfg_seed).ok_or_else(|| {
                config_error(
                    "engine.montecarlo.seed",
                    "Monte-Carlo engine needs a seed (--seed)",
                )
            })?;
            EngineConfig::Montecarlo { n_pairs, seed }
        } else {
            EngineConfig::Analytic
        };
        Ok(self)
    }

    /// Checks every parameter; nothing is computed before this passes.
    pub fn validate(&self, command: Command) -> Result<()> {
        self.source.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                config_error(format!("source.{name}"), reason)
            }
            other => other,
        })?;
        if self.output.trim().is_empty() {
            return Err(config_error("output", "output prefix is empty"));
        }
        if let EngineConfig::Montecarlo { n_pairs, .. } = self.engine {
            if n_pairs == 0 {
                return Err(config_error("engine.montecarlo.n_pairs", "must be > 0"));
            }
        }
        match (command.expected_scan(), &self.scan) {
            (None, _) => {
                if !matches!(self.engine, EngineConfig::Montecarlo { .. }) {
                    return Err(config_error(
                        "engine",
                        "simulate needs the Monte-Carlo engine (n_pairs and seed)",
                    ));
                }
            }
            (Some(expected), None) => {
                return Err(config_error(
                    "scan",
                    format!("missing [scan.{expected}] section"),
                ));
            }
            (Some(expected), Some(scan)) if scan.name() != expected => {
                return Err(config_error(
                    "scan",
                    format!(
                        "{} expects [scan.{expected}], found [scan.{}]",
                        command.name(),
                        scan.name()
                    ),
                ));
            }
            (Some(_), Some(scan)) => validate_scan(scan)?,
        }
        Ok(())
    }
}

fn validate_scan(scan: &ScanConfig) -> Result<()> {
    let prefix = format!("scan.{}", scan.name());
    let nonempty = |key: &str, list: &[f64]| {
        if list.is_empty() {
            Err(config_error(format!("{prefix}.{key}"), "list is empty"))
        } else {
            Ok(())
        }
    };
    match scan {
        ScanConfig::GateWidthScan { tau_g, widths } => {
            if !tau_g.is_finite() {
                return Err(config_error(format!("{prefix}.tau_g"), "must be finite"));
            }
            nonempty("widths", widths)?;
            for (i, w) in widths.iter().enumerate() {
                if !(*w > 0.0) {
                    return Err(config_error(
                        format!("{prefix}.widths[{i}]"),
                        format!("{w} must be > 0"),
                    ));
                }
            }
        }
        ScanConfig::GateDelayScan { delays, w } => {
            nonempty("delays", delays)?;
            for (i, d) in delays.iter().enumerate() {
                if !d.is_finite() {
                    return Err(config_error(
                        format!("{prefix}.delays[{i}]"),
                        "must be finite",
                    ));
                }
            }
            if !(*w > 0.0) {
                return Err(config_error(
                    format!("{prefix}.w"),
                    format!("{w} must be > 0"),
                ));
            }
        }
        ScanConfig::Spectrum { t_cut, grid } => {
            nonempty("t_cut", t_cut)?;
            for (i, t) in t_cut.iter().enumerate() {
                if !(*t > 0.0) {
                    return Err(config_error(
                        format!("{prefix}.t_cut[{i}]"),
                        format!("{t} must be > 0"),
                    ));
                }
            }
            if let Some(grid) = grid {
                grid.validate()
                    .map_err(|e| config_error(format!("{prefix}.grid"), e.to_string()))?;
            }
        }
    }
    Ok(())
}

/// `%g`-style rendering with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    }
}

fn row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_sig6(*v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Result files of a run, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a ScenarioConfig,
}

fn output_path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_{suffix}"))
}

fn width_scan(config: &ScenarioConfig, tau_g: f64, widths: &[f64]) -> Result<String> {
    let gates = widths
        .iter()
        .map(|&w| GateWindow::new(tau_g, w))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("w_ps,fidelity,sigma,retained_fraction\n");
    match config.engine {
        EngineConfig::Analytic => {
            let curve = fidelity_curve(&gates, &config.source, BellTarget::PsiPlus)?;
            for (w, p) in widths.iter().zip(curve) {
                writeln!(out, "{}", row(&[*w, p.fidelity, 0.0, p.retained_fraction])).unwrap();
            }
        }
        EngineConfig::Montecarlo { n_pairs, seed } => {
            let points = scan(
                &config.source,
                &gates,
                &BasisPlan::equal_thirds(n_pairs),
                seed,
            )?;
            for (w, p) in widths.iter().zip(points) {
                let f = p.estimates.fidelity;
                writeln!(out, "{}", row(&[*w, f.value, f.sigma, p.retained_fraction])).unwrap();
            }
        }
    }
    Ok(out)
}

fn delay_scan(config: &ScenarioConfig, delays: &[f64], w: f64) -> Result<String> {
    let gates = delays
        .iter()
        .map(|&d| GateWindow::new(d, w))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("tau_g_ps,fidelity,sigma\n");
    match config.engine {
        EngineConfig::Analytic => {
            let curve: Vec<CurvePoint> =
                fidelity_curve(&gates, &config.source, BellTarget::PsiPlus)?;
            for p in curve {
                writeln!(out, "{}", row(&[p.tau_g, p.fidelity, 0.0])).unwrap();
            }
        }
        EngineConfig::Montecarlo { n_pairs, seed } => {
            let points = scan(
                &config.source,
                &gates,
                &BasisPlan::equal_thirds(n_pairs),
                seed,
            )?;
            for p in points {
                let f = p.estimates.fidelity;
                writeln!(out, "{}", row(&[p.gate.tau_g, f.value, f.sigma])).unwrap();
            }
        }
    }
    Ok(out)
}

fn tcut_label(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        format_sig6(t)
    }
}

fn spectra(
    config: &ScenarioConfig,
    t_cuts: &[f64],
    grid: Option<EnergyGrid>,
) -> Result<Vec<(String, String)>> {
    let tau_x = config.source.exciton_lifetime_tau_x;
    let grid = grid.unwrap_or_else(|| EnergyGrid::natural(tau_x));
    let mut files = Vec::new();
    let mut summary = String::from("t_cut_ps,fwhm_uev\n");
    for &t in t_cuts {
        let spectrum = truncated_decay_spectrum(tau_x, t, &grid)?;
        let width = fwhm(&spectrum)?;
        writeln!(summary, "{},{}", tcut_label(t), format_sig6(width)).unwrap();
        let normalized = spectrum.normalized();
        let mut body = String::from("energy_uev,power_normalized\n");
        for (e, p) in normalized.energies.iter().zip(&normalized.power) {
            writeln!(body, "{}", row(&[*e, *p])).unwrap();
        }
        files.push((format!("spectrum_tcut{}.csv", tcut_label(t)), body));
    }
    files.push(("spectrum_fwhm.csv".into(), summary));
    Ok(files)
}

fn timetags(config: &ScenarioConfig) -> Result<String> {
    let EngineConfig::Montecarlo { n_pairs, seed } = config.engine else {
        return Err(config_error(
            "engine",
            "simulate needs the Monte-Carlo engine",
        ));
    };
    let events = simulate_pairs(&config.source, &BasisPlan::equal_thirds(n_pairs), seed)?;
    let mut buf = Vec::new();
    write_events(&mut buf, &events)?;
    Ok(String::from_utf8(buf).expect("time tags are ASCII"))
}

/// Runs one subcommand. All results are computed before anything is written;
/// if writing fails part-way, files already written by this run are removed.
pub fn run_scenario(command: Command, config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate(command)?;

    let mut contents: Vec<(String, String)> = match (command, &config.scan) {
        (Command::Simulate, _) => vec![("timetags.csv".into(), timetags(config)?)],
        (_, Some(ScanConfig::GateWidthScan { tau_g, widths })) => {
            vec![(
                "gate_width_scan.csv".into(),
                width_scan(config, *tau_g, widths)?,
            )]
        }
        (_, Some(ScanConfig::GateDelayScan { delays, w })) => {
            vec![(
                "gate_delay_scan.csv".into(),
                delay_scan(config, delays, *w)?,
            )]
        }
        (_, Some(ScanConfig::Spectrum { t_cut, grid })) => spectra(config, t_cut, *grid)?,
        (_, None) => unreachable!("validated above"),
    };
    let manifest = Manifest {
        command: command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config,
    };
    let manifest =
        toml::to_string(&manifest).map_err(|e| config_error("manifest", e.to_string()))?;
    contents.push(("manifest.toml".into(), manifest));

    let mut written = Vec::new();
    for (suffix, body) in contents {
        let path = output_path(&config.output, &suffix);
        let result = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or(Ok(()), fs::create_dir_all)
            .and_then(|_| fs::write(&path, body));
        if let Err(e) = result {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(RunOutput { files: written })
}
