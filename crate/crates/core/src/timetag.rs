//! Pre-paired time-tag files.
//!
//! Comma-separated, one header row `pair_id,tau_meas_ps,basis,outcome`.
//! `basis` is `R`, `D` or `C`; `outcome` is `co` or `cross`. Delays are
//! written with the shortest decimal representation that parses back to the
//! same `f64`, padded to at least three fractional digits.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gating::GateWindow;
use crate::montecarlo::{estimate, tally, Coincidence, CorrelationCounts, Estimates, PairEvent};
use crate::types::PolarizationBasis;

pub const HEADER: &str = "pair_id,tau_meas_ps,basis,outcome";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeTagRecord {
    pub pair_id: u64,
    pub tau_meas: f64,
    pub basis: PolarizationBasis,
    pub co: bool,
}

impl Coincidence for TimeTagRecord {
    fn tau_meas(&self) -> f64 {
        self.tau_meas
    }

    fn basis(&self) -> PolarizationBasis {
        self.basis
    }

    fn is_co(&self) -> bool {
        self.co
    }
}

impl From<&PairEvent> for TimeTagRecord {
    fn from(e: &PairEvent) -> Self {
        TimeTagRecord {
            pair_id: e.pair_id,
            tau_meas: e.tau_meas,
            basis: e.basis,
            co: e.outcome.is_co(),
        }
    }
}

/// Exact decimal form of `x` with at least three fractional digits.
pub fn format_delay(x: f64) -> String {
    let mut s = format!("{x}");
    match s.find('.') {
        Some(dot) => {
            let frac = s.len() - dot - 1;
            for _ in frac..3 {
                s.push('0');
            }
        }
        None => s.push_str(".000"),
    }
    s
}

pub fn write_records<'a, W, I>(mut out: W, records: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TimeTagRecord>,
{
    writeln!(out, "{HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            r.pair_id,
            format_delay(r.tau_meas),
            r.basis.code(),
            if r.co { "co" } else { "cross" }
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(out: W, events: &[PairEvent]) -> Result<()> {
    let records: Vec<TimeTagRecord> = events.iter().map(TimeTagRecord::from).collect();
    write_records(out, &records)
}

pub fn write_file(path: &Path, events: &[PairEvent]) -> Result<()> {
    write_events(BufWriter::new(File::create(path)?), events)
}

fn parse_line(line: &str, number: usize) -> Result<TimeTagRecord> {
    let err = |message: String| Error::Parse {
        line: number,
        message,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(err(format!("expected 4 fields, found {}", fields.len())));
    }
    let pair_id = fields[0]
        .parse::<u64>()
        .map_err(|e| err(format!("bad pair_id `{}`: {e}", fields[0])))?;
    let tau_meas = fields[1]
        .parse::<f64>()
        .map_err(|e| err(format!("bad tau_meas_ps `{}`: {e}", fields[1])))?;
    if !tau_meas.is_finite() {
        return Err(err(format!("tau_meas_ps `{}` is not finite", fields[1])));
    }
    let basis = PolarizationBasis::from_code(fields[2])
        .ok_or_else(|| err(format!("bad basis `{}` (expected R, D or C)", fields[2])))?;
    let co = match fields[3] {
        "co" => true,
        "cross" => false,
        other => return Err(err(format!("bad outcome `{other}` (expected co or cross)"))),
    };
    Ok(TimeTagRecord {
        pair_id,
        tau_meas,
        basis,
        co,
    })
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<TimeTagRecord>> {
    let mut lines = BufReader::new(input).lines();
    match lines.next() {
        Some(header) => {
            let header = header?;
            if header.trim() != HEADER {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header `{HEADER}`, found `{}`", header.trim()),
                });
            }
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut records: Vec<TimeTagRecord> = Vec::new();
    for (k, line) in lines.enumerate() {
        let number = k + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, number)?;
        if let Some(prev) = records.last() {
            if record.pair_id <= prev.pair_id {
                return Err(Error::Parse {
                    line: number,
                    message: format!(
                        "pair_id {} does not increase (previous {})",
                        record.pair_id, prev.pair_id
                    ),
                });
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_file(path: &Path) -> Result<Vec<TimeTagRecord>> {
    read_records(File::open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub gate: GateWindow,
    pub records: usize,
    pub counts: CorrelationCounts,
    pub estimates: Estimates,
}

pub fn analyze_records(records: &[TimeTagRecord], gate: GateWindow) -> Result<AnalysisReport> {
    gate.validate()?;
    let counts = tally(records, &gate);
    Ok(AnalysisReport {
        gate,
        records: records.len(),
        counts,
        estimates: estimate(&counts)?,
    })
}

pub fn analyze_timetags(path: &Path, gate: GateWindow) -> Result<AnalysisReport> {
    analyze_records(&read_file(path)?, gate)
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "gate [{}, {}) ps, {} records",
            self.gate.start(),
            self.gate.end(),
            self.records
        )?;
        writeln!(f, "basis,n_co,n_cross,C,sigma_C")?;
        for basis in PolarizationBasis::ALL {
            let c = self.counts.get(basis);
            let e = self.estimates.correlation(basis);
            writeln!(
                f,
                "{},{},{},{:.6},{:.6}",
                basis.code(),
                c.co,
                c.cross,
                e.value,
                e.sigma
            )?;
        }
        write!(
            f,
            "fidelity,{:.6},{:.6}",
            self.estimates.fidelity.value, self.estimates.fidelity.sigma
        )
    }
}
