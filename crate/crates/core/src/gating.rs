//! Post-selection windows on the measured XX→X delay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::types::{SourceModel, HBAR_UEV_PS};

/// Upper truncation of semi-infinite delay integrals, in units of `τ_X`.
/// The exponential tail beyond it carries a relative mass of `1e-12`.
pub(crate) fn tail_cutoff_lifetimes() -> f64 {
    1e12_f64.ln()
}

/// Gaussian tails beyond this many standard deviations are dropped.
const JITTER_REACH_SIGMAS: f64 = 12.0;

/// Half-open acceptance interval `[tau_g, tau_g + w)` on measured delay, ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateWindow {
    pub tau_g: f64,
    pub w: f64,
}

impl GateWindow {
    pub fn new(tau_g: f64, w: f64) -> Result<Self> {
        let gate = GateWindow { tau_g, w };
        gate.validate()?;
        Ok(gate)
    }

    /// `(−∞, ∞)`: accepts every event.
    pub fn unbounded() -> Self {
        GateWindow {
            tau_g: f64::NEG_INFINITY,
            w: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0) {
            return Err(Error::invalid(
                "w",
                format!("gate width {} must be > 0", self.w),
            ));
        }
        if self.tau_g.is_nan() || self.tau_g == f64::INFINITY {
            return Err(Error::invalid(
                "tau_g",
                format!("gate start {} is not usable", self.tau_g),
            ));
        }
        Ok(())
    }

    pub fn start(&self) -> f64 {
        self.tau_g
    }

    pub fn end(&self) -> f64 {
        if self.w.is_infinite() {
            f64::INFINITY
        } else {
            self.tau_g + self.w
        }
    }

    pub fn contains(&self, tau_meas: f64) -> bool {
        tau_meas >= self.tau_g && tau_meas < self.end()
    }

    /// Probability that a pair with true delay `tau_true` is measured inside
    /// the window, given Gaussian timing jitter of standard deviation `sigma`.
    pub fn acceptance(&self, tau_true: f64, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return if self.contains(tau_true) { 1.0 } else { 0.0 };
        }
        let a = (self.start() - tau_true) / sigma;
        let b = (self.end() - tau_true) / sigma;
        normal_interval(a, b)
    }

    /// Partition of the true-delay axis (τ ≥ 0) outside of which the
    /// acceptance is negligible. Empty when the window cannot be reached.
    pub(crate) fn true_delay_partition(&self, model: &SourceModel) -> Vec<f64> {
        let tau_x = model.exciton_lifetime_tau_x;
        let sigma = model.jitter_sigma();
        let reach = JITTER_REACH_SIGMAS * sigma;
        let lo = (self.start() - reach).max(0.0);
        let hi = if self.end().is_finite() {
            self.end() + reach
        } else {
            self.start().max(0.0) + tau_x * tail_cutoff_lifetimes() + reach
        };
        if !(hi > lo) {
            return Vec::new();
        }
        let mut points = vec![lo];
        for edge in [self.start(), self.end()] {
            if sigma > 0.0 && edge > lo && edge < hi {
                points.push(edge);
            }
        }
        points.push(hi);

        // Seed the adaptive quadrature with pieces no longer than a quarter
        // of the phase period or one lifetime.
        let period = model.phase_period();
        let piece = (0.25 * period).min(tau_x);
        let mut out = vec![points[0]];
        for pair in points.windows(2) {
            let n = ((pair[1] - pair[0]) / piece).ceil().clamp(1.0, 256.0) as usize;
            let step = (pair[1] - pair[0]) / n as f64;
            for k in 1..n {
                out.push(pair[0] + k as f64 * step);
            }
            out.push(pair[1]);
        }
        out
    }
}

/// `Φ(b) − Φ(a)` for the standard normal CDF, accurate in both tails.
fn normal_interval(a: f64, b: f64) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let p = if a >= 0.0 {
        0.5 * (libm::erfc(a * r) - libm::erfc(b * r))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * r) - libm::erfc(-a * r))
    } else {
        1.0 - 0.5 * libm::erfc(b * r) - 0.5 * libm::erfc(-a * r)
    };
    p.max(0.0)
}

/// Ordered, pairwise-disjoint collection of windows applied together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GateWindow>", into = "Vec<GateWindow>")]
pub struct GateSet {
    windows: Vec<GateWindow>,
}

impl GateSet {
    pub fn new(mut windows: Vec<GateWindow>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::invalid("windows", "gate set is empty"));
        }
        for w in &windows {
            w.validate()?;
        }
        windows.sort_by(|a, b| a.tau_g.total_cmp(&b.tau_g));
        for pair in windows.windows(2) {
            if pair[0].end() > pair[1].start() {
                return Err(Error::invalid(
                    "windows",
                    format!(
                        "windows starting at {} and {} overlap",
                        pair[0].start(),
                        pair[1].start()
                    ),
                ));
            }
        }
        Ok(GateSet { windows })
    }

    pub fn single(window: GateWindow) -> Self {
        GateSet {
            windows: vec![window],
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

impl TryFrom<Vec<GateWindow>> for GateSet {
    type Error = Error;

    fn try_from(windows: Vec<GateWindow>) -> Result<Self> {
        GateSet::new(windows)
    }
}

impl From<GateSet> for Vec<GateWindow> {
    fn from(set: GateSet) -> Self {
        set.windows
    }
}

/// Anything that selects coincidences by measured delay: a single window or a set.
pub trait Gate {
    fn windows(&self) -> &[GateWindow];

    fn accepts(&self, tau_meas: f64) -> bool {
        self.windows().iter().any(|w| w.contains(tau_meas))
    }

    /// Start of the earliest window.
    fn start(&self) -> f64 {
        self.windows()[0].start()
    }
}

impl Gate for GateWindow {
    fn windows(&self) -> &[GateWindow] {
        std::slice::from_ref(self)
    }

    fn accepts(&self, tau_meas: f64) -> bool {
        self.contains(tau_meas)
    }
}

impl Gate for GateSet {
    fn windows(&self) -> &[GateWindow] {
        &self.windows
    }
}

/// `count` windows of width `w` whose starts are spaced by the phase period
/// `2πℏ/|S|`, so every window opens at the same phase.
pub fn periodic_gates(tau_g: f64, w: f64, splitting_s: f64, count: usize) -> Result<GateSet> {
    if count == 0 {
        return Err(Error::invalid("count", "need at least one window"));
    }
    if splitting_s == 0.0 || !splitting_s.is_finite() {
        return Err(Error::invalid(
            "splitting_S",
            "periodic gates need a finite non-zero splitting",
        ));
    }
    let period = std::f64::consts::TAU * HBAR_UEV_PS / splitting_s.abs();
    if !(w < period) {
        return Err(Error::invalid(
            "w",
            format!("width {w} ps must be below the phase period {period} ps"),
        ));
    }
    let windows = (0..count)
        .map(|j| GateWindow::new(tau_g + j as f64 * period, w))
        .collect::<Result<Vec<_>>>()?;
    GateSet::new(windows)
}

/// Fraction of all coincidences whose measured delay falls inside the gate.
pub fn retained_fraction<G: Gate + ?Sized>(gate: &G, model: &SourceModel) -> Result<f64> {
    model.validate()?;
    let tau_x = model.exciton_lifetime_tau_x;
    let sigma = model.jitter_sigma();
    let mut total = 0.0;
    for window in gate.windows() {
        window.validate()?;
        if sigma == 0.0 {
            let lo = window.start().max(0.0);
            let hi = window.end();
            if hi > lo {
                total += (-lo / tau_x).exp() - (-hi / tau_x).exp();
            }
        } else {
            let partition = window.true_delay_partition(model);
            if partition.is_empty() {
                continue;
            }
            let r = integrate(
                |t| [(-t / tau_x).exp() / tau_x * window.acceptance(t, sigma)],
                &partition,
                QuadOptions {
                    abs_tol: 1e-15,
                    ..QuadOptions::default()
                },
            )?;
            total += r.value[0];
        }
    }
    Ok(total.clamp(0.0, 1.0))
}
