//! Spectra of truncated exponential decays and their linewidths.
//!
//! The field amplitude of a state with intensity lifetime `τ_X` decays as
//! `e^{−t/(2τ_X)}`. Keeping only emission up to `t_cut` gives
//!
//! ```text
//! P(E) = |∫₀^{t_cut} e^{−t/(2τ_X)} e^{iEt/ℏ} dt|² = |1 − e^{−a·t_cut}|² / |a|²,
//! a = 1/(2τ_X) − iE/ℏ
//! ```
//!
//! which is evaluated directly on the grid. For `t_cut = ∞` this is a
//! Lorentzian of FWHM `ℏ/τ_X`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::HBAR_UEV_PS;

pub const MIN_GRID_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub n_points: usize,
}

impl EnergyGrid {
    /// ±20 natural linewidths, 4096 points.
    pub fn natural(tau_x: f64) -> Self {
        let gamma = HBAR_UEV_PS / tau_x;
        EnergyGrid {
            e_min: -20.0 * gamma,
            e_max: 20.0 * gamma,
            n_points: 4096,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < MIN_GRID_POINTS {
            return Err(Error::invalid(
                "n_points",
                format!("{} < {MIN_GRID_POINTS}", self.n_points),
            ));
        }
        if !(self.e_min.is_finite() && self.e_max.is_finite() && self.e_max > self.e_min) {
            return Err(Error::invalid(
                "grid",
                format!(
                    "need finite e_min < e_max, got [{}, {}]",
                    self.e_min, self.e_max
                ),
            ));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.e_max - self.e_min) / (self.n_points - 1) as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.n_points)
            .map(|k| self.e_min + k as f64 * step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn peak(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }

    /// Copy scaled so the largest sample is 1.
    pub fn normalized(&self) -> Spectrum {
        let peak = self.peak();
        let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        Spectrum {
            energies: self.energies.clone(),
            power: self.power.iter().map(|p| p * scale).collect(),
        }
    }
}

/// `e^z − 1` without cancellation for small `|z|`.
fn exp_m1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em1 = z.re.exp_m1();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// Power spectrum of a decay with intensity lifetime `tau_x` truncated at
/// `t_cut` (pass `f64::INFINITY` for no truncation).
pub fn truncated_decay_spectrum(tau_x: f64, t_cut: f64, grid: &EnergyGrid) -> Result<Spectrum> {
    if !(tau_x > 0.0 && tau_x.is_finite()) {
        return Err(Error::invalid(
            "tau_X",
            format!("{tau_x} must be finite and > 0"),
        ));
    }
    if !(t_cut > 0.0) {
        return Err(Error::invalid("t_cut", format!("{t_cut} must be > 0")));
    }
    grid.validate()?;
    let energies = grid.energies();
    let power = energies
        .iter()
        .map(|&e| {
            let a = Complex64::new(0.5 / tau_x, -e / HBAR_UEV_PS);
            if t_cut.is_infinite() {
                1.0 / a.norm_sqr()
            } else {
                // 1 − e^{−aT} = −expm1(−aT)
                exp_m1(-a * t_cut).norm_sqr() / a.norm_sqr()
            }
        })
        .collect();
    Ok(Spectrum { energies, power })
}

/// Full width at half maximum, linearly interpolating the half crossings.
pub fn fwhm(spectrum: &Spectrum) -> Result<f64> {
    let p = &spectrum.power;
    let e = &spectrum.energies;
    let n = p.len();
    if n < 3 || e.len() != n {
        return Err(Error::NoInteriorPeak);
    }
    let (peak_idx, peak) =
        p.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    if peak_idx == 0 || peak_idx == n - 1 || !(peak > 0.0) {
        return Err(Error::NoInteriorPeak);
    }
    let half = 0.5 * peak;
    let cross = |i: usize, j: usize| e[i] + (half - p[i]) * (e[j] - e[i]) / (p[j] - p[i]);

    let mut i = peak_idx;
    while p[i] >= half {
        if i == 0 {
            return Err(Error::GridTooNarrow { bound: e[0] });
        }
        i -= 1;
    }
    let left = cross(i, i + 1);

    let mut j = peak_idx;
    while p[j] >= half {
        if j == n - 1 {
            return Err(Error::GridTooNarrow { bound: e[n - 1] });
        }
        j += 1;
    }
    let right = cross(j - 1, j);
    Ok(right - left)
}

/// Linewidth of the truncated decay on a grid wide enough to contain both
/// half crossings (odd point count, so `E = 0` is sampled).
pub fn truncated_linewidth(tau_x: f64, t_cut: f64) -> Result<f64> {
    let natural = HBAR_UEV_PS / tau_x;
    let truncation = if t_cut.is_finite() {
        6.0 * HBAR_UEV_PS / t_cut
    } else {
        0.0
    };
    let half_width = 4.0 * (natural + truncation);
    let grid = EnergyGrid {
        e_min: -half_width,
        e_max: half_width,
        n_points: 16_385,
    };
    fwhm(&truncated_decay_spectrum(tau_x, t_cut, &grid)?)
}

/// Truncation time at which the linewidth equals `target` (µeV), found by
/// bisection on the monotone linewidth curve. `None` when even an untruncated
/// decay is broader than `target`.
pub fn truncation_for_linewidth(tau_x: f64, target: f64) -> Result<Option<f64>> {
    if truncated_linewidth(tau_x, f64::INFINITY)? >= target {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1e-3_f64, tau_x);
    while truncated_linewidth(tau_x, hi)? > target {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if truncated_linewidth(tau_x, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-10 {
            break;
        }
    }
    Ok(Some((lo * hi).sqrt()))
}
