//! Least-squares sinusoid fits for extracting the period and amplitude of
//! fidelity oscillations in delay scans.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub period: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// Phase `φ` in `offset + amplitude·cos(2πx/period − φ)`.
    pub phase: f64,
    pub residual_sum_squares: f64,
}

/// Linear least squares for `y ≈ a + b·cos(ωx) + c·sin(ωx)` at a fixed period.
pub fn fit_at_period(xs: &[f64], ys: &[f64], period: f64) -> Result<SinusoidFit> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::invalid("samples", "need at least 4 paired samples"));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid(
            "period",
            format!("{period} must be finite and > 0"),
        ));
    }
    let omega = std::f64::consts::TAU / period;
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let (s, c) = (omega * x).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * y;
    }
    let coef = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::invalid("samples", "degenerate sample positions"))?;
    let rss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let (s, c) = (omega * x).sin_cos();
            let r = y - (coef[0] + coef[1] * c + coef[2] * s);
            r * r
        })
        .sum();
    Ok(SinusoidFit {
        period,
        offset: coef[0],
        amplitude: coef[1].hypot(coef[2]),
        phase: coef[2].atan2(coef[1]),
        residual_sum_squares: rss,
    })
}

/// Best-fitting sinusoid with period searched in `[min_period, max_period]`:
/// a log-spaced grid search followed by golden-section refinement.
pub fn fit_sinusoid(
    xs: &[f64],
    ys: &[f64],
    min_period: f64,
    max_period: f64,
) -> Result<SinusoidFit> {
    if !(min_period > 0.0 && max_period > min_period) {
        return Err(Error::invalid("period", "need 0 < min_period < max_period"));
    }
    const GRID: usize = 2000;
    let ratio = (max_period / min_period).ln();
    let at = |k: usize| min_period * (ratio * k as f64 / (GRID - 1) as f64).exp();
    let mut best = (0, f64::INFINITY);
    for k in 0..GRID {
        let rss = fit_at_period(xs, ys, at(k))?.residual_sum_squares;
        if rss < best.1 {
            best = (k, rss);
        }
    }
    let mut lo = at(best.0.saturating_sub(1));
    let mut hi = at((best.0 + 1).min(GRID - 1));
    let rss = |p: f64| fit_at_period(xs, ys, p).map(|f| f.residual_sum_squares);
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (rss(a)?, rss(b)?);
    for _ in 0..100 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = rss(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = rss(b)?;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    fit_at_period(xs, ys, 0.5 * (lo + hi))
}
