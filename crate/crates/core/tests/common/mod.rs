//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the crate's quadrature or density code.
#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

pub const HBAR: f64 = 658.2119569;
pub const TAU_X: f64 = 769.0;
pub const JITTER: f64 = 577.0;

pub fn sigma_of(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Gated fidelity with Ψ⁺ and retained fraction for constant coherence `v`,
/// by brute-force Simpson integration over the true delay.
pub fn gated_fidelity_oracle(s: f64, jitter_fwhm: f64, v: f64, tau_g: f64, w: f64) -> (f64, f64) {
    let sigma = sigma_of(jitter_fwhm);
    let accept = |t: f64| {
        if sigma == 0.0 {
            1.0
        } else {
            normal_cdf((tau_g + w - t) / sigma) - normal_cdf((tau_g - t) / sigma)
        }
    };
    let (lo, hi) = if sigma == 0.0 {
        (tau_g.max(0.0), tau_g + w)
    } else {
        ((tau_g - 10.0 * sigma).max(0.0), tau_g + w + 10.0 * sigma)
    };
    let n = 200_000;
    let p = |t: f64| (-t / TAU_X).exp() / TAU_X * accept(t);
    let mass = simpson(p, lo, hi, n);
    let coh = simpson(|t| p(t) * (s * t / HBAR).cos(), lo, hi, n);
    (0.25 * (1.0 + v + 2.0 * v * coh / mass), mass)
}

/// Exponentially modified Gaussian CDF: `P(T + σZ < x)` with `T ~ Exp(mean τ_X)`.
pub fn emg_cdf(x: f64, sigma: f64) -> f64 {
    let lambda = 1.0 / TAU_X;
    normal_cdf(x / sigma)
        - (-lambda * x + 0.5 * (lambda * sigma).powi(2)).exp()
            * normal_cdf(x / sigma - lambda * sigma)
}

pub fn emg_gate_mass(tau_g: f64, w: f64, sigma: f64) -> f64 {
    emg_cdf(tau_g + w, sigma) - emg_cdf(tau_g, sigma)
}

pub fn phase_period(s: f64) -> f64 {
    TAU * HBAR / s.abs()
}
