//! The time-dependent biphoton density matrix and quantities derived from it.
//!
//! `ρ(τ)` has populations `(1±v)/4` and a single coherence
//! `⟨HH|ρ|VV⟩ = (v/2)·e^{−iSτ/ℏ}`, where `v(τ)` is the coherent fraction of
//! the [`CoherenceModel`](crate::types::CoherenceModel). Gate-averaged states
//! are intensity-weighted mixtures of `ρ(τ)` and keep the same X shape, so
//! they are described by two moments: the mean coherent fraction and the
//! mean complex coherence.

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gating::{retained_fraction, tail_cutoff_lifetimes, Gate};
use crate::quadrature::{integrate, QuadOptions};
use crate::types::{
    analyzer_states, bell_vector, kron2, BellTarget, PolarizationBasis, SourceModel,
    TwoPhotonDensityMatrix,
};

/// Tolerance on the imaginary part of an expectation value of a Hermitian matrix.
const IMAGINARY_RESIDUE: f64 = 1e-12;

pub fn rho_at(tau: f64, model: &SourceModel) -> Result<TwoPhotonDensityMatrix> {
    if tau < 0.0 {
        return Err(Error::NegativeDelay(tau));
    }
    if tau.is_nan() {
        return Err(Error::invalid("tau", "delay is NaN"));
    }
    model.validate()?;
    Ok(rho_unchecked(tau, model))
}

pub(crate) fn rho_unchecked(tau: f64, model: &SourceModel) -> TwoPhotonDensityMatrix {
    let v = model.coherent_fraction(tau);
    TwoPhotonDensityMatrix::x_state(v, Complex64::from_polar(v, model.phase(tau)))
}

/// `⟨ψ|ρ|ψ⟩` for the target Bell state.
pub fn fidelity(rho: &TwoPhotonDensityMatrix, target: BellTarget) -> f64 {
    let f = rho.expectation(&bell_vector(target));
    debug_assert!(f.im.abs() <= IMAGINARY_RESIDUE, "non-real fidelity {f}");
    f.re
}

/// Joint click probabilities `(++, +−, −+, −−)` for analyzers of `basis` on
/// the biexciton and exciton photons.
pub fn joint_probabilities(rho: &TwoPhotonDensityMatrix, basis: PolarizationBasis) -> [f64; 4] {
    let (plus, minus) = analyzer_states(basis);
    let pairs = [
        (&plus, &plus),
        (&plus, &minus),
        (&minus, &plus),
        (&minus, &minus),
    ];
    pairs.map(|(a, b)| rho.expectation(&kron2(a, b)).re.max(0.0))
}

/// Degree of polarization correlation `C = (p∥ − p⊥)/(p∥ + p⊥)`.
pub fn correlation_degree(rho: &TwoPhotonDensityMatrix, basis: PolarizationBasis) -> f64 {
    let [pp, pm, mp, mm] = joint_probabilities(rho, basis);
    let co = pp + mm;
    let cross = pm + mp;
    assert!(co + cross > 0.0, "projectors must resolve the identity");
    (co - cross) / (co + cross)
}

/// Fidelity with `Ψ⁺` from the three correlation degrees, `(C_R + C_D − C_C + 1)/4`.
pub fn fidelity_from_correlations(c_r: f64, c_d: f64, c_c: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    for (name, c) in [("c_r", c_r), ("c_d", c_d), ("c_c", c_c)] {
        if !(c.abs() <= 1.0 + SLACK) {
            return Err(Error::invalid(
                name,
                format!("correlation {c} outside [-1, 1]"),
            ));
        }
    }
    Ok((c_r + c_d - c_c + 1.0) / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatedStateSummary {
    pub rho_gated: TwoPhotonDensityMatrix,
    pub retained_fraction: f64,
    /// Phase of the gated coherence `⟨VV|ρ|HH⟩`, radians.
    pub mean_phase: f64,
}

/// Accumulated `∫ p(τ)·A(τ)·[1, v, v·cosΦ, v·sinΦ] dτ` over one or more windows.
#[derive(Debug, Clone, Copy, Default)]
struct GateMoments {
    mass: f64,
    coherent: f64,
    coherence: Complex64,
}

fn gate_moments<G: Gate + ?Sized>(gate: &G, model: &SourceModel) -> Result<GateMoments> {
    let tau_x = model.exciton_lifetime_tau_x;
    let sigma = model.jitter_sigma();
    let mut acc = GateMoments::default();
    for window in gate.windows() {
        window.validate()?;
        let partition = window.true_delay_partition(model);
        if partition.is_empty() {
            continue;
        }
        let r = integrate(
            |t| {
                let weight = (-t / tau_x).exp() / tau_x * window.acceptance(t, sigma);
                if weight == 0.0 {
                    return [0.0; 4];
                }
                let v = model.coherent_fraction(t);
                let (s, c) = model.phase(t).sin_cos();
                [weight, weight * v, weight * v * c, weight * v * s]
            },
            &partition,
            QuadOptions::default(),
        )?;
        acc.mass += r.value[0];
        acc.coherent += r.value[1];
        acc.coherence += Complex64::new(r.value[2], r.value[3]);
    }
    Ok(acc)
}

/// Intensity-weighted average of `ρ(τ)` over the coincidences accepted by `gate`.
///
/// With jitter, the weight of a true delay `τ ≥ 0` is `e^{−τ/τ_X}/τ_X` times
/// the probability that `τ + N(0, σ)` lands in the gate.
pub fn gated_state<G: Gate + ?Sized>(gate: &G, model: &SourceModel) -> Result<GatedStateSummary> {
    model.validate()?;
    let m = gate_moments(gate, model)?;
    if !(m.mass > f64::MIN_POSITIVE) {
        return Err(Error::EmptyGate);
    }
    let a = m.coherent / m.mass;
    let z = m.coherence / m.mass;
    Ok(GatedStateSummary {
        rho_gated: TwoPhotonDensityMatrix::x_state(a, z),
        retained_fraction: retained_fraction(gate, model)?,
        mean_phase: z.arg(),
    })
}

/// Time-integrated fidelity with the phase-compensated state
/// `(|HH⟩ + e^{iSτ/ℏ}|VV⟩)/√2`, weighting each delay by the biphoton decay.
pub fn evolving_state_fidelity(model: &SourceModel) -> Result<f64> {
    model.validate()?;
    let tau_x = model.exciton_lifetime_tau_x;
    let hi = tau_x * tail_cutoff_lifetimes();
    let pieces = 64;
    let partition: Vec<f64> = (0..=pieces)
        .map(|k| hi * k as f64 / pieces as f64)
        .collect();
    let r = integrate(
        |t| {
            let p = (-t / tau_x).exp() / tau_x;
            let rho = rho_unchecked(t, model);
            let f = fidelity(&rho, BellTarget::PsiPhase(model.phase(t)));
            [p, p * f]
        },
        &partition,
        QuadOptions::default(),
    )?;
    Ok(r.value[1] / r.value[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Start of the (earliest) window.
    pub tau_g: f64,
    pub fidelity: f64,
    pub retained_fraction: f64,
}

/// Gated fidelity against `target` for each gate of a scan. Gates may overlap
/// one another; each is evaluated independently.
pub fn fidelity_curve<G: Gate + Sync>(
    gates: &[G],
    model: &SourceModel,
    target: BellTarget,
) -> Result<Vec<CurvePoint>> {
    if gates.is_empty() {
        return Err(Error::invalid("gates", "scan has no gates"));
    }
    #[cfg(feature = "parallel")]
    let gates = gates.par_iter();
    #[cfg(not(feature = "parallel"))]
    let gates = gates.iter();
    gates
        .map(|gate| {
            let summary = gated_state(gate, model)?;
            Ok(CurvePoint {
                tau_g: gate.start(),
                fidelity: fidelity(&summary.rho_gated, target),
                retained_fraction: summary.retained_fraction,
            })
        })
        .collect()
}
