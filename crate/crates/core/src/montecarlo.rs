//! Monte-Carlo coincidence simulation with detector timing jitter.
//!
//! Each simulated pair draws, in this order:
//! 1. `u ~ U[0,1)`; true delay `τ = −τ_X·ln(1 − u)` (inverse-CDF exponential),
//! 2. `z ~ N(0,1)` (ziggurat, `rand_distr::StandardNormal`); measured delay
//!    `τ + σ·z` with `σ = FWHM/2.35482`,
//! 3. `u' ~ U[0,1)`, selecting one of the four joint analyzer outcomes by
//!    the cumulative projector probabilities of `ρ(τ)` in the pair's basis.
//!
//! Determinism: pair indices are split into shards of [`SHARD_SIZE`]. Shard
//! `k` uses `ChaCha8Rng::seed_from_u64(seed)` (key expanded from the seed by
//! `rand_core`'s PCG32 filler) with its stream set to `k`, so a shard's draws
//! depend only on `(seed, k)`. Shards run in parallel and are merged in
//! index order, which makes the output independent of the thread count.
//! Bases are assigned by pair index in contiguous blocks: rectilinear first,
//! then diagonal, then circular.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::density::{fidelity_from_correlations, joint_probabilities, rho_unchecked};
use crate::error::{Error, Result};
use crate::gating::Gate;
use crate::types::{PolarizationBasis, SourceModel};

pub const SHARD_SIZE: u64 = 1 << 16;

/// Joint analyzer outcome for (biexciton photon, exciton photon).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl Outcome {
    const ALL: [Outcome; 4] = [
        Outcome::PlusPlus,
        Outcome::PlusMinus,
        Outcome::MinusPlus,
        Outcome::MinusMinus,
    ];

    pub fn is_co(self) -> bool {
        matches!(self, Outcome::PlusPlus | Outcome::MinusMinus)
    }

    pub fn first_plus(self) -> bool {
        matches!(self, Outcome::PlusPlus | Outcome::PlusMinus)
    }

    pub fn second_plus(self) -> bool {
        matches!(self, Outcome::PlusPlus | Outcome::MinusPlus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvent {
    pub pair_id: u64,
    pub tau_true: f64,
    pub tau_meas: f64,
    pub basis: PolarizationBasis,
    pub outcome: Outcome,
}

/// A detected pair as seen by the estimator: measured delay, basis and
/// whether the two clicks were co-polarized.
pub trait Coincidence {
    fn tau_meas(&self) -> f64;
    fn basis(&self) -> PolarizationBasis;
    fn is_co(&self) -> bool;
}

impl Coincidence for PairEvent {
    fn tau_meas(&self) -> f64 {
        self.tau_meas
    }

    fn basis(&self) -> PolarizationBasis {
        self.basis
    }

    fn is_co(&self) -> bool {
        self.outcome.is_co()
    }
}

impl<T: Coincidence> Coincidence for &T {
    fn tau_meas(&self) -> f64 {
        (*self).tau_meas()
    }

    fn basis(&self) -> PolarizationBasis {
        (*self).basis()
    }

    fn is_co(&self) -> bool {
        (*self).is_co()
    }
}

/// Number of simulated pairs measured in each basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisPlan {
    pub rectilinear: u64,
    pub diagonal: u64,
    pub circular: u64,
}

impl BasisPlan {
    /// Splits `n` as evenly as possible; the remainder goes to the first bases.
    pub fn equal_thirds(n: u64) -> Self {
        let base = n / 3;
        let rem = n % 3;
        BasisPlan {
            rectilinear: base + u64::from(rem > 0),
            diagonal: base + u64::from(rem > 1),
            circular: base,
        }
    }

    /// `n` pairs in every basis.
    pub fn per_basis(n: u64) -> Self {
        BasisPlan {
            rectilinear: n,
            diagonal: n,
            circular: n,
        }
    }

    pub fn total(&self) -> u64 {
        self.rectilinear + self.diagonal + self.circular
    }

    pub fn count(&self, basis: PolarizationBasis) -> u64 {
        match basis {
            PolarizationBasis::Rectilinear => self.rectilinear,
            PolarizationBasis::Diagonal => self.diagonal,
            PolarizationBasis::Circular => self.circular,
        }
    }

    pub fn basis_of(&self, pair_id: u64) -> PolarizationBasis {
        if pair_id < self.rectilinear {
            PolarizationBasis::Rectilinear
        } else if pair_id < self.rectilinear + self.diagonal {
            PolarizationBasis::Diagonal
        } else {
            PolarizationBasis::Circular
        }
    }
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn shard_count(total: u64) -> u64 {
    total.div_ceil(SHARD_SIZE)
}

#[cfg(feature = "parallel")]
fn shards(total: u64) -> rayon::range::Iter<u64> {
    (0..shard_count(total)).into_par_iter()
}

#[cfg(not(feature = "parallel"))]
fn shards(total: u64) -> std::ops::Range<u64> {
    0..shard_count(total)
}

/// Generates the events of one shard in pair-id order.
fn run_shard(
    model: &SourceModel,
    plan: &BasisPlan,
    seed: u64,
    shard: u64,
    mut sink: impl FnMut(PairEvent),
) {
    let mut rng = shard_rng(seed, shard);
    let tau_x = model.exciton_lifetime_tau_x;
    let sigma = model.jitter_sigma();
    let start = shard * SHARD_SIZE;
    let end = (start + SHARD_SIZE).min(plan.total());
    for pair_id in start..end {
        let u: f64 = rng.gen();
        let tau_true = -tau_x * (-u).ln_1p();
        let z: f64 = rng.sample(StandardNormal);
        let tau_meas = tau_true + sigma * z;
        let basis = plan.basis_of(pair_id);
        let probs = joint_probabilities(&rho_unchecked(tau_true, model), basis);
        let pick: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut outcome = Outcome::MinusMinus;
        for (p, o) in probs.iter().zip(Outcome::ALL) {
            acc += p;
            if pick < acc {
                outcome = o;
                break;
            }
        }
        sink(PairEvent {
            pair_id,
            tau_true,
            tau_meas,
            basis,
            outcome,
        });
    }
}

fn check_inputs(model: &SourceModel, plan: &BasisPlan) -> Result<()> {
    model.validate()?;
    if plan.total() == 0 {
        return Err(Error::invalid("n_pairs", "must simulate at least one pair"));
    }
    Ok(())
}

/// Simulates `plan.total()` coincidences. Identical inputs give an identical
/// event stream regardless of how many threads run the shards.
pub fn simulate_pairs(model: &SourceModel, plan: &BasisPlan, seed: u64) -> Result<Vec<PairEvent>> {
    check_inputs(model, plan)?;
    let per_shard: Vec<Vec<PairEvent>> = shards(plan.total())
        .map(|shard| {
            let mut events = Vec::with_capacity(SHARD_SIZE as usize);
            run_shard(model, plan, seed, shard, |e| events.push(e));
            events
        })
        .collect();
    Ok(per_shard.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BasisCounts {
    pub co: u64,
    pub cross: u64,
}

impl BasisCounts {
    pub fn total(&self) -> u64 {
        self.co + self.cross
    }
}

/// Co- and cross-polarized coincidence counts per basis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorrelationCounts {
    counts: [BasisCounts; 3],
}

impl CorrelationCounts {
    pub fn new(rectilinear: BasisCounts, diagonal: BasisCounts, circular: BasisCounts) -> Self {
        CorrelationCounts {
            counts: [rectilinear, diagonal, circular],
        }
    }

    pub fn record(&mut self, basis: PolarizationBasis, co: bool) {
        let c = &mut self.counts[basis.index()];
        if co {
            c.co += 1;
        } else {
            c.cross += 1;
        }
    }

    pub fn get(&self, basis: PolarizationBasis) -> BasisCounts {
        self.counts[basis.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(BasisCounts::total).sum()
    }

    pub fn merge(&mut self, other: &CorrelationCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.co += b.co;
            a.cross += b.cross;
        }
    }
}

/// Counts the coincidences whose measured delay falls inside `gate`.
pub fn tally<I, G>(events: I, gate: &G) -> CorrelationCounts
where
    I: IntoIterator,
    I::Item: Coincidence,
    G: Gate + ?Sized,
{
    let mut counts = CorrelationCounts::default();
    for e in events {
        if gate.accepts(e.tau_meas()) {
            counts.record(e.basis(), e.is_co());
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    /// Indexed by [`PolarizationBasis::index`].
    pub correlations: [CorrelationEstimate; 3],
    pub fidelity: FidelityEstimate,
}

impl Estimates {
    pub fn correlation(&self, basis: PolarizationBasis) -> CorrelationEstimate {
        self.correlations[basis.index()]
    }
}

/// Correlation degrees with binomial standard errors and the derived fidelity with `Ψ⁺`.
pub fn estimate(counts: &CorrelationCounts) -> Result<Estimates> {
    let mut correlations = [CorrelationEstimate {
        value: 0.0,
        sigma: 0.0,
    }; 3];
    for basis in PolarizationBasis::ALL {
        let c = counts.get(basis);
        let n = c.total();
        if n == 0 {
            return Err(Error::InsufficientCounts(basis));
        }
        let n = n as f64;
        let value = (c.co as f64 - c.cross as f64) / n;
        let sigma = ((1.0 - value * value).max(0.0) / n).sqrt();
        correlations[basis.index()] = CorrelationEstimate { value, sigma };
    }
    let [r, d, c] = correlations;
    let value = fidelity_from_correlations(r.value, d.value, c.value)?;
    let sigma = 0.25 * (r.sigma.powi(2) + d.sigma.powi(2) + c.sigma.powi(2)).sqrt();
    Ok(Estimates {
        correlations,
        fidelity: FidelityEstimate { value, sigma },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint<G> {
    pub gate: G,
    pub counts: CorrelationCounts,
    pub estimates: Estimates,
    /// Gated events over all simulated events.
    pub retained_fraction: f64,
}

/// Gated counts for every gate from a single simulated event stream.
pub fn scan_counts<G: Gate + Sync>(
    model: &SourceModel,
    gates: &[G],
    plan: &BasisPlan,
    seed: u64,
) -> Result<Vec<CorrelationCounts>> {
    check_inputs(model, plan)?;
    if gates.is_empty() {
        return Err(Error::invalid("gates", "scan has no gates"));
    }
    let per_shard: Vec<Vec<CorrelationCounts>> = shards(plan.total())
        .map(|shard| {
            let mut counts = vec![CorrelationCounts::default(); gates.len()];
            run_shard(model, plan, seed, shard, |e| {
                for (gate, c) in gates.iter().zip(counts.iter_mut()) {
                    if gate.accepts(e.tau_meas) {
                        c.record(e.basis, e.outcome.is_co());
                    }
                }
            });
            counts
        })
        .collect();
    let mut merged = vec![CorrelationCounts::default(); gates.len()];
    for shard in &per_shard {
        for (m, c) in merged.iter_mut().zip(shard) {
            m.merge(c);
        }
    }
    Ok(merged)
}

/// Simulates once and estimates the fidelity inside every gate. Gates may overlap.
pub fn scan<G: Gate + Sync + Clone>(
    model: &SourceModel,
    gates: &[G],
    plan: &BasisPlan,
    seed: u64,
) -> Result<Vec<ScanPoint<G>>> {
    let counts = scan_counts(model, gates, plan, seed)?;
    let total = plan.total() as f64;
    gates
        .iter()
        .zip(counts)
        .map(|(gate, counts)| {
            Ok(ScanPoint {
                gate: gate.clone(),
                counts,
                estimates: estimate(&counts)?,
                retained_fraction: counts.total() as f64 / total,
            })
        })
        .collect()
}
