mod common;

use biphoton::oscillation::fit_sinusoid;
use biphoton::{
    estimate, fidelity, gated_state, scan, simulate_pairs, tally, BasisPlan, BellTarget,
    CoherenceModel, GateWindow, PolarizationBasis, SourceModel,
};
use common::*;

const SEED: u64 = 0x5eed_2024;

fn within_sigmas(observed: f64, expected: f64, sigma: f64, k: f64) -> bool {
    (observed - expected).abs() <= k * sigma
}

#[test]
fn rectilinear_coincidences_are_binomial() {
    let m = SourceModel::constant(2.5, TAU_X, JITTER, 0.78).unwrap();
    let n = 1_000_000;
    let plan = BasisPlan {
        rectilinear: n,
        diagonal: 0,
        circular: 0,
    };
    let events = simulate_pairs(&m, &plan, SEED).unwrap();
    let co = events.iter().filter(|e| e.outcome.is_co()).count() as f64;
    let p = 0.5 * (1.0 + 0.78);
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!(within_sigmas(co, n as f64 * p, sigma, 3.0), "co {co}");
}

#[test]
fn emission_delays_are_exponential() {
    let m = SourceModel::constant(2.5, TAU_X, 0.0, 0.78).unwrap();
    let plan = BasisPlan::equal_thirds(600_000);
    let events = simulate_pairs(&m, &plan, SEED + 1).unwrap();
    let n = events.len() as f64;
    let inside = events.iter().filter(|e| e.tau_true < 2.0 * TAU_X).count() as f64;
    let p = 1.0 - (-2.0f64).exp();
    assert!(within_sigmas(
        inside / n,
        p,
        (p * (1.0 - p) / n).sqrt(),
        3.0
    ));
    assert!(events.iter().all(|e| e.tau_meas == e.tau_true));
    assert!(events
        .iter()
        .enumerate()
        .all(|(i, e)| e.pair_id == i as u64));
}

#[test]
fn single_photon_marginals_are_unpolarized() {
    let m = SourceModel::constant(2.5, TAU_X, JITTER, 0.78).unwrap();
    let plan = BasisPlan::per_basis(200_000);
    let events = simulate_pairs(&m, &plan, SEED + 2).unwrap();
    for basis in PolarizationBasis::ALL {
        let in_basis: Vec<_> = events.iter().filter(|e| e.basis == basis).collect();
        let n = in_basis.len() as f64;
        assert_eq!(n, 200_000.0);
        let sigma = (0.25 / n).sqrt();
        let first = in_basis.iter().filter(|e| e.outcome.first_plus()).count() as f64 / n;
        let second = in_basis.iter().filter(|e| e.outcome.second_plus()).count() as f64 / n;
        assert!(within_sigmas(first, 0.5, sigma, 3.0), "{basis}: {first}");
        assert!(within_sigmas(second, 0.5, sigma, 3.0), "{basis}: {second}");
    }
}

#[test]
fn disjoint_gates_partition_the_counts() {
    let m = SourceModel::constant(2.5, TAU_X, JITTER, 0.78).unwrap();
    let plan = BasisPlan::equal_thirds(100_000);
    let events = simulate_pairs(&m, &plan, SEED + 3).unwrap();
    let edges = [-200.0, 0.0, 49.0, 600.0, 2500.0];
    let everything = GateWindow::unbounded();
    assert_eq!(tally(&events, &everything).total(), events.len() as u64);

    let outside = events
        .iter()
        .filter(|e| e.tau_meas < edges[0] || e.tau_meas >= edges[edges.len() - 1])
        .count() as u64;
    let inside: u64 = edges
        .windows(2)
        .map(|p| tally(&events, &GateWindow::new(p[0], p[1] - p[0]).unwrap()).total())
        .sum();
    assert_eq!(inside + outside, events.len() as u64);
}

#[test]
fn large_samples_agree_with_the_analytic_fidelity() {
    let decaying = SourceModel::new(
        2.5,
        TAU_X,
        JITTER,
        CoherenceModel::Decaying {
            background_ratio_beta: 0.3,
            background_lifetime_tau_b: 2000.0,
            spin_scattering_tau_ss: 5000.0,
        },
    )
    .unwrap();
    let constant = SourceModel::constant(2.5, TAU_X, JITTER, 0.78).unwrap();
    let gates = [
        GateWindow::new(0.0, 537.0).unwrap(),
        GateWindow::new(400.0, 293.0).unwrap(),
        GateWindow::new(-300.0, 2000.0).unwrap(),
    ];
    for (k, model) in [constant, decaying].iter().enumerate() {
        let points = scan(
            model,
            &gates,
            &BasisPlan::per_basis(1_000_000),
            SEED + 10 + k as u64,
        )
        .unwrap();
        for p in &points {
            let analytic = gated_state(&p.gate, model).unwrap();
            let f = fidelity(&analytic.rho_gated, BellTarget::PsiPlus);
            let est = p.estimates.fidelity;
            assert!(
                within_sigmas(est.value, f, est.sigma, 3.0),
                "{:?}: {} ± {} vs {f}",
                p.gate,
                est.value,
                est.sigma
            );
            let n = p.counts.total() as f64;
            let r = analytic.retained_fraction;
            let total = 3_000_000.0;
            assert!(within_sigmas(
                n / total,
                r,
                (r * (1.0 - r) / total).sqrt(),
                3.0
            ));
        }
    }
}

#[test]
fn tallying_exported_events_matches_the_scan() {
    let m = SourceModel::constant(13.5, TAU_X, JITTER, 0.78).unwrap();
    let plan = BasisPlan::equal_thirds(50_001);
    let gate = GateWindow::new(100.0, 293.0).unwrap();
    let events = simulate_pairs(&m, &plan, SEED + 4).unwrap();
    let direct = estimate(&tally(&events, &gate)).unwrap();
    let scanned = scan(&m, &[gate], &plan, SEED + 4).unwrap();
    assert_eq!(scanned[0].estimates, direct);
}

#[test]
fn thread_count_does_not_change_the_stream() {
    let m = SourceModel::constant(2.5, TAU_X, JITTER, 0.78).unwrap();
    let plan = BasisPlan::equal_thirds(300_000);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_pairs(&m, &plan, SEED + 5).unwrap())
    };
    assert_eq!(run(1), run(4));
    assert_ne!(run(1), simulate_pairs(&m, &plan, SEED + 6).unwrap());
}

fn delay_scan(s: f64, w: f64, delays: &[f64], seed: u64) -> Vec<f64> {
    let m = SourceModel::constant(s, TAU_X, JITTER, 0.78).unwrap();
    let gates: Vec<GateWindow> = delays
        .iter()
        .map(|&d| GateWindow::new(d, w).unwrap())
        .collect();
    scan(&m, &gates, &BasisPlan::per_basis(1_000_000), seed)
        .unwrap()
        .iter()
        .map(|p| p.estimates.fidelity.value)
        .collect()
}

#[test]
fn simulated_delay_scan_oscillates_at_the_phase_period() {
    let delays: Vec<f64> = (0..=50).map(|k| 50.0 * k as f64).collect();
    let ys = delay_scan(2.5, 537.0, &delays, SEED + 7);
    let expected = phase_period(2.5);
    let fit = fit_sinusoid(&delays, &ys, 0.5 * expected, 2.0 * expected).unwrap();
    assert!(
        ((fit.period - expected) / expected).abs() <= 0.05,
        "{} vs {expected}",
        fit.period
    );
    assert!(fit.amplitude > 0.05);
}

#[test]
fn fast_oscillation_is_washed_out_by_jitter() {
    let delays: Vec<f64> = (0..=50).map(|k| 50.0 * k as f64).collect();
    let ys = delay_scan(13.5, 293.0, &delays, SEED + 8);
    let expected = phase_period(13.5);
    let fit = fit_sinusoid(&delays, &ys, 0.5 * expected, 2.0 * expected).unwrap();
    assert!(fit.amplitude < 0.05, "amplitude {}", fit.amplitude);
}
