//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use biphoton::oscillation::fit_sinusoid;
use biphoton::timetag::{analyze_records, read_file, TimeTagRecord};
use biphoton::{
    correlation_degree, estimate, evolving_state_fidelity, fidelity, fidelity_curve,
    fidelity_from_correlations, gated_state, rho_at, scan, simulate_pairs, tally, BasisPlan,
    BellTarget, GateWindow, PolarizationBasis, SourceModel, HBAR_UEV_PS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAU_X: f64 = 769.0;
const JITTER: f64 = 577.0;
const V: f64 = 0.78;
const SEED: u64 = 20_240_611;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_triples(n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..n)
        .map(|_| {
            (
                rng.gen_range(0.0..20_000.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(0.0..=1.0),
            )
        })
        .collect()
}

fn density_identities() -> Outcome {
    let triples = random_triples(1000);
    let start = Instant::now();
    let mut failures = 0;
    for &(tau, s, v) in &triples {
        let m = SourceModel::constant(s, TAU_X, 0.0, v).unwrap();
        let rho = rho_at(tau, &m).unwrap();
        let trace = rho.trace();
        let marginals_ok = [rho.reduced_first(), rho.reduced_second()].iter().all(|r| {
            (r[0][0].re - 0.5).abs() <= 1e-12
                && (r[1][1].re - 0.5).abs() <= 1e-12
                && r[0][1].norm() <= 1e-12
                && r[1][0].norm() <= 1e-12
                && r[0][0].im.abs() <= 1e-12
                && r[1][1].im.abs() <= 1e-12
        });
        let sum = fidelity(&rho, BellTarget::PsiPlus) + fidelity(&rho, BellTarget::PsiMinus);
        let ok = rho.hermiticity_defect() <= 1e-12
            && (trace.re - 1.0).abs() <= 1e-12
            && trace.im.abs() <= 1e-12
            && rho.eigenvalues()[0] >= -1e-10
            && marginals_ok
            && (sum - 0.5 * (1.0 + v)).abs() <= 1e-12;
        if !ok {
            failures += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && elapsed < 1.0,
        format!("{failures} of 1000 states violate an identity; {elapsed:.3} s"),
    )
}

fn tomography_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (tau, s, v) in random_triples(1000) {
        let m = SourceModel::constant(s, TAU_X, 0.0, v).unwrap();
        let rho = rho_at(tau, &m).unwrap();
        let c = |b| correlation_degree(&rho, b);
        let via = fidelity_from_correlations(
            c(PolarizationBasis::Rectilinear),
            c(PolarizationBasis::Diagonal),
            c(PolarizationBasis::Circular),
        )
        .unwrap();
        worst = worst.max((via - fidelity(&rho, BellTarget::PsiPlus)).abs());
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn monte_carlo_grid() -> Outcome {
    let start = Instant::now();
    let mut worst_z: f64 = 0.0;
    let mut failures = Vec::new();
    let mut cell = 0;
    for s in [0.0, 2.5, 13.5] {
        let m = SourceModel::constant(s, TAU_X, JITTER, V).unwrap();
        for tau_g in [0.0, 400.0, 800.0] {
            for w in [49.0, 293.0, 537.0] {
                let gate = GateWindow::new(tau_g, w).unwrap();
                let mc = scan(&m, &[gate], &BasisPlan::per_basis(1_000_000), SEED + cell).unwrap()
                    [0]
                .estimates
                .fidelity;
                cell += 1;
                let exact = fidelity(
                    &gated_state(&gate, &m).unwrap().rho_gated,
                    BellTarget::PsiPlus,
                );
                let z = (mc.value - exact).abs() / mc.sigma;
                worst_z = worst_z.max(z);
                if z > 3.0 {
                    failures.push(format!("S={s} τ_g={tau_g} w={w}: z={z:.2}"));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && elapsed < 300.0;
    let mut detail = format!("27 cells, max |Δ|/σ = {worst_z:.2}, {elapsed:.1} s");
    if !failures.is_empty() {
        detail.push_str(&format!("; outside 3σ: {}", failures.join(", ")));
    }
    outcome(pass, detail)
}

fn width_scan_band() -> Outcome {
    let m = SourceModel::constant(2.5, TAU_X, JITTER, V).unwrap();
    let widths = [49.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 2000.0];
    let gates: Vec<GateWindow> = widths
        .iter()
        .map(|&w| GateWindow::new(0.0, w).unwrap())
        .collect();
    let f: Vec<f64> = fidelity_curve(&gates, &m, BellTarget::PsiPlus)
        .unwrap()
        .iter()
        .map(|p| p.fidelity)
        .collect();
    let narrow = (0.63..=0.83).contains(&f[0]);
    let wide = (0.41..=0.51).contains(&f[6]);
    let rises: Vec<String> = widths
        .windows(2)
        .zip(f.windows(2))
        .filter(|(_, y)| y[1] > y[0])
        .map(|(x, y)| format!("{}→{} ps: {:.4}→{:.4}", x[0], x[1], y[0], y[1]))
        .collect();
    let curve: Vec<String> = f.iter().map(|x| format!("{x:.4}")).collect();
    let mut detail = format!(
        "f(49)={:.4} in [0.63,0.83]: {narrow}; f(2000)={:.4} in [0.41,0.51]: {wide}; curve [{}]",
        f[0],
        f[6],
        curve.join(", ")
    );
    if !rises.is_empty() {
        detail.push_str(&format!("; not monotone: {}", rises.join(", ")));
    }
    outcome(narrow && wide && rises.is_empty(), detail)
}

fn retained_fraction_law() -> Outcome {
    let m = SourceModel::constant(2.5, TAU_X, 0.0, V).unwrap();
    let widths = [49.0, 537.0, 2000.0];
    let gates: Vec<GateWindow> = widths
        .iter()
        .map(|&w| GateWindow::new(0.0, w).unwrap())
        .collect();
    let plan = BasisPlan::per_basis(1_000_000);
    let points = scan(&m, &gates, &plan, SEED + 100).unwrap();
    let total = plan.total() as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (w, p) in widths.iter().zip(&points) {
        let law = -(-w / TAU_X).exp_m1();
        let analytic = biphoton::retained_fraction(&p.gate, &m).unwrap();
        let sigma = (law * (1.0 - law) / total).sqrt();
        let z = (p.retained_fraction - law).abs() / sigma;
        pass &= (analytic - law).abs() <= 1e-12 && z <= 3.0;
        parts.push(format!("w={w}: law {law:.6}, MC z={z:.2}"));
    }
    let at_2000 = -(-2000.0 / TAU_X).exp_m1();
    pass &= (at_2000 - 0.926).abs() < 5e-4;
    outcome(pass, parts.join("; "))
}

fn oscillation_period() -> Outcome {
    let plan = BasisPlan::per_basis(1_000_000);
    let delays: Vec<f64> = (0..=70).map(|k| 50.0 * k as f64).collect();
    let run = |s: f64, w: f64, seed: u64| -> Vec<f64> {
        let m = SourceModel::constant(s, TAU_X, JITTER, V).unwrap();
        let gates: Vec<GateWindow> = delays
            .iter()
            .map(|&d| GateWindow::new(d, w).unwrap())
            .collect();
        scan(&m, &gates, &plan, seed)
            .unwrap()
            .iter()
            .map(|p| p.estimates.fidelity.value)
            .collect()
    };
    let expected = std::f64::consts::TAU * HBAR_UEV_PS / 2.5;
    let slow = fit_sinusoid(&delays, &run(2.5, 537.0, SEED + 200), 500.0, 5000.0).unwrap();
    let period_ok = ((slow.period - expected) / expected).abs() <= 0.05;

    let fast_period = std::f64::consts::TAU * HBAR_UEV_PS / 13.5;
    let fast = fit_sinusoid(
        &delays,
        &run(13.5, 293.0, SEED + 201),
        0.5 * fast_period,
        2.0 * fast_period,
    )
    .unwrap();
    let amplitude_ok = fast.amplitude < 0.05;
    outcome(
        period_ok && amplitude_ok,
        format!(
            "S=2.5 period {:.1} ps vs {expected:.1} ps; S=13.5 amplitude {:.4}",
            slow.period, fast.amplitude
        ),
    )
}

fn phase_compensated_fidelity() -> Outcome {
    let m = SourceModel::constant(2.5, TAU_X, JITTER, V).unwrap();
    let f = evolving_state_fidelity(&m).unwrap();
    outcome((f - 0.835).abs() <= 0.001, format!("{f:.6}"))
}

fn spectral_widths() -> Outcome {
    let ladder = [100.0, 390.0, 1000.0, 5000.0, f64::INFINITY];
    let widths: Vec<f64> = ladder
        .iter()
        .map(|&t| biphoton::spectral::truncated_linewidth(TAU_X, t).unwrap())
        .collect();
    let grid = biphoton::EnergyGrid::natural(TAU_X);
    let natural =
        biphoton::fwhm(&biphoton::truncated_decay_spectrum(TAU_X, f64::INFINITY, &grid).unwrap())
            .unwrap();
    let gamma = HBAR_UEV_PS / TAU_X;
    let natural_ok = ((natural - gamma) / gamma).abs() <= 0.005 && (gamma - 0.856).abs() < 5e-4;
    let ordered = widths[1] > widths[2] && widths[2] > widths[4];
    let monotone = widths.windows(2).all(|p| p[0] >= p[1]);
    let shown: Vec<String> = ladder
        .iter()
        .zip(&widths)
        .map(|(t, w)| format!("{t}:{w:.3}"))
        .collect();
    outcome(
        natural_ok && ordered && monotone,
        format!(
            "natural {natural:.4} µeV vs ℏ/τ_X {gamma:.4}; FWHM by t_cut [{}]",
            shown.join(", ")
        ),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .current_dir(dir)
        .env("RAYON_NUM_THREADS", threads)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
output = "repro"

[source]
splitting_S = 2.5
exciton_lifetime_tau_X = 769.0
jitter_fwhm = 577.0
coherence = { constant = { v = 0.78 } }

[scan.gate_delay_scan]
delays = [0.0, 200.0, 400.0, 800.0, 1600.0]
w = 537.0
"#;
    fs::write(dir.path().join("repro.toml"), config).unwrap();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        for cmd in ["scan-delay", "simulate"] {
            let args = [
                cmd,
                "--config",
                "repro.toml",
                "--engine",
                "mc",
                "--pairs",
                "300000",
                "--seed",
                "99",
            ];
            if !run_cli(dir.path(), threads, &args) {
                return outcome(false, format!("`{cmd}` failed with {threads} thread(s)"));
            }
        }
        let scan = fs::read(dir.path().join("repro_gate_delay_scan.csv")).unwrap();
        let tags = fs::read(dir.path().join("repro_timetags.csv")).unwrap();
        files.push((scan, tags));
    }
    let identical = files[0] == files[1];

    let records = read_file(&dir.path().join("repro_timetags.csv")).unwrap();
    let model = SourceModel::constant(2.5, TAU_X, JITTER, V).unwrap();
    let events = simulate_pairs(&model, &BasisPlan::equal_thirds(300_000), 99).unwrap();
    let exact_records = records.len() == events.len()
        && records
            .iter()
            .zip(&events)
            .all(|(r, e)| *r == TimeTagRecord::from(e));
    let gate = GateWindow::new(0.0, 537.0).unwrap();
    let ingested = analyze_records(&records, gate).unwrap().estimates;
    let in_memory = estimate(&tally(&events, &gate)).unwrap();
    let round_trip = ingested == in_memory;
    outcome(
        identical && exact_records && round_trip,
        format!(
            "1 vs 4 threads byte-identical: {identical}; records bit-exact: {exact_records}; estimates identical: {round_trip}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("density-matrix identities", density_identities),
        ("tomography identity", tomography_identity),
        ("Monte-Carlo vs quadrature grid", monte_carlo_grid),
        ("gate-width scan bands", width_scan_band),
        ("retained fraction law", retained_fraction_law),
        ("oscillation period", oscillation_period),
        ("phase-compensated fidelity", phase_compensated_fidelity),
        ("spectral linewidths", spectral_widths),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("[{tag}] {}. {name}: {}", i + 1, result.detail);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
