//! Shared vocabulary: polarization bases, Bell targets, the two-photon
//! density matrix and the emitter parameters.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in µeV·ps.
pub const HBAR_UEV_PS: f64 = 658.2119569;

/// Ratio between the FWHM and the standard deviation of a Gaussian, `2·sqrt(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

pub type CVec2 = [Complex64; 2];
pub type CVec4 = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationBasis {
    Rectilinear,
    Diagonal,
    Circular,
}

impl PolarizationBasis {
    pub const ALL: [PolarizationBasis; 3] = [
        PolarizationBasis::Rectilinear,
        PolarizationBasis::Diagonal,
        PolarizationBasis::Circular,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Single-letter code used in time-tag files.
    pub fn code(self) -> char {
        match self {
            PolarizationBasis::Rectilinear => 'R',
            PolarizationBasis::Diagonal => 'D',
            PolarizationBasis::Circular => 'C',
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "R" => Some(PolarizationBasis::Rectilinear),
            "D" => Some(PolarizationBasis::Diagonal),
            "C" => Some(PolarizationBasis::Circular),
            _ => None,
        }
    }
}

impl fmt::Display for PolarizationBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolarizationBasis::Rectilinear => "rectilinear",
            PolarizationBasis::Diagonal => "diagonal",
            PolarizationBasis::Circular => "circular",
        };
        f.write_str(name)
    }
}

/// The `(plus, minus)` analyzer states of a basis in the `(H, V)` representation.
///
/// Conventions: `D = (H+V)/√2`, `A = (H−V)/√2`, `R = (H+iV)/√2`, `L = (H−iV)/√2`.
/// With these, a `|Ψ⁺⟩` pair is correlated in the rectilinear and diagonal
/// bases and anti-correlated in the circular basis.
pub fn analyzer_states(basis: PolarizationBasis) -> (CVec2, CVec2) {
    let s = FRAC_1_SQRT_2;
    match basis {
        PolarizationBasis::Rectilinear => ([ONE, ZERO], [ZERO, ONE]),
        PolarizationBasis::Diagonal => (
            [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
        ),
        PolarizationBasis::Circular => (
            [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
            [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
        ),
    }
}

/// Tensor product `a ⊗ b` in `(HH, HV, VH, VV)` order.
pub fn kron2(a: &CVec2, b: &CVec2) -> CVec4 {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Maximally entangled target states of the form `(|HH⟩ + e^{iΦ}|VV⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BellTarget {
    PsiPlus,
    PsiMinus,
    PsiPhase(f64),
}

impl BellTarget {
    pub fn phase(self) -> f64 {
        match self {
            BellTarget::PsiPlus => 0.0,
            BellTarget::PsiMinus => std::f64::consts::PI,
            BellTarget::PsiPhase(phi) => phi,
        }
    }
}

pub fn bell_vector(target: BellTarget) -> CVec4 {
    let s = FRAC_1_SQRT_2;
    let last = match target {
        BellTarget::PsiPlus => Complex64::new(s, 0.0),
        BellTarget::PsiMinus => Complex64::new(-s, 0.0),
        BellTarget::PsiPhase(phi) => Complex64::from_polar(s, phi),
    };
    [Complex64::new(s, 0.0), ZERO, ZERO, last]
}

/// A 4×4 two-photon polarization density matrix in `(HH, HV, VH, VV)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonDensityMatrix {
    entries: [[Complex64; 4]; 4],
}

impl TwoPhotonDensityMatrix {
    /// Hermiticity and unit-trace tolerance applied by [`Self::from_entries`].
    pub const TOLERANCE: f64 = 1e-12;

    /// Validates Hermiticity and unit trace.
    pub fn from_entries(entries: [[Complex64; 4]; 4]) -> Result<Self> {
        let rho = TwoPhotonDensityMatrix { entries };
        let herm = rho.hermiticity_defect();
        if herm > Self::TOLERANCE {
            return Err(Error::invalid(
                "rho",
                format!("not Hermitian (defect {herm:e})"),
            ));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > Self::TOLERANCE || tr.im.abs() > Self::TOLERANCE {
            return Err(Error::invalid("rho", format!("trace {tr} is not 1")));
        }
        Ok(rho)
    }

    /// An "X-state": populations `(1+a, 1−a, 1−a, 1+a)/4` and coherence
    /// `⟨VV|ρ|HH⟩ = z/2`. Hermitian with unit trace by construction.
    pub(crate) fn x_state(a: f64, z: Complex64) -> Self {
        let mut entries = [[ZERO; 4]; 4];
        entries[0][0] = Complex64::new((1.0 + a) / 4.0, 0.0);
        entries[1][1] = Complex64::new((1.0 - a) / 4.0, 0.0);
        entries[2][2] = Complex64::new((1.0 - a) / 4.0, 0.0);
        entries[3][3] = Complex64::new((1.0 + a) / 4.0, 0.0);
        entries[3][0] = z / 2.0;
        entries[0][3] = z.conj() / 2.0;
        TwoPhotonDensityMatrix { entries }
    }

    /// Pure-state projector `|ψ⟩⟨ψ|`; `psi` must be normalized.
    pub fn pure(psi: &CVec4) -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = psi[i] * psi[j].conj();
            }
        }
        TwoPhotonDensityMatrix { entries }
    }

    pub fn entries(&self) -> &[[Complex64; 4]; 4] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.entries[i][i]).sum()
    }

    /// Largest `|ρᵢⱼ − conj(ρⱼᵢ)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        worst
    }

    /// `⟨ψ|ρ|ψ⟩`, complex; real up to rounding for Hermitian `ρ`.
    pub fn expectation(&self, psi: &CVec4) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..4 {
            let mut row = ZERO;
            for j in 0..4 {
                row += self.entries[i][j] * psi[j];
            }
            acc += psi[i].conj() * row;
        }
        acc
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let m = Matrix4::from_fn(|i, j| self.entries[i][j]);
        let eig = m.symmetric_eigenvalues();
        let mut out = [eig[0], eig[1], eig[2], eig[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.eigenvalues()[0] >= -tol
    }

    /// Reduced state of the biexciton (first) photon.
    pub fn reduced_first(&self) -> [[Complex64; 2]; 2] {
        let mut out = [[ZERO; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, e) in row.iter_mut().enumerate() {
                *e = (0..2).map(|k| self.entries[2 * a + k][2 * b + k]).sum();
            }
        }
        out
    }

    /// Reduced state of the exciton (second) photon.
    pub fn reduced_second(&self) -> [[Complex64; 2]; 2] {
        let mut out = [[ZERO; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, e) in row.iter_mut().enumerate() {
                *e = (0..2).map(|k| self.entries[2 * k + a][2 * k + b]).sum();
            }
        }
        out
    }
}

/// Time dependence of the coherent fraction `v(τ) = k(τ)·g⁽¹⁾(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoherenceModel {
    /// Time-independent coherent fraction.
    Constant { v: f64 },
    /// Background light decaying with its own lifetime, mixed in with
    /// intensity ratio `β` at `τ = 0`, plus spin scattering with a constant
    /// time: `k = d/(d + β·b)`, `d = e^{−τ/τ_X}`, `b = e^{−τ/τ_B}`,
    /// `g⁽¹⁾ = e^{−τ/τ_ss}`.
    Decaying {
        background_ratio_beta: f64,
        #[serde(rename = "background_lifetime_tau_B")]
        background_lifetime_tau_b: f64,
        spin_scattering_tau_ss: f64,
    },
}

impl CoherenceModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoherenceModel::Constant { v } => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid("v", format!("{v} outside [0, 1]")));
                }
            }
            CoherenceModel::Decaying {
                background_ratio_beta,
                background_lifetime_tau_b,
                spin_scattering_tau_ss,
            } => {
                if !(background_ratio_beta >= 0.0 && background_ratio_beta.is_finite()) {
                    return Err(Error::invalid(
                        "background_ratio_beta",
                        format!("{background_ratio_beta} must be finite and >= 0"),
                    ));
                }
                if !(background_lifetime_tau_b > 0.0) {
                    return Err(Error::invalid(
                        "background_lifetime_tau_b",
                        format!("{background_lifetime_tau_b} must be > 0"),
                    ));
                }
                if !(spin_scattering_tau_ss > 0.0) {
                    return Err(Error::invalid(
                        "spin_scattering_tau_ss",
                        format!("{spin_scattering_tau_ss} must be > 0"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `v(τ)` for an emitter with exciton lifetime `tau_x`.
    pub fn coherent_fraction(&self, tau: f64, tau_x: f64) -> f64 {
        match *self {
            CoherenceModel::Constant { v } => v,
            CoherenceModel::Decaying {
                background_ratio_beta,
                background_lifetime_tau_b,
                spin_scattering_tau_ss,
            } => {
                // d/(d + βb) rewritten as 1/(1 + β·b/d) so late delays do not underflow.
                let log_ratio = tau * (1.0 / tau_x - 1.0 / background_lifetime_tau_b);
                let k = 1.0 / (1.0 + background_ratio_beta * log_ratio.exp());
                k * (-tau / spin_scattering_tau_ss).exp()
            }
        }
    }
}

/// Physical parameters of the emitter and detection system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    /// Exciton fine-structure splitting, µeV. The sign sets the rotation direction.
    #[serde(rename = "splitting_S")]
    pub splitting_s: f64,
    /// Exciton radiative lifetime, ps.
    #[serde(rename = "exciton_lifetime_tau_X")]
    pub exciton_lifetime_tau_x: f64,
    /// Combined pair-detection timing jitter (FWHM), ps. Zero disables jitter.
    pub jitter_fwhm: f64,
    pub coherence: CoherenceModel,
}

impl SourceModel {
    pub fn new(
        splitting_s: f64,
        exciton_lifetime_tau_x: f64,
        jitter_fwhm: f64,
        coherence: CoherenceModel,
    ) -> Result<Self> {
        let model = SourceModel {
            splitting_s,
            exciton_lifetime_tau_x,
            jitter_fwhm,
            coherence,
        };
        model.validate()?;
        Ok(model)
    }

    /// Constant-coherence model, the common case.
    pub fn constant(splitting_s: f64, tau_x: f64, jitter_fwhm: f64, v: f64) -> Result<Self> {
        Self::new(
            splitting_s,
            tau_x,
            jitter_fwhm,
            CoherenceModel::Constant { v },
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.splitting_s.is_finite() {
            return Err(Error::invalid("splitting_S", "must be finite"));
        }
        if !(self.exciton_lifetime_tau_x > 0.0 && self.exciton_lifetime_tau_x.is_finite()) {
            return Err(Error::invalid(
                "exciton_lifetime_tau_X",
                format!("{} must be finite and > 0", self.exciton_lifetime_tau_x),
            ));
        }
        if !(self.jitter_fwhm >= 0.0 && self.jitter_fwhm.is_finite()) {
            return Err(Error::invalid(
                "jitter_fwhm",
                format!("{} must be finite and >= 0", self.jitter_fwhm),
            ));
        }
        self.coherence.validate()
    }

    pub fn jitter_sigma(&self) -> f64 {
        self.jitter_fwhm / FWHM_PER_SIGMA
    }

    /// Phase `Φ = S·τ/ℏ` acquired in the exciton state after delay `tau`.
    pub fn phase(&self, tau: f64) -> f64 {
        self.splitting_s * tau / HBAR_UEV_PS
    }

    pub fn coherent_fraction(&self, tau: f64) -> f64 {
        self.coherence
            .coherent_fraction(tau, self.exciton_lifetime_tau_x)
    }

    /// Delay after which the phase has advanced by 2π, `2πℏ/|S|`; infinite when `S = 0`.
    pub fn phase_period(&self) -> f64 {
        std::f64::consts::TAU * HBAR_UEV_PS / self.splitting_s.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn bell_vectors_match_definitions() {
        let s = FRAC_1_SQRT_2;
        let plus = bell_vector(BellTarget::PsiPlus);
        assert_eq!(
            plus,
            [Complex64::new(s, 0.0), ZERO, ZERO, Complex64::new(s, 0.0)]
        );
        let minus = bell_vector(BellTarget::PsiMinus);
        assert_eq!(minus[3], Complex64::new(-s, 0.0));
        let quarter = bell_vector(BellTarget::PsiPhase(std::f64::consts::FRAC_PI_2));
        assert_abs_diff_eq!(quarter[3].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(quarter[3].im, s, epsilon = 1e-15);
        assert_abs_diff_eq!(norm(&plus), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner(&plus, &minus).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_targets_reduce_to_psi_plus_and_minus() {
        let a = bell_vector(BellTarget::PsiPhase(0.0));
        let b = bell_vector(BellTarget::PsiPhase(std::f64::consts::PI));
        for k in 0..4 {
            assert!((a[k] - bell_vector(BellTarget::PsiPlus)[k]).norm() < 1e-12);
            assert!((b[k] - bell_vector(BellTarget::PsiMinus)[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn analyzer_pairs_are_orthonormal_and_resolve_identity() {
        for basis in PolarizationBasis::ALL {
            let (p, m) = analyzer_states(basis);
            assert_abs_diff_eq!(norm(&p), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(norm(&m), 1.0, epsilon = 1e-12);
            assert!(inner(&p, &m).norm() < 1e-12);

            let mut sum = [[ZERO; 4]; 4];
            for a in [&p, &m] {
                for b in [&p, &m] {
                    let v = kron2(a, b);
                    for i in 0..4 {
                        for j in 0..4 {
                            sum[i][j] += v[i] * v[j].conj();
                        }
                    }
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    let expected = if i == j { ONE } else { ZERO };
                    assert!((sum[i][j] - expected).norm() < 1e-12, "{basis} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn analyzer_examples() {
        let s = FRAC_1_SQRT_2;
        let (r, l) = analyzer_states(PolarizationBasis::Circular);
        assert_eq!(r[1], Complex64::new(0.0, s));
        assert_eq!(l[1], Complex64::new(0.0, -s));
        let (d, a) = analyzer_states(PolarizationBasis::Diagonal);
        assert_eq!(d[1].re, s);
        assert_eq!(a[1].re, -s);
    }

    #[test]
    fn source_model_rejects_bad_parameters() {
        assert!(SourceModel::constant(2.5, 0.0, 0.0, 0.5).is_err());
        assert!(SourceModel::constant(2.5, 769.0, -1.0, 0.5).is_err());
        assert!(SourceModel::constant(2.5, 769.0, 0.0, 1.2).is_err());
        assert!(SourceModel::constant(-2.5, 769.0, 0.0, 0.5).is_ok());
        let bad = CoherenceModel::Decaying {
            background_ratio_beta: 0.1,
            background_lifetime_tau_b: 0.0,
            spin_scattering_tau_ss: 8000.0,
        };
        assert!(SourceModel::new(2.5, 769.0, 0.0, bad).is_err());
    }

    #[test]
    fn decaying_coherence_stays_in_unit_interval() {
        let model = CoherenceModel::Decaying {
            background_ratio_beta: 0.3,
            background_lifetime_tau_b: 5000.0,
            spin_scattering_tau_ss: 8000.0,
        };
        let mut last = f64::INFINITY;
        for i in 0..2000 {
            let tau = i as f64 * 50.0;
            let v = model.coherent_fraction(tau, 769.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= last);
            last = v;
        }
        // Equal lifetimes make k constant.
        let flat = CoherenceModel::Decaying {
            background_ratio_beta: 0.25,
            background_lifetime_tau_b: 769.0,
            spin_scattering_tau_ss: f64::INFINITY,
        };
        assert_abs_diff_eq!(flat.coherent_fraction(3000.0, 769.0), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn from_entries_rejects_non_hermitian() {
        let mut e = *TwoPhotonDensityMatrix::x_state(0.5, Complex64::new(0.3, 0.1)).entries();
        assert!(TwoPhotonDensityMatrix::from_entries(e).is_ok());
        e[0][3] = Complex64::new(0.3, 0.1);
        assert!(TwoPhotonDensityMatrix::from_entries(e).is_err());
    }
}
