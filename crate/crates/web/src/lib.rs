//! Browser bindings for the biphoton simulator.
//!
//! Every export returns a flat `Float64Array` of interleaved columns so the
//! page can plot without any deserialisation layer.

use biphoton::spectral::truncated_linewidth;
use biphoton::{
    fidelity_curve, fwhm, truncated_decay_spectrum, BellTarget, EnergyGrid, GateWindow,
    SourceModel, HBAR_UEV_PS,
};
use wasm_bindgen::prelude::*;

fn linspace(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![start];
    }
    let step = (end - start) / (points - 1) as f64;
    (0..points).map(|k| start + k as f64 * step).collect()
}

fn curve(model: &SourceModel, gates: &[GateWindow]) -> biphoton::Result<Vec<(f64, f64)>> {
    Ok(fidelity_curve(gates, model, BellTarget::PsiPlus)?
        .into_iter()
        .map(|p| (p.fidelity, p.retained_fraction))
        .collect())
}

/// `[τ_g, fidelity, …]` for gates `[τ_g, τ_g + w)` with `τ_g` from 0 to `max_delay`.
pub fn delay_scan_rows(
    splitting: f64,
    tau_x: f64,
    jitter_fwhm: f64,
    v: f64,
    w: f64,
    max_delay: f64,
    points: usize,
) -> biphoton::Result<Vec<f64>> {
    let model = SourceModel::constant(splitting, tau_x, jitter_fwhm, v)?;
    let delays = linspace(0.0, max_delay, points);
    let gates = delays
        .iter()
        .map(|&d| GateWindow::new(d, w))
        .collect::<biphoton::Result<Vec<_>>>()?;
    let values = curve(&model, &gates)?;
    Ok(delays
        .iter()
        .zip(values)
        .flat_map(|(&d, (f, _))| [d, f])
        .collect())
}

/// `[w, fidelity, retained_fraction, …]` for gates `[τ_g, τ_g + w)`.
pub fn width_scan_rows(
    splitting: f64,
    tau_x: f64,
    jitter_fwhm: f64,
    v: f64,
    tau_g: f64,
    max_width: f64,
    points: usize,
) -> biphoton::Result<Vec<f64>> {
    let model = SourceModel::constant(splitting, tau_x, jitter_fwhm, v)?;
    let widths = linspace(max_width / points.max(1) as f64, max_width, points);
    let gates = widths
        .iter()
        .map(|&w| GateWindow::new(tau_g, w))
        .collect::<biphoton::Result<Vec<_>>>()?;
    let values = curve(&model, &gates)?;
    Ok(widths
        .iter()
        .zip(values)
        .flat_map(|(&w, (f, r))| [w, f, r])
        .collect())
}

/// `[fwhm, E₀, P₀, E₁, P₁, …]`: the linewidth followed by the normalised
/// spectrum over ±`span` natural linewidths.
pub fn spectrum_rows(
    tau_x: f64,
    t_cut: f64,
    span: f64,
    points: usize,
) -> biphoton::Result<Vec<f64>> {
    let half = span * HBAR_UEV_PS / tau_x;
    let grid = EnergyGrid {
        e_min: -half,
        e_max: half,
        n_points: points,
    };
    let spectrum = truncated_decay_spectrum(tau_x, t_cut, &grid)?.normalized();
    let width = match fwhm(&spectrum) {
        Ok(w) => w,
        Err(_) => truncated_linewidth(tau_x, t_cut)?,
    };
    let mut out = Vec::with_capacity(1 + 2 * points);
    out.push(width);
    out.extend(
        spectrum
            .energies
            .iter()
            .zip(&spectrum.power)
            .flat_map(|(&e, &p)| [e, p]),
    );
    Ok(out)
}

fn to_js(e: biphoton::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = delayScan)]
pub fn delay_scan(
    splitting: f64,
    tau_x: f64,
    jitter_fwhm: f64,
    v: f64,
    w: f64,
    max_delay: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    delay_scan_rows(splitting, tau_x, jitter_fwhm, v, w, max_delay, points).map_err(to_js)
}

#[wasm_bindgen(js_name = widthScan)]
pub fn width_scan(
    splitting: f64,
    tau_x: f64,
    jitter_fwhm: f64,
    v: f64,
    tau_g: f64,
    max_width: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    width_scan_rows(splitting, tau_x, jitter_fwhm, v, tau_g, max_width, points).map_err(to_js)
}

#[wasm_bindgen]
pub fn spectrum(tau_x: f64, t_cut: f64, span: f64, points: usize) -> Result<Vec<f64>, JsError> {
    spectrum_rows(tau_x, t_cut, span, points).map_err(to_js)
}

#[wasm_bindgen(js_name = phasePeriod)]
pub fn phase_period(splitting: f64) -> f64 {
    std::f64::consts::TAU * HBAR_UEV_PS / splitting.abs()
}
