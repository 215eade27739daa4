//! Analytic cloning figures: optimal splitter, clone fidelities, success
//! probability, theory curves and the symmetrizing filter.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::optics::{interfered_output, BeamSplitterSpec, FilterSpec};
use crate::qstate::{fidelity_pure, partial_trace, tensor, Port, PolarizationKet, TwoPhotonState};

/// Optimal phase-covariant clone fidelity `½(1 + 1/√2)`.
pub const F_PHASE_COVARIANT: f64 = 0.5 * (1.0 + FRAC_1_SQRT_2);
/// Optimal universal 1→2 clone fidelity.
pub const F_UNIVERSAL: f64 = 5.0 / 6.0;
/// Measure-and-prepare baseline for equatorial states.
pub const F_ESTIMATION: f64 = 0.75;

/// Default number of grid points per angle.
pub const DEFAULT_GRID: usize = 64;

/// Splitter that realises the optimal cloner: `R_V = ½(1 + 1/√3)`,
/// `r_H = t_V`, `t_H = −r_V`.
pub fn optimal_spec() -> BeamSplitterSpec {
    let inv = 1.0 / 3f64.sqrt();
    let r_v = (0.5 * (1.0 + inv)).sqrt();
    let t_v = (0.5 * (1.0 - inv)).sqrt();
    BeamSplitterSpec::new(r_v, t_v, t_v, -r_v).expect("optimal splitter is lossless")
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CloneReport {
    pub theta: f64,
    pub phi: f64,
    pub f1: f64,
    pub f2: f64,
    pub p_succ: f64,
}

/// Clone fidelities and success probability for signal `ψ(θ, φ)` with a
/// vertically polarized ancilla.
pub fn clone_fidelities(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    theta: f64,
    phi: f64,
    visibility: f64,
) -> Result<CloneReport> {
    clone_fidelities_with_ancilla(spec, filter, theta, phi, visibility, &PolarizationKet::V)
}

pub fn clone_fidelities_with_ancilla(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    theta: f64,
    phi: f64,
    visibility: f64,
    ancilla: &PolarizationKet,
) -> Result<CloneReport> {
    let psi = PolarizationKet::from_angles(theta, phi);
    let out = interfered_output(spec, filter, &tensor(&psi, ancilla), visibility)?;
    let p_succ = out.trace();
    if p_succ <= 1e-300 {
        return Err(Error::ZeroSuccess);
    }
    let rho = out.scaled(1.0 / p_succ);
    let f1 = fidelity_pure(&psi, &partial_trace(&rho, Port::One)?);
    let f2 = fidelity_pure(&psi, &partial_trace(&rho, Port::Two)?);
    Ok(CloneReport { theta, phi, f1, f2, p_succ })
}

/// One-parameter cut through the Poincaré sphere.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    /// φ varies, θ fixed.
    Phi { theta: f64, grid: Vec<f64> },
    /// θ varies, φ fixed.
    Theta { phi: f64, grid: Vec<f64> },
}

impl Sweep {
    /// `n` values of φ in `[0, 2π)` at fixed θ.
    pub fn phi(theta: f64, n: usize) -> Self {
        Sweep::Phi { theta, grid: periodic_grid(n) }
    }

    /// `n` values of θ in `[0, 2π)` at fixed φ, covering both hemispheres as
    /// in the θ-scans of the experiment.
    pub fn theta(phi: f64, n: usize) -> Self {
        Sweep::Theta { phi, grid: periodic_grid(n) }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        match self {
            Sweep::Phi { theta, grid } => grid.iter().map(|&p| (*theta, p)).collect(),
            Sweep::Theta { phi, grid } => grid.iter().map(|&t| (t, *phi)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Phi { grid, .. } | Sweep::Theta { grid, .. } => grid.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `n` evenly spaced points in `[0, 2π)`.
pub fn periodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// `n` evenly spaced points in `[0, π]` (inclusive).
pub fn polar_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn theoretical_curve(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    sweep: &Sweep,
    visibility: f64,
) -> Result<Vec<CloneReport>> {
    if sweep.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    sweep
        .points()
        .into_iter()
        .map(|(t, p)| clone_fidelities(spec, filter, t, p, visibility))
        .collect()
}

/// Filter that equalizes the two clones.
pub fn symmetrize(spec: &BeamSplitterSpec) -> Result<FilterSpec> {
    symmetrize_filtered(spec, None)
}

/// Additional filter that equalizes the clones of a setup which may already
/// carry a filter. A unit filter means the setup is already symmetric.
///
/// The swap branch leaves `|VH⟩` and the pass branch `|HV⟩`; the plate goes
/// into the port where the larger branch carries the H photon and attenuates
/// only H, so `η_V = 1` and `η_H ≤ 1`. Clones become identical when the two
/// branch amplitudes share a sign (true for the cloning-compatible `t_H < 0`);
/// otherwise only the magnitudes are matched.
pub fn symmetrize_filtered(spec: &BeamSplitterSpec, existing: Option<&FilterSpec>) -> Result<FilterSpec> {
    let swap = spec.swap_product().abs();
    let pass = spec.pass_product().abs();
    if swap == 0.0 || pass == 0.0 {
        return Err(Error::DegenerateSplitter(format!(
            "|r_H r_V| = {swap}, |t_H t_V| = {pass}; no finite filter balances the clones"
        )));
    }
    let vh = TwoPhotonState::index(crate::qstate::Polarization::V, crate::qstate::Polarization::H);
    let hv = TwoPhotonState::index(crate::qstate::Polarization::H, crate::qstate::Polarization::V);
    let (swap, pass) = match existing {
        Some(f) => (swap * f.factor(vh), pass * f.factor(hv)),
        None => (swap, pass),
    };
    if swap == 0.0 || pass == 0.0 {
        return Err(Error::DegenerateSplitter("existing filter blocks a branch".into()));
    }
    if swap <= pass {
        // The H photon of |HV⟩ sits in port 1.
        FilterSpec::new(1.0, swap / pass, Port::One)
    } else {
        FilterSpec::new(1.0, pass / swap, Port::Two)
    }
}

/// Mean `F₁ − F₂` over the equator.
pub fn equatorial_gap(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    visibility: f64,
    ancilla: &PolarizationKet,
) -> Result<f64> {
    let grid = periodic_grid(EQUALIZE_GRID);
    let mut sum = 0.0;
    for &phi in &grid {
        let r = clone_fidelities_with_ancilla(spec, filter, FRAC_PI_2, phi, visibility, ancilla)?;
        sum += r.f1 - r.f2;
    }
    Ok(sum / grid.len() as f64)
}

const EQUALIZE_GRID: usize = 16;

/// Plate tilted until the mean equatorial clone fidelities coincide at the
/// given visibility and ancilla.
///
/// At `V = 1` with a `|V⟩` ancilla this is the filter of [`symmetrize`]. Below
/// that, the distinguishable branches break the amplitude balance and the
/// ratio has to be found numerically: the plate attenuates H in front of the
/// better clone, with `η_H` set by bisection on the equatorial gap.
pub fn equalizing_filter(spec: &BeamSplitterSpec, visibility: f64, ancilla: &PolarizationKet) -> Result<FilterSpec> {
    let g0 = equatorial_gap(spec, None, visibility, ancilla)?;
    if g0.abs() < 1e-13 {
        return Ok(FilterSpec::unit(Port::One));
    }
    let port = if g0 > 0.0 { Port::One } else { Port::Two };
    let gap = |x: f64| -> Result<f64> {
        let f = FilterSpec::new(1.0, x, port)?;
        equatorial_gap(spec, Some(&f), visibility, ancilla)
    };
    let (mut lo, mut hi) = (1e-3, 1.0);
    if gap(lo)?.signum() == g0.signum() {
        return Err(Error::DegenerateSplitter(format!(
            "attenuating H on port {} does not equalize the clones",
            port.number()
        )));
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)?.signum() == g0.signum() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    FilterSpec::new(1.0, 0.5 * (lo + hi), port)
}

/// `(max − min) / max` of the success probability over `θ ∈ [0, π]`,
/// `φ ∈ [0, 2π)` on the default grid.
pub fn success_variation(spec: &BeamSplitterSpec, filter: Option<&FilterSpec>, visibility: f64) -> Result<f64> {
    success_variation_on_grid(spec, filter, visibility, DEFAULT_GRID)
}

pub fn success_variation_on_grid(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    visibility: f64,
    n: usize,
) -> Result<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in &polar_grid(n) {
        for &p in &periodic_grid(n) {
            let r = clone_fidelities(spec, filter, t, p, visibility)?;
            lo = lo.min(r.p_succ);
            hi = hi.max(r.p_succ);
        }
    }
    if hi.is_nan() || hi <= 0.0 {
        return Err(Error::ZeroSuccess);
    }
    Ok((hi - lo) / hi)
}
