//! Optical elements: waveplates, the polarization-dependent beam splitter with
//! post-selection on one photon per output port, the glass-plate filter, and
//! the partially distinguishable two-photon model.
//!
//! Mode convention. The signal photon enters input port A and the ancilla
//! input port B. Per polarization `p` the creation operators transform as
//!
//! ```text
//! a_p → t_p·(port 1) + r_p·(port 2)
//! b_p → r_p·(port 1) − t_p·(port 2)
//! ```
//!
//! so the mode matrix `[[t_p, r_p], [r_p, −t_p]]` is real orthogonal. Keeping
//! one photon in each output port leaves two branches: both photons reflected
//! (the polarizations swap ports) and both transmitted.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{invalid, Error, Result};
use crate::qstate::{DensityOperator, PolarizationKet, Polarization, Port, TwoPhotonState};
use crate::C64;

const LOSSLESS_TOL: f64 = 1e-12;

/// 2×2 polarization transfer matrix in the `{V, H}` basis.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct JonesMatrix(pub Matrix2<C64>);

impl JonesMatrix {
    pub fn apply(&self, k: &PolarizationKet) -> PolarizationKet {
        let [v, h] = k.amplitudes();
        let m = &self.0;
        PolarizationKet::new(m[(0, 0)] * v + m[(0, 1)] * h, m[(1, 0)] * v + m[(1, 1)] * h)
    }

    pub fn then(&self, next: &JonesMatrix) -> JonesMatrix {
        JonesMatrix(next.0 * self.0)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm() < tol
    }
}

fn retarder(axis_angle: f64, slow: C64) -> JonesMatrix {
    let (s, c) = axis_angle.sin_cos();
    let rot = Matrix2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0));
    let diag = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), slow);
    JonesMatrix(rot * diag * rot.transpose())
}

/// Half-wave plate with its fast axis at `axis_angle` from vertical:
/// `[[cos 2ϑ, sin 2ϑ], [sin 2ϑ, −cos 2ϑ]]`.
pub fn hwp(axis_angle: f64) -> JonesMatrix {
    retarder(axis_angle, C64::new(-1.0, 0.0))
}

/// Quarter-wave plate with eigenvalues `{1, i}` along its axes.
pub fn qwp(axis_angle: f64) -> JonesMatrix {
    retarder(axis_angle, C64::new(0.0, 1.0))
}

/// Real signed amplitude reflectances and transmittances of the splitter.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BeamSplitterSpec {
    r_v: f64,
    t_v: f64,
    r_h: f64,
    t_h: f64,
}

impl BeamSplitterSpec {
    /// Fails unless `r² + t² = 1` for both polarizations.
    pub fn new(r_v: f64, t_v: f64, r_h: f64, t_h: f64) -> Result<Self> {
        for (name, r, t) in [("V", r_v, t_v), ("H", r_h, t_h)] {
            if !(r.is_finite() && t.is_finite()) {
                return Err(Error::InvalidSplitter(format!("non-finite amplitude for {name}")));
            }
            let dev = (r * r + t * t - 1.0).abs();
            if dev > LOSSLESS_TOL {
                return Err(Error::InvalidSplitter(format!(
                    "r_{name}² + t_{name}² deviates from 1 by {dev:e}"
                )));
            }
        }
        Ok(Self { r_v, t_v, r_h, t_h })
    }

    /// Builds a splitter from intensity reflectances. All amplitudes are
    /// non-negative except `t_H`, which is negative when `t_h_negative`.
    pub fn from_reflectances(reflectance_v: f64, reflectance_h: f64, t_h_negative: bool) -> Result<Self> {
        for (name, r) in [("R_V", reflectance_v), ("R_H", reflectance_h)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidSplitter(format!("{name} = {r} outside [0, 1]")));
            }
        }
        let sign = if t_h_negative { -1.0 } else { 1.0 };
        Self::new(
            reflectance_v.sqrt(),
            (1.0 - reflectance_v).sqrt(),
            reflectance_h.sqrt(),
            sign * (1.0 - reflectance_h).sqrt(),
        )
    }

    /// The manufactured splitter: 76:24 for V, 18:82 for H, with `t_H < 0`.
    pub fn measured() -> Self {
        Self::from_reflectances(0.76, 0.18, true).expect("valid intensities")
    }

    /// 50:50 for both polarizations.
    pub fn balanced() -> Self {
        Self::from_reflectances(0.5, 0.5, true).expect("valid intensities")
    }

    pub fn r_v(&self) -> f64 {
        self.r_v
    }
    pub fn t_v(&self) -> f64 {
        self.t_v
    }
    pub fn r_h(&self) -> f64 {
        self.r_h
    }
    pub fn t_h(&self) -> f64 {
        self.t_h
    }

    /// `R_V = r_V²`.
    pub fn reflectance_v(&self) -> f64 {
        self.r_v * self.r_v
    }
    /// `T_V = t_V²`.
    pub fn transmittance_v(&self) -> f64 {
        self.t_v * self.t_v
    }
    /// `R_H = r_H²`.
    pub fn reflectance_h(&self) -> f64 {
        self.r_h * self.r_h
    }
    /// `T_H = t_H²`.
    pub fn transmittance_h(&self) -> f64 {
        self.t_h * self.t_h
    }

    pub fn r(&self, p: Polarization) -> f64 {
        match p {
            Polarization::V => self.r_v,
            Polarization::H => self.r_h,
        }
    }

    pub fn t(&self, p: Polarization) -> f64 {
        match p {
            Polarization::V => self.t_v,
            Polarization::H => self.t_h,
        }
    }

    /// Amplitude product of the both-reflected branch for an H signal and V
    /// ancilla, `r_H r_V`.
    pub fn swap_product(&self) -> f64 {
        self.r_h * self.r_v
    }

    /// Amplitude product of the both-transmitted branch, `t_H t_V`.
    pub fn pass_product(&self) -> f64 {
        self.t_h * self.t_v
    }
}

/// Linear operator on the two-photon space, input `|signal, ancilla⟩` to
/// output `|port 1, port 2⟩` in the shared basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonMap {
    m: DMatrix<C64>,
}

impl TwoPhotonMap {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(Error::DimensionMismatch { expected: 4, got: m.nrows() });
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn apply(&self, s: &TwoPhotonState) -> TwoPhotonState {
        let a = s.amplitudes();
        let mut out = [C64::new(0.0, 0.0); 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.m[(i, j)] * a[j]).sum();
        }
        TwoPhotonState::new(out)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &TwoPhotonMap) -> TwoPhotonMap {
        TwoPhotonMap { m: &next.m * &self.m }
    }

    /// `A ρ A†`.
    pub fn conjugate(&self, rho: &DensityOperator) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(&self.m * rho.matrix() * self.m.adjoint())
    }
}

fn map_from_fn(f: impl Fn(Polarization, Polarization) -> (usize, f64)) -> TwoPhotonMap {
    let mut m = DMatrix::zeros(4, 4);
    for p in Polarization::ALL {
        for q in Polarization::ALL {
            let (row, amp) = f(p, q);
            m[(row, TwoPhotonState::index(p, q))] += C64::new(amp, 0.0);
        }
    }
    TwoPhotonMap { m }
}

/// Both photons reflected: `|p, q⟩ → r_p r_q |q, p⟩`.
pub fn swap_branch(spec: &BeamSplitterSpec) -> TwoPhotonMap {
    map_from_fn(|p, q| (TwoPhotonState::index(q, p), spec.r(p) * spec.r(q)))
}

/// Both photons transmitted: `|p, q⟩ → −t_p t_q |p, q⟩`.
pub fn pass_branch(spec: &BeamSplitterSpec) -> TwoPhotonMap {
    map_from_fn(|p, q| (TwoPhotonState::index(p, q), -spec.t(p) * spec.t(q)))
}

/// Post-selected (one photon per output port) amplitude map
/// `M|p,q⟩ = r_p r_q |q,p⟩ − t_p t_q |p,q⟩`.
pub fn conditional_bs_map(spec: &BeamSplitterSpec) -> TwoPhotonMap {
    let (s, p) = (swap_branch(spec), pass_branch(spec));
    TwoPhotonMap { m: s.m + p.m }
}

/// Glass-plate filter in one output port with amplitude transmittances
/// `η_V`, `η_H`.
#[derive(Copy, Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterSpec {
    eta_v: f64,
    eta_h: f64,
    port: Port,
}

impl FilterSpec {
    pub fn new(eta_v: f64, eta_h: f64, port: Port) -> Result<Self> {
        for (name, eta) in [("eta_v", eta_v), ("eta_h", eta_h)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(invalid(name, format!("{eta} outside [0, 1]")));
            }
        }
        Ok(Self { eta_v, eta_h, port })
    }

    /// Transparent plate.
    pub fn unit(port: Port) -> Self {
        Self { eta_v: 1.0, eta_h: 1.0, port }
    }

    pub fn eta_v(&self) -> f64 {
        self.eta_v
    }
    pub fn eta_h(&self) -> f64 {
        self.eta_h
    }
    pub fn port(&self) -> Port {
        self.port
    }

    pub fn eta(&self, p: Polarization) -> f64 {
        match p {
            Polarization::V => self.eta_v,
            Polarization::H => self.eta_h,
        }
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.eta_v - 1.0).abs() <= tol && (self.eta_h - 1.0).abs() <= tol
    }

    /// Amplitude factor picked up by basis state `idx` of the output.
    pub fn factor(&self, idx: usize) -> f64 {
        let (p1, p2) = TwoPhotonState::polarizations(idx);
        match self.port {
            Port::One => self.eta(p1),
            Port::Two => self.eta(p2),
        }
    }

    pub fn as_map(&self) -> TwoPhotonMap {
        let d = nalgebra::DVector::from_fn(4, |i, _| C64::new(self.factor(i), 0.0));
        TwoPhotonMap { m: DMatrix::from_diagonal(&d) }
    }
}

/// Multiplies each amplitude by `η_V` or `η_H` according to the polarization
/// of the photon in the filtered port.
pub fn apply_filter(state: &TwoPhotonState, f: &FilterSpec) -> TwoPhotonState {
    let mut out = *state;
    for (i, a) in out.amplitudes_mut().iter_mut().enumerate() {
        *a *= f.factor(i);
    }
    out
}

/// Output for fully distinguishable photons: the swap and pass branches add
/// incoherently. Trace is the classical probability of one photon per port.
pub fn conditional_bs_distinguishable(spec: &BeamSplitterSpec, input: &TwoPhotonState) -> DensityOperator {
    let rho = input.outer();
    let a = swap_branch(spec).conjugate(&rho);
    let b = pass_branch(spec).conjugate(&rho);
    DensityOperator::from_matrix_unchecked(a.into_matrix() + b.into_matrix())
}

/// Kraus operators (acting on the two-photon input) of the post-selected,
/// filtered, partially distinguishable interference. Weights are folded in.
pub fn output_kraus(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    visibility: f64,
) -> Result<Vec<TwoPhotonMap>> {
    check_visibility(visibility)?;
    let filt = filter.map(FilterSpec::as_map);
    let with_filter = |m: TwoPhotonMap| match &filt {
        Some(f) => m.then(f),
        None => m,
    };
    let scale = |m: TwoPhotonMap, w: f64| TwoPhotonMap { m: m.m * C64::new(w.sqrt(), 0.0) };
    let mut ops = Vec::with_capacity(3);
    if visibility > 0.0 {
        ops.push(scale(with_filter(conditional_bs_map(spec)), visibility));
    }
    if visibility < 1.0 {
        ops.push(scale(with_filter(swap_branch(spec)), 1.0 - visibility));
        ops.push(scale(with_filter(pass_branch(spec)), 1.0 - visibility));
    }
    Ok(ops)
}

fn check_visibility(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid("visibility", format!("{v} outside [0, 1]")));
    }
    Ok(())
}

/// `V·(Mψ)(Mψ)† + (1−V)·ρ_dist`, with the filter applied to both terms.
/// Unnormalized: the trace is the success probability.
pub fn interfered_output(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    input: &TwoPhotonState,
    visibility: f64,
) -> Result<DensityOperator> {
    let rho = input.outer();
    let mut acc = DMatrix::zeros(4, 4);
    for k in output_kraus(spec, filter, visibility)? {
        acc += k.conjugate(&rho).into_matrix();
    }
    Ok(DensityOperator::from_matrix_unchecked(acc))
}

/// Mixed-input variant of [`interfered_output`] for `ρ_signal ⊗ ρ_ancilla`
/// style inputs given as a 4×4 operator.
pub fn interfered_output_mixed(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    input: &DensityOperator,
    visibility: f64,
) -> Result<DensityOperator> {
    if input.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: input.dim() });
    }
    let mut acc = DMatrix::zeros(4, 4);
    for k in output_kraus(spec, filter, visibility)? {
        acc += k.conjugate(input).into_matrix();
    }
    Ok(DensityOperator::from_matrix_unchecked(acc))
}
