//! One- and two-photon polarization states and density operators.
//!
//! Every module shares a fixed basis: single photons use `{V, H}` with indices
//! 0 and 1, and photon pairs use `{VV, VH, HV, HH}`, where the first letter is
//! the photon in output port 1 and the second the photon in output port 2.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::C64;

/// Absolute tolerance for Hermiticity and positivity checks.
pub const TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    V,
    H,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::V, Polarization::H];

    pub fn index(self) -> usize {
        match self {
            Polarization::V => 0,
            Polarization::H => 1,
        }
    }

    pub fn label(self) -> char {
        match self {
            Polarization::V => 'V',
            Polarization::H => 'H',
        }
    }
}

/// Beam-splitter output port.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Port {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Port {
    pub fn other(self) -> Port {
        match self {
            Port::One => Port::Two,
            Port::Two => Port::One,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Port::One => 1,
            Port::Two => 2,
        }
    }
}

/// Single-photon polarization state `c_V |V⟩ + c_H |H⟩`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PolarizationKet {
    amps: [C64; 2],
}

impl PolarizationKet {
    pub const V: PolarizationKet = PolarizationKet { amps: [ONE, ZERO] };
    pub const H: PolarizationKet = PolarizationKet { amps: [ZERO, ONE] };

    /// Raw constructor; the amplitudes are not normalized.
    pub fn new(v: C64, h: C64) -> Self {
        Self { amps: [v, h] }
    }

    pub fn basis(p: Polarization) -> Self {
        match p {
            Polarization::V => Self::V,
            Polarization::H => Self::H,
        }
    }

    /// `cos(θ/2)|V⟩ + sin(θ/2) e^{iφ}|H⟩`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new(C64::new(c, 0.0), C64::from_polar(s, phi))
    }

    /// Diagonal `(|V⟩+|H⟩)/√2`.
    pub fn diagonal() -> Self {
        Self::from_angles(std::f64::consts::FRAC_PI_2, 0.0)
    }

    /// Anti-diagonal `(|V⟩−|H⟩)/√2`, i.e. linear polarization at −45°.
    pub fn antidiagonal() -> Self {
        Self::from_angles(std::f64::consts::FRAC_PI_2, std::f64::consts::PI)
    }

    /// `(|V⟩+i|H⟩)/√2`.
    pub fn right() -> Self {
        Self::from_angles(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
    }

    /// `(|V⟩−i|H⟩)/√2`.
    pub fn left() -> Self {
        Self::from_angles(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2)
    }

    pub fn amp(&self, p: Polarization) -> C64 {
        self.amps[p.index()]
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self::new(self.amps[0] / n, self.amps[1] / n)
    }

    /// Poincaré-sphere angles `(θ, φ)` of the ray, with `θ ∈ [0, π]`.
    pub fn angles(&self) -> (f64, f64) {
        let n = self.normalized();
        let theta = 2.0 * n.amps[0].norm().clamp(0.0, 1.0).acos();
        let phi = if n.amps[1].norm() < 1e-15 || n.amps[0].norm() < 1e-15 {
            if n.amps[0].norm() < 1e-15 { n.amps[1].arg() } else { 0.0 }
        } else {
            n.amps[1].arg() - n.amps[0].arg()
        };
        (theta, phi)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    /// The orthogonal state `−c_H* |V⟩ + c_V* |H⟩`.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.amps[1].conj(), self.amps[0].conj())
    }

    /// Ray equality: `|⟨a|b⟩| ≥ 1 − 1e-10` for normalized kets.
    pub fn same_ray(&self, other: &Self) -> bool {
        self.inner(other).norm() >= 1.0 - TOL
    }

    pub fn projector(&self) -> DensityOperator {
        let m = DMatrix::from_fn(2, 2, |i, j| self.amps[i] * self.amps[j].conj());
        DensityOperator { m }
    }
}

/// `cos(θ/2)|V⟩ + sin(θ/2) e^{iφ}|H⟩`.
pub fn ket_from_angles(theta: f64, phi: f64) -> PolarizationKet {
    PolarizationKet::from_angles(theta, phi)
}

/// Two-photon amplitude vector over `{VV, VH, HV, HH}`; possibly unnormalized.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TwoPhotonState {
    amps: [C64; 4],
}

impl TwoPhotonState {
    pub fn new(amps: [C64; 4]) -> Self {
        Self { amps }
    }

    pub fn zero() -> Self {
        Self { amps: [ZERO; 4] }
    }

    /// Basis index of `|p1, p2⟩`.
    pub fn index(p1: Polarization, p2: Polarization) -> usize {
        2 * p1.index() + p2.index()
    }

    /// Inverse of [`TwoPhotonState::index`].
    pub fn polarizations(idx: usize) -> (Polarization, Polarization) {
        let pol = |i| if i == 0 { Polarization::V } else { Polarization::H };
        (pol(idx / 2), pol(idx % 2))
    }

    pub fn basis(p1: Polarization, p2: Polarization) -> Self {
        let mut s = Self::zero();
        s.amps[Self::index(p1, p2)] = ONE;
        s
    }

    pub fn amp(&self, p1: Polarization, p2: Polarization) -> C64 {
        self.amps[Self::index(p1, p2)]
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64; 4] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, k: C64) -> Self {
        Self::new(self.amps.map(|a| a * k))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        out.amps.iter_mut().zip(other.amps).for_each(|(a, b)| *a += b);
        out
    }

    /// Column vector view.
    pub fn to_vector(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(4, 1, &self.amps)
    }

    /// `|ψ⟩⟨ψ|` without normalization.
    pub fn outer(&self) -> DensityOperator {
        let m = DMatrix::from_fn(4, 4, |i, j| self.amps[i] * self.amps[j].conj());
        DensityOperator { m }
    }
}

/// Kronecker product `a ⊗ b` (port 1 ⊗ port 2).
pub fn tensor(a: &PolarizationKet, b: &PolarizationKet) -> TwoPhotonState {
    let (a, b) = (a.amplitudes(), b.amplitudes());
    TwoPhotonState::new([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
}

/// Hermitian operator on a polarization space. The trace is not forced to one:
/// post-selected outputs carry the success probability in their trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    m: DMatrix<C64>,
}

impl DensityOperator {
    /// Wraps a square matrix after checking Hermiticity within [`TOL`].
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let dev = hermitian_deviation(&m);
        if dev > TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { m: &self.m * C64::new(k, 0.0) }
    }

    /// Rescaled to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr.abs() < f64::MIN_POSITIVE {
            return Err(Error::ZeroTrace);
        }
        Ok(self.scaled(1.0 / tr))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// `⟨ψ|ρ|ψ⟩` for a vector in this operator's space.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += v[i].conj() * self.m[(i, j)] * v[j];
            }
        }
        acc.re
    }

    /// Checks Hermiticity, positivity and (optionally) unit trace within [`TOL`].
    pub fn validate(&self, unit_trace: bool) -> Result<()> {
        let dev = hermitian_deviation(&self.m);
        if dev > TOL {
            return Err(Error::NotHermitian(dev));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -TOL {
            return Err(Error::NotPositive(min));
        }
        if unit_trace && (self.trace() - 1.0).abs() > TOL {
            return Err(crate::error::invalid("trace", format!("expected 1, got {}", self.trace())));
        }
        Ok(())
    }
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Reduced state of one output port of a two-photon operator.
pub fn partial_trace(rho: &DensityOperator, keep: Port) -> Result<DensityOperator> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let m = rho.matrix();
    let out = DMatrix::from_fn(2, 2, |a, b| {
        (0..2)
            .map(|c| match keep {
                Port::One => m[(2 * a + c, 2 * b + c)],
                Port::Two => m[(2 * c + a, 2 * c + b)],
            })
            .sum()
    });
    Ok(DensityOperator { m: out })
}

/// `⟨ψ|ρ|ψ⟩` for a single-photon ket.
pub fn fidelity_pure(psi: &PolarizationKet, rho: &DensityOperator) -> f64 {
    rho.expectation(&psi.amplitudes())
}
