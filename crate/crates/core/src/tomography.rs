//! Choi operators of the cloning map and their maximum-likelihood
//! reconstruction.
//!
//! A map `E` on one input qubit with a two-photon output is represented by the
//! positive operator `E` on `H_in ⊗ H_out` (index `in·4 + out`) such that
//! `ρ_out = Tr_in[(ρ_inᵀ ⊗ 1) E]`. The post-selected cloner is trace
//! decreasing; for the reconstruction the output is extended by a sink level
//! `|S⟩` (index `in·5 + 4`) that collects the events lost to post-selection,
//! which makes the extended map trace preserving.

use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counts::{calibration_run, measure_point, Analyzer, Basis, CoincidenceRecord, NoiseModel, OUTCOMES};
use crate::error::{Error, Result};
use crate::optics::{output_kraus, BeamSplitterSpec, FilterSpec};
use crate::qstate::{hermitian_deviation, hermitian_eigenvalues, DensityOperator, PolarizationKet, TOL};
use crate::C64;

pub const IN_DIM: usize = 2;
pub const OUT_DIM: usize = 4;
pub const EXT_OUT_DIM: usize = 5;
const PROCESS_DIM: usize = IN_DIM * OUT_DIM;
const EXT_DIM: usize = IN_DIM * EXT_OUT_DIM;

/// Probability floor applied when a datum with positive frequency has a
/// vanishing predicted probability.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
const EIGEN_FLOOR: f64 = 1e-12;

/// Choi operator of a (generally trace-decreasing) map from one qubit to two.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessChoi {
    m: DMatrix<C64>,
}

impl ProcessChoi {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.shape() != (PROCESS_DIM, PROCESS_DIM) {
            return Err(Error::DimensionMismatch { expected: PROCESS_DIM, got: m.nrows() });
        }
        let dev = hermitian_deviation(&m);
        if dev > TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.m)[0]
    }

    pub fn rank(&self, tol: f64) -> usize {
        hermitian_eigenvalues(&self.m).iter().filter(|&&e| e > tol).count()
    }

    /// Rescaled to the given trace (display convention uses 2).
    pub fn normalized_to(&self, trace: f64) -> Result<Self> {
        let t = self.trace();
        if t.abs() < f64::MIN_POSITIVE {
            return Err(Error::ZeroTrace);
        }
        Ok(Self { m: &self.m * C64::new(trace / t, 0.0) })
    }

    fn check_positive(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < -TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }
}

/// Choi operator of a trace-preserving map onto the sink-extended output.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedChoi {
    m: DMatrix<C64>,
}

impl ExtendedChoi {
    /// `1/5` on the 10-dimensional space: the maximally mixed trace-preserving map.
    pub fn maximally_mixed() -> Self {
        Self { m: DMatrix::identity(EXT_DIM, EXT_DIM) * C64::new(1.0 / EXT_OUT_DIM as f64, 0.0) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// The 8×8 block without the sink rows and columns.
    pub fn process_block(&self) -> ProcessChoi {
        let idx = |k: usize| (k / OUT_DIM) * EXT_OUT_DIM + k % OUT_DIM;
        let m = DMatrix::from_fn(PROCESS_DIM, PROCESS_DIM, |i, j| self.m[(idx(i), idx(j))]);
        ProcessChoi { m }
    }

    /// `‖Tr_out E − 1‖` (Frobenius).
    pub fn trace_preservation_error(&self) -> f64 {
        (trace_out(&self.m, EXT_OUT_DIM) - DMatrix::identity(IN_DIM, IN_DIM)).norm()
    }
}

/// Partial trace over the output factor of an `in ⊗ out` operator.
fn trace_out(m: &DMatrix<C64>, out_dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(IN_DIM, IN_DIM, |i, j| (0..out_dim).map(|o| m[(i * out_dim + o, j * out_dim + o)]).sum())
}

/// `|E_opt⟩ = |V⟩|VV⟩ + (1/√2)|H⟩(|HV⟩ + |VH⟩)`.
pub fn ideal_choi_vector() -> [C64; PROCESS_DIM] {
    let mut v = [C64::new(0.0, 0.0); PROCESS_DIM];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = C64::new(1.0, 0.0); // V ⊗ VV
    v[OUT_DIM + 1] = C64::new(s, 0.0); // H ⊗ VH
    v[OUT_DIM + 2] = C64::new(s, 0.0); // H ⊗ HV
    v
}

/// `E_opt = |E_opt⟩⟨E_opt|`.
pub fn ideal_choi() -> ProcessChoi {
    let v = ideal_choi_vector();
    ProcessChoi { m: DMatrix::from_fn(PROCESS_DIM, PROCESS_DIM, |i, j| v[i] * v[j].conj()) }
}

/// `Σ_k |K_k⟩⟩⟨⟨K_k|` with `|K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩` for 4×2 Kraus operators.
pub fn choi_from_kraus(kraus: &[DMatrix<C64>]) -> Result<ProcessChoi> {
    let mut m = DMatrix::zeros(PROCESS_DIM, PROCESS_DIM);
    for k in kraus {
        if k.shape() != (OUT_DIM, IN_DIM) {
            return Err(Error::DimensionMismatch { expected: OUT_DIM, got: k.nrows() });
        }
        let v = DMatrix::from_fn(PROCESS_DIM, 1, |r, _| k[(r % OUT_DIM, r / OUT_DIM)]);
        m += &v * v.adjoint();
    }
    Ok(ProcessChoi { m })
}

/// Choi operator of the signal-to-clones map realised by a setup with a
/// fixed ancilla.
pub fn setup_choi(
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    ancilla: &PolarizationKet,
    visibility: f64,
) -> Result<ProcessChoi> {
    let a = ancilla.amplitudes();
    // |i⟩ ↦ |i⟩ ⊗ |ancilla⟩
    let embed = DMatrix::from_fn(OUT_DIM, IN_DIM, |r, i| if r / 2 == i { a[r % 2] } else { C64::new(0.0, 0.0) });
    let kraus: Vec<_> = output_kraus(spec, filter, visibility)?.iter().map(|k| k.matrix() * &embed).collect();
    choi_from_kraus(&kraus)
}

/// `Tr_in[(ρᵀ ⊗ 1) E]`; its trace is the success probability for `ρ`.
pub fn apply_choi(e: &ProcessChoi, rho_in: &DensityOperator) -> Result<DensityOperator> {
    if rho_in.dim() != IN_DIM {
        return Err(Error::DimensionMismatch { expected: IN_DIM, got: rho_in.dim() });
    }
    e.check_positive()?;
    let rho = rho_in.matrix();
    let out = DMatrix::from_fn(OUT_DIM, OUT_DIM, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..IN_DIM {
            for j in 0..IN_DIM {
                acc += rho[(i, j)] * e.m[(i * OUT_DIM + a, j * OUT_DIM + b)];
            }
        }
        acc
    });
    DensityOperator::from_matrix(out)
}

/// `⟨E_opt|E|E_opt⟩ / (2 Tr E)`.
pub fn map_fidelity(e: &ProcessChoi) -> Result<f64> {
    let tr = e.trace();
    if tr.abs() < f64::MIN_POSITIVE {
        return Err(Error::ZeroTrace);
    }
    let v = ideal_choi_vector();
    let mut num = C64::new(0.0, 0.0);
    for i in 0..PROCESS_DIM {
        for j in 0..PROCESS_DIM {
            num += v[i].conj() * e.m[(i, j)] * v[j];
        }
    }
    Ok(num.re / (2.0 * tr))
}

/// Measurement effect on the sink-extended output.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    /// Positive operator on the two-photon output.
    Output(DMatrix<C64>),
    /// Projector onto the sink level.
    Sink,
}

impl Effect {
    fn extended(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(EXT_OUT_DIM, EXT_OUT_DIM);
        match self {
            Effect::Output(p) => m.view_mut((0, 0), (OUT_DIM, OUT_DIM)).copy_from(p),
            Effect::Sink => m[(OUT_DIM, OUT_DIM)] = C64::new(1.0, 0.0),
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyDatum {
    pub rho_in: DensityOperator,
    pub effect: Effect,
    /// Observed counts (or exact probabilities for noiseless data).
    pub frequency: f64,
}

/// One acquisition: an input state measured with one analyzer setting.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Setting {
    pub theta: f64,
    pub phi: f64,
    pub analyzer: Analyzer,
}

impl Setting {
    pub fn input(&self) -> PolarizationKet {
        PolarizationKet::from_angles(self.theta, self.phi)
    }

    /// The four outcome projectors in [`OUTCOMES`] order.
    pub fn effects(&self) -> [DMatrix<C64>; 4] {
        OUTCOMES.map(|(s1, s2)| self.analyzer.outcome_vector(s1, s2).outer().into_matrix())
    }
}

/// Which analyzer settings accompany each input.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisPlan {
    /// Both ports project onto `{ψ, ψ⊥}` of the input itself.
    Own,
    /// Every listed (port 1, port 2) basis pair for every input.
    Fixed(Vec<(Basis, Basis)>),
}

impl BasisPlan {
    /// All nine pairs of Pauli bases.
    pub fn pauli() -> Self {
        let b = Basis::pauli();
        BasisPlan::Fixed(b.iter().flat_map(|x| b.iter().map(move |y| (*x, *y))).collect())
    }
}

/// `(θ, φ)` of `V, H, D, A, R, L`.
pub fn cardinal_inputs() -> Vec<(f64, f64)> {
    use std::f64::consts::{FRAC_PI_2, PI};
    vec![(0.0, 0.0), (PI, 0.0), (FRAC_PI_2, 0.0), (FRAC_PI_2, PI), (FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, -FRAC_PI_2)]
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignDesign {
    pub settings: Vec<Setting>,
    /// Rank of the span of `ρᵀ ⊗ Π` over the non-sink effects.
    pub rank: usize,
    /// `rank == 64`.
    pub complete: bool,
}

pub fn build_campaign(inputs: &[(f64, f64)], plan: &BasisPlan) -> Result<CampaignDesign> {
    if inputs.is_empty() {
        return Err(Error::Empty("input states"));
    }
    let settings: Vec<Setting> = match plan {
        BasisPlan::Own => inputs
            .iter()
            .map(|&(theta, phi)| Setting { theta, phi, analyzer: Analyzer::own(&PolarizationKet::from_angles(theta, phi)) })
            .collect(),
        BasisPlan::Fixed(pairs) => {
            if pairs.is_empty() {
                return Err(Error::Empty("measurement bases"));
            }
            inputs
                .iter()
                .flat_map(|&(theta, phi)| {
                    pairs.iter().map(move |(b1, b2)| Setting { theta, phi, analyzer: Analyzer { port1: *b1, port2: *b2 } })
                })
                .collect()
        }
    };
    let ops = settings.iter().flat_map(|s| {
        let rho_t = s.input().projector().into_matrix().transpose();
        s.effects().into_iter().map(move |p| rho_t.kronecker(&p))
    });
    let rank = span_rank(ops, PROCESS_DIM);
    Ok(CampaignDesign { settings, rank, complete: rank == PROCESS_DIM * PROCESS_DIM })
}

/// Dimension of the linear span of `dim×dim` operators, from the Gram matrix
/// of their vectorizations.
fn span_rank(ops: impl Iterator<Item = DMatrix<C64>>, dim: usize) -> usize {
    let n = dim * dim;
    let mut gram = DMatrix::<C64>::zeros(n, n);
    for op in ops {
        let v = DMatrix::from_column_slice(n, 1, op.as_slice());
        gram += &v * v.adjoint();
    }
    let ev = hermitian_eigenvalues(&gram);
    let max = ev.last().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    ev.iter().filter(|&&e| e > 1e-10 * max).count()
}

impl CampaignDesign {
    /// Data from per-setting outcome counts `[++, +−, −+, −−]` and the
    /// calibration-derived total `C_tot` of each acquisition. The sink
    /// receives `C_tot − C_sum`, clipped at zero.
    pub fn data_from_counts(&self, counts: &[[f64; 4]], c_tot: &[f64]) -> Result<Vec<TomographyDatum>> {
        if counts.len() != self.settings.len() || c_tot.len() != self.settings.len() {
            return Err(Error::DimensionMismatch { expected: self.settings.len(), got: counts.len().min(c_tot.len()) });
        }
        let mut data = Vec::with_capacity(5 * self.settings.len());
        for ((s, c), &tot) in self.settings.iter().zip(counts).zip(c_tot) {
            let rho_in = s.input().projector();
            for (p, &f) in s.effects().into_iter().zip(c) {
                data.push(TomographyDatum { rho_in: rho_in.clone(), effect: Effect::Output(p), frequency: f });
            }
            let sink = (tot - c.iter().sum::<f64>()).max(0.0);
            data.push(TomographyDatum { rho_in, effect: Effect::Sink, frequency: sink });
        }
        Ok(data)
    }

    /// Exact outcome probabilities of a known map; the sink gets the
    /// post-selection loss `1 − Tr E(ρ)`.
    pub fn exact_data(&self, e: &ProcessChoi) -> Result<Vec<TomographyDatum>> {
        let mut counts = Vec::with_capacity(self.settings.len());
        for s in &self.settings {
            let out = apply_choi(e, &s.input().projector())?;
            let probs: Vec<f64> = OUTCOMES
                .iter()
                .map(|&(a, b)| out.expectation(&s.analyzer.outcome_vector(a, b).amplitudes()).max(0.0))
                .collect();
            counts.push([probs[0], probs[1], probs[2], probs[3]]);
        }
        self.data_from_counts(&counts, &vec![1.0; self.settings.len()])
    }
}

/// Simulated acquisition of a whole campaign: one calibration run, then
/// `periods` periods per setting. Seeds for the calibration and for each
/// setting are drawn in order from a generator seeded with `seed`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_campaign(
    design: &CampaignDesign,
    spec: &BeamSplitterSpec,
    filter: Option<&FilterSpec>,
    noise: &NoiseModel,
    periods: usize,
    period_duration: f64,
    seed: u64,
) -> Result<Vec<TomographyDatum>> {
    if periods == 0 {
        return Err(crate::error::invalid("periods", "must be at least 1"));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let total = periods as f64 * period_duration;
    let cal = calibration_run(spec, noise, total, seeds.next_u64())?;
    if cal.c_sum_dis == 0 {
        return Err(Error::ZeroCalibration);
    }
    let mut counts = Vec::with_capacity(design.settings.len());
    for s in &design.settings {
        let recs = measure_point(spec, filter, noise, s.theta, s.phi, &s.analyzer, periods, period_duration, seeds.next_u64())?;
        counts.push(CoincidenceRecord::merge(&recs)?.counts().map(|c| c as f64));
    }
    design.data_from_counts(&counts, &vec![cal.c_tot(total); counts.len()])
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MlOptions {
    /// Stop when the Frobenius change of `E` drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// No step, full or diluted, increased the likelihood; the iteration stopped.
    pub stalled: bool,
    pub log_likelihood: f64,
    /// Log-likelihood of the initializer followed by every accepted iterate.
    pub likelihood_trace: Vec<f64>,
    /// Largest `‖Tr_out E − 1‖` seen over all iterates.
    pub max_trace_preservation_error: f64,
    /// Data whose predicted probability had to be floored.
    pub floored: usize,
    pub rank: usize,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlResult {
    pub extended: ExtendedChoi,
    pub process: ProcessChoi,
    pub diagnostics: MlDiagnostics,
}

/// Relative slack when comparing successive log-likelihoods.
pub const LIKELIHOOD_SLACK: f64 = 1e-12;

struct Prepared {
    /// Transposed `ρᵀ ⊗ Π`, so that `Tr[E A] = Σ E ∘ Aᵀ`.
    ops_t: Vec<DMatrix<C64>>,
    ops: Vec<DMatrix<C64>>,
    freqs: Vec<f64>,
}

impl Prepared {
    fn probabilities(&self, e: &DMatrix<C64>) -> Vec<f64> {
        self.ops_t.iter().map(|a| e.iter().zip(a.iter()).map(|(x, y)| x * y).sum::<C64>().re).collect()
    }

    /// Log-likelihood, the operator `K = Σ f/p A`, and the number of floored probabilities.
    fn evaluate(&self, e: &DMatrix<C64>) -> (f64, DMatrix<C64>, usize) {
        let mut k = DMatrix::zeros(EXT_DIM, EXT_DIM);
        let mut ll = 0.0;
        let mut floored = 0;
        for ((p, a), &f) in self.probabilities(e).into_iter().zip(&self.ops).zip(&self.freqs) {
            if f <= 0.0 {
                continue;
            }
            let p = if p < PROBABILITY_FLOOR {
                floored += 1;
                PROBABILITY_FLOOR
            } else {
                p
            };
            ll += f * p.ln();
            let w = f / p;
            k.iter_mut().zip(a.iter()).for_each(|(x, y)| *x += y * w);
        }
        (ll, k, floored)
    }

    fn log_likelihood(&self, e: &DMatrix<C64>) -> f64 {
        self.probabilities(e)
            .into_iter()
            .zip(&self.freqs)
            .filter(|(_, &f)| f > 0.0)
            .map(|(p, f)| f * p.max(PROBABILITY_FLOOR).ln())
            .sum()
    }
}

/// `(λ^{-1/2} ⊗ 1) K E K (λ^{-1/2} ⊗ 1)` with `λ = Tr_out[K E K]`.
fn ml_step(e: &DMatrix<C64>, k: &DMatrix<C64>) -> DMatrix<C64> {
    let kek = k * e * k;
    let lambda = trace_out(&kek, EXT_OUT_DIM);
    let eig = SymmetricEigen::new((&lambda + lambda.adjoint()) * C64::new(0.5, 0.0));
    let inv_sqrt = eig.eigenvalues.map(|x| 1.0 / x.max(EIGEN_FLOOR).sqrt());
    let u = &eig.eigenvectors;
    let diag = DMatrix::from_diagonal(&inv_sqrt.map(|x| C64::new(x, 0.0)));
    let lam = u * diag * u.adjoint();
    let l = lam.kronecker(&DMatrix::<C64>::identity(EXT_OUT_DIM, EXT_OUT_DIM));
    let out = &l * kek * &l;
    (&out + out.adjoint()) * C64::new(0.5, 0.0)
}

/// Iterative maximum-likelihood estimate of a trace-preserving map on the
/// sink-extended output, started from the maximally mixed map.
///
/// When the plain `KEK` update would lower the likelihood, the step is diluted
/// to `K_ε = (1 + εK)/(1 + ε)` with shrinking `ε`; if no dilution helps the
/// iteration stops and the result is flagged as stalled.
pub fn ml_reconstruct(data: &[TomographyDatum], opts: &MlOptions) -> Result<MlResult> {
    if data.is_empty() {
        return Err(Error::Empty("tomography data"));
    }
    let mut prepared = Prepared { ops_t: Vec::new(), ops: Vec::new(), freqs: Vec::new() };
    let mut any_positive = false;
    for d in data {
        if !(d.frequency.is_finite() && d.frequency >= 0.0) {
            return Err(crate::error::invalid("frequency", format!("{} must be finite and non-negative", d.frequency)));
        }
        if d.rho_in.dim() != IN_DIM {
            return Err(Error::DimensionMismatch { expected: IN_DIM, got: d.rho_in.dim() });
        }
        if let Effect::Output(p) = &d.effect {
            if p.shape() != (OUT_DIM, OUT_DIM) {
                return Err(Error::DimensionMismatch { expected: OUT_DIM, got: p.nrows() });
            }
        }
        any_positive |= d.frequency > 0.0;
        let a = d.rho_in.matrix().transpose().kronecker(&d.effect.extended());
        prepared.ops_t.push(a.transpose());
        prepared.ops.push(a);
        prepared.freqs.push(d.frequency);
    }
    if !any_positive {
        return Err(Error::NoEvents);
    }
    let rank = span_rank(
        data.iter().filter_map(|d| match &d.effect {
            Effect::Output(p) => Some(d.rho_in.matrix().transpose().kronecker(p)),
            Effect::Sink => None,
        }),
        PROCESS_DIM,
    );

    let mut e = ExtendedChoi::maximally_mixed().m;
    let (mut ll, mut k, mut floored) = prepared.evaluate(&e);
    let mut trace = vec![ll];
    let mut max_tp: f64 = ExtendedChoi { m: e.clone() }.trace_preservation_error();
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;
    let identity = DMatrix::<C64>::identity(EXT_DIM, EXT_DIM);

    while iterations < opts.max_iter {
        let slack = LIKELIHOOD_SLACK * ll.abs().max(1.0);
        let mut candidate = ml_step(&e, &k);
        let mut cand_ll = prepared.log_likelihood(&candidate);
        if cand_ll < ll - slack {
            let mut eps = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let k_eps = (&identity + &k * C64::new(eps, 0.0)) * C64::new(1.0 / (1.0 + eps), 0.0);
                candidate = ml_step(&e, &k_eps);
                cand_ll = prepared.log_likelihood(&candidate);
                if cand_ll >= ll - slack {
                    accepted = true;
                    break;
                }
                eps *= 0.5;
            }
            if !accepted {
                stalled = true;
                break;
            }
        }
        iterations += 1;
        let change = (&candidate - &e).norm();
        e = candidate;
        let (new_ll, new_k, new_floored) = prepared.evaluate(&e);
        ll = new_ll;
        k = new_k;
        floored = new_floored;
        trace.push(ll);
        max_tp = max_tp.max(ExtendedChoi { m: e.clone() }.trace_preservation_error());
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let extended = ExtendedChoi { m: e };
    let process = extended.process_block();
    Ok(MlResult {
        extended,
        process,
        diagnostics: MlDiagnostics {
            iterations,
            converged,
            stalled,
            log_likelihood: ll,
            likelihood_trace: trace,
            max_trace_preservation_error: max_tp,
            floored,
            rank,
            complete: rank == PROCESS_DIM * PROCESS_DIM,
        },
    })
}

/// Row/column labels `in ⊗ out`, e.g. `HVH` for `|H⟩ ⊗ |VH⟩` and `VS` for the sink.
pub fn choi_labels(with_sink: bool) -> Vec<String> {
    let outs: &[&str] = if with_sink { &["VV", "VH", "HV", "HH", "S"] } else { &["VV", "VH", "HV", "HH"] };
    ["V", "H"].iter().flat_map(|i| outs.iter().map(move |o| format!("{i}{o}"))).collect()
}

/// Row-major CSV with real and imaginary parts interleaved.
pub fn write_choi_csv<W: Write>(mut w: W, m: &DMatrix<C64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()]).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_choi_csv<R: Read>(r: R) -> Result<DMatrix<C64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}"))))
            .collect::<Result<_>>()?;
        if !vals.len().is_multiple_of(2) {
            return Err(Error::Parse("odd number of columns".into()));
        }
        rows.push(vals.chunks(2).map(|c| C64::new(c[0], c[1])).collect());
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix is not square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Real and imaginary parts as labelled tables, rescaled to `Tr = 2`.
pub fn pretty_print(m: &DMatrix<C64>) -> Result<String> {
    let labels = match m.nrows() {
        PROCESS_DIM => choi_labels(false),
        EXT_DIM => choi_labels(true),
        n => return Err(Error::DimensionMismatch { expected: PROCESS_DIM, got: n }),
    };
    let tr = m.trace().re;
    if tr.abs() < f64::MIN_POSITIVE {
        return Err(Error::ZeroTrace);
    }
    let scaled = m * C64::new(2.0 / tr, 0.0);
    let mut s = String::new();
    for (title, part) in [("Re", 0), ("Im", 1)] {
        let _ = write!(s, "{title:>5}");
        for l in &labels {
            let _ = write!(s, "{l:>8}");
        }
        s.push('\n');
        for (i, l) in labels.iter().enumerate() {
            let _ = write!(s, "{l:>5}");
            for j in 0..labels.len() {
                let z = scaled[(i, j)];
                let x = if part == 0 { z.re } else { z.im };
                // avoid "-0.000"
                let x = if x.abs() < 5e-4 { 0.0 } else { x };
                let _ = write!(s, "{x:>8.3}");
            }
            s.push('\n');
        }
        s.push('\n');
    }
    Ok(s)
}
