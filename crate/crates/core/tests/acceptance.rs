//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcclone::cli::{cmd_sweep, cmd_tomography, read_curve_csv, RunConfig, SweepKind};
use pcclone::cloner::{
    clone_fidelities, equalizing_filter, optimal_spec, periodic_grid, polar_grid, success_variation, symmetrize,
};
use pcclone::counts::{
    calibration_run, estimate_fidelities, estimate_success, q_factor, read_records_csv, simulate_coincidences,
    NoiseModel,
};
use pcclone::optics::{BeamSplitterSpec, FilterSpec};
use pcclone::qstate::Port;
use pcclone::tomography::{
    build_campaign, cardinal_inputs, ideal_choi, map_fidelity, ml_reconstruct, read_choi_csv, BasisPlan,
    MlOptions, LIKELIHOOD_SLACK,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn equatorial_fidelity() -> Outcome {
    let oracle = 0.5 + 0.5 / 2f64.sqrt();
    let start = Instant::now();
    let spec = optimal_spec();
    let mut worst: f64 = 0.0;
    for k in 0..360 {
        let phi = 2.0 * PI * k as f64 / 360.0;
        let r = clone_fidelities(&spec, None, FRAC_PI_2, phi, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((r.f1 - oracle).abs()).max((r.f2 - oracle).abs());
    }
    let t = start.elapsed().as_secs_f64();
    let msg = format!("max |F - 0.853553| = {worst:.1e} over 360 phi, {t:.3} s");
    check(worst < 1e-12 && t < 1.0, msg.clone(), msg)
}

fn ideal_success() -> Outcome {
    let spec = optimal_spec();
    let mut worst: f64 = 0.0;
    for &theta in &polar_grid(50) {
        for &phi in &periodic_grid(50) {
            let r = clone_fidelities(&spec, None, theta, phi, 1.0).map_err(|e| e.to_string())?;
            worst = worst.max((r.p_succ - 1.0 / 3.0).abs());
        }
    }
    let var = success_variation(&spec, None, 1.0).map_err(|e| e.to_string())?;
    let msg = format!("max |P_succ - 1/3| = {worst:.1e} on 50x50 grid, variation {var:.1e}");
    check(worst < 1e-12 && var < 1e-12, msg.clone(), msg)
}

fn optimal_ratio() -> Outcome {
    let spec = optimal_spec();
    let oracle = 0.5 * (1.0 + 1.0 / 3f64.sqrt());
    let d_rv = (spec.reflectance_v() - oracle).abs();
    let cond = (2f64.sqrt() * spec.r_v() * spec.t_v() - (spec.reflectance_v() - spec.transmittance_v())).abs();
    let msg = format!("R_V = {:.10} (|delta| {d_rv:.1e}), identity residual {cond:.1e}", spec.reflectance_v());
    check(d_rv < 1e-9 && cond < 1e-12, msg.clone(), msg)
}

fn calibration_factor() -> Outcome {
    let q = q_factor(&BeamSplitterSpec::measured());
    let msg = format!("Q = {q:.6}");
    check((q - 0.484).abs() < 5e-4, msg.clone(), msg)
}

fn symmetrization() -> Outcome {
    let spec = BeamSplitterSpec::measured();
    let f = symmetrize(&spec).map_err(|e| e.to_string())?;
    let ratio = f.eta_h() / f.eta_v();
    // Amplitudes straight from the intensity splitting ratios.
    let oracle = (0.76f64 * 0.18).sqrt() / (0.24f64 * 0.82).sqrt();
    let mut worst: f64 = 0.0;
    for &theta in &polar_grid(64) {
        for &phi in &periodic_grid(64) {
            let r = clone_fidelities(&spec, Some(&f), theta, phi, 1.0).map_err(|e| e.to_string())?;
            worst = worst.max((r.f1 - r.f2).abs());
        }
    }
    let msg = format!("eta_H/eta_V = {ratio:.6} (oracle {oracle:.6}), max |F1 - F2| = {worst:.1e} on 64x64 grid");
    check((ratio - 0.834).abs() < 1e-3 && (ratio - oracle).abs() < 1e-12 && worst < 1e-10, msg.clone(), msg)
}

fn estimator_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut min_sum = u64::MAX;
    for i in 0..20 {
        let spec = BeamSplitterSpec::from_reflectances(rng.random_range(0.55..0.95), rng.random_range(0.05..0.45), true)
            .map_err(|e| e.to_string())?;
        let filter = if rng.random_bool(0.5) {
            Some(FilterSpec::new(1.0, rng.random_range(0.6..1.0), Port::One).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let noise = NoiseModel { visibility: rng.random_range(0.5..1.0), ..NoiseModel::noiseless(1e4) };
        let (theta, phi) = (rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
        let analytic = clone_fidelities(&spec, filter.as_ref(), theta, phi, noise.visibility).map_err(|e| e.to_string())?;
        let duration = 1.5e5 / (noise.pair_rate * analytic.p_succ);
        let rec = simulate_coincidences(&spec, filter.as_ref(), &noise, theta, phi, duration, 100 + i)
            .map_err(|e| e.to_string())?;
        let cal = calibration_run(&spec, &noise, duration, 200 + i).map_err(|e| e.to_string())?;
        let f = estimate_fidelities(&rec).map_err(|e| e.to_string())?;
        let p = estimate_success(&rec, cal.c_sum_dis, cal.q).map_err(|e| e.to_string())?;
        min_sum = min_sum.min(rec.c_sum());
        for (est, err, exact) in [
            (f.f1, f.f1_err, analytic.f1),
            (f.f2, f.f2_err, analytic.f2),
            (p.p_succ, p.err, analytic.p_succ),
        ] {
            worst = worst.max((est - exact).abs() / err);
        }
    }
    let t = start.elapsed().as_secs_f64();
    let msg = format!("worst deviation {worst:.2} standard errors over 20 configs, min C_sum {min_sum}, {t:.2} s");
    check(worst < 3.0 && min_sum >= 100_000 && t < 30.0, msg.clone(), msg)
}

fn tomography_oracle() -> Outcome {
    let start = Instant::now();
    let design = build_campaign(&cardinal_inputs(), &BasisPlan::pauli()).map_err(|e| e.to_string())?;
    let data = design.exact_data(&ideal_choi()).map_err(|e| e.to_string())?;
    let opts = MlOptions::default();
    let r = ml_reconstruct(&data, &opts).map_err(|e| e.to_string())?;
    let fid = map_fidelity(&r.process).map_err(|e| e.to_string())?;
    let d = &r.diagnostics;
    let monotone = d.likelihood_trace.windows(2).all(|w| w[1] >= w[0] - LIKELIHOOD_SLACK * w[0].abs().max(1.0));
    let t = start.elapsed().as_secs_f64();
    let msg = format!(
        "map fidelity {fid:.6} after {} iterations, likelihood monotone {monotone}, TP error {:.1e}, complete {}, {t:.1} s",
        d.iterations, d.max_trace_preservation_error, d.complete
    );
    let ok = fid >= 0.999
        && d.iterations <= 10_000
        && monotone
        && !d.stalled
        && d.max_trace_preservation_error < 1e-6
        && d.complete
        && t < 60.0;
    check(ok, msg.clone(), msg)
}

fn mean_gap(dir: &Path, name: &str) -> Result<(f64, f64), String> {
    let f = std::fs::File::open(dir.join(name)).map_err(|e| e.to_string())?;
    let rows = read_curve_csv(f).map_err(|e| e.to_string())?;
    let n = rows.len() as f64;
    let f1 = rows.iter().map(|r| r.f1_sim).sum::<f64>() / n;
    let f2 = rows.iter().map(|r| r.f2_sim).sum::<f64>() / n;
    Ok((f1, f2))
}

fn laboratory() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plain = RunConfig { seed: 11, ..RunConfig::default() };
    let plain_dir = dir.path().join("plain");
    cmd_sweep(&plain, &plain_dir, SweepKind::Phi).map_err(|e| e.to_string())?;
    let (f1, f2) = mean_gap(&plain_dir, "sweep_phi_curve.csv")?;

    let spec = plain.splitter_spec().map_err(|e| e.to_string())?;
    let filter = equalizing_filter(&spec, plain.noise.visibility, &plain.noise.ancilla()).map_err(|e| e.to_string())?;
    let mut filtered = plain.clone();
    filtered.filter.mode = pcclone::cli::FilterMode::Manual;
    filtered.filter.eta_v = filter.eta_v();
    filtered.filter.eta_h = filter.eta_h();
    filtered.filter.port = filter.port();
    let filtered_dir = dir.path().join("filtered");
    cmd_sweep(&filtered, &filtered_dir, SweepKind::Phi).map_err(|e| e.to_string())?;
    let (g1, g2) = mean_gap(&filtered_dir, "sweep_phi_curve.csv")?;

    let tomo = cmd_tomography(&plain, &dir.path().join("tomo")).map_err(|e| e.to_string())?;
    let (m0, m1) = (tomo.runs[0].2, tomo.runs[1].2);

    let gap = f1 - f2;
    let gap_after = g1 - g2;
    let msg = format!(
        "V={}: mean F1/F2 {f1:.4}/{f2:.4} (gap {:+.2}%), filtered {g1:.4}/{g2:.4} (gap {:+.2}%), map fidelity {m0:.4} -> {m1:.4}",
        plain.noise.visibility,
        100.0 * gap,
        100.0 * gap_after
    );
    let ok = (0.02..=0.08).contains(&gap)
        && gap_after.abs() < 0.01
        && (0.90..=0.97).contains(&m0)
        && m1 >= m0;
    check(ok, msg.clone(), msg)
}

fn deterministic_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig { seed: 99, ..RunConfig::default() };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        cmd_sweep(&cfg, d, SweepKind::Phi).map_err(|e| e.to_string())?;
        cmd_sweep(&cfg, d, SweepKind::Theta).map_err(|e| e.to_string())?;
        cmd_tomography(&cfg, d).map_err(|e| e.to_string())?;
    }
    let files = [
        "sweep_phi_records.csv",
        "sweep_phi_curve.csv",
        "sweep_theta_records.csv",
        "sweep_theta_curve.csv",
        "choi_nofilter.csv",
        "choi_filter.csv",
        "tomography_summary.csv",
    ];
    let mut differing = Vec::new();
    for f in files {
        let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
        if x != y {
            differing.push(f);
        }
    }
    // Every CSV must also parse back through its schema.
    read_records_csv(&std::fs::read(a.join("sweep_phi_records.csv")).map_err(|e| e.to_string())?[..])
        .map_err(|e| e.to_string())?;
    read_choi_csv(&std::fs::read(a.join("choi_filter.csv")).map_err(|e| e.to_string())?[..]).map_err(|e| e.to_string())?;
    let msg = format!("{} CSV files compared, differing: {differing:?}", files.len());
    check(differing.is_empty(), msg.clone(), msg)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 ideal equatorial fidelity", equatorial_fidelity),
        ("2 ideal success probability", ideal_success),
        ("3 optimal splitting ratio", optimal_ratio),
        ("4 calibration factor Q", calibration_factor),
        ("5 symmetrizing filter", symmetrization),
        ("6 estimator consistency", estimator_consistency),
        ("7 tomography oracle", tomography_oracle),
        ("8 laboratory-regime reproduction", laboratory),
        ("9 deterministic replay", deterministic_replay),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
