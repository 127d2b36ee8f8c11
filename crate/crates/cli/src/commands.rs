use crate::config::{seed_fragment, ExperimentConfig, SeedSpec};
use crate::error::CliError;
use abel_core::delay::{validate_delay, DelaySpec};
use abel_core::search::{optimize_seed, SearchProblem, SearchResult};
use abel_core::seed::{check_admissible, MonotonicityCheck, SeedConstraints};
use abel_core::sim::{equivalence_error, simulate_fixed, simulate_varying, LinearDDE, Trajectory};
use abel_core::transform::{write_trace_csv, HPrimeMax, TimeTransform};
use nalgebra::DMatrix;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn prepare_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_trace(path: &Path, m: &HPrimeMax) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_trace_csv(&m.trace, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_trajectory(path: &Path, x: &Trajectory) -> Result<(), CliError> {
    let mut w = create(path)?;
    x.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DelayReport<'a> {
    delay: &'a DelaySpec,
    passed: bool,
    worst_location: Option<f64>,
    #[serde(flatten)]
    report: &'a abel_core::delay::ValidationReport,
}

pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let delay = cfg.delay()?;
    let report = validate_delay(delay, [0.0, cfg.horizon()?], cfg.grid_n()?)?;
    let dir = prepare_dir(cfg)?;
    let path = dir.join("validate_delay.json");
    write_json(
        &path,
        &DelayReport {
            delay,
            passed: report.passed(),
            worst_location: report.worst_location(),
            report: &report,
        },
    )?;
    println!(
        "min tau = {:e} at t = {}; max tau' = {:e} at t = {}; report {}",
        report.min_tau,
        report.argmin_tau,
        report.max_tau_dot,
        report.argmax_tau_dot,
        path.display()
    );
    if report.passed() {
        Ok(())
    } else {
        let mut why = Vec::new();
        if !report.tau_positive {
            why.push(format!("tau = {:e} <= 0 at t = {}", report.min_tau, report.argmin_tau));
        }
        if !report.tau_dot_below_one {
            why.push(format!("tau' = {:e} >= 1 at t = {}", report.max_tau_dot, report.argmax_tau_dot));
        }
        Err(CliError::Assumption(format!("delay assumptions violated: {}", why.join("; "))))
    }
}

#[derive(Serialize)]
struct SeedReport<'a> {
    constraints: SeedConstraints,
    seed: &'a SeedSpec,
    value_at_zero: f64,
    value_at_start: f64,
    derivative_ratio: f64,
    tol: f64,
    boundary_ok: bool,
    monotone: bool,
    witness: Option<f64>,
    min_derivative: Option<f64>,
    monotonicity: &'a MonotonicityCheck,
    admissible: bool,
}

pub fn check_seed(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let c = cfg.constraints()?;
    let spec = cfg.seed_spec()?;
    let phi = spec.build(&c)?;
    let r = check_admissible(&phi, &c, cfg.admissibility_tol())?;
    let dir = prepare_dir(cfg)?;
    let path = dir.join("check_seed.json");
    write_json(
        &path,
        &SeedReport {
            constraints: c,
            seed: spec,
            value_at_zero: r.value_at_zero,
            value_at_start: r.value_at_start,
            derivative_ratio: r.derivative_ratio,
            tol: r.tol,
            boundary_ok: r.boundary_ok(),
            monotone: r.monotonicity.is_monotone(),
            witness: r.monotonicity.witness(),
            min_derivative: r.monotonicity.min_derivative(),
            monotonicity: &r.monotonicity,
            admissible: r.admissible(),
        },
    )?;
    let method = match r.monotonicity {
        MonotonicityCheck::Certified { .. } => "certified",
        MonotonicityCheck::Sampled { .. } => "sampled",
    };
    println!(
        "|phi(0)| = {:e}; |phi(-tau*) + tau0| = {:e}; derivative ratio residual = {:e}; monotone = {} ({method}); report {}",
        r.value_at_zero,
        r.value_at_start,
        r.derivative_ratio,
        r.monotonicity.is_monotone(),
        path.display()
    );
    if r.admissible() {
        Ok(())
    } else {
        let mut why = Vec::new();
        if !r.boundary_ok() {
            why.push(format!("boundary residuals exceed {:e}", r.tol));
        }
        if let Some(w) = r.monotonicity.witness() {
            why.push(format!("phi' <= 0 at {w}"));
        } else if !r.monotonicity.is_monotone() {
            why.push("phi is not strictly increasing".to_string());
        }
        Err(CliError::Assumption(format!("seed is not admissible: {}", why.join("; "))))
    }
}

fn build_transform(cfg: &ExperimentConfig, spec: &SeedSpec) -> Result<TimeTransform, CliError> {
    let c = cfg.constraints()?;
    let delay = cfg.delay()?.clone();
    let phi = spec.build(&c)?;
    Ok(TimeTransform::new(delay, phi, c.tau_star, cfg.newton())?)
}

#[derive(Serialize)]
struct TransformSummary<'a> {
    name: &'a str,
    horizon: f64,
    grid_n: usize,
    max_h_prime: f64,
    argmax: f64,
    max_abs_abel_residual: f64,
    trace: String,
}

fn run_transform(cfg: &ExperimentConfig, spec: &SeedSpec) -> Result<HPrimeMax, CliError> {
    let tt = build_transform(cfg, spec)?;
    Ok(tt.max_h_prime(cfg.horizon()?, cfg.grid_n()?)?)
}

fn summary<'a>(cfg: &ExperimentConfig, name: &'a str, m: &HPrimeMax, trace: &Path) -> Result<TransformSummary<'a>, CliError> {
    Ok(TransformSummary {
        name,
        horizon: cfg.horizon()?,
        grid_n: cfg.grid_n()?,
        max_h_prime: m.max_value,
        argmax: m.argmax,
        max_abs_abel_residual: m.max_abs_residual,
        trace: trace.display().to_string(),
    })
}

pub fn transform(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let m = run_transform(cfg, cfg.seed_spec()?)?;
    let dir = prepare_dir(cfg)?;
    let trace = dir.join("transform.csv");
    write_trace(&trace, &m)?;
    write_json(&dir.join("transform.json"), &summary(cfg, "seed", &m, &trace)?)?;
    println!(
        "max h' = {:.10e} at lambda = {}; max |abel residual| = {:.3e}; trace {}",
        m.max_value,
        m.argmax,
        m.max_abs_residual,
        trace.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Ranked<'a> {
    rank: usize,
    #[serde(flatten)]
    summary: TransformSummary<'a>,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    ranking: Vec<Ranked<'a>>,
}

pub fn compare(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let seeds = cfg.seed_list()?;
    let dir = prepare_dir(cfg)?;
    let mut rows = Vec::with_capacity(seeds.len());
    for s in seeds {
        let m = run_transform(cfg, &s.seed).map_err(|e| prefix(&s.name, e))?;
        let trace = dir.join(format!("compare_{}.csv", s.name));
        write_trace(&trace, &m)?;
        rows.push(summary(cfg, &s.name, &m, &trace)?);
    }
    // stable sort keeps the configured order on ties
    rows.sort_by(|a, b| a.max_h_prime.total_cmp(&b.max_h_prime));
    for (i, r) in rows.iter().enumerate() {
        println!(
            "{}. {}: max h' = {:.10e} at lambda = {}; max |abel residual| = {:.3e}",
            i + 1,
            r.name,
            r.max_h_prime,
            r.argmax,
            r.max_abs_abel_residual
        );
    }
    let report = CompareReport {
        ranking: rows
            .into_iter()
            .enumerate()
            .map(|(i, summary)| Ranked { rank: i + 1, summary })
            .collect(),
    };
    let path = dir.join("compare.json");
    write_json(&path, &report)?;
    println!("ranking {}", path.display());
    Ok(())
}

fn prefix(name: &str, e: CliError) -> CliError {
    match e {
        CliError::Usage(m) => CliError::Usage(format!("seed {name}: {m}")),
        CliError::Assumption(m) => CliError::Assumption(format!("seed {name}: {m}")),
        CliError::Numerical(m) => CliError::Numerical(format!("seed {name}: {m}")),
        CliError::Io(m) => CliError::Io(m),
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Usage(format!("simulation.{name} must be a non-empty square matrix given by rows")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Serialize)]
struct HalvingStudy {
    steps: Vec<f64>,
    errors: Vec<f64>,
    ratios: Vec<f64>,
    observed_order: Vec<f64>,
}

#[derive(Serialize)]
struct SimulationReport {
    lambda_end: f64,
    t_end: f64,
    dt: f64,
    dlambda: f64,
    n_check: usize,
    equivalence_error: f64,
    tolerance: f64,
    passed: bool,
    halving: Option<HalvingStudy>,
}

pub fn simulate(cfg: &ExperimentConfig, halving_flag: bool) -> Result<(), CliError> {
    let tt = build_transform(cfg, cfg.seed_spec()?)?;
    let sim = cfg.simulation()?;
    let dde = LinearDDE::new(matrix(&sim.a0, "a0")?, matrix(&sim.a1, "a1")?, sim.history.clone())?;
    let dlambda = sim.dlambda.unwrap_or(sim.dt);
    if !(sim.dt > 0.0) || !(dlambda > 0.0) || !(sim.lambda_end > 0.0) || sim.n_check < 2 {
        return Err(CliError::Usage(
            "simulation needs dt > 0, dlambda > 0, lambda_end > 0 and n_check >= 2".to_string(),
        ));
    }
    let t_end = tt.eval_h(sim.lambda_end)?;
    let run = |dt: f64, dl: f64| -> Result<(Trajectory, Trajectory, f64), CliError> {
        let x = simulate_varying(&dde, &tt.delay, t_end, dt)?;
        let y = simulate_fixed(&dde, &tt, sim.lambda_end, dl)?;
        let e = equivalence_error(&x, &y, &tt, sim.n_check)?;
        Ok((x, y, e))
    };
    let (x, y, err) = run(sim.dt, dlambda)?;

    let halving = if halving_flag || sim.halving {
        let mut steps = vec![sim.dt];
        let mut errors = vec![err];
        for k in 1..=2 {
            let s = f64::from(1u32 << k);
            steps.push(sim.dt / s);
            errors.push(run(sim.dt / s, dlambda / s)?.2);
        }
        let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
        let observed_order = ratios.iter().map(|r| r.log2()).collect();
        Some(HalvingStudy {
            steps,
            errors,
            ratios,
            observed_order,
        })
    } else {
        None
    };

    let dir = prepare_dir(cfg)?;
    write_trajectory(&dir.join("simulate_varying.csv"), &x)?;
    write_trajectory(&dir.join("simulate_fixed.csv"), &y)?;
    let passed = err <= sim.tolerance;
    let report = SimulationReport {
        lambda_end: sim.lambda_end,
        t_end,
        dt: sim.dt,
        dlambda,
        n_check: sim.n_check,
        equivalence_error: err,
        tolerance: sim.tolerance,
        passed,
        halving,
    };
    let path = dir.join("simulate.json");
    write_json(&path, &report)?;
    println!(
        "sup |x(h(lambda)) - xbar(lambda)| = {err:.3e} on [0, {}] (tolerance {:e}); report {}",
        sim.lambda_end,
        sim.tolerance,
        path.display()
    );
    if let Some(h) = &report.halving {
        let orders: Vec<String> = h.observed_order.iter().map(|p| format!("{p:.2}")).collect();
        println!("observed order under step halving: {}", orders.join(", "));
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "equivalence error {err:e} exceeds tolerance {:e}",
            sim.tolerance
        )))
    }
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    problem: &'a SearchProblem,
    seed_rng: u64,
    #[serde(flatten)]
    result: &'a SearchResult,
}

pub fn optimize(cfg: &ExperimentConfig, seed_rng: Option<u64>) -> Result<(), CliError> {
    let delay = cfg.delay()?.clone();
    let c = cfg.constraints()?;
    let s = cfg.search()?;
    let mut p = SearchProblem::new(delay, c.tau_star, s.basis_dim, cfg.horizon()?, cfg.grid_n()?, s.budget)?;
    if let Some(w) = s.penalty_weight {
        p.penalty_weight = w;
    }
    p.newton = cfg.newton();
    p.validate()?;
    let rng = seed_rng.unwrap_or(s.seed_rng);
    let result = optimize_seed(&p, rng)?;

    let dir = prepare_dir(cfg)?;
    let path = dir.join("optimize.json");
    write_json(
        &path,
        &OptimizeReport {
            problem: &p,
            seed_rng: rng,
            result: &result,
        },
    )?;
    let fragment = dir.join("optimized_seed.toml");
    let mut w = create(&fragment)?;
    w.write_all(seed_fragment(&result.best_coeffs)?.as_bytes())?;
    w.flush()?;
    println!(
        "best max h' = {:.10e} (baseline {:.10e}) after {} evaluations and {} restarts; report {}; seed {}",
        result.best_value,
        result.baseline_value,
        result.evaluations,
        result.restarts,
        path.display(),
        fragment.display()
    );
    Ok(())
}
