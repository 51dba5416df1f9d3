use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use subwalk_core::geometry::{
    cometric_eval, horizontal_factor, metric_eval, validate_compatibility,
};
use subwalk_core::hamiltonian::{
    flow, flow_traced, hamiltonian, raised_christoffel, second_derivative_along_flow,
};
use subwalk_core::montecarlo::{
    convergence_sweep, euclidean_heat_reference, heisenberg_sde_oracle, path_rng,
    EstimatorSettings, OracleSettings, Reference,
};
use subwalk_core::sublaplacian::{sublaplacian_local, sublaplacian_sphere_avg};
use subwalk_core::walker::{sample_walk, WalkConfig};
use subwalk_core::{
    builtin_field, Estimate, HeisenbergModel, LegMode, ManifoldModel, PhaseState, Polynomial,
};

use crate::config::{CommandConfig, FieldSource, ModelSource, ReferenceSource, RunConfig};
use crate::error::CliError;
use crate::model::{build_field, build_model, BuiltField, BuiltModel};
use crate::output::{Cell, Report, Table};

pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    let seed = config.seed;
    match &config.command {
        CommandConfig::Verify {
            model,
            points,
            samples,
        } => verify(model, *points, *samples, seed),
        CommandConfig::Laplacian {
            model,
            field,
            points,
            samples,
        } => laplacian(model, field, points, *samples, seed),
        CommandConfig::Flow {
            model,
            point,
            momentum,
            t,
            step,
            compare_exact,
            tolerance,
        } => flow_trace(
            model,
            point,
            momentum,
            *t,
            *step,
            *compare_exact,
            *tolerance,
        ),
        CommandConfig::Walk {
            model,
            point,
            epsilon,
            t,
            n_paths,
            step,
            leg_mode,
        } => walk(model, point, *epsilon, *t, *n_paths, *step, *leg_mode, seed),
        CommandConfig::Converge {
            model,
            field,
            point,
            eps_list,
            t,
            n_paths,
            step,
            leg_mode,
            reference,
        } => {
            let settings = EstimatorSettings {
                t: *t,
                epsilon: eps_list[0],
                n_paths: *n_paths,
                seed,
                step: *step,
                leg_mode: *leg_mode,
                workers: config.workers,
            };
            converge(model, field, point, eps_list, &settings, reference)
        }
        CommandConfig::Oracle {
            t,
            n_paths,
            dt,
            cos_frequency,
        } => oracle(&OracleSettings {
            t: *t,
            n_paths: *n_paths,
            dt: *dt,
            seed,
            cos_frequency: *cos_frequency,
            workers: config.workers,
        }),
    }
}

fn coord_columns(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |i| format!("{prefix}{i}"))
}

fn floats(v: &DVector<f64>) -> impl Iterator<Item = Cell> + '_ {
    v.iter().map(|&x| Cell::Float(x))
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

struct Check {
    name: &'static str,
    point: Vec<f64>,
    value: f64,
    tolerance: f64,
    pass: bool,
    detail: String,
}

impl Check {
    fn measured(name: &'static str, q: &DVector<f64>, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            point: vec_of(q),
            value,
            tolerance,
            pass: value <= tolerance,
            detail: String::new(),
        }
    }

    fn errored(name: &'static str, q: &DVector<f64>, tolerance: f64, err: impl ToString) -> Self {
        Self {
            name,
            point: vec_of(q),
            value: f64::NAN,
            tolerance,
            pass: false,
            detail: err.to_string(),
        }
    }
}

/// `max |d²/dt² x_k − fd_k|` for the Γ-form of the acceleration against a
/// central second difference of the RK4 flow.
fn acceleration_identity(
    model: &dyn ManifoldModel,
    s: &PhaseState,
) -> subwalk_core::Result<(f64, f64)> {
    let d = model.dim();
    let delta = 1e-3;
    let fwd = flow(model, s, delta, delta / 8.0)?.final_state.q;
    // H is even in p, so the backward flow is the forward flow of (q, −p).
    let back = PhaseState::new(s.q.clone(), -&s.p);
    let bwd = flow(model, &back, delta, delta / 8.0)?.final_state.q;
    let fd = (fwd - 2.0 * &s.q + bwd) / (delta * delta);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for k in 0..d {
        let a = second_derivative_along_flow(model, s, &Polynomial::coordinate(d, k))?;
        worst = worst.max((a - fd[k]).abs());
        scale = scale.max(a.abs());
    }
    Ok((worst, scale))
}

/// Largest `|mean − target| / stderr` over the entries of `v vᵀ` and `p pᵀ`,
/// or infinity when an entry misses its target by more than round-off with
/// zero spread.
fn sphere_moment_score(
    model: &dyn ManifoldModel,
    q: &DVector<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> subwalk_core::Result<f64> {
    let d = model.dim();
    let m = model.rank() as f64;
    let b = cometric_eval(model, q)?;
    let g = metric_eval(model, q)?;
    let gbg = &g * &b * &g;
    let factor = horizontal_factor(model, q)?;
    let mut vv = vec![Vec::with_capacity(n); d * d];
    let mut pp = vec![Vec::with_capacity(n); d * d];
    for _ in 0..n {
        let v = factor.sample(rng);
        let p = &g * &v;
        for i in 0..d {
            for j in 0..d {
                vv[d * i + j].push(v[i] * v[j]);
                pp[d * i + j].push(p[i] * p[j]);
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for (samples, target) in [
                (&vv[d * i + j], b[(i, j)] / m),
                (&pp[d * i + j], gbg[(i, j)] / m),
            ] {
                let est = Estimate::from_samples(samples)?;
                let diff = (est.mean - target).abs();
                let floor = 1e-12 * (1.0 + target.abs());
                if diff > floor {
                    worst = worst.max(if est.stderr > 0.0 {
                        diff / est.stderr
                    } else {
                        f64::INFINITY
                    });
                }
            }
        }
    }
    Ok(worst)
}

fn verify_fields(dim: usize) -> Vec<Polynomial> {
    let mut names = vec!["xsq", "normsq"];
    if dim >= 2 {
        names.push("quartic");
    }
    names
        .into_iter()
        .filter_map(|n| builtin_field(n, dim))
        .collect()
}

fn verify_point(
    built: &BuiltModel,
    q: &DVector<f64>,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    let model = built.model.as_ref();
    let mut checks = Vec::new();

    let report = validate_compatibility(model, q);
    let mut c = Check::measured("compatibility", q, report.residual, report.tolerance);
    c.pass = report.pass();
    c.detail = report.failures.join("; ");
    checks.push(c);

    let bgb_tol = 1e-9;
    checks.push(match (cometric_eval(model, q), metric_eval(model, q)) {
        (Ok(b), Ok(g)) => {
            let scale = 1.0f64.max(b.norm() * b.norm() * g.norm());
            Check::measured(
                "bgb-identity",
                q,
                (&b * &g * &b - &b).amax() / scale,
                bgb_tol,
            )
        }
        (Err(e), _) | (_, Err(e)) => Check::errored("bgb-identity", q, bgb_tol, e),
    });

    if let Some(lambda) = built.heisenberg_lambda {
        let target = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let g = model.metric(q);
        let gbg = &g * model.cometric(q) * &g;
        checks.push(Check::measured(
            "gbg-diagonal",
            q,
            (gbg - target).amax(),
            1e-12,
        ));
        checks.push(match raised_christoffel(model, q) {
            Ok(gamma) => {
                let worst = (0..3).fold(0.0f64, |w, k| {
                    w.max(gamma.get(0, 0, k).abs())
                        .max(gamma.get(1, 1, k).abs())
                });
                Check::measured("christoffel-horizontal", q, worst, 1e-10)
            }
            Err(e) => Check::errored("christoffel-horizontal", q, 1e-10, e),
        });
        let other = HeisenbergModel::new(if lambda == 7.0 { 1.0 } else { 7.0 }).expect("valid λ");
        let mut worst = 0.0f64;
        for f in verify_fields(3) {
            match (
                sublaplacian_local(model, &f, q),
                sublaplacian_local(&other, &f, q),
            ) {
                (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
                _ => worst = f64::NAN,
            }
        }
        let mut c = Check::measured("lambda-independence", q, worst, 1e-10);
        c.pass = worst <= 1e-10;
        checks.push(c);
    }

    let state = horizontal_factor(model, q).and_then(|f| {
        let v = f.sample(rng);
        Ok(PhaseState::new(q.clone(), metric_eval(model, q)? * v))
    });
    match state {
        Ok(s) => {
            checks.push(match (hamiltonian(model, &s), flow(model, &s, 1.0, 1e-3)) {
                (Ok(h), Ok(r)) => Check::measured(
                    "energy-conservation",
                    q,
                    r.energy_drift / h.abs().max(1.0),
                    1e-9,
                ),
                (Err(e), _) | (_, Err(e)) => Check::errored("energy-conservation", q, 1e-9, e),
            });
            checks.push(match acceleration_identity(model, &s) {
                Ok((err, scale)) => Check::measured("acceleration-identity", q, err / scale, 1e-5),
                Err(e) => Check::errored("acceleration-identity", q, 1e-5, e),
            });
        }
        Err(e) => {
            checks.push(Check::errored("energy-conservation", q, 1e-9, &e));
            checks.push(Check::errored("acceleration-identity", q, 1e-5, &e));
        }
    }

    checks.push(match sphere_moment_score(model, q, samples, rng) {
        Ok(z) => Check::measured("sphere-moments", q, z, 4.0),
        Err(e) => Check::errored("sphere-moments", q, 4.0, e),
    });

    let mut worst = 0.0f64;
    let mut error = None;
    for f in verify_fields(model.dim()) {
        match (
            sublaplacian_local(model, &f, q),
            sublaplacian_sphere_avg(model, &f, q, samples, rng),
        ) {
            (Ok(local), Ok(est)) => {
                let diff = (est.mean - local).abs();
                if diff > 1e-12 * (1.0 + local.abs()) {
                    worst = worst.max(if est.stderr > 0.0 {
                        diff / est.stderr
                    } else {
                        f64::INFINITY
                    });
                }
            }
            (Err(e), _) | (_, Err(e)) => error = Some(e),
        }
    }
    checks.push(match error {
        None => Check::measured("cross-formula", q, worst, 4.0),
        Some(e) => Check::errored("cross-formula", q, 4.0, e),
    });
    checks
}

fn verify(
    source: &ModelSource,
    n_points: usize,
    samples: usize,
    seed: u64,
) -> Result<Report, CliError> {
    let built = build_model(source, false)?;
    let model = built.model.as_ref();
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<DVector<f64>> = if built.samples.is_empty() {
        (0..n_points)
            .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0)))
            .collect()
    } else {
        built
            .samples
            .iter()
            .map(|s| DVector::from_column_slice(s))
            .collect()
    };
    let checks: Vec<Check> = points
        .iter()
        .enumerate()
        .flat_map(|(i, q)| verify_point(&built, q, samples, &mut path_rng(seed, i as u64)))
        .collect();

    let mut table = Table::new(["check", "point", "value", "tolerance", "pass", "detail"]);
    for c in &checks {
        let point = c
            .point
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        table.push(vec![
            c.name.into(),
            point.into(),
            c.value.into(),
            c.tolerance.into(),
            c.pass.into(),
            c.detail.clone().into(),
        ]);
    }

    let mut names: Vec<&str> = Vec::new();
    for c in &checks {
        if !names.contains(&c.name) {
            names.push(c.name);
        }
    }
    let mut notes = vec![format!(
        "{:<24} {:>6} {:>12} {:>10}",
        "check", "passed", "worst", "tolerance"
    )];
    for name in &names {
        let group: Vec<&Check> = checks.iter().filter(|c| c.name == *name).collect();
        let passed = group.iter().filter(|c| c.pass).count();
        let worst = group.iter().map(|c| c.value).fold(0.0f64, |a, v| {
            if v.is_nan() || a.is_nan() {
                f64::NAN
            } else {
                a.max(v)
            }
        });
        notes.push(format!(
            "{:<24} {:>6} {:>12.3e} {:>10.1e}  {}",
            name,
            format!("{passed}/{}", group.len()),
            worst,
            group[0].tolerance,
            if passed == group.len() {
                "PASS"
            } else {
                "FAIL"
            }
        ));
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    let failure = failed.first().map(|c| {
        format!(
            "{} of {} checks failed; first: {} at {:?}: value {:e} vs tolerance {:e}{}",
            failed.len(),
            checks.len(),
            c.name,
            c.point,
            c.value,
            c.tolerance,
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", c.detail)
            }
        )
    });
    let result = json!({
        "model": model.name(),
        "checks": checks.iter().map(|c| json!({
            "check": c.name,
            "point": c.point,
            "value": c.value,
            "tolerance": c.tolerance,
            "pass": c.pass,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
        "n_checks": checks.len(),
        "n_failed": failed.len(),
        "pass": failed.is_empty(),
    });
    Ok(Report {
        table,
        result,
        notes,
        failure,
    })
}

fn laplacian(
    source: &ModelSource,
    field: &FieldSource,
    points: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<Report, CliError> {
    let built = build_model(source, true)?;
    let model = built.model.as_ref();
    let d = model.dim();
    let f = build_field(field, d)?;
    let f = f.as_field();
    let mut table = Table::new(
        coord_columns("q", d)
            .chain(["local", "sphere_mean", "sphere_stderr", "difference"].map(String::from)),
    );
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let q = DVector::from_column_slice(p);
        let local = sublaplacian_local(model, f, &q)?;
        let est = sublaplacian_sphere_avg(model, f, &q, samples, &mut path_rng(seed, i as u64))?;
        let diff = est.mean - local;
        table.push(
            floats(&q)
                .chain([local, est.mean, est.stderr, diff].map(Cell::Float))
                .collect(),
        );
        notes.push(format!(
            "{:?}: local {local:.10}, sphere {:.6} ± {:.2e}, difference {diff:.2e}",
            p, est.mean, est.stderr
        ));
        rows.push(json!({
            "point": p,
            "local": local,
            "sphere_mean": est.mean,
            "sphere_stderr": est.stderr,
            "difference": diff,
        }));
    }
    Ok(Report {
        table,
        result: json!({ "model": model.name(), "field": f.name(), "samples": samples, "rows": rows }),
        notes,
        failure: None,
    })
}

fn flow_trace(
    source: &ModelSource,
    point: &[f64],
    momentum: &[f64],
    t: f64,
    step: f64,
    compare_exact: bool,
    tolerance: f64,
) -> Result<Report, CliError> {
    let built = build_model(source, true)?;
    let model = built.model.as_ref();
    let d = model.dim();
    let start = PhaseState::from_slices(point, momentum);
    if compare_exact && model.exact_flow(&start, 0.0).is_none() {
        return Err(CliError::Usage(format!(
            "--compare-exact: {} has no closed-form flow",
            model.name()
        )));
    }
    let res = flow_traced(model, &start, t, step)?;
    let trace = res.trace.expect("traced flow");
    let mut columns: Vec<String> = std::iter::once("t".to_string())
        .chain(coord_columns("q", d))
        .chain(coord_columns("p", d))
        .chain(std::iter::once("H".to_string()))
        .collect();
    if compare_exact {
        columns.push("exact_diff".into());
    }
    let mut table = Table::new(columns);
    let mut rows = Vec::with_capacity(trace.len());
    let mut worst: Option<f64> = None;
    for (time, s) in &trace {
        let h = hamiltonian(model, s)?;
        let mut row: Vec<Cell> = std::iter::once(Cell::Float(*time))
            .chain(floats(&s.q))
            .chain(floats(&s.p))
            .chain(std::iter::once(Cell::Float(h)))
            .collect();
        let mut entry = json!({ "t": time, "q": vec_of(&s.q), "p": vec_of(&s.p), "H": h });
        if compare_exact {
            let exact = model.exact_flow(&start, *time).expect("checked above");
            let diff = s.sup_distance(&exact);
            worst = Some(worst.unwrap_or(0.0).max(diff));
            row.push(diff.into());
            entry["exact_diff"] = json!(diff);
        }
        table.push(row);
        rows.push(entry);
    }
    let mut notes = vec![format!(
        "energy drift {:.3e} over {} steps",
        res.energy_drift,
        trace.len() - 1
    )];
    let mut failure = None;
    if let Some(w) = worst {
        notes.push(format!(
            "sup discrepancy against closed-form flow {w:.3e} (tolerance {tolerance:e})"
        ));
        if w > tolerance {
            failure = Some(format!(
                "flow discrepancy {w:e} exceeds tolerance {tolerance:e}"
            ));
        }
    }
    Ok(Report {
        table,
        result: json!({
            "model": model.name(),
            "energy_drift": res.energy_drift,
            "max_exact_discrepancy": worst,
            "trace": rows,
        }),
        notes,
        failure,
    })
}

#[allow(clippy::too_many_arguments)]
fn walk(
    source: &ModelSource,
    point: &[f64],
    epsilon: f64,
    t: f64,
    n_paths: usize,
    step: f64,
    leg_mode: LegMode,
    seed: u64,
) -> Result<Report, CliError> {
    let built = build_model(source, true)?;
    let model = built.model.as_ref();
    let d = model.dim();
    let cfg = WalkConfig {
        epsilon,
        horizon: t / (epsilon * epsilon),
        step,
        leg_mode,
    };
    let x0 = DVector::from_column_slice(point);
    let mut table = Table::new(
        ["walk", "leg", "kind", "tau"]
            .map(String::from)
            .into_iter()
            .chain(coord_columns("q", d))
            .chain(coord_columns("p", d)),
    );
    let mut walks = Vec::with_capacity(n_paths);
    let mut total_legs = 0;
    for w in 0..n_paths {
        let path = sample_walk(model, &x0, None, &cfg, &mut path_rng(seed, w as u64))?;
        let stamped = path
            .jump_times
            .iter()
            .zip(&path.leg_starts)
            .map(|(&tau, s)| ("start", tau, s))
            .chain(std::iter::once(("end", cfg.horizon, &path.final_state)));
        for (leg, (kind, tau, s)) in stamped.enumerate() {
            table.push(
                [Cell::from(w), leg.into(), kind.into(), tau.into()]
                    .into_iter()
                    .chain(floats(&s.q))
                    .chain(floats(&s.p))
                    .collect(),
            );
        }
        total_legs += path.leg_count();
        walks.push(json!({
            "legs": path.leg_count(),
            "jump_times": path.jump_times,
            "starts": path.leg_starts.iter().map(|s| json!({ "q": vec_of(&s.q), "p": vec_of(&s.p) })).collect::<Vec<_>>(),
            "end": { "q": vec_of(&path.final_state.q), "p": vec_of(&path.final_state.p) },
        }));
    }
    Ok(Report {
        table,
        result: json!({ "model": model.name(), "epsilon": epsilon, "horizon": cfg.horizon, "walks": walks }),
        notes: vec![format!(
            "{n_paths} walk(s), mean {:.2} legs over walk-clock horizon {}",
            total_legs as f64 / n_paths as f64,
            cfg.horizon
        )],
        failure: None,
    })
}

fn auto_reference(
    built: &BuiltModel,
    field_source: &FieldSource,
    field: &BuiltField,
    x0: &DVector<f64>,
    settings: &EstimatorSettings,
    oracle_paths: usize,
    oracle_dt: f64,
) -> Result<Option<Reference>, CliError> {
    let BuiltField::Polynomial(poly) = field else {
        return Ok(None);
    };
    if built.model.name().starts_with("euclidean") {
        return Ok(Some(Reference {
            value: euclidean_heat_reference(poly, x0, settings.t)?,
            stderr: None,
            provenance: "analytic".into(),
        }));
    }
    let FieldSource::Builtin { name } = field_source else {
        return Ok(None);
    };
    if built.heisenberg_lambda.is_none() || x0.iter().any(|&x| x != 0.0) {
        return Ok(None);
    }
    let report = heisenberg_sde_oracle(&OracleSettings {
        t: settings.t,
        n_paths: oracle_paths,
        dt: oracle_dt,
        seed: settings.seed,
        cos_frequency: 1.0,
        workers: settings.workers,
    })?;
    Ok(report.reference_for(name))
}

fn converge(
    source: &ModelSource,
    field_source: &FieldSource,
    point: &[f64],
    eps_list: &[f64],
    settings: &EstimatorSettings,
    reference: &ReferenceSource,
) -> Result<Report, CliError> {
    let built = build_model(source, true)?;
    let model = built.model.as_ref();
    let field = build_field(field_source, model.dim())?;
    let x0 = DVector::from_column_slice(point);
    let reference = match reference {
        ReferenceSource::None => None,
        ReferenceSource::Given(r) => Some(r.clone()),
        ReferenceSource::Auto {
            oracle_paths,
            oracle_dt,
        } => auto_reference(
            &built,
            field_source,
            &field,
            &x0,
            settings,
            *oracle_paths,
            *oracle_dt,
        )?,
    };
    let sweep = convergence_sweep(model, field.as_field(), &x0, eps_list, settings, reference)?;
    let mut table = Table::new([
        "epsilon",
        "estimate",
        "stderr",
        "n_paths",
        "reference",
        "provenance",
    ]);
    let r = sweep.reference.as_ref();
    for row in &sweep.rows {
        table.push(vec![
            row.epsilon.into(),
            row.estimate.into(),
            row.stderr.into(),
            row.n_paths.into(),
            r.map(|r| r.value).into(),
            r.map_or(Cell::Empty, |r| r.provenance.as_str().into()),
        ]);
    }
    let deviations = sweep.deviations();
    let notes = sweep
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let dev = deviations.as_ref().map_or(String::new(), |d| {
                format!(", |estimate − reference| {:.4e}", d[i])
            });
            format!(
                "ε = {}: {:.6} ± {:.2e}{dev}",
                row.epsilon, row.estimate, row.stderr
            )
        })
        .collect();
    let mut result = serde_json::to_value(&sweep).expect("sweep json");
    result["deviations"] = json!(deviations);
    Ok(Report {
        table,
        result,
        notes,
        failure: None,
    })
}

fn oracle(settings: &OracleSettings) -> Result<Report, CliError> {
    let r = heisenberg_sde_oracle(settings)?;
    let t = settings.t;
    let mut table = Table::new(["moment", "value", "stderr", "analytic"]);
    let rows: [(&str, f64, f64, f64); 5] = [
        ("E[x^2]", r.x_sq.mean, r.x_sq.stderr, t),
        ("E[y^2]", r.y_sq.mean, r.y_sq.stderr, t),
        ("E[z]", r.z_mean.mean, r.z_mean.stderr, 0.0),
        ("Var[z]", r.z_var.value, r.z_var.stderr, t * t / 4.0),
        (
            "E[cos(lambda z)]",
            r.cos_z.mean,
            r.cos_z.stderr,
            1.0 / (settings.cos_frequency * t / 2.0).cosh(),
        ),
    ];
    let mut notes = Vec::new();
    for (name, value, se, analytic) in rows {
        table.push(vec![name.into(), value.into(), se.into(), analytic.into()]);
        notes.push(format!(
            "{name:<18} {value:>10.6} ± {se:.2e}   closed form {analytic:.6}"
        ));
    }
    let result: Value = serde_json::to_value(&r).expect("oracle json");
    Ok(Report {
        table,
        result,
        notes,
        failure: None,
    })
}
