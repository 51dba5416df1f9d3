//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line; the
//! binary exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subwalk_core::geometry::{cometric_eval, horizontal_factor, metric_eval};
use subwalk_core::hamiltonian::{
    cometric_derivatives, cometric_derivatives_fd, flow, raised_christoffel,
    second_derivative_along_flow,
};
use subwalk_core::manifolds::{
    heisenberg_flow_exact, heisenberg_spec_text, load_model, parse_expression,
};
use subwalk_core::montecarlo::{
    estimate_semigroup_many, heisenberg_sde_oracle, EstimatorReport, EstimatorSettings,
    OracleSettings,
};
use subwalk_core::sublaplacian::{sublaplacian_local, sublaplacian_sphere_avg};
use subwalk_core::walker::{sample_walk, WalkConfig};
use subwalk_core::{
    builtin_field, EuclideanModel, HeisenbergModel, ManifoldModel, PhaseState, Polynomial,
    ScalarField,
};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.random_range(-r..r))
}

/// Degree-≤4 polynomial suite on R³: the named built-ins plus random ones.
fn polynomial_suite(rng: &mut ChaCha8Rng) -> Vec<Polynomial> {
    let mut suite: Vec<Polynomial> = [
        "x", "y", "z", "xsq", "ysq", "zsq", "xy", "normsq", "quartic",
    ]
    .iter()
    .map(|n| builtin_field(n, 3).unwrap())
    .collect();
    for _ in 0..11 {
        suite.push(Polynomial::random(3, 4, 6, rng));
    }
    suite
}

/// `X f = ∂_x f − (y/2) ∂_z f`.
fn apply_x(f: &Polynomial) -> Polynomial {
    f.derivative(0)
        .plus(&f.derivative(2).times_coordinate(1, -0.5))
}

/// `Y f = ∂_y f + (x/2) ∂_z f`.
fn apply_y(f: &Polynomial) -> Polynomial {
    f.derivative(1)
        .plus(&f.derivative(2).times_coordinate(0, 0.5))
}

fn heisenberg_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_gbg, mut worst_gamma) = (0.0f64, 0.0f64);
    let target = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
    for lambda in [0.5, 1.0, 4.0] {
        let h = HeisenbergModel::new(lambda).unwrap();
        for _ in 0..100 {
            let q = random_point(&mut rng, 3, 5.0);
            let g = metric_eval(&h, &q).unwrap();
            let gbg = &g * cometric_eval(&h, &q).unwrap() * &g;
            worst_gbg = worst_gbg.max((gbg - &target).amax());
            let gamma = raised_christoffel(&h, &q).unwrap();
            for k in 0..3 {
                worst_gamma = worst_gamma
                    .max(gamma.get(0, 0, k).abs())
                    .max(gamma.get(1, 1, k).abs());
            }
        }
    }
    check(worst_gbg <= 1e-12, || {
        format!("GBG deviation {worst_gbg:e}")
    })?;
    check(worst_gamma <= 1e-10, || {
        format!("Γ^11k/Γ^22k max {worst_gamma:e}")
    })?;
    Ok(format!(
        "max |GBG − diag(1,1,0)| = {worst_gbg:.1e}, max |Γ^11k|,|Γ^22k| = {worst_gamma:.1e}"
    ))
}

fn sum_of_squares() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let suite = polynomial_suite(&mut rng);
    let h = HeisenbergModel::new(1.0).unwrap();
    let mut worst = 0.0f64;
    let reference: Vec<Polynomial> = suite
        .iter()
        .map(|f| apply_x(&apply_x(f)).plus(&apply_y(&apply_y(f))).scale(0.5))
        .collect();
    for _ in 0..100 {
        let q = random_point(&mut rng, 3, 2.0);
        for (f, lf) in suite.iter().zip(&reference) {
            let local = sublaplacian_local(&h, f, &q).unwrap();
            worst = worst.max((local - lf.value(&q)).abs());
        }
    }
    check(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    Ok(format!(
        "{} fields x 100 points, max |local − ½(X²+Y²)f| = {worst:.1e}",
        suite.len()
    ))
}

fn lambda_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let suite = polynomial_suite(&mut rng);
    let (h1, h7) = (
        HeisenbergModel::new(1.0).unwrap(),
        HeisenbergModel::new(7.0).unwrap(),
    );
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = random_point(&mut rng, 3, 2.0);
        for f in &suite {
            let a = sublaplacian_local(&h1, f, &q).unwrap();
            let b = sublaplacian_local(&h7, f, &q).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |𝓛(λ=1) − 𝓛(λ=7)| = {worst:.1e}"))
}

fn definition_vs_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let models: Vec<Box<dyn ManifoldModel>> = vec![
        Box::new(HeisenbergModel::new(1.0).unwrap()),
        Box::new(EuclideanModel::new(3).unwrap()),
    ];
    let mut worst_sigma = 0.0f64;
    for model in &models {
        for k in 0..20 {
            let f = if k < 5 {
                builtin_field(["xsq", "zsq", "xy", "normsq", "quartic"][k], 3).unwrap()
            } else {
                Polynomial::random(3, 4, 6, &mut rng)
            };
            let q = random_point(&mut rng, 3, 1.5);
            let local = sublaplacian_local(model.as_ref(), &f, &q).unwrap();
            let est = sublaplacian_sphere_avg(model.as_ref(), &f, &q, 100_000, &mut rng).unwrap();
            let diff = (est.mean - local).abs();
            // Round-off floor for fields whose second derivative is constant on the sphere.
            let floor = 1e-12 * (1.0 + local.abs());
            check(diff <= 4.0 * est.stderr + floor, || {
                format!(
                    "{} f={f} q={:?}: sphere {} ± {} vs local {local}",
                    model.name(),
                    q.as_slice(),
                    est.mean,
                    est.stderr
                )
            })?;
            if est.stderr > 0.0 {
                worst_sigma = worst_sigma.max(diff / est.stderr);
            }
        }
    }
    Ok(format!(
        "40 (f, q) pairs, worst deviation {worst_sigma:.2} stderr"
    ))
}

fn sphere_moments() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let h = HeisenbergModel::new(1.0).unwrap();
    let n = 1_000_000usize;
    let m = h.rank() as f64;
    let mut worst_sigma = 0.0f64;
    for _ in 0..10 {
        let q = random_point(&mut rng, 3, 3.0);
        let b = cometric_eval(&h, &q).unwrap();
        let g = metric_eval(&h, &q).unwrap();
        let gbg = &g * &b * &g;
        let factor = horizontal_factor(&h, &q).unwrap();
        let mut vv = (0..9).map(|_| Vec::with_capacity(n)).collect::<Vec<_>>();
        let mut pp = (0..9).map(|_| Vec::with_capacity(n)).collect::<Vec<_>>();
        for _ in 0..n {
            let v = factor.sample(&mut rng);
            let p = &g * &v;
            for i in 0..3 {
                for j in 0..3 {
                    vv[3 * i + j].push(v[i] * v[j]);
                    pp[3 * i + j].push(p[i] * p[j]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                for (samples, target, what) in [
                    (&vv[3 * i + j], b[(i, j)] / m, "v^i v^j"),
                    (&pp[3 * i + j], gbg[(i, j)] / m, "p_i p_j"),
                ] {
                    let est = subwalk_core::Estimate::from_samples(samples).unwrap();
                    let diff = (est.mean - target).abs();
                    check(
                        diff <= 4.0 * est.stderr + 1e-12 * (1.0 + target.abs()),
                        || {
                            format!(
                                "{what} ({i},{j}) at {:?}: {} ± {} vs {target}",
                                q.as_slice(),
                                est.mean,
                                est.stderr
                            )
                        },
                    )?;
                    if est.stderr > 1e-12 {
                        worst_sigma = worst_sigma.max(diff / est.stderr);
                    }
                }
            }
        }
    }
    Ok(format!(
        "10 points x 18 moments at N=1e6, worst deviation {worst_sigma:.2} stderr"
    ))
}

fn flow_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let h = HeisenbergModel::new(1.0).unwrap();
    let (mut worst_flow, mut worst_drift, mut worst_accel) = (0.0f64, 0.0f64, 0.0f64);
    let coords: Vec<Polynomial> = (0..3).map(|i| Polynomial::coordinate(3, i)).collect();
    for _ in 0..100 {
        let q = random_point(&mut rng, 3, 2.0);
        let mut p = random_point(&mut rng, 3, 2.0);
        if p.norm() > 2.0 {
            p *= 2.0 / p.norm();
        }
        let t = rng.random_range(0.1..=2.0);
        let s = PhaseState::new(q, p);
        let rk = flow(&h, &s, t, 1e-4).unwrap();
        worst_flow = worst_flow.max(rk.final_state.sup_distance(&heisenberg_flow_exact(&s, t)));
        worst_drift = worst_drift.max(rk.energy_drift);

        // Acceleration identity against a second difference of the exact flow.
        let d = 1e-3;
        let fwd = heisenberg_flow_exact(&s, d).q;
        let bwd = heisenberg_flow_exact(&s, -d).q;
        let fd_accel = (fwd - 2.0 * &s.q + bwd) / (d * d);
        for (k, xk) in coords.iter().enumerate() {
            let accel = second_derivative_along_flow(&h, &s, xk).unwrap();
            worst_accel = worst_accel.max((accel - fd_accel[k]).abs());
        }
    }
    check(worst_flow <= 1e-6, || {
        format!("RK4 vs exact {worst_flow:e}")
    })?;
    check(worst_drift <= 1e-9, || {
        format!("energy drift {worst_drift:e}")
    })?;
    check(worst_accel <= 1e-5, || {
        format!("acceleration identity {worst_accel:e}")
    })?;
    Ok(format!(
        "RK4 vs exact {worst_flow:.1e}, energy drift {worst_drift:.1e}, acceleration identity {worst_accel:.1e}"
    ))
}

/// Estimates of `E[x²]`, `E[y²]`, `E[z]`, `E[z²]` on one set of walks.
fn heisenberg_walk_moments(epsilon: f64, n_paths: usize, seed: u64) -> Vec<EstimatorReport> {
    let h = HeisenbergModel::new(1.0).unwrap();
    let fields: Vec<Polynomial> = ["xsq", "ysq", "z", "zsq"]
        .iter()
        .map(|n| builtin_field(n, 3).unwrap())
        .collect();
    let refs: Vec<&dyn ScalarField> = fields.iter().map(|f| f as &dyn ScalarField).collect();
    let settings = EstimatorSettings::new(1.0, epsilon, n_paths, seed);
    estimate_semigroup_many(&h, &refs, &DVector::zeros(3), &settings).unwrap()
}

fn weak_convergence() -> Outcome {
    let oracle = heisenberg_sde_oracle(&OracleSettings::new(1.0, 100_000, 1e-3, 7007)).unwrap();
    let combined = |a: f64, b: f64| (a * a + b * b).sqrt();
    let mut lines = Vec::new();
    let mut sweep = Vec::new();
    for epsilon in [0.2, 0.1, 0.05] {
        let r = heisenberg_walk_moments(epsilon, 100_000, 77);
        sweep.push((epsilon, r[0].estimate, r[0].stderr));
        if epsilon != 0.05 {
            continue;
        }
        for (name, est, target) in [
            ("E[x²]", &r[0], &oracle.x_sq),
            ("E[y²]", &r[1], &oracle.y_sq),
        ] {
            let sigma = combined(est.stderr, target.stderr);
            let tol = (0.05 * target.mean.abs()).max(4.0 * sigma);
            check((est.estimate - target.mean).abs() <= tol, || {
                format!(
                    "{name}: walk {} ± {} vs oracle {} ± {}",
                    est.estimate, est.stderr, target.mean, target.stderr
                )
            })?;
            lines.push(format!("{name} {:.4} vs {:.4}", est.estimate, target.mean));
        }
        let (mz, sz) = (r[2].estimate, r[2].stderr);
        check(mz.abs() <= 4.0 * sz, || format!("E[z] = {mz} ± {sz}"))?;
        lines.push(format!("E[z] {mz:.4} ± {sz:.4}"));
        // Var z = E[z²] − E[z]², delta-method stderr.
        let var_z = r[3].estimate - mz * mz;
        let var_se = (r[3].stderr.powi(2) + (2.0 * mz * sz).powi(2)).sqrt();
        let sigma = combined(var_se, oracle.z_var.stderr);
        let tol = (0.10 * oracle.z_var.value).max(4.0 * sigma);
        check((var_z - oracle.z_var.value).abs() <= tol, || {
            format!(
                "Var z: walk {var_z} ± {var_se} vs oracle {} ± {}",
                oracle.z_var.value, oracle.z_var.stderr
            )
        })?;
        lines.push(format!("Var z {var_z:.4} vs {:.4}", oracle.z_var.value));
    }
    let dev: Vec<(f64, f64)> = sweep
        .iter()
        .map(|&(_, est, se)| {
            (
                (est - oracle.x_sq.mean).abs(),
                combined(se, oracle.x_sq.stderr),
            )
        })
        .collect();
    for w in dev.windows(2) {
        let noise = 2.0 * combined(w[0].1, w[1].1);
        check(w[1].0 <= w[0].0 + noise, || {
            format!("sweep deviations not non-increasing: {dev:?}")
        })?;
    }
    let devs: Vec<String> = sweep
        .iter()
        .zip(&dev)
        .map(|((e, _, _), (d, _))| format!("ε={e}: {d:.4}"))
        .collect();
    Ok(format!(
        "{}; E[x²] deviation {}",
        lines.join(", "),
        devs.join(" ")
    ))
}

fn riemannian_reduction() -> Outcome {
    let e = EuclideanModel::new(3).unwrap();
    let fields: Vec<Polynomial> = (0..3)
        .map(|i| Polynomial::coordinate(3, i).times_coordinate(i, 1.0))
        .collect();
    let refs: Vec<&dyn ScalarField> = fields.iter().map(|f| f as &dyn ScalarField).collect();
    let settings = EstimatorSettings::new(1.0, 0.05, 100_000, 88);
    let reports = estimate_semigroup_many(&e, &refs, &DVector::zeros(3), &settings).unwrap();
    let target = 2.0 / 3.0;
    let mut parts = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        check((r.estimate - target).abs() <= 0.05 * target, || {
            format!("coordinate {i}: {} ± {} vs {target}", r.estimate, r.stderr)
        })?;
        parts.push(format!("{:.4}", r.estimate));
    }
    Ok(format!(
        "per-coordinate variance [{}] vs 0.6667",
        parts.join(", ")
    ))
}

fn payload(r: &EstimatorReport) -> String {
    let mut r = r.clone();
    r.elapsed = 0.0;
    serde_json::to_string(&r).unwrap()
}

fn determinism() -> Outcome {
    let h = HeisenbergModel::new(1.0).unwrap();
    let f = builtin_field("quartic", 3).unwrap();
    let x0 = DVector::from_vec(vec![0.2, -0.1, 0.3]);
    let mut estimates = Vec::new();
    let mut oracles = Vec::new();
    for workers in [1, 2, 8] {
        let settings = EstimatorSettings {
            workers: Some(workers),
            ..EstimatorSettings::new(0.5, 0.1, 20_000, 12345)
        };
        let r = estimate_semigroup_many(&h, &[&f], &x0, &settings).unwrap();
        estimates.push(payload(&r[0]));
        let oracle = heisenberg_sde_oracle(&OracleSettings {
            workers: Some(workers),
            ..OracleSettings::new(1.0, 5_000, 1e-2, 12345)
        })
        .unwrap();
        oracles.push(serde_json::to_string(&oracle).unwrap());
    }
    check(estimates.windows(2).all(|w| w[0] == w[1]), || {
        format!("estimates differ: {estimates:?}")
    })?;
    check(oracles.windows(2).all(|w| w[0] == w[1]), || {
        "oracle reports differ".into()
    })?;

    let cfg = WalkConfig::new(0.2, 50.0);
    let walks: Vec<_> = (0..2)
        .map(|_| sample_walk(&h, &x0, None, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap())
        .collect();
    check(walks[0] == walks[1], || "walk replay differs".into())?;
    Ok("estimates and oracle bit-identical for workers 1, 2, 8; walk replay identical".into())
}

fn parser_loader() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let builtin = HeisenbergModel::new(1.0).unwrap();
    let loaded = load_model(&heisenberg_spec_text(1.0)).map_err(|e| e.to_string())?;
    let (mut worst_model, mut worst_deriv) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let q = random_point(&mut rng, 3, 5.0);
        let db = (builtin.cometric(&q) - loaded.cometric(&q)).amax();
        let dg = (builtin.metric(&q) - loaded.metric(&q)).amax();
        worst_model = worst_model.max(db).max(dg);
        let symbolic = cometric_derivatives(&loaded, &q).unwrap();
        let fd = cometric_derivatives_fd(&loaded, &q).unwrap();
        worst_deriv = worst_deriv.max(symbolic.max_abs_diff(&fd));
    }
    // Symbolic differentiation of free-form expressions against central differences.
    let exprs = [
        "sin(x1)*x2^3 - exp(x1*x2)/4",
        "(x1^2 + x2^2)/4",
        "cos(x1 - 2*x2)^2 / (1 + x1^2)",
    ];
    for text in exprs {
        let e = parse_expression(text).unwrap();
        for _ in 0..100 {
            let pt = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            for var in 1..=2 {
                let d = e.derivative(var).eval(&pt);
                let h = 1e-4;
                let (mut a, mut b) = (pt, pt);
                a[var - 1] += h;
                b[var - 1] -= h;
                let fd = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
                worst_deriv = worst_deriv.max((d - fd).abs());
            }
        }
    }
    check(worst_model <= 1e-12, || {
        format!("round trip {worst_model:e}")
    })?;
    check(worst_deriv <= 1e-7, || {
        format!("symbolic vs FD {worst_deriv:e}")
    })?;
    Ok(format!(
        "round trip {worst_model:.1e}, symbolic vs FD {worst_deriv:.1e}"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Heisenberg algebraic identities", heisenberg_identities),
        ("sum-of-squares equivalence", sum_of_squares),
        ("λ-independence", lambda_independence),
        ("sphere average vs local formula", definition_vs_formula),
        ("sphere-moment identities", sphere_moments),
        ("flow fidelity", flow_fidelity),
        ("weak convergence vs SDE oracle", weak_convergence),
        ("Riemannian reduction", riemannian_reduction),
        ("determinism", determinism),
        ("parser and loader", parser_loader),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
