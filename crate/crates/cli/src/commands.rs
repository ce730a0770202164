use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pcrit::asymptotics::{fit_for_regime, predict, AsymptoticFit, FitModel};
use pcrit::bounds::{
    capacity_value, euler_gamma, incomplete_gamma_zero, incomplete_gamma_zero_cf,
    incomplete_gamma_zero_series, optimize_upper_bound, supersolution_suite, CapacityMode,
    CapacityProblem, MassGrowth,
};
use pcrit::eigensolver::{
    lambda_curve, lambda_curve_with, solve_adaptive, solve_ground_state,
    solve_with_domain_extrapolation, CurvePoint, SolverConfig, SpectralResult,
};
use pcrit::energy::{ProblemSpec, Regime};
use pcrit::potentials::{check_condition, write_table, Potential};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{load, Loaded};
use crate::output::{
    ensure_dir, num, write_curve, write_json, write_svg, CsvOut, Provenance, BOUNDS_COLUMNS,
    RESULT_COLUMNS,
};
use crate::CliError;

pub struct Context {
    pub loaded: Loaded,
    pub prov: Provenance,
    pub out_dir: PathBuf,
    pub solver: SolverConfig<f64>,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(
        config: &Path,
        jobs: Option<usize>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        timestamps: bool,
    ) -> Result<Self, CliError> {
        let loaded = load(config)?;
        let solver = loaded.solver(seed)?;
        let out_dir = out.unwrap_or_else(|| loaded.config.outputs.directory.clone());
        let prov = Provenance::new(loaded.hash.clone(), solver.seed, timestamps);
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            if j == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            builder = builder.num_threads(j);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        Ok(Self {
            loaded,
            prov,
            out_dir,
            solver,
            pool,
        })
    }

    fn file(&self, name: &str) -> Result<PathBuf, CliError> {
        ensure_dir(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }
}

/// Shortest round-trip form, switching to exponent notation for very small or large magnitudes.
fn fmt(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn result_row(alpha: f64, r: &SpectralResult<f64>) -> Vec<String> {
    vec![
        fmt(alpha),
        fmt(r.lambda),
        fmt(r.residual),
        r.iterations.to_string(),
        fmt(r.r_max),
        r.converged.to_string(),
        fmt(r.energy.mass),
        fmt(r.energy.kinetic),
        fmt(r.energy.potential_v),
        fmt(r.energy.potential_w),
    ]
}

fn failed_row(alpha: f64) -> Vec<String> {
    let mut row = vec![fmt(alpha)];
    row.extend(["NaN", "NaN", "0", "NaN", "false", "NaN", "NaN", "NaN", "NaN"].map(String::from));
    row
}

pub fn make_potential(ctx: &Context) -> Result<(), CliError> {
    let pb = &ctx.loaded.config.problem;
    let v = ctx.loaded.source_potential()?;
    ProblemSpec::new(pb.p, pb.dim, v.clone(), Potential::zero(), 0.0)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let radii = table_radii(&v);
    let mut body = Vec::new();
    write_table(&mut body, &v, &radii, pb.p, pb.dim).map_err(|e| CliError::Io(e.to_string()))?;
    let text = String::from_utf8(body).expect("table is ASCII");
    let (header, rows) = text.split_once('\n').expect("table has a header");
    let path = ctx.file("potential.txt")?;
    let out = format!("{header}\n{}{rows}", ctx.prov.comment_block("#"));
    fs::write(&path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {} ({} rows)", path.display(), radii.len());
    Ok(())
}

/// Dense near the origin, geometric further out, and past the support so the table ends in zeros.
fn table_radii(v: &Potential<f64>) -> Vec<f64> {
    if v.is_zero() {
        return vec![0.0, 1.0];
    }
    let support = v.support_radius().unwrap_or(1e4);
    let dense_end = support.min(10.0);
    let mut r: Vec<f64> = (0..=(dense_end / 1e-2).round() as usize)
        .map(|k| k as f64 * 1e-2)
        .collect();
    let mut x = dense_end;
    while x < 1.5 * support {
        x *= 1.02;
        r.push(x);
    }
    r
}

fn solve_point(ctx: &Context, spec: &ProblemSpec<f64>, alpha: f64) -> pcrit::Result<SpectralResult<f64>> {
    let l = &ctx.loaded;
    let g = &l.config.grid;
    let spec = spec.with_alpha(alpha);
    let plan = l.plan();
    if alpha == 0.0 {
        let rc = g.criticality_radius;
        return solve_with_domain_extrapolation(&spec, &ctx.solver, &plan, &[rc / 2.0, rc], None)
            .map(|d| d.result);
    }
    if let Some(schedule) = &g.r_schedule {
        let d = solve_with_domain_extrapolation(&spec, &ctx.solver, &plan, schedule, None)?;
        if d.schedule_too_short {
            eprintln!("alpha={alpha}: radius schedule is shorter than 10 decay lengths");
        }
        return Ok(d.result);
    }
    if let Some(grid) = l.fixed_grid().expect("validated before solving") {
        return solve_ground_state(&spec, Arc::new(grid), &ctx.solver, None);
    }
    if let Some(r) = g.r_max {
        let grid = Arc::new(plan.build(spec.dim, r)?);
        return solve_ground_state(&spec, grid, &ctx.solver, None);
    }
    solve_adaptive(&spec, &ctx.solver, &l.curve_options(), None, None).map(|(r, _)| r)
}

pub fn ground_state(ctx: &Context, alpha: Option<f64>) -> Result<(), CliError> {
    let spec = ctx.loaded.spec()?;
    ctx.loaded.fixed_grid()?;
    let alphas = match alpha {
        Some(a) if a >= 0.0 && a.is_finite() => vec![a],
        Some(a) => return Err(CliError::Usage(format!("--alpha must be nonnegative, got {a}"))),
        None => ctx.loaded.alphas()?,
    };
    let results: Vec<(f64, pcrit::Result<SpectralResult<f64>>)> = ctx.pool.install(|| {
        alphas
            .par_iter()
            .map(|&a| (a, solve_point(ctx, &spec, a)))
            .collect()
    });
    let mut csv = CsvOut::create(&ctx.file("results.csv")?, &ctx.prov, &RESULT_COLUMNS)?;
    let mut failures = Vec::new();
    for (a, r) in &results {
        match r {
            Ok(res) => {
                csv.row(&result_row(*a, res))?;
                eprintln!("alpha={a} lambda={:e} converged={}", res.lambda, res.converged);
            }
            Err(e) => {
                csv.row(&failed_row(*a))?;
                failures.push(format!("alpha={a}: {e}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(failures.join("; ")))
    }
}

fn regime_guard(spec: &ProblemSpec<f64>) -> Result<(), CliError> {
    if spec.regime() == Regime::EqualP {
        return Err(CliError::Config(
            "N = p has exponentially small eigenvalues and is not supported".into(),
        ));
    }
    Ok(())
}

/// Streams the sweep to `results.csv`, one flushed row per coupling.
fn run_sweep(ctx: &Context, spec: &ProblemSpec<f64>) -> Result<Vec<CurvePoint<f64>>, CliError> {
    let alphas = ctx.loaded.alphas()?;
    let mut csv = CsvOut::create(&ctx.file("results.csv")?, &ctx.prov, &RESULT_COLUMNS)?;
    let mut write_err = None;
    let points = lambda_curve_with(spec, &alphas, &ctx.solver, &ctx.loaded.curve_options(), |pt| {
        let row = match &pt.outcome {
            Ok(r) => result_row(pt.alpha, r),
            Err(_) => failed_row(pt.alpha),
        };
        if write_err.is_none() {
            write_err = csv.row(&row).err();
        }
        match &pt.outcome {
            Ok(r) => eprintln!("alpha={} lambda={:e} R={}", pt.alpha, r.lambda, r.r_max),
            Err(e) => eprintln!("alpha={} failed: {e}", pt.alpha),
        }
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(e) = write_err {
        return Err(e);
    }
    Ok(points)
}

fn converged_pairs(points: &[CurvePoint<f64>]) -> (Vec<(f64, f64)>, Vec<String>) {
    let mut pairs = Vec::new();
    let mut failed = Vec::new();
    for pt in points {
        match &pt.outcome {
            Ok(r) if r.converged => pairs.push((pt.alpha, r.lambda)),
            Ok(_) => failed.push(format!("alpha={}: not converged", pt.alpha)),
            Err(e) => failed.push(format!("alpha={}: {e}", pt.alpha)),
        }
    }
    (pairs, failed)
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.loaded.spec()?;
    regime_guard(&spec)?;
    let points = run_sweep(ctx, &spec)?;
    let (pairs, failed) = converged_pairs(&points);
    let pass = emit_fit(ctx, &spec, &pairs)?;
    if !failed.is_empty() {
        return Err(CliError::Solver(failed.join("; ")));
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::ChecksFailed("fit outside tolerance".into()))
    }
}

pub fn fit(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.loaded.spec()?;
    regime_guard(&spec)?;
    let path = ctx.out_dir.join("results.csv");
    let pairs = read_results(&path)?;
    if emit_fit(ctx, &spec, &pairs)? {
        Ok(())
    } else {
        Err(CliError::ChecksFailed("fit outside tolerance".into()))
    }
}

fn read_results(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Io(format!("{}: {e} (run sweep first)", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Io(format!("{}: missing column {name}", path.display())))
    };
    let (ia, il, ic) = (col("alpha")?, col("lambda")?, col("converged")?);
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        if rec.get(ic) == Some("true") {
            if let (Some(a), Some(l)) = (parse(ia), parse(il)) {
                pairs.push((a, l));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite alpha"));
    Ok(pairs)
}

fn fit_pass(ctx: &Context, regime: Regime, fit: &AsymptoticFit<f64>, pred_q: f64, pred_c: Option<f64>) -> bool {
    let fb = &ctx.loaded.config.fit;
    match regime {
        Regime::Superlinear => {
            fit.exponent.is_some_and(|q| (q - pred_q).abs() <= fb.exponent_tolerance)
                && fit.r2 >= fb.min_r2
        }
        Regime::BelowP => {
            fit.exponent.is_some_and(|q| (q - pred_q).abs() <= fb.relative_tolerance * pred_q)
                && fit.r2 >= fb.min_r2
        }
        Regime::LogCorrected => fit.ratio_spread.is_some_and(|s| s < fb.spread_tolerance),
        Regime::Linear => pred_c
            .is_some_and(|c| (fit.constant - c).abs() <= fb.limit_tolerance * c.abs()),
        Regime::EqualP => false,
    }
}

/// Writes `fit.json`, `curve.dat` and optionally `curve.svg`; returns the pass flag.
fn emit_fit(ctx: &Context, spec: &ProblemSpec<f64>, pairs: &[(f64, f64)]) -> Result<bool, CliError> {
    let regime = spec.regime();
    let pred = predict(spec);
    let (pred_q, pred_c) = match &pred {
        Ok(p) => (p.exponent, p.limit_constant),
        Err(e) => {
            eprintln!("prediction unavailable: {e}");
            (regime.order_exponent(spec.p, spec.dim).unwrap_or(f64::NAN), None)
        }
    };
    let window = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, _)| (lo.min(a), hi.max(a)));
    let fit = fit_for_regime(spec, pairs);
    let (body, pass, line) = match &fit {
        Ok(f) => {
            let pass = fit_pass(ctx, regime, f, pred_q, pred_c);
            let line = (f.model == FitModel::PurePower)
                .then(|| (f.exponent.unwrap_or(f64::NAN), f.constant.ln()));
            let body = json!({
                "regime": regime.label(),
                "model": f.model.label(),
                "exponent": f.exponent.map_or(Value::Null, num),
                "constant": num(f.constant),
                "r2": num(f.r2),
                "window": [num(f.window.0), num(f.window.1)],
                "samples": f.samples,
                "predicted_exponent": num(pred_q),
                "predicted_constant": pred_c.map_or(Value::Null, num),
                "pass": pass,
            });
            (body, pass, line)
        }
        Err(e) => {
            eprintln!("fit failed: {e}");
            let model = match regime {
                Regime::LogCorrected => FitModel::LogCorrected,
                Regime::Linear => FitModel::LinearLimit,
                _ => FitModel::PurePower,
            };
            let body = json!({
                "regime": regime.label(),
                "model": model.label(),
                "exponent": Value::Null,
                "constant": Value::Null,
                "r2": Value::Null,
                "window": [num(window.0), num(window.1)],
                "samples": pairs.len(),
                "predicted_exponent": num(pred_q),
                "predicted_constant": pred_c.map_or(Value::Null, num),
                "pass": false,
            });
            (body, false, None)
        }
    };
    write_json(&ctx.file("fit.json")?, &ctx.prov, body)?;
    write_curve(&ctx.file("curve.dat")?, &ctx.prov, pairs)?;
    if ctx.loaded.config.outputs.svg {
        write_svg(&ctx.file("curve.svg")?, &ctx.prov, pairs, line)?;
    }
    if let Ok(f) = &fit {
        eprintln!(
            "fit {}: exponent {:?} constant {:e} r2 {:.5} pass {pass}",
            f.model.label(),
            f.exponent,
            f.constant,
            f.r2
        );
    }
    Ok(pass)
}

struct BoundsRows {
    csv: CsvOut,
    p: f64,
    dim: usize,
    failures: usize,
}

impl BoundsRows {
    fn push(
        &mut self,
        name: &str,
        alpha: Option<f64>,
        parameter: &str,
        value: f64,
        threshold: f64,
        pass: bool,
    ) -> Result<(), CliError> {
        if !pass {
            self.failures += 1;
        }
        self.csv.row(&[
            name.to_string(),
            fmt(self.p),
            self.dim.to_string(),
            alpha.map(fmt).unwrap_or_default(),
            parameter.to_string(),
            fmt(value),
            fmt(threshold),
            pass.to_string(),
        ])
    }
}

pub fn verify_bounds(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.loaded.spec()?;
    let bb = &ctx.loaded.config.bounds;
    let (p, dim) = (spec.p, spec.dim);
    let mut rows = BoundsRows {
        csv: CsvOut::create(&ctx.file("bounds.csv")?, &ctx.prov, &BOUNDS_COLUMNS)?,
        p,
        dim,
        failures: 0,
    };
    let io = |e: pcrit::Error| CliError::Config(e.to_string());

    if (dim as f64) > p {
        let checks = supersolution_suite(p, dim, &bb.lambdas, bb.inner_radius, bb.outer_radius)
            .map_err(io)?;
        for (family, lambda, check) in checks {
            let param = format!("{} lambda={lambda}", family.label());
            match check {
                Some(c) => {
                    rows.push("supersolution_residual", None, &param, c.max_residual, 1e-10, c.max_residual <= 1e-10)?;
                    rows.push("supersolution_discrepancy", None, &param, c.max_discrepancy, 1e-8, c.max_discrepancy <= 1e-8)?;
                }
                None => rows.push("supersolution_region", None, &param, f64::NAN, 0.0, false)?,
            }
        }
        let mut decay = Vec::new();
        for &r in &bb.capacity_radii {
            let cp = CapacityProblem::new(p, dim, r).map_err(io)?;
            let closed = capacity_value(&cp, CapacityMode::ClosedForm).map_err(io)?;
            let discrete = capacity_value(&cp, CapacityMode::DiscreteMin { cells: bb.capacity_cells })
                .map_err(io)?;
            let gap = (closed - discrete).abs() / closed;
            rows.push("capacity_closed_vs_discrete", None, &format!("R={r}"), gap, 1e-3, gap <= 1e-3)?;
        }
        for r in [64.0f64, 128.0, 256.0, 512.0] {
            let cp = CapacityProblem::new(p, dim, r).map_err(io)?;
            let c = capacity_value(&cp, CapacityMode::DiscreteMin { cells: bb.capacity_cells })
                .map_err(io)?;
            decay.push((r.ln(), c.ln()));
        }
        let slope = ls_slope(&decay);
        let want = -CapacityProblem::new(p, dim, 2.0).map_err(io)?.nu() * (p - 1.0);
        rows.push(
            "capacity_decay_slope",
            None,
            &format!("predicted={want}"),
            slope,
            0.05,
            (slope - want).abs() <= 0.05,
        )?;
    } else {
        eprintln!("N <= p: supersolution and capacity checks skipped");
    }

    let x = bb.gamma_x;
    let near = (incomplete_gamma_zero(x).map_err(io)? + x.ln() + euler_gamma::<f64>()).abs();
    rows.push("gamma_asymptotic", None, &format!("x={x}"), near, 0.02, near < 0.02)?;
    let gap = (incomplete_gamma_zero_series(1.0f64) - incomplete_gamma_zero_cf(1.0f64)).abs();
    rows.push("gamma_branch_agreement", None, "x=1", gap, 1e-10, gap <= 1e-10)?;

    let mut solver_failed = Vec::new();
    let sweepable = matches!(spec.regime(), Regime::Superlinear | Regime::LogCorrected | Regime::Linear);
    if bb.upper_bounds && sweepable && ctx.loaded.config.sweep.is_some() && spec.ground_state().is_some() {
        let alphas = ctx.loaded.alphas()?;
        let points = lambda_curve(&spec, &alphas, &ctx.solver, &ctx.loaded.curve_options()).map_err(io)?;
        let (pairs, failed) = converged_pairs(&points);
        solver_failed = failed;
        let masses: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|pt| pt.outcome.as_ref().ok().filter(|r| r.converged).map(|r| (r.lambda, r.energy.mass)))
            .collect();
        let bounds: Vec<pcrit::Result<_>> = ctx.pool.install(|| {
            pairs
                .par_iter()
                .map(|&(a, _)| optimize_upper_bound(&spec.with_alpha(a)))
                .collect()
        });
        let mut logs = Vec::new();
        for (&(a, l), b) in pairs.iter().zip(&bounds) {
            let b = b.as_ref().map_err(|e| CliError::Config(e.to_string()))?;
            let tol = ctx.solver.lambda_tolerance(l);
            let param = b.t_star.map_or("t=phi0".to_string(), |t| format!("t={t}"));
            rows.push("upper_bound_dominance", Some(a), &param, b.bound - l, -tol, b.bound - l >= -tol)?;
            if b.bound < 0.0 {
                logs.push((a.ln(), (-b.bound).ln()));
            }
        }
        if logs.len() >= 3 {
            let q = ls_slope(&logs);
            let want = spec.regime().order_exponent(p, dim).expect("sweepable regime");
            rows.push("upper_bound_exponent", None, &format!("predicted={want}"), q, 0.2, (q - want).abs() <= 0.2)?;
        }
        if let (Some(&(l0, _)), true) = (masses.first(), masses.len() >= 3) {
            if let Ok(MassGrowth::Power { exponent, .. }) = pcrit::bounds::lower_bound_mass(l0, p, dim) {
                let pts: Vec<(f64, f64)> = masses.iter().map(|&(l, m)| ((-l).ln(), m.ln())).collect();
                let s = ls_slope(&pts);
                rows.push("mass_growth_slope", None, &format!("predicted={exponent}"), s, 0.1, (s - exponent).abs() <= 0.1)?;
            }
        }
    }

    eprintln!("bounds: {} failed checks", rows.failures);
    if !solver_failed.is_empty() {
        return Err(CliError::Solver(solver_failed.join("; ")));
    }
    if rows.failures > 0 {
        return Err(CliError::ChecksFailed(format!("{} bound checks failed", rows.failures)));
    }
    Ok(())
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `λ_R(0)` on a doubling schedule ending at `criticality_radius`, plus the sign condition on W.
pub fn criticality_check(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx.loaded.spec()?;
    let rc = ctx.loaded.config.grid.criticality_radius;
    let schedule = [rc / 8.0, rc / 4.0, rc / 2.0, rc];
    let mut rows = BoundsRows {
        csv: CsvOut::create(&ctx.file("criticality.csv")?, &ctx.prov, &BOUNDS_COLUMNS)?,
        p: spec.p,
        dim: spec.dim,
        failures: 0,
    };
    let d = solve_with_domain_extrapolation(&spec, &ctx.solver, &ctx.loaded.plan(), &schedule, None)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let floor = -ctx.solver.tolerance_lambda;
    for &(r, l) in &d.lambdas {
        rows.push("truncated_lambda_nonnegative", Some(0.0), &format!("R={r}"), l, floor, l >= floor)?;
    }
    let worst_rise = d
        .lambdas
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(
        "truncated_lambda_nonincreasing",
        Some(0.0),
        "max rise",
        worst_rise,
        ctx.solver.tolerance_lambda,
        worst_rise <= ctx.solver.tolerance_lambda,
    )?;
    let last = d.lambdas.last().expect("schedule nonempty").1;
    rows.push("lambda_at_largest_radius", Some(0.0), &format!("R={rc}"), last.abs(), 1e-5, last.abs() < 1e-5)?;
    match spec.ground_state() {
        Some(gs) => {
            let omega = check_condition(&spec.w, &gs, spec.p).map_err(|e| CliError::Config(e.to_string()))?;
            rows.push("condition_integral", None, "int W phi0^p", omega, 0.0, omega > 0.0)?;
        }
        None => eprintln!("ground state unknown for a tabulated V: condition integral skipped"),
    }
    eprintln!("criticality: {} failed checks", rows.failures);
    if rows.failures > 0 {
        return Err(CliError::ChecksFailed(format!("{} criticality checks failed", rows.failures)));
    }
    Ok(())
}
