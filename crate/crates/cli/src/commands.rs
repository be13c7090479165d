//! Subcommand bodies. Each writes its files under `out` and its summary to `log`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rodheat::estimator::forward_temperatures;
use rodheat::fdsolver::unstable_demo;
use rodheat::{
    estimate_diffusivity, identify_material, sample_field, simulate_measurements,
    solve_sensitivity, solve_temperature, stability_parameter, AnalyticSolution, EstimationResult,
    Field, Forward, GridSpec, MeasurementSet, ProblemSpec,
};

use crate::config::{fmt_list, ForwardKind, RunConfig};
use crate::csvio::{read_two_columns, CsvWriter};
use crate::error::CliError;
use crate::fmt_num;

/// Number of points in the fitted-curve CSV.
pub const FIT_POINTS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Temperature,
    Sensitivity,
}

impl Quantity {
    fn stem(self) -> &'static str {
        match self {
            Quantity::Temperature => "temperature",
            Quantity::Sensitivity => "sensitivity",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Quantity::Temperature => "u_C",
            Quantity::Sensitivity => "S_C_per_m2s",
        }
    }
}

/// Probe labels and their fraction of the rod length.
pub const PROBES: [(&str, f64); 3] = [("l_4", 0.25), ("l_2", 0.5), ("3l_4", 0.75)];

pub fn field_path(out: &Path, q: Quantity) -> PathBuf {
    out.join(format!("{}_field.csv", q.stem()))
}

pub fn probe_path(out: &Path, q: Quantity, label: &str) -> PathBuf {
    out.join(format!("{}_probe_{label}.csv", q.stem()))
}

enum Lattice {
    Fd(Field),
    Series(AnalyticSolution, Quantity),
}

impl Lattice {
    fn at(&self, grid: &GridSpec, x: f64, j: usize) -> Result<f64, CliError> {
        let t = grid.t(j);
        Ok(match self {
            Lattice::Fd(f) => sample_field(f, x, t)?,
            Lattice::Series(sol, Quantity::Temperature) => sol.temperature(x, t)?.value,
            Lattice::Series(sol, Quantity::Sensitivity) => sol.sensitivity(x, t)?.value,
        })
    }
}

fn build_lattice(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    grid: &GridSpec,
    alpha2: f64,
    q: Quantity,
) -> Result<Lattice, CliError> {
    Ok(match cfg.forward {
        ForwardKind::Fd => {
            let u = solve_temperature(spec, alpha2, grid)?;
            match q {
                Quantity::Temperature => Lattice::Fd(u),
                Quantity::Sensitivity => Lattice::Fd(solve_sensitivity(spec, alpha2, grid, &u)?),
            }
        }
        ForwardKind::Analytic => Lattice::Series(
            AnalyticSolution::new(spec, alpha2, cfg.series(), grid.dt())?,
            q,
        ),
    })
}

/// Full-field and probe CSVs for `q`, computed by the configured forward model.
pub fn emit_fields(
    cfg: &RunConfig,
    out: &Path,
    q: Quantity,
    log: &mut dyn Write,
) -> Result<(), CliError> {
    let spec = cfg.problem()?;
    let grid = cfg.grid()?;
    let alpha2 = cfg.alpha2()?;
    let lattice = build_lattice(cfg, &spec, &grid, alpha2, q)?;
    fs::create_dir_all(out)?;

    let path = field_path(out, q);
    let mut csv = CsvWriter::create(&path, &format!("x_m,t_s,{}", q.column()))?;
    for j in 0..=grid.n_time() {
        for i in 0..=grid.n_space() {
            let x = grid.x(i);
            csv.row(&[x, grid.t(j), lattice.at(&grid, x, j)?])?;
        }
    }
    csv.finish()?;
    writeln!(log, "wrote {}", path.display())?;

    for (label, frac) in PROBES {
        let x = frac * grid.length();
        let path = probe_path(out, q, label);
        let mut csv = CsvWriter::create(&path, &format!("t_s,{}", q.column()))?;
        for j in 0..=grid.n_time() {
            csv.row(&[grid.t(j), lattice.at(&grid, x, j)?])?;
        }
        csv.finish()?;
        writeln!(log, "wrote {}", path.display())?;
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path, log: &mut dyn Write) -> Result<(), CliError> {
    emit_fields(cfg, out, Quantity::Temperature, log)
}

pub fn sensitivity(cfg: &RunConfig, out: &Path, log: &mut dyn Write) -> Result<(), CliError> {
    emit_fields(cfg, out, Quantity::Sensitivity, log)
}

/// Result of `estimate`, with the data it was computed from.
#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub measurements: MeasurementSet,
    pub result: EstimationResult,
    pub alpha2_true: Option<f64>,
}

/// Measurements from `measurements_file` when given, otherwise synthesized
/// from the configured diffusivity.
pub fn measurements(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    forward: &Forward,
) -> Result<(MeasurementSet, Option<f64>), CliError> {
    match &cfg.measurements_file {
        Some(path) => {
            let rows = read_two_columns(path, "t_s,u_C")?;
            let truth = match cfg.diffusivity {
                crate::config::Diffusivity::Unset => None,
                _ => Some(cfg.alpha2()?),
            };
            let m = MeasurementSet::new(cfg.x0(), rows, cfg.sigma_c, None)
                .map_err(|e| CliError::config("measurements_file", e.to_string()))?;
            Ok((m, truth))
        }
        None => {
            let truth = cfg.alpha2()?;
            let m = simulate_measurements(
                spec,
                truth,
                cfg.x0(),
                &cfg.times_s,
                cfg.sigma_c,
                cfg.seed,
                forward,
            )
            .map_err(|e| match e {
                rodheat::Error::Unstable(r) => CliError::Unstable(r),
                other => CliError::config("times_s", other.to_string()),
            })?;
            Ok((m, Some(truth)))
        }
    }
}

pub fn run_estimate(cfg: &RunConfig) -> Result<EstimateOutcome, CliError> {
    let spec = cfg.problem()?;
    let forward = cfg.forward()?;
    let (m, truth) = measurements(cfg, &spec, &forward)?;
    let mut result = estimate_diffusivity(
        &spec,
        &m,
        (cfg.bracket_lo, cfg.bracket_hi),
        cfg.rel_tol,
        &forward,
    )?;
    if let Some(a) = truth {
        result = result.with_truth(a);
    }
    Ok(EstimateOutcome {
        measurements: m,
        result,
        alpha2_true: truth,
    })
}

/// Flat `key = value` report: the effective config followed by the results.
pub fn machine_report(cfg: &RunConfig, o: &EstimateOutcome) -> String {
    let r = &o.result;
    let mut s = cfg.to_text();
    let mut put = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    put("x0_used_m", fmt_num(o.measurements.x0()));
    put("measurement_count", o.measurements.len().to_string());
    put("alpha2_hat_m2s", fmt_num(r.alpha2_hat));
    put("objective_C2", fmt_num(r.objective_at_min));
    put("final_bracket_lo", fmt_num(r.final_bracket.0));
    put("final_bracket_hi", fmt_num(r.final_bracket.1));
    put("iterations", r.iterations.to_string());
    put("well_conditioned", r.well_conditioned.to_string());
    put(
        "relative_error",
        r.relative_error.map_or("none".to_string(), fmt_num),
    );
    s
}

pub fn human_report(cfg: &RunConfig, o: &EstimateOutcome) -> String {
    let r = &o.result;
    let m = &o.measurements;
    let mut s = String::new();
    s.push_str("diffusivity estimate\n");
    s.push_str(&format!("  forward model      {}\n", cfg.forward.as_str()));
    s.push_str(&format!("  probe x0           {} m\n", fmt_num(m.x0())));
    s.push_str(&format!(
        "  times              {} s\n",
        fmt_list(&m.times())
    ));
    s.push_str(&format!("  noise sigma        {} C\n", fmt_num(m.sigma())));
    match m.seed() {
        Some(seed) => s.push_str(&format!("  seed               {seed}\n")),
        None => s.push_str("  seed               none (measurements read from file)\n"),
    }
    s.push_str(&format!(
        "  search bracket     [{}, {}] m2/s\n",
        fmt_num(r.bracket.0),
        fmt_num(r.bracket.1)
    ));
    s.push_str(&format!(
        "  alpha2_hat         {} m2/s\n",
        fmt_num(r.alpha2_hat)
    ));
    s.push_str(&format!(
        "  J(alpha2_hat)      {} C2\n",
        fmt_num(r.objective_at_min)
    ));
    s.push_str(&format!("  iterations         {}\n", r.iterations));
    s.push_str(&format!(
        "  well conditioned   {}\n",
        if r.well_conditioned { "yes" } else { "no" }
    ));
    if let (Some(a), Some(e)) = (o.alpha2_true, r.relative_error) {
        s.push_str(&format!("  true alpha2        {} m2/s\n", fmt_num(a)));
        s.push_str(&format!("  relative error     {}\n", fmt_num(e)));
    }
    if !r.well_conditioned {
        s.push_str(
            "warning: the objective is flat around the minimum; these times carry \
             little information about alpha2\n",
        );
    }
    s
}

pub fn fit_path(cfg: &RunConfig, out: &Path) -> PathBuf {
    match cfg.material() {
        Some(name) => out.join(format!("fit_{name}.csv")),
        None => out.join("fit.csv"),
    }
}

/// Measurements, fitted curve and both reports.
pub fn estimate(
    cfg: &RunConfig,
    out: &Path,
    log: &mut dyn Write,
) -> Result<EstimateOutcome, CliError> {
    let outcome = run_estimate(cfg)?;
    fs::create_dir_all(out)?;

    let path = out.join("measurements.csv");
    let mut csv = CsvWriter::create(&path, "t_s,u_C")?;
    for &(t, u) in outcome.measurements.samples() {
        csv.row(&[t, u])?;
    }
    csv.finish()?;

    let spec = cfg.problem()?;
    let forward = cfg.forward()?;
    let times: Vec<f64> = (0..FIT_POINTS)
        .map(|k| cfg.t_final_s * k as f64 / (FIT_POINTS - 1) as f64)
        .collect();
    let model = forward_temperatures(
        &spec,
        outcome.result.alpha2_hat,
        outcome.measurements.x0(),
        &times,
        &forward,
    )?;
    let fit = fit_path(cfg, out);
    let mut csv = CsvWriter::create(&fit, "t_s,u_model_C")?;
    for (t, u) in times.iter().zip(model) {
        csv.row(&[*t, u])?;
    }
    csv.finish()?;

    let human = human_report(cfg, &outcome);
    fs::write(out.join("estimate_report.txt"), &human)?;
    fs::write(
        out.join("estimate_report.kv"),
        machine_report(cfg, &outcome),
    )?;
    write!(log, "{human}")?;
    writeln!(log, "wrote {}", path.display())?;
    writeln!(log, "wrote {}", fit.display())?;
    writeln!(log, "wrote {}", out.join("estimate_report.kv").display())?;
    Ok(outcome)
}

pub fn identify(cfg: &RunConfig, alpha2_hat: f64, log: &mut dyn Write) -> Result<(), CliError> {
    let catalog = cfg.catalog()?;
    let id = identify_material(alpha2_hat, &catalog)?;
    writeln!(log, "alpha2_hat = {} m2/s", fmt_num(alpha2_hat))?;
    writeln!(
        log,
        "best match: {} (alpha2 = {} m2/s, relative distance = {})",
        id.best.name,
        fmt_num(id.best.alpha2),
        fmt_num(id.best.relative_distance)
    )?;
    if id.tie {
        writeln!(
            log,
            "tie: another entry is equally close; the smaller alpha2 was chosen"
        )?;
    }
    writeln!(log, "rank  material  alpha2_m2s  relative_distance")?;
    for (k, m) in id.ranking.iter().enumerate() {
        writeln!(
            log,
            "{:>4}  {:<8}  {:<10}  {}",
            k + 1,
            m.name,
            fmt_num(m.alpha2),
            fmt_num(m.relative_distance)
        )?;
    }
    Ok(())
}

/// Prints the stability report; with `demo_steps`, runs the ungated recurrence.
pub fn stability(
    cfg: &RunConfig,
    demo_steps: Option<usize>,
    log: &mut dyn Write,
) -> Result<(), CliError> {
    let spec = cfg.problem()?;
    let grid = cfg.grid()?;
    let alpha2 = cfg.alpha2()?;
    let report = stability_parameter(alpha2, &grid);
    writeln!(log, "epsilon = {}", fmt_num(report.epsilon))?;
    writeln!(log, "bound = {}", fmt_num(report.bound))?;
    writeln!(
        log,
        "verdict = {}",
        if report.stable { "stable" } else { "unstable" }
    )?;
    if let Some(steps) = demo_steps {
        let demo = unstable_demo(&spec, alpha2, &grid, steps)?;
        let (lo, hi) = spec.data_bounds();
        writeln!(log, "demo_steps = {}", demo.steps)?;
        writeln!(log, "demo_max_abs_C = {}", fmt_num(demo.max_abs))?;
        writeln!(log, "data_range_C = [{}, {}]", fmt_num(lo), fmt_num(hi))?;
        match demo.left_range_at {
            Some(step) => writeln!(log, "left_range_at_step = {step}")?,
            None => writeln!(log, "left_range_at_step = none")?,
        }
    }
    Ok(())
}

pub fn show_config(cfg: &RunConfig, log: &mut dyn Write) -> Result<(), CliError> {
    write!(log, "{}", cfg.to_text())?;
    Ok(())
}
