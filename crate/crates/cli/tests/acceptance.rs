//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{E, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rodheat::fdsolver::unstable_demo;
use rodheat::model::fourier_coefficient_quadrature;
use rodheat::{
    analytic_temperature, estimate_diffusivity, fourier_coefficients, simulate_measurements,
    solve_sensitivity, solve_temperature, AnalyticSolution, Error, Forward, GridSpec,
    InitialProfile, ProblemSpec, SeriesControl,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rod() -> ProblemSpec {
    ProblemSpec::reference()
}

fn analytic() -> Forward {
    Forward::Analytic(SeriesControl::default())
}

fn ac1_steady_profile() -> Outcome {
    let spec = rod();
    let ctl = SeriesControl::default();
    let grid = GridSpec::reference(4000.0).map_err(|e| e.to_string())?;
    let field = solve_temperature(&spec, 1e-4, &grid).map_err(|e| e.to_string())?;
    let last = grid.n_time();
    let mut worst = 0.0_f64;
    for (i, target) in [(10, 75.0), (20, 50.0), (30, 25.0)] {
        let x = grid.x(i);
        let series =
            analytic_temperature(&spec, 1e-4, x, 4000.0, &ctl).map_err(|e| e.to_string())?;
        worst = worst.max((series.value - target).abs());
        worst = worst.max((field.value(i, last) - target).abs());
    }
    ensure(worst < 1e-3, format!("max |u - steady| = {worst:.3e} C"))
}

fn ac2_coefficients() -> Outcome {
    let spec = rod();
    let closed = fourier_coefficients(&spec, 50).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for (k, a) in closed.iter().enumerate() {
        let q = fourier_coefficient_quadrature(&spec, k + 1);
        let gap = if *a == 0.0 {
            q.abs()
        } else {
            ((q - a) / a).abs()
        };
        worst = worst.max(gap);
    }
    let expect = [-100.0 / PI, -100.0 / PI, -100.0 / (3.0 * PI)];
    let first = expect
        .iter()
        .zip(&closed)
        .map(|(e, a)| ((a - e) / e).abs())
        .fold(0.0, f64::max);
    ensure(
        worst < 1e-9 && first < 1e-12,
        format!("quadrature gap {worst:.2e}, A1..A3 gap {first:.2e}"),
    )
}

fn max_node_error(alpha2: f64, grid: &GridSpec, t_from: f64) -> Result<f64, Error> {
    let spec = rod();
    let u = solve_temperature(&spec, alpha2, grid)?;
    let series = AnalyticSolution::new(&spec, alpha2, SeriesControl::default(), t_from)?;
    let mut worst = 0.0_f64;
    for j in 0..=grid.n_time() {
        let t = grid.t(j);
        if t < t_from - 1e-9 {
            continue;
        }
        for i in 0..=grid.n_space() {
            let exact = series.temperature(grid.x(i), t)?.value;
            worst = worst.max((u.value(i, j) - exact).abs());
        }
    }
    Ok(worst)
}

fn ac3_cross_validation() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    // halving dx at fixed epsilon quarters dt
    let coarse = GridSpec::new(0.4, 0.01, 0.1, 600.0).map_err(|e| e.to_string())?;
    let fine = GridSpec::new(0.4, 0.005, 0.025, 600.0).map_err(|e| e.to_string())?;
    let window = 10.0 * coarse.dt();
    for alpha2 in [1e-4, 2.5e-4] {
        let c = max_node_error(alpha2, &coarse, window).map_err(|e| e.to_string())?;
        let f = max_node_error(alpha2, &fine, window).map_err(|e| e.to_string())?;
        ok &= c < 0.5 && f < c;
        let eps = alpha2 * coarse.dt() / (coarse.dx() * coarse.dx());
        notes.push(format!("eps {eps:.2}: {c:.3} -> {f:.3} C"));
    }
    ensure(ok, notes.join(", "))
}

fn ac4_sensitivity_three_way() -> Outcome {
    let spec = rod();
    let alpha2 = 1e-4;
    let h = 1e-4;
    let e = |e: Error| e.to_string();
    let grid = GridSpec::reference(2000.0).map_err(e)?;
    let u = solve_temperature(&spec, alpha2, &grid).map_err(e)?;
    let s = solve_sensitivity(&spec, alpha2, &grid, &u).map_err(e)?;
    let up = solve_temperature(&spec, alpha2 * (1.0 + h), &grid).map_err(e)?;
    let dn = solve_temperature(&spec, alpha2 * (1.0 - h), &grid).map_err(e)?;
    let series =
        AnalyticSolution::new(&spec, alpha2, SeriesControl::default(), grid.dt()).map_err(e)?;
    let floor = 0.01 * s.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut checked, mut worst) = (0, 0.0_f64);
    while checked < 20 {
        let i = rng.random_range(1..grid.n_space());
        let j = rng.random_range(1..=grid.n_time());
        let fd = s.value(i, j);
        if fd.abs() <= floor {
            continue;
        }
        let an = series.sensitivity(grid.x(i), grid.t(j)).map_err(e)?.value;
        let cd = (up.value(i, j) - dn.value(i, j)) / (2.0 * h * alpha2);
        for (a, b) in [(fd, an), (fd, cd), (an, cd)] {
            worst = worst.max(((a - b) / b).abs());
        }
        checked += 1;
    }
    ensure(
        worst < 0.02,
        format!("worst pairwise gap over 20 nodes {:.3}%", 100.0 * worst),
    )
}

fn midpoint_peak(alpha2: f64) -> Result<(f64, f64), Error> {
    let tau = 0.16 / (PI * PI * alpha2);
    let sol = AnalyticSolution::new(&rod(), alpha2, SeriesControl::default(), 0.5 * tau)?;
    let mut best = (0.0, 0.0);
    for k in 0..=4000 {
        let t = 0.5 * tau + k as f64 * 1.5 * tau / 4000.0;
        let v = sol.sensitivity(0.2, t)?.value.abs();
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

fn ac5_sensitivity_claims() -> Outcome {
    let spec = rod();
    let e = |e: Error| e.to_string();
    let grid = GridSpec::reference(4000.0).map_err(e)?;
    let alpha2 = 1e-4;
    let u = solve_temperature(&spec, alpha2, &grid).map_err(e)?;
    let s = solve_sensitivity(&spec, alpha2, &grid, &u).map_err(e)?;
    let series =
        AnalyticSolution::new(&spec, alpha2, SeriesControl::default(), grid.dt()).map_err(e)?;
    let mut exact_zeros = s.time_level(0).iter().all(|v| *v == 0.0);
    for i in 0..=grid.n_space() {
        exact_zeros &= series.sensitivity(grid.x(i), 0.0).map_err(e)?.value == 0.0;
    }
    for j in 0..=grid.n_time() {
        exact_zeros &= s.value(0, j) == 0.0 && s.value(grid.n_space(), j) == 0.0;
    }
    for t in [0.1, 10.0, 162.0, 4000.0] {
        exact_zeros &= series.sensitivity(0.0, t).map_err(e)?.value == 0.0;
        exact_zeros &= series.sensitivity(0.4, t).map_err(e)?.value == 0.0;
    }

    let a1 = 100.0 / PI;
    let (_, peak) = midpoint_peak(alpha2).map_err(e)?;
    let late = series.sensitivity(0.2, 4000.0).map_err(e)?.value.abs();
    let decayed = late < 1e-2 * peak;

    let mut worst = 0.0_f64;
    for a in [2e-5, 1e-4] {
        let (_, p) = midpoint_peak(a).map_err(e)?;
        worst = worst.max((p / (a1 / (E * a)) - 1.0).abs());
    }
    ensure(
        exact_zeros && decayed && worst < 0.015,
        format!(
            "zeros exact: {exact_zeros}, |S(l/2,4000)|/peak = {:.2e}, peak scaling gap {:.2}%",
            late / peak,
            100.0 * worst
        ),
    )
}

fn ac6_stability_gate() -> Outcome {
    let spec = rod();
    let grid = GridSpec::reference(4000.0).map_err(|e| e.to_string())?;
    let rejected = matches!(
        solve_temperature(&spec, 6e-4, &grid),
        Err(Error::Unstable(r)) if !r.stable && (r.epsilon - 0.6).abs() < 1e-12
    );
    let short = GridSpec::reference(10.0).map_err(|e| e.to_string())?;
    let accepted = solve_temperature(&spec, 4.9e-4, &short).is_ok();
    let demo = unstable_demo(&spec, 6e-4, &grid, 200).map_err(|e| e.to_string())?;
    let blew_up = demo.max_abs > 100.0 && demo.left_range_at.is_some();
    ensure(
        rejected && accepted && blew_up,
        format!(
            "eps 0.6 rejected: {rejected}, eps 0.49 accepted: {accepted}, demo max |u| = {:.3e} C",
            demo.max_abs
        ),
    )
}

fn informative_times(alpha2: f64) -> Vec<f64> {
    match alpha2 {
        2e-5 => vec![400.0, 800.0, 1600.0],
        4e-5 => vec![200.0, 400.0, 800.0],
        _ => vec![80.0, 160.0, 320.0],
    }
}

const BRACKET: (f64, f64) = (1e-7, 1e-3);

fn ac7_noiseless_round_trip() -> Outcome {
    let e = |e: Error| e.to_string();
    let fd = Forward::Fd(GridSpec::reference(1600.0).map_err(e)?);
    let mut worst_an = 0.0_f64;
    let mut worst_fd = 0.0_f64;
    let mut conditioned = true;
    for a0 in [2e-5, 4e-5, 1e-4] {
        let times = informative_times(a0);
        let m = simulate_measurements(&rod(), a0, 0.2, &times, 0.0, 0, &analytic()).map_err(e)?;
        let r = estimate_diffusivity(&rod(), &m, BRACKET, 1e-6, &analytic())
            .map_err(e)?
            .with_truth(a0);
        worst_an = worst_an.max(r.relative_error.unwrap_or(f64::INFINITY));
        conditioned &= r.well_conditioned;
        let r = estimate_diffusivity(&rod(), &m, BRACKET, 1e-6, &fd)
            .map_err(e)?
            .with_truth(a0);
        worst_fd = worst_fd.max(r.relative_error.unwrap_or(f64::INFINITY));
    }
    ensure(
        worst_an < 1e-3 && worst_fd < 1e-2 && conditioned,
        format!("worst relative error analytic {worst_an:.2e}, fd {worst_fd:.2e}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ac8_noisy_estimation() -> Outcome {
    let a0 = 2.3e-5;
    let times = [500.0, 1000.0, 1500.0];
    let run = |sigma: f64| -> Result<f64, Error> {
        let mut errors = Vec::new();
        for seed in 0..100 {
            let m = simulate_measurements(&rod(), a0, 0.2, &times, sigma, seed, &analytic())?;
            let r = estimate_diffusivity(&rod(), &m, BRACKET, 1e-6, &analytic())?.with_truth(a0);
            errors.push(r.relative_error.unwrap_or(f64::INFINITY));
        }
        Ok(median(errors))
    };
    let full = run(1.0).map_err(|e| e.to_string())?;
    let half = run(0.5).map_err(|e| e.to_string())?;
    ensure(
        full < 0.05 && half < full,
        format!(
            "median relative error sigma 1: {:.2}%, sigma 0.5: {:.2}%",
            100.0 * full,
            100.0 * half
        ),
    )
}

fn ac9_conditioning_guard() -> Outcome {
    let e = |e: Error| e.to_string();
    let times = [0.0, 2000.0, 4000.0];
    let mut flags = Vec::new();
    for forward in [
        analytic(),
        Forward::Fd(GridSpec::reference(4000.0).map_err(e)?),
    ] {
        let m = simulate_measurements(&rod(), 1.7e-4, 0.2, &times, 0.0, 0, &forward).map_err(e)?;
        let r = estimate_diffusivity(&rod(), &m, BRACKET, 1e-6, &forward).map_err(e)?;
        flags.push(r.well_conditioned);
    }
    ensure(
        flags.iter().all(|f| !f),
        format!("well_conditioned analytic/fd = {flags:?}"),
    )
}

const DETERMINISM_CONFIG: &str = "\
length_m = 0.4
hot_end_C = 100
cold_end_C = 0
initial_C = 25
dx_m = 0.01
dt_s = 0.1
t_final_s = 2000
alpha2_m2s = 2.3e-5
times_s = 500, 1000, 2000
sigma_C = 1
seed = 42
forward = fd
";

fn ac10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let conf = dir.path().join("run.conf");
    fs::write(&conf, DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_rodheat"))
            .arg("--config")
            .arg(&conf)
            .arg("estimate")
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "run {run} failed: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        let read = |name: &str| fs::read(out.join(name)).map_err(|e| e.to_string());
        outputs.push((read("measurements.csv")?, read("estimate_report.kv")?));
    }
    let same = outputs[0] == outputs[1];
    let noisy = measurement_is_noisy(&dir.path().join("a"));
    ensure(
        same && noisy,
        format!("measurements.csv and estimate_report.kv identical: {same}"),
    )
}

/// Guards against a vacuous pass: the seeded run must actually carry noise.
fn measurement_is_noisy(out: &Path) -> bool {
    let Ok(text) = fs::read_to_string(out.join("measurements.csv")) else {
        return false;
    };
    let spec = ProblemSpec::new(0.4, 100.0, 0.0, InitialProfile::Constant(25.0)).unwrap();
    text.lines().skip(1).any(|line| {
        let mut cols = line
            .split(',')
            .map(|c| c.parse::<f64>().unwrap_or(f64::NAN));
        let (t, u) = (
            cols.next().unwrap_or(f64::NAN),
            cols.next().unwrap_or(f64::NAN),
        );
        let clean = analytic_temperature(&spec, 2.3e-5, 0.2, t, &SeriesControl::default())
            .map(|v| v.value)
            .unwrap_or(f64::NAN);
        (u - clean).abs() > 1e-3
    })
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: "AC1",
            name: "steady-state profile",
            limit: Some(secs(5)),
            run: ac1_steady_profile,
        },
        Criterion {
            id: "AC2",
            name: "Fourier coefficients",
            limit: Some(secs(1)),
            run: ac2_coefficients,
        },
        Criterion {
            id: "AC3",
            name: "FD vs series temperature",
            limit: Some(secs(30)),
            run: ac3_cross_validation,
        },
        Criterion {
            id: "AC4",
            name: "sensitivity three-way agreement",
            limit: Some(secs(30)),
            run: ac4_sensitivity_three_way,
        },
        Criterion {
            id: "AC5",
            name: "sensitivity zeros, decay and peak scaling",
            limit: Some(secs(10)),
            run: ac5_sensitivity_claims,
        },
        Criterion {
            id: "AC6",
            name: "stability gate",
            limit: Some(secs(5)),
            run: ac6_stability_gate,
        },
        Criterion {
            id: "AC7",
            name: "noiseless estimation round trip",
            limit: Some(secs(60)),
            run: ac7_noiseless_round_trip,
        },
        Criterion {
            id: "AC8",
            name: "noisy estimation",
            limit: Some(secs(300)),
            run: ac8_noisy_estimation,
        },
        Criterion {
            id: "AC9",
            name: "conditioning guard",
            limit: Some(secs(5)),
            run: ac9_conditioning_guard,
        },
        Criterion {
            id: "AC10",
            name: "determinism",
            limit: None,
            run: ac10_determinism,
        },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let slow = c.limit.is_some_and(|l| elapsed > l);
        let (ok, detail) = match outcome {
            Ok(d) => (!slow, d),
            Err(d) => (false, d),
        };
        let budget = c
            .limit
            .map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        println!(
            "[{}] {} {}: {} ({:.2}s{budget}{})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            if slow { ", over time budget" } else { "" },
        );
        if !ok {
            failures += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
