//! Explicit forward-time, centered-space lattices for temperature and sensitivity.
//!
//! Nodes are `x_i = i·Δx` (`i = 0..=N`, `x_N = l`) and `t_j = j·Δt` (`j = 0..=M`).
//! With `ε = α²Δt/Δx²` the temperature update is
//! `u[i][j+1] = ε(u[i+1][j] + u[i-1][j]) + (1 − 2ε)u[i][j]` and the sensitivity
//! update adds the source `(ε/α²)(u[i+1][j] − 2u[i][j] + u[i-1][j])`.

use std::fmt;

use crate::error::{check_range, Error, Result};
use crate::model::ProblemSpec;

/// Explicit-scheme stability bound on `ε`.
pub const STABILITY_BOUND: f64 = 0.5;

const INTEGRAL_TOL: f64 = 1e-9;

/// Regular space–time lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    length: f64,
    dx: f64,
    dt: f64,
    t_final: f64,
    n_space: usize,
    n_time: usize,
}

impl GridSpec {
    /// Fails unless `length/dx` and `t_final/dt` are integers to 1e-9 relative.
    pub fn new(length: f64, dx: f64, dt: f64, t_final: f64) -> Result<Self> {
        if !(length > 0.0 && dx > 0.0 && dt > 0.0) || !t_final.is_finite() {
            return Err(Error::Grid(format!(
                "need positive length, dx, dt; got {length}, {dx}, {dt}"
            )));
        }
        if t_final < dt {
            return Err(Error::Grid(format!(
                "t_final {t_final} shorter than dt {dt}"
            )));
        }
        let n_space = integral_ratio(length, dx)
            .ok_or_else(|| Error::Grid(format!("length {length} is not a multiple of dx {dx}")))?;
        let n_time = integral_ratio(t_final, dt).ok_or_else(|| {
            Error::Grid(format!("t_final {t_final} is not a multiple of dt {dt}"))
        })?;
        if n_space < 2 {
            return Err(Error::Grid("need at least one interior node".into()));
        }
        Ok(Self {
            length,
            dx,
            dt,
            t_final,
            n_space,
            n_time,
        })
    }

    /// Δx = 0.01 m, Δt = 0.1 s on the 0.4 m reference rod.
    pub fn reference(t_final: f64) -> Result<Self> {
        Self::new(0.4, 0.01, 0.1, t_final)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// `N`: index of the far boundary node.
    pub fn n_space(&self) -> usize {
        self.n_space
    }

    /// `M`: index of the last time level.
    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    fn same_lattice(&self, other: &GridSpec) -> bool {
        self.n_space == other.n_space
            && self.n_time == other.n_time
            && close(self.dx, other.dx)
            && close(self.dt, other.dt)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn integral_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let k = r.round();
    if k >= 0.0 && (r - k).abs() <= INTEGRAL_TOL * k.max(1.0) {
        Some(k as usize)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub stable: bool,
    pub bound: f64,
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epsilon = {} (bound {}, {})",
            // 12 significant digits hide the rounding in α²Δt/Δx²
            format!("{:.11e}", self.epsilon)
                .parse::<f64>()
                .unwrap_or(self.epsilon),
            self.bound,
            if self.stable { "stable" } else { "unstable" }
        )
    }
}

/// `ε = α²Δt/Δx²`, stable iff `ε < 1/2`.
pub fn stability_parameter(alpha2: f64, grid: &GridSpec) -> StabilityReport {
    let epsilon = alpha2 * grid.dt / (grid.dx * grid.dx);
    StabilityReport {
        epsilon,
        stable: epsilon < STABILITY_BOUND,
        bound: STABILITY_BOUND,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Temperature,
    Sensitivity,
}

/// Dense `(N+1) × (M+1)` lattice of values, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    kind: FieldKind,
    alpha2: f64,
    // time-major: values[j * (N + 1) + i]
    values: Vec<f64>,
}

impl Field {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    fn width(&self) -> usize {
        self.grid.n_space + 1
    }

    /// Value at space node `i`, time level `j`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width() + i]
    }

    /// All space nodes at time level `j`.
    pub fn time_level(&self, j: usize) -> &[f64] {
        let w = self.width();
        &self.values[j * w..(j + 1) * w]
    }

    /// Time history of space node `i`.
    pub fn history(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(i).step_by(self.width()).copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn ensure_stable(alpha2: f64, grid: &GridSpec) -> Result<StabilityReport> {
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return Err(Error::invalid(format!(
            "alpha2 must be positive, got {alpha2}"
        )));
    }
    let report = stability_parameter(alpha2, grid);
    if !report.stable {
        return Err(Error::Unstable(report));
    }
    Ok(report)
}

fn ensure_matches_rod(spec: &ProblemSpec, grid: &GridSpec) -> Result<()> {
    if !close(spec.length(), grid.length) {
        return Err(Error::invalid(format!(
            "grid length {} does not match rod length {}",
            grid.length,
            spec.length()
        )));
    }
    Ok(())
}

/// Initial temperature row. The two corner nodes, where the initial profile
/// and the end temperatures meet, carry the mean of both values.
fn initial_row(spec: &ProblemSpec, grid: &GridSpec) -> Vec<f64> {
    let n = grid.n_space;
    let mut row: Vec<f64> = (0..=n).map(|i| spec.initial_value(grid.x(i))).collect();
    row[0] = 0.5 * (row[0] + spec.hot_end());
    row[n] = 0.5 * (row[n] + spec.cold_end());
    row
}

#[inline]
fn ftcs_step(prev: &[f64], next: &mut [f64], eps: f64) {
    let centre = 1.0 - 2.0 * eps;
    for i in 1..prev.len() - 1 {
        next[i] = eps * (prev[i + 1] + prev[i - 1]) + centre * prev[i];
    }
}

/// Full temperature lattice. Rejects `ε ≥ 1/2` before stepping.
pub fn solve_temperature(spec: &ProblemSpec, alpha2: f64, grid: &GridSpec) -> Result<Field> {
    ensure_matches_rod(spec, grid)?;
    let report = ensure_stable(alpha2, grid)?;
    let eps = report.epsilon;
    let w = grid.n_space + 1;
    let mut values = vec![0.0; w * (grid.n_time + 1)];
    values[..w].copy_from_slice(&initial_row(spec, grid));
    for j in 0..grid.n_time {
        let (done, rest) = values.split_at_mut((j + 1) * w);
        let prev = &done[j * w..];
        let next = &mut rest[..w];
        ftcs_step(prev, next, eps);
        next[0] = spec.hot_end();
        next[w - 1] = spec.cold_end();
    }
    Ok(Field {
        grid: *grid,
        kind: FieldKind::Temperature,
        alpha2,
        values,
    })
}

/// Sensitivity lattice driven by the temperature lattice `u` of the same run.
pub fn solve_sensitivity(
    spec: &ProblemSpec,
    alpha2: f64,
    grid: &GridSpec,
    u: &Field,
) -> Result<Field> {
    ensure_matches_rod(spec, grid)?;
    if u.kind != FieldKind::Temperature {
        return Err(Error::invalid(
            "sensitivity source must be a temperature field",
        ));
    }
    if !u.grid.same_lattice(grid) {
        return Err(Error::invalid(
            "temperature field lives on a different grid",
        ));
    }
    if !close(u.alpha2, alpha2) {
        return Err(Error::invalid(format!(
            "temperature field was solved with alpha2 = {}, not {alpha2}",
            u.alpha2
        )));
    }
    let eps = ensure_stable(alpha2, grid)?.epsilon;
    let gain = eps / alpha2;
    let w = grid.n_space + 1;
    let mut values = vec![0.0; w * (grid.n_time + 1)];
    for j in 0..grid.n_time {
        let (done, rest) = values.split_at_mut((j + 1) * w);
        let prev = &done[j * w..];
        let next = &mut rest[..w];
        ftcs_step(prev, next, eps);
        let temp = u.time_level(j);
        for i in 1..w - 1 {
            next[i] += gain * (temp[i + 1] - 2.0 * temp[i] + temp[i - 1]);
        }
        next[0] = 0.0;
        next[w - 1] = 0.0;
    }
    Ok(Field {
        grid: *grid,
        kind: FieldKind::Sensitivity,
        alpha2,
        values,
    })
}

/// Snaps `r` to the nearest integer when within rounding distance.
fn cell_coordinate(r: f64, max: usize) -> (usize, f64) {
    let k = r.round();
    if (r - k).abs() <= 1e-9 * k.max(1.0) {
        return (k as usize, 0.0);
    }
    let lo = (r.floor() as usize).min(max.saturating_sub(1));
    (lo, r - lo as f64)
}

/// Bilinear interpolation on the lattice cell containing `(x, t)`.
pub fn sample_field(f: &Field, x: f64, t: f64) -> Result<f64> {
    let g = &f.grid;
    check_range("x", x, 0.0, g.length)?;
    check_range("t", t, 0.0, g.t_final)?;
    let (i, fx) = cell_coordinate((x / g.dx).clamp(0.0, g.n_space as f64), g.n_space);
    let (j, ft) = cell_coordinate((t / g.dt).clamp(0.0, g.n_time as f64), g.n_time);
    let v00 = f.value(i, j);
    let v = match (fx == 0.0, ft == 0.0) {
        (true, true) => v00,
        (false, true) => v00 + fx * (f.value(i + 1, j) - v00),
        (true, false) => v00 + ft * (f.value(i, j + 1) - v00),
        (false, false) => {
            let v10 = f.value(i + 1, j);
            let v01 = f.value(i, j + 1);
            let v11 = f.value(i + 1, j + 1);
            (1.0 - fx) * ((1.0 - ft) * v00 + ft * v01) + fx * ((1.0 - ft) * v10 + ft * v11)
        }
    };
    Ok(v)
}

/// Outcome of running the temperature recurrence without the stability gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUpReport {
    pub stability: StabilityReport,
    pub steps: usize,
    /// Largest `|u|` over every level produced, including the initial one.
    pub max_abs: f64,
    /// First step whose values left the data range, if any.
    pub left_range_at: Option<usize>,
}

/// Runs at most `steps` time levels of the temperature scheme regardless of `ε`.
pub fn unstable_demo(
    spec: &ProblemSpec,
    alpha2: f64,
    grid: &GridSpec,
    steps: usize,
) -> Result<BlowUpReport> {
    ensure_matches_rod(spec, grid)?;
    if !(alpha2 > 0.0) {
        return Err(Error::invalid("alpha2 must be positive"));
    }
    let stability = stability_parameter(alpha2, grid);
    let (lo, hi) = spec.data_bounds();
    let mut prev = initial_row(spec, grid);
    let mut next = prev.clone();
    let mut max_abs = prev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut left_range_at = None;
    let w = prev.len();
    for step in 1..=steps {
        ftcs_step(&prev, &mut next, stability.epsilon);
        next[0] = spec.hot_end();
        next[w - 1] = spec.cold_end();
        for &v in &next {
            max_abs = max_abs.max(v.abs());
            if left_range_at.is_none() && (v < lo || v > hi || !v.is_finite()) {
                left_range_at = Some(step);
            }
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(BlowUpReport {
        stability,
        steps,
        max_abs,
        left_range_at,
    })
}
