//! Analytic machinery: steady profile, Fourier sine coefficients and the
//! truncated series for temperature and for its sensitivity to `α²`.
//!
//! With `κₙ = n²π²α²/l²` the transient part of the temperature is
//! `Σ Aₙ e^(−κₙ t) sin(nπx/l)` and its derivative with respect to `α²` is
//! `S = −(π²/l²) t Σ n² Aₙ sin(nπx/l) e^(−κₙ t)`, built from the same `Aₙ`.

use std::f64::consts::PI;

use crate::error::{check_range, Error, Result};

/// Initial temperature profile `Φ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// Uniform initial temperature (°C).
    Constant(f64),
    /// Piecewise-linear profile through `(position m, value °C)` nodes.
    Tabulated(Vec<(f64, f64)>),
}

impl InitialProfile {
    fn value_at(&self, x: f64) -> f64 {
        match self {
            InitialProfile::Constant(c) => *c,
            InitialProfile::Tabulated(points) => {
                let k = points.partition_point(|&(px, _)| px <= x);
                if k == 0 {
                    return points[0].1;
                }
                if k == points.len() {
                    return points[k - 1].1;
                }
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            InitialProfile::Constant(c) => (*c, *c),
            InitialProfile::Tabulated(points) => points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
                    (lo.min(y), hi.max(y))
                }),
        }
    }
}

/// Rod geometry, end temperatures and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    length: f64,
    hot_end: f64,
    cold_end: f64,
    initial: InitialProfile,
}

impl ProblemSpec {
    pub fn new(length: f64, hot_end: f64, cold_end: f64, initial: InitialProfile) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid(format!(
                "rod length must be positive, got {length}"
            )));
        }
        if !hot_end.is_finite() || !cold_end.is_finite() {
            return Err(Error::invalid("end temperatures must be finite"));
        }
        match &initial {
            InitialProfile::Constant(c) if !c.is_finite() => {
                return Err(Error::invalid("initial temperature must be finite"));
            }
            InitialProfile::Tabulated(points) => validate_table(points, length)?,
            _ => {}
        }
        Ok(Self {
            length,
            hot_end,
            cold_end,
            initial,
        })
    }

    /// 0.4 m rod, 100 °C hot end, 0 °C cold end, uniform 25 °C start.
    pub fn reference() -> Self {
        Self {
            length: 0.4,
            hot_end: 100.0,
            cold_end: 0.0,
            initial: InitialProfile::Constant(25.0),
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hot_end(&self) -> f64 {
        self.hot_end
    }

    pub fn cold_end(&self) -> f64 {
        self.cold_end
    }

    pub fn initial_profile(&self) -> &InitialProfile {
        &self.initial
    }

    /// `Φ(x)`; no range check.
    pub fn initial_value(&self, x: f64) -> f64 {
        self.initial.value_at(x)
    }

    /// Range `[min, max]` spanned by the boundary and initial data.
    pub fn data_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.initial.bounds();
        (
            lo.min(self.hot_end).min(self.cold_end),
            hi.max(self.hot_end).max(self.cold_end),
        )
    }

    fn steady(&self, x: f64) -> f64 {
        let r = x / self.length;
        self.hot_end * (1.0 - r) + self.cold_end * r
    }
}

fn validate_table(points: &[(f64, f64)], length: f64) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::invalid("tabulated profile needs at least two nodes"));
    }
    if points
        .iter()
        .any(|&(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::invalid("tabulated profile has non-finite entries"));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid(
            "tabulated positions must be strictly increasing",
        ));
    }
    let tol = 1e-9 * length;
    let first = points[0].0;
    let last = points[points.len() - 1].0;
    if first.abs() > tol || (last - length).abs() > tol {
        return Err(Error::invalid(format!(
            "tabulated profile must span [0, {length}], got [{first}, {last}]"
        )));
    }
    Ok(())
}

/// Truncation rule for the infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    abs_term_tol: f64,
    min_terms: usize,
    max_terms: usize,
}

impl SeriesControl {
    pub fn new(abs_term_tol: f64, min_terms: usize, max_terms: usize) -> Result<Self> {
        if !(abs_term_tol > 0.0) {
            return Err(Error::invalid("abs_term_tol must be positive"));
        }
        if min_terms < 1 || min_terms > max_terms {
            return Err(Error::invalid(format!(
                "need 1 <= min_terms <= max_terms, got {min_terms}, {max_terms}"
            )));
        }
        Ok(Self {
            abs_term_tol,
            min_terms,
            max_terms,
        })
    }

    pub fn abs_term_tol(&self) -> f64 {
        self.abs_term_tol
    }

    pub fn min_terms(&self) -> usize {
        self.min_terms
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            abs_term_tol: 1e-10,
            min_terms: 10,
            max_terms: 10_000,
        }
    }
}

/// A series evaluation together with its truncation bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Number of terms summed (0 when the closed-form `t = 0` path was taken).
    pub terms: usize,
    /// `max_terms` was exhausted before the envelope fell below tolerance.
    pub truncated: bool,
}

impl SeriesValue {
    fn exact(value: f64) -> Self {
        Self {
            value,
            terms: 0,
            truncated: false,
        }
    }
}

/// Consecutive sub-tolerance envelopes required before stopping.
const QUIET_RUN: usize = 3;

/// Simpson panels per half-period of the `n`-th sine mode.
const PANELS_PER_HALF_PERIOD: usize = 256;

/// `k₁(1 − x/l) + k₂·x/l`.
pub fn steady_state_profile(spec: &ProblemSpec, x: f64) -> Result<f64> {
    check_range("x", x, 0.0, spec.length)?;
    Ok(spec.steady(x))
}

/// `A₁ … A_{n_max}`.
pub fn fourier_coefficients(spec: &ProblemSpec, n_max: usize) -> Result<Vec<f64>> {
    if n_max < 1 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    Ok((1..=n_max).map(|n| coefficient(spec, n)).collect())
}

fn coefficient(spec: &ProblemSpec, n: usize) -> f64 {
    match spec.initial {
        InitialProfile::Constant(ta) => closed_form_coefficient(spec, ta, n),
        InitialProfile::Tabulated(_) => fourier_coefficient_quadrature(spec, n),
    }
}

fn closed_form_coefficient(spec: &ProblemSpec, ta: f64, n: usize) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let k1 = spec.hot_end;
    let k2 = spec.cold_end;
    2.0 / (n as f64 * PI) * ((ta - k1) * (1.0 - sign) - (k1 - k2) * sign)
}

/// `Aₙ` by composite Simpson over each linear piece of `Φ`, whatever the
/// profile kind. Used for tabulated profiles and as a cross-check of the
/// closed form.
pub fn fourier_coefficient_quadrature(spec: &ProblemSpec, n: usize) -> f64 {
    let l = spec.length;
    let wave = n as f64 * PI / l;
    let integrand = |x: f64| (spec.initial.value_at(x) - spec.steady(x)) * (wave * x).sin();

    let breaks: Vec<f64> = match &spec.initial {
        InitialProfile::Constant(_) => vec![0.0, l],
        InitialProfile::Tabulated(points) => points.iter().map(|p| p.0).collect(),
    };

    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half_periods = n as f64 * (b - a) / l;
        let mut panels = ((PANELS_PER_HALF_PERIOD as f64 * half_periods).ceil() as usize).max(2);
        if panels % 2 == 1 {
            panels += 1;
        }
        total += simpson(&integrand, a, b, panels);
    }
    2.0 / l * total
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Series temperature `u(x, t; α²)`; returns `Φ(x)` at `t = 0`.
pub fn analytic_temperature(
    spec: &ProblemSpec,
    alpha2: f64,
    x: f64,
    t: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue> {
    check_query(spec, alpha2, x, t)?;
    Ok(temperature_series(spec, alpha2, x, t, ctl, |n| {
        coefficient(spec, n)
    }))
}

/// Series sensitivity `S(x, t) = ∂u/∂α²`; exactly zero at `t = 0`.
pub fn analytic_sensitivity(
    spec: &ProblemSpec,
    alpha2: f64,
    x: f64,
    t: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue> {
    check_query(spec, alpha2, x, t)?;
    Ok(sensitivity_series(spec, alpha2, x, t, ctl, |n| {
        coefficient(spec, n)
    }))
}

fn check_query(spec: &ProblemSpec, alpha2: f64, x: f64, t: f64) -> Result<()> {
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return Err(Error::invalid(format!(
            "alpha2 must be positive, got {alpha2}"
        )));
    }
    check_range("x", x, 0.0, spec.length)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("t", t, 0.0, f64::INFINITY));
    }
    Ok(())
}

fn temperature_series(
    spec: &ProblemSpec,
    alpha2: f64,
    x: f64,
    t: f64,
    ctl: &SeriesControl,
    coef: impl Fn(usize) -> f64,
) -> SeriesValue {
    if t == 0.0 {
        return SeriesValue::exact(spec.initial_value(x));
    }
    // every mode vanishes at the ends, but sin(nπ) does not round to zero
    if x == 0.0 {
        return SeriesValue::exact(spec.hot_end);
    }
    if x == spec.length {
        return SeriesValue::exact(spec.cold_end);
    }
    let l = spec.length;
    let rate = PI * PI * alpha2 / (l * l);
    let mut sum = spec.steady(x);
    let run = sum_terms(ctl, |n| {
        let nf = n as f64;
        let decay = (-nf * nf * rate * t).exp();
        let a = coef(n);
        let envelope = a.abs() * decay;
        (a * decay * (nf * PI * x / l).sin(), envelope)
    });
    sum += run.sum;
    SeriesValue {
        value: sum,
        terms: run.terms,
        truncated: run.truncated,
    }
}

fn sensitivity_series(
    spec: &ProblemSpec,
    alpha2: f64,
    x: f64,
    t: f64,
    ctl: &SeriesControl,
    coef: impl Fn(usize) -> f64,
) -> SeriesValue {
    if t == 0.0 || x == 0.0 || x == spec.length {
        return SeriesValue::exact(0.0);
    }
    let l = spec.length;
    let pre = PI * PI / (l * l) * t;
    let rate = PI * PI * alpha2 / (l * l);
    let run = sum_terms(ctl, |n| {
        let nf = n as f64;
        let decay = (-nf * nf * rate * t).exp();
        let weight = pre * nf * nf * coef(n) * decay;
        (-weight * (nf * PI * x / l).sin(), weight.abs())
    });
    SeriesValue {
        value: run.sum,
        terms: run.terms,
        truncated: run.truncated,
    }
}

struct Run {
    sum: f64,
    terms: usize,
    truncated: bool,
}

/// Sums `term(n) = (contribution, envelope)` for `n = 1, 2, …` under `ctl`.
fn sum_terms(ctl: &SeriesControl, mut term: impl FnMut(usize) -> (f64, f64)) -> Run {
    let mut sum = 0.0;
    let mut quiet = 0;
    for n in 1..=ctl.max_terms {
        let (c, envelope) = term(n);
        sum += c;
        if envelope < ctl.abs_term_tol {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if n >= ctl.min_terms && quiet >= QUIET_RUN {
            return Run {
                sum,
                terms: n,
                truncated: false,
            };
        }
    }
    Run {
        sum,
        terms: ctl.max_terms,
        truncated: true,
    }
}

/// Series solution with a precomputed coefficient table, for evaluating many
/// points at one `α²`. Terms beyond the table are computed on demand.
#[derive(Debug, Clone)]
pub struct AnalyticSolution {
    spec: ProblemSpec,
    alpha2: f64,
    ctl: SeriesControl,
    coeffs: Vec<f64>,
}

impl AnalyticSolution {
    /// Tabulates enough coefficients to converge both series for every `t >= t_min`.
    pub fn new(spec: &ProblemSpec, alpha2: f64, ctl: SeriesControl, t_min: f64) -> Result<Self> {
        if !(alpha2 > 0.0 && alpha2.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha2 must be positive, got {alpha2}"
            )));
        }
        if !(t_min > 0.0) {
            return Err(Error::invalid("t_min must be positive"));
        }
        let l = spec.length;
        let rate = PI * PI * alpha2 / (l * l);
        let pre = PI * PI / (l * l) * t_min;
        let mut coeffs = Vec::new();
        let mut quiet = 0;
        for n in 1..=ctl.max_terms {
            let a = coefficient(spec, n);
            coeffs.push(a);
            let nf = n as f64;
            let decay = (-nf * nf * rate * t_min).exp();
            let envelope = a.abs() * decay * (1.0 + pre * nf * nf);
            quiet = if envelope < ctl.abs_term_tol {
                quiet + 1
            } else {
                0
            };
            if n >= ctl.min_terms && quiet >= QUIET_RUN {
                break;
            }
        }
        Ok(Self {
            spec: spec.clone(),
            alpha2,
            ctl,
            coeffs,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn coef(&self, n: usize) -> f64 {
        match self.coeffs.get(n - 1) {
            Some(a) => *a,
            None => coefficient(&self.spec, n),
        }
    }

    pub fn temperature(&self, x: f64, t: f64) -> Result<SeriesValue> {
        check_query(&self.spec, self.alpha2, x, t)?;
        Ok(temperature_series(
            &self.spec,
            self.alpha2,
            x,
            t,
            &self.ctl,
            |n| self.coef(n),
        ))
    }

    pub fn sensitivity(&self, x: f64, t: f64) -> Result<SeriesValue> {
        check_query(&self.spec, self.alpha2, x, t)?;
        Ok(sensitivity_series(
            &self.spec,
            self.alpha2,
            x,
            t,
            &self.ctl,
            |n| self.coef(n),
        ))
    }
}
