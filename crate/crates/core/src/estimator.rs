//! Synthetic measurements, the least-squares objective `J(α²)`, the bracketed
//! diffusivity estimator and nearest-material identification.

use std::cell::RefCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_range, Error, Result};
use crate::fdsolver::{sample_field, solve_temperature, GridSpec};
use crate::golden::golden_section;
use crate::model::{AnalyticSolution, ProblemSpec, SeriesControl};

/// Forward model used to turn `α²` into probe temperatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forward {
    Analytic(SeriesControl),
    Fd(GridSpec),
}

/// Probe temperatures `u_k` at `x0` and times `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    x0: f64,
    samples: Vec<(f64, f64)>,
    sigma: f64,
    seed: Option<u64>,
}

impl MeasurementSet {
    pub fn new(x0: f64, samples: Vec<(f64, f64)>, sigma: f64, seed: Option<u64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("measurement set is empty"));
        }
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(Error::invalid(format!(
                "probe position must be >= 0, got {x0}"
            )));
        }
        if samples
            .iter()
            .any(|&(t, u)| !(t >= 0.0) || !t.is_finite() || !u.is_finite())
        {
            return Err(Error::invalid(
                "measurement times must be >= 0 and values finite",
            ));
        }
        check_increasing(samples.iter().map(|s| s.0))?;
        if !(sigma >= 0.0) {
            return Err(Error::invalid("sigma must be >= 0"));
        }
        Ok(Self {
            x0,
            samples,
            sigma,
            seed,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_increasing(times: impl Iterator<Item = f64>) -> Result<()> {
    let mut last = f64::NEG_INFINITY;
    for t in times {
        if t <= last {
            return Err(Error::invalid(
                "measurement times must be strictly increasing",
            ));
        }
        last = t;
    }
    Ok(())
}

/// Forward temperatures at `x0` for each time.
pub fn forward_temperatures(
    spec: &ProblemSpec,
    alpha2: f64,
    x0: f64,
    times: &[f64],
    forward: &Forward,
) -> Result<Vec<f64>> {
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return Err(Error::invalid(format!(
            "alpha2 must be positive, got {alpha2}"
        )));
    }
    check_range("x0", x0, 0.0, spec.length())?;
    match forward {
        Forward::Analytic(ctl) => {
            let t_min = times
                .iter()
                .copied()
                .filter(|&t| t > 0.0)
                .fold(f64::INFINITY, f64::min);
            if !t_min.is_finite() {
                // only t = 0 requested: the initial profile answers directly
                return times
                    .iter()
                    .map(|&t| {
                        check_range("t", t, 0.0, 0.0)?;
                        Ok(spec.initial_value(x0))
                    })
                    .collect();
            }
            let sol = AnalyticSolution::new(spec, alpha2, *ctl, t_min)?;
            times
                .iter()
                .map(|&t| sol.temperature(x0, t).map(|v| v.value))
                .collect()
        }
        Forward::Fd(grid) => {
            for &t in times {
                check_range("t", t, 0.0, grid.t_final())?;
            }
            let field = solve_temperature(spec, alpha2, grid)?;
            times.iter().map(|&t| sample_field(&field, x0, t)).collect()
        }
    }
}

/// `u_k = forward(x0, t_k; α²_true) + ε_k`, `ε_k ~ N(0, σ²)` from a ChaCha8
/// stream seeded with `seed` (one draw per sample, in time order).
#[allow(clippy::too_many_arguments)]
pub fn simulate_measurements(
    spec: &ProblemSpec,
    alpha2_true: f64,
    x0: f64,
    times: &[f64],
    sigma: f64,
    seed: u64,
    forward: &Forward,
) -> Result<MeasurementSet> {
    if times.is_empty() {
        return Err(Error::invalid("no measurement times given"));
    }
    check_increasing(times.iter().copied())?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    let clean = forward_temperatures(spec, alpha2_true, x0, times, forward)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let samples = times
        .iter()
        .zip(clean)
        .map(|(&t, u)| {
            let e = noise.sample(&mut rng);
            (t, if sigma > 0.0 { u + e } else { u })
        })
        .collect();
    MeasurementSet::new(x0, samples, sigma, Some(seed))
}

/// `J(α²) = Σ_k (u(x0, t_k; α²) − u_k)²`.
pub fn objective(
    spec: &ProblemSpec,
    m: &MeasurementSet,
    alpha2: f64,
    forward: &Forward,
) -> Result<f64> {
    let model = forward_temperatures(spec, alpha2, m.x0, &m.times(), forward)?;
    Ok(model
        .iter()
        .zip(&m.samples)
        .map(|(u, &(_, d))| (u - d).powi(2))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub alpha2_hat: f64,
    pub objective_at_min: f64,
    /// Search bracket as requested.
    pub bracket: (f64, f64),
    /// Bracket left when the search stopped.
    pub final_bracket: (f64, f64),
    pub iterations: usize,
    pub well_conditioned: bool,
    /// `|α̂² − α²_true| / α²_true`, when the truth is known.
    pub relative_error: Option<f64>,
}

impl EstimationResult {
    pub fn with_truth(mut self, alpha2_true: f64) -> Self {
        self.relative_error = Some((self.alpha2_hat - alpha2_true).abs() / alpha2_true);
        self
    }
}

/// Points of the log-spaced grid probing `J` across the bracket.
pub const PROBE_POINTS: usize = 10;

/// Relative step used to test whether `J` is flat around the minimizer.
const FLATNESS_STEP: f64 = 0.1;

const MAX_GOLDEN_ITERATIONS: usize = 500;

/// Minimizes `J` over `[lo, hi]` by golden-section search in `ln α²`.
///
/// `J` is first probed on [`PROBE_POINTS`] log-spaced points; the search then
/// runs on the probe cell pair around the best probe. Fd forward evaluations
/// that would violate the stability bound count as `J = +∞`.
///
/// The result is flagged ill-conditioned when `J` is flat to within
/// `1e-9·(1 + max u_k²)`, either across the whole probe grid or under a ±10%
/// change of `α̂²`.
pub fn estimate_diffusivity(
    spec: &ProblemSpec,
    m: &MeasurementSet,
    bracket: (f64, f64),
    rel_tol: f64,
    forward: &Forward,
) -> Result<EstimationResult> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::invalid("rel_tol must be positive"));
    }

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let first_unstable: RefCell<Option<Error>> = RefCell::new(None);
    let j_at = |alpha2: f64| -> f64 {
        match objective(spec, m, alpha2, forward) {
            Ok(v) => v,
            Err(e @ Error::Unstable(_)) => {
                first_unstable.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::INFINITY
            }
        }
    };

    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let probes: Vec<f64> = (0..PROBE_POINTS)
        .map(|k| ln_lo + (ln_hi - ln_lo) * k as f64 / (PROBE_POINTS - 1) as f64)
        .collect();
    let probe_j: Vec<f64> = probes.iter().map(|&p| j_at(p.exp())).collect();
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let best = probe_j
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k);
    let Some(best) = best else {
        return Err(first_unstable
            .take()
            .unwrap_or_else(|| Error::invalid("objective is not finite")));
    };
    let variation: f64 = probe_j
        .iter()
        .filter(|v| v.is_finite())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .sum();

    let search_lo = probes[best.saturating_sub(1)];
    let search_hi = probes[(best + 1).min(PROBE_POINTS - 1)];
    let found = golden_section(
        |s| j_at(s.exp()),
        search_lo,
        search_hi,
        rel_tol.ln_1p(),
        MAX_GOLDEN_ITERATIONS,
    );
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let (ln_hat, j_hat) = if found.value <= probe_j[best] {
        (found.x, found.value)
    } else {
        (probes[best], probe_j[best])
    };
    let alpha2_hat = ln_hat.exp().clamp(lo, hi);

    let max_u2 = m.samples.iter().fold(0.0_f64, |a, s| a.max(s.1 * s.1));
    let flat_tol = 1e-9 * (1.0 + max_u2);
    let flat_globally = variation < flat_tol;
    let flat_locally = [1.0 - FLATNESS_STEP, 1.0 + FLATNESS_STEP]
        .iter()
        .all(|f| (j_at(alpha2_hat * f) - j_hat).abs() < flat_tol);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }

    Ok(EstimationResult {
        alpha2_hat,
        objective_at_min: j_hat,
        bracket,
        final_bracket: (found.lo.exp(), found.hi.exp()),
        iterations: found.iterations,
        well_conditioned: !(flat_globally || flat_locally),
        relative_error: None,
    })
}

/// Named reference diffusivities.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialCatalog {
    entries: Vec<(String, f64)>,
}

impl MaterialCatalog {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        for (k, (name, alpha2)) in entries.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::invalid("material name is empty"));
            }
            if !(*alpha2 > 0.0 && alpha2.is_finite()) {
                return Err(Error::invalid(format!(
                    "material {name}: alpha2 must be positive"
                )));
            }
            if entries[..k].iter().any(|(other, _)| other == name) {
                return Err(Error::invalid(format!("material {name} listed twice")));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|e| e.1)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedMaterial {
    pub name: String,
    pub alpha2: f64,
    pub relative_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub best: RankedMaterial,
    /// Another entry was equally close; `best` is the one with smaller `α²`.
    pub tie: bool,
    /// Every entry, closest first.
    pub ranking: Vec<RankedMaterial>,
}

/// Catalog entry minimizing `|α̂² − α²_entry| / α²_entry`.
pub fn identify_material(alpha2_hat: f64, catalog: &MaterialCatalog) -> Result<Identification> {
    if catalog.is_empty() {
        return Err(Error::invalid("material catalog is empty"));
    }
    if !alpha2_hat.is_finite() {
        return Err(Error::invalid("alpha2 estimate is not finite"));
    }
    let mut ranking: Vec<RankedMaterial> = catalog
        .entries
        .iter()
        .map(|(name, a)| RankedMaterial {
            name: name.clone(),
            alpha2: *a,
            relative_distance: (alpha2_hat - a).abs() / a,
        })
        .collect();
    ranking.sort_by(|a, b| {
        a.relative_distance
            .total_cmp(&b.relative_distance)
            .then(a.alpha2.total_cmp(&b.alpha2))
    });
    let d0 = ranking[0].relative_distance;
    let tied = |r: &RankedMaterial| r.relative_distance - d0 <= 1e-12 * d0;
    let group = ranking.iter().take_while(|r| tied(r)).count();
    // within a tie group the smaller alpha2 wins
    ranking[..group].sort_by(|a, b| a.alpha2.total_cmp(&b.alpha2));
    Ok(Identification {
        best: ranking[0].clone(),
        tie: group > 1,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rod() -> ProblemSpec {
        ProblemSpec::reference()
    }

    fn analytic() -> Forward {
        Forward::Analytic(SeriesControl::default())
    }

    #[test]
    fn measurement_set_validation() {
        assert!(MeasurementSet::new(0.2, vec![], 0.0, None).is_err());
        assert!(MeasurementSet::new(0.2, vec![(1.0, 2.0), (1.0, 3.0)], 0.0, None).is_err());
        assert!(MeasurementSet::new(-0.1, vec![(1.0, 2.0)], 0.0, None).is_err());
        assert!(MeasurementSet::new(0.2, vec![(1.0, 2.0)], -1.0, None).is_err());
        assert!(MeasurementSet::new(0.2, vec![(0.0, 2.0), (3.0, 1.0)], 1.0, Some(4)).is_ok());
    }

    #[test]
    fn zero_noise_reproduces_forward_values() {
        let times = [100.0, 500.0, 900.0];
        let m = simulate_measurements(&rod(), 1e-4, 0.2, &times, 0.0, 42, &analytic()).unwrap();
        let clean = forward_temperatures(&rod(), 1e-4, 0.2, &times, &analytic()).unwrap();
        for (s, c) in m.samples().iter().zip(&clean) {
            assert_eq!(s.1, *c);
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let times = [100.0, 500.0, 900.0];
        let a = simulate_measurements(&rod(), 1e-4, 0.2, &times, 1.0, 7, &analytic()).unwrap();
        let b = simulate_measurements(&rod(), 1e-4, 0.2, &times, 1.0, 7, &analytic()).unwrap();
        let c = simulate_measurements(&rod(), 1e-4, 0.2, &times, 1.0, 8, &analytic()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_statistics_over_seeds() {
        let times = [500.0, 1000.0, 1500.0];
        let clean = forward_temperatures(&rod(), 2.3e-5, 0.2, &times, &analytic()).unwrap();
        let mut residuals = Vec::new();
        for seed in 0..1000 {
            let m =
                simulate_measurements(&rod(), 2.3e-5, 0.2, &times, 1.0, seed, &analytic()).unwrap();
            residuals.extend(m.samples().iter().zip(&clean).map(|(s, c)| s.1 - c));
        }
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((0.9..=1.1).contains(&sd), "sd {sd}");
    }

    #[test]
    fn fd_measurement_errors() {
        let grid = GridSpec::reference(100.0).unwrap();
        let times = [50.0, 150.0];
        assert!(matches!(
            simulate_measurements(&rod(), 1e-4, 0.2, &times, 0.0, 1, &Forward::Fd(grid)),
            Err(Error::Domain { what: "t", .. })
        ));
        assert!(matches!(
            simulate_measurements(&rod(), 6e-4, 0.2, &[50.0], 0.0, 1, &Forward::Fd(grid)),
            Err(Error::Unstable(_))
        ));
        assert!(simulate_measurements(&rod(), 1e-4, 0.2, &[], 0.0, 1, &analytic()).is_err());
        assert!(
            simulate_measurements(&rod(), 1e-4, 0.2, &[5.0, 1.0], 0.0, 1, &analytic()).is_err()
        );
    }

    #[test]
    fn objective_shape_near_truth() {
        let a0 = 2.3e-5;
        let times = [500.0, 1000.0, 2000.0];
        let m = simulate_measurements(&rod(), a0, 0.2, &times, 0.0, 0, &analytic()).unwrap();
        let at_truth = objective(&rod(), &m, a0, &analytic()).unwrap();
        assert!(at_truth <= 1e-18);
        let near = objective(&rod(), &m, 1.01 * a0, &analytic()).unwrap();
        let far = objective(&rod(), &m, 1.1 * a0, &analytic()).unwrap();
        assert!(near > 0.0 && far > near);
        assert!(objective(&rod(), &m, 0.5 * a0, &analytic()).unwrap() > 0.0);
        assert!(objective(&rod(), &m, 2.0 * a0, &analytic()).unwrap() > 0.0);
    }

    #[test]
    fn noiseless_round_trip() {
        let a0 = 2.3e-5;
        let times = [500.0, 1000.0, 2000.0];
        let m = simulate_measurements(&rod(), a0, 0.2, &times, 0.0, 0, &analytic()).unwrap();
        let r = estimate_diffusivity(&rod(), &m, (1e-6, 1e-3), 1e-6, &analytic())
            .unwrap()
            .with_truth(a0);
        assert!(r.relative_error.unwrap() < 1e-3, "{r:?}");
        assert!(r.well_conditioned);
        assert!(r.bracket.0 <= r.alpha2_hat && r.alpha2_hat <= r.bracket.1);
        assert!(r.objective_at_min >= 0.0);
        let (flo, fhi) = r.final_bracket;
        assert!(fhi / flo - 1.0 <= 1e-6 * (1.0 + 1e-9));
    }

    #[test]
    fn reversed_bracket_is_rejected() {
        let m = MeasurementSet::new(0.2, vec![(100.0, 30.0)], 0.0, None).unwrap();
        assert!(matches!(
            estimate_diffusivity(&rod(), &m, (1e-3, 1e-6), 1e-6, &analytic()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(estimate_diffusivity(&rod(), &m, (1e-6, 1e-3), 0.0, &analytic()).is_err());
    }

    #[test]
    fn steady_state_data_is_flagged() {
        let m = simulate_measurements(&rod(), 1.7e-4, 0.2, &[2000.0, 4000.0], 0.0, 0, &analytic())
            .unwrap();
        // J hardly moves across the upper half of the bracket
        let plateau: Vec<f64> = [2e-4, 5e-4, 1e-3]
            .iter()
            .map(|&a| objective(&rod(), &m, a, &analytic()).unwrap())
            .collect();
        assert!(plateau.iter().all(|&j| j < 1e-12), "{plateau:?}");
        let r = estimate_diffusivity(&rod(), &m, (1e-7, 1e-3), 1e-6, &analytic()).unwrap();
        assert!(!r.well_conditioned);
    }

    #[test]
    fn initial_time_only_is_flagged() {
        let m = simulate_measurements(&rod(), 1e-4, 0.2, &[0.0], 0.0, 0, &analytic()).unwrap();
        assert_eq!(m.samples()[0].1, 25.0);
        let r = estimate_diffusivity(&rod(), &m, (1e-7, 1e-3), 1e-6, &analytic()).unwrap();
        assert!(!r.well_conditioned);
        assert_eq!(r.objective_at_min, 0.0);
    }

    #[test]
    fn fd_forward_skips_unstable_probes() {
        let grid = GridSpec::reference(400.0).unwrap();
        let fd = Forward::Fd(grid);
        let m =
            simulate_measurements(&rod(), 1e-4, 0.2, &[80.0, 160.0, 320.0], 0.0, 3, &fd).unwrap();
        let r = estimate_diffusivity(&rod(), &m, (1e-7, 1e-3), 1e-6, &fd)
            .unwrap()
            .with_truth(1e-4);
        assert!(r.relative_error.unwrap() < 1e-5, "{r:?}");
        let bad = Forward::Fd(GridSpec::reference(100.0).unwrap());
        assert!(estimate_diffusivity(&rod(), &m, (1e-7, 1e-3), 1e-6, &bad).is_err());
    }

    fn catalog(entries: &[(&str, f64)]) -> MaterialCatalog {
        MaterialCatalog::new(entries.iter().map(|(n, a)| (n.to_string(), *a)).collect()).unwrap()
    }

    #[test]
    fn catalog_validation() {
        assert!(MaterialCatalog::new(vec![("Cu".into(), 1e-4), ("Cu".into(), 2e-4)]).is_err());
        assert!(MaterialCatalog::new(vec![("Cu".into(), 0.0)]).is_err());
        assert!(MaterialCatalog::new(vec![("".into(), 1e-4)]).is_err());
        let empty = MaterialCatalog::new(vec![]).unwrap();
        assert!(identify_material(1e-4, &empty).is_err());
    }

    #[test]
    fn identification() {
        let cat = catalog(&[("Cu", 1.11e-4), ("Al", 9.7e-5)]);
        let id = identify_material(1.05e-4, &cat).unwrap();
        assert_eq!(id.best.name, "Cu");
        assert!((id.best.relative_distance - 0.054).abs() < 1e-3);
        assert!((id.ranking[1].relative_distance - 0.082).abs() < 1e-3);
        assert!(!id.tie);

        let exact = identify_material(9.7e-5, &cat).unwrap();
        assert_eq!(exact.best.name, "Al");
        assert_eq!(exact.best.relative_distance, 0.0);
    }

    #[test]
    fn ties_go_to_smaller_diffusivity() {
        let cat = catalog(&[("B", 3.0), ("A", 1.0)]);
        let id = identify_material(1.5, &cat).unwrap();
        assert!(id.tie);
        assert_eq!(id.best.name, "A");
        assert_eq!(id.ranking[1].name, "B");
    }
}
