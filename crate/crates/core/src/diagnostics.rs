//! Per-step observables and post-run analysis: sup-field, energy, steady-state
//! error, convergence order and power-law envelope fits.

use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::particles::ParticleSet;
use crate::validity::Validity;

/// Observables at one time level `t^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// `max |E_l|` over gridpoints in the valid interval; `None` once exhausted.
    pub sup_field: Option<f64>,
    /// `max |E_l|` over the fixed monitor window `[-I, I]`, regardless of validity.
    pub monitor_sup_field: f64,
    pub energy: f64,
    pub grid_half_length: f64,
    pub valid_half_width: f64,
    /// Largest staggered speed `S^{n+1/2}`.
    pub max_speed: f64,
    /// `max |E_l - E_exact(x_l)|` over the valid interval when the scenario has an exact field.
    pub steady_error: Option<f64>,
}

/// Time series of [`StepRecord`]s in column form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub sup_field: Vec<Option<f64>>,
    pub monitor_sup_field: Vec<f64>,
    pub energy: Vec<f64>,
    pub grid_half_length: Vec<f64>,
    pub valid_half_width: Vec<f64>,
    pub max_speed: Vec<f64>,
    pub steady_error: Vec<Option<f64>>,
}

impl DiagnosticsSeries {
    pub fn push(&mut self, r: &StepRecord) {
        self.steps.push(r.step);
        self.times.push(r.time);
        self.sup_field.push(r.sup_field);
        self.monitor_sup_field.push(r.monitor_sup_field);
        self.energy.push(r.energy);
        self.grid_half_length.push(r.grid_half_length);
        self.valid_half_width.push(r.valid_half_width);
        self.max_speed.push(r.max_speed);
        self.steady_error.push(r.steady_error);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn record(&self, i: usize) -> StepRecord {
        StepRecord {
            step: self.steps[i],
            time: self.times[i],
            sup_field: self.sup_field[i],
            monitor_sup_field: self.monitor_sup_field[i],
            energy: self.energy[i],
            grid_half_length: self.grid_half_length[i],
            valid_half_width: self.valid_half_width[i],
            max_speed: self.max_speed[i],
            steady_error: self.steady_error[i],
        }
    }

    /// Index of the first record whose valid interval is exhausted.
    pub fn exhaustion_index(&self) -> Option<usize> {
        self.sup_field.iter().position(Option::is_none)
    }

    /// Largest `|E(t) - E(0)| / |E(0)|` over the series.
    pub fn max_relative_energy_drift(&self) -> f64 {
        match self.energy.first() {
            Some(&e0) if e0 != 0.0 => self
                .energy
                .iter()
                .map(|e| ((e - e0) / e0).abs())
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Valid-interval sup-field with exhausted steps removed.
    pub fn valid_samples(&self) -> (Vec<f64>, Vec<f64>) {
        self.times
            .iter()
            .zip(&self.sup_field)
            .filter_map(|(t, s)| s.map(|s| (*t, s)))
            .unzip()
    }
}

/// Electrostatic energy `1/2 sum_l E_l^2 dx`.
pub fn field_energy(grid: &FieldGrid) -> f64 {
    0.5 * grid.field().iter().map(|e| e * e).sum::<f64>() * grid.spacing()
}

/// Time-centred kinetic plus field energy at `t^n`.
///
/// `particles` holds `V^{n-1/2}`; `advanced` holds `V^{n+1/2}` in the same order.
pub fn net_energy(particles: &ParticleSet, advanced: &[f64], grid: &FieldGrid) -> f64 {
    assert_eq!(advanced.len(), particles.len());
    let kinetic: f64 = particles
        .charges()
        .iter()
        .zip(particles.velocities())
        .zip(advanced)
        .map(|((q, a), b)| q * a * b)
        .sum();
    0.5 * kinetic + field_energy(grid)
}

/// `max |E_l|` over gridpoints inside the valid interval.
pub fn sup_field(grid: &FieldGrid, valid: &Validity) -> Result<f64> {
    if valid.is_exhausted() {
        return Err(Error::Exhausted);
    }
    Ok(sup_over(grid, valid, |_, e| e.abs()))
}

/// `max |E_l|` over gridpoints with `|x_l| <= half_width`.
pub fn sup_field_within(grid: &FieldGrid, half_width: f64) -> f64 {
    let window = Validity::Interval {
        lo: -half_width,
        hi: half_width,
    };
    sup_over(grid, &window, |_, e| e.abs())
}

/// `max |E_l - E_exact(x_l)|` over gridpoints inside the valid interval.
pub fn steady_error(
    grid: &FieldGrid,
    analytic: &dyn Fn(f64) -> f64,
    valid: &Validity,
) -> Result<f64> {
    if valid.is_exhausted() {
        return Err(Error::Exhausted);
    }
    Ok(sup_over(grid, valid, |x, e| (e - analytic(x)).abs()))
}

fn sup_over(grid: &FieldGrid, window: &Validity, value: impl Fn(f64, f64) -> f64) -> f64 {
    grid.coordinates()
        .zip(grid.field())
        .filter(|(x, _)| window.contains(*x))
        .map(|(x, e)| value(x, *e))
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln(error)` against `ln(mesh)` over successively halved meshes.
pub fn convergence_rate(levels: &[(f64, f64)]) -> Result<f64> {
    if levels.len() < 2 {
        return Err(Error::Convergence(format!(
            "need at least 2 mesh levels, got {}",
            levels.len()
        )));
    }
    for pair in levels.windows(2) {
        let ratio = pair[0].0 / pair[1].0;
        if (ratio - 2.0).abs() > 1e-9 {
            return Err(Error::Convergence(format!(
                "meshes {} and {} are not a halving",
                pair[0].0, pair[1].0
            )));
        }
    }
    if let Some((mesh, err)) = levels.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Convergence(format!(
            "error {err} at mesh {mesh} is not positive"
        )));
    }
    let points: Vec<(f64, f64)> = levels.iter().map(|(h, e)| (h.ln(), e.ln())).collect();
    Ok(least_squares(&points).1)
}

/// Intercept and slope of the ordinary least-squares line through `points`.
fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Power-law fit `sup ~ C t^p` through the envelope peaks of an oscillating series.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub coefficient: f64,
    pub exponent: f64,
    pub window: (f64, f64),
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub peaks: Vec<(f64, f64)>,
}

impl DecayFit {
    /// `sup * t` at each peak.
    pub fn peak_products(&self) -> Vec<f64> {
        self.peaks.iter().map(|(t, s)| t * s).collect()
    }
}

/// Local maxima: samples strictly above the left neighbour and above the first
/// differing sample to the right. A plateau reports its leftmost sample.
pub fn find_peaks(values: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < values.len() {
        if values[i] > values[i - 1] {
            let mut j = i + 1;
            while j < values.len() && values[j] == values[i] {
                j += 1;
            }
            if j < values.len() && values[j] < values[i] {
                peaks.push(i);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Fits `ln(peak) = ln C + p ln t` over the envelope peaks with `t` in `window`.
pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    assert_eq!(times.len(), values.len());
    let (a, b) = window;
    if !(a > 0.0 && b > a) {
        return Err(Error::Fit(format!(
            "window [{a}, {b}] must satisfy 0 < a < b"
        )));
    }
    let peaks: Vec<(f64, f64)> = find_peaks(values)
        .into_iter()
        .map(|i| (times[i], values[i]))
        .filter(|(t, s)| *t >= a && *t <= b && *s > 0.0)
        .collect();
    if peaks.len() < 2 {
        return Err(Error::Fit(format!(
            "found {} envelope peaks in [{a}, {b}], need at least 2",
            peaks.len()
        )));
    }
    let points: Vec<(f64, f64)> = peaks.iter().map(|(t, s)| (t.ln(), s.ln())).collect();
    let (intercept, slope) = least_squares(&points);
    let residual = (points
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Ok(DecayFit {
        coefficient: intercept.exp(),
        exponent: slope,
        window,
        residual,
        peaks,
    })
}

/// [`fit_decay`] over the valid sup-field samples of a series.
pub fn fit_series(series: &DiagnosticsSeries, window: (f64, f64)) -> Result<DecayFit> {
    let (times, values) = series.valid_samples();
    fit_decay(&times, &values, window)
}
