//! Charge deposition, field solve and interpolation on the growing spatial grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{lattice_coordinate, Scenario, SimConfig};
use crate::particles::ParticleSet;

/// Particles per deposition work unit. Fixed so the merge order never depends on the thread count.
const DEPOSIT_CHUNK: usize = 1 << 15;

/// Empty cells kept beyond `L^n` on each side.
pub const GUARD_CELLS: usize = 1;

/// First-order (cloud-in-cell) weight `(1/dx)(1 - |x|/dx)` for `|x| < dx`.
pub fn cic_weight(x: f64, dx: f64) -> f64 {
    let r = x.abs() / dx;
    if r < 1.0 {
        (1.0 - r) / dx
    } else {
        0.0
    }
}

/// Uniform grid `x_l = l dx`, `|l| <= m`, holding charge density and field.
///
/// The fixed background is sampled once at the gridpoints of the initial domain
/// `[-L, L]`; gridpoints added by enlargement carry no background, matching the
/// truncation of the particle lattice to the same interval.
///
/// Grids built from a configuration keep one empty guard cell beyond `L^n` on each
/// side, so no particle ever deposits onto the outermost gridpoints and the
/// trapezoid sum starting there sees the full charge.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    spacing: f64,
    half_cells: usize,
    guard: usize,
    background: Vec<f64>,
    rho: Vec<f64>,
    field: Vec<f64>,
    step: usize,
}

impl FieldGrid {
    pub fn new(cfg: &SimConfig, scenario: &Scenario) -> Self {
        let m = cfg.half_cells() as i64;
        let g = GUARD_CELLS as i64;
        let background = (-m - g..=m + g)
            .map(|l| {
                if l.abs() <= m {
                    scenario.background_charge(lattice_coordinate(l, cfg.dx))
                } else {
                    0.0
                }
            })
            .collect();
        let mut grid = FieldGrid::with_background(cfg.dx, background);
        grid.guard = GUARD_CELLS;
        grid
    }

    /// Grid whose initial extent is set by the length of `background` (which must be odd).
    pub fn with_background(spacing: f64, background: Vec<f64>) -> Self {
        assert!(
            background.len() % 2 == 1,
            "background must cover a symmetric grid"
        );
        let n = background.len();
        FieldGrid {
            spacing,
            half_cells: n / 2,
            guard: 0,
            background,
            rho: vec![0.0; n],
            field: vec![0.0; n],
            step: 0,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Index offset of the centre gridpoint; the grid stores `2 * half_cells + 1` points.
    pub fn half_cells(&self) -> usize {
        self.half_cells
    }

    /// Current half-length `L^n`, excluding guard cells.
    pub fn half_length(&self) -> f64 {
        lattice_coordinate((self.half_cells - self.guard) as i64, self.spacing)
    }

    /// Coordinate of the outermost stored gridpoint.
    pub fn extent(&self) -> f64 {
        lattice_coordinate(self.half_cells as i64, self.spacing)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn set_step(&mut self, step: usize) {
        self.step = step;
    }

    /// Position of the gridpoint stored at `index`.
    pub fn coordinate(&self, index: usize) -> f64 {
        lattice_coordinate(index as i64 - self.half_cells as i64, self.spacing)
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.coordinate(i))
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    /// Overwrites the charge density; used to solve for the field of a prescribed density.
    pub fn set_rho(&mut self, rho: &[f64]) {
        assert_eq!(rho.len(), self.rho.len());
        self.rho.copy_from_slice(rho);
    }

    pub fn interpolant(&self) -> FieldInterpolant<'_> {
        FieldInterpolant {
            field: &self.field,
            spacing: self.spacing,
            half_cells: self.half_cells,
        }
    }

    /// Sets `rho_l = b(x_l) - sum_p q_p cic(x_l - X_p)`.
    ///
    /// Fails if a particle lies beyond the outermost gridpoints.
    pub fn deposit_charge(&mut self, particles: &ParticleSet) -> Result<()> {
        let dx = self.spacing;
        let m = self.half_cells as i64;
        let partials = particles
            .positions()
            .par_chunks(DEPOSIT_CHUNK)
            .zip(particles.charges().par_chunks(DEPOSIT_CHUNK))
            .map(|(xs, qs)| deposit_chunk(xs, qs, dx, m))
            .collect::<Result<Vec<_>>>()?;

        let pad = (self.rho.len() - self.background.len()) / 2;
        self.rho.fill(0.0);
        self.rho[pad..pad + self.background.len()].copy_from_slice(&self.background);
        for (first, density) in partials {
            let start = (first + m) as usize;
            for (rho, n) in self.rho[start..start + density.len()]
                .iter_mut()
                .zip(&density)
            {
                *rho -= n;
            }
        }
        Ok(())
    }

    /// Cumulative trapezoid of the piecewise-linear density from the left edge,
    /// `E_0 = 0`, `E_{l+1} = E_l + (dx/2)(rho_l + rho_{l+1})`.
    pub fn integrate_field(&mut self) {
        let half = 0.5 * self.spacing;
        let mut acc = 0.0;
        self.field[0] = 0.0;
        for l in 1..self.rho.len() {
            acc += half * (self.rho[l - 1] + self.rho[l]);
            self.field[l] = acc;
        }
        debug_assert!(
            self.gauss_law_defect()
                <= 1e-9 * (1.0 + self.rho.iter().fold(0.0f64, |a, r| a.max(r.abs())))
        );
    }

    /// Largest `|(E_{l+1} - E_l)/dx - (rho_l + rho_{l+1})/2|` over the grid.
    pub fn gauss_law_defect(&self) -> f64 {
        self.field
            .windows(2)
            .zip(self.rho.windows(2))
            .map(|(e, r)| ((e[1] - e[0]) / self.spacing - 0.5 * (r[0] + r[1])).abs())
            .fold(0.0, f64::max)
    }

    /// Grows the grid by `speed * dt` rounded up to whole cells on each side.
    ///
    /// Returns the number of cells added per side. New gridpoints start with zero density and field.
    pub fn enlarge(&mut self, speed: f64, dt: f64) -> usize {
        debug_assert!(speed >= 0.0);
        let cells = cells_for_growth(speed * dt, self.spacing);
        if cells > 0 {
            pad_both(&mut self.rho, cells);
            pad_both(&mut self.field, cells);
            self.half_cells += cells;
        }
        cells
    }
}

/// `ceil(growth / dx)`, ignoring round-off just above an integer.
pub(crate) fn cells_for_growth(growth: f64, dx: f64) -> usize {
    let ratio = growth / dx;
    if ratio <= 0.0 {
        0
    } else {
        (ratio - 1e-9).ceil().max(0.0) as usize
    }
}

fn pad_both(values: &mut Vec<f64>, cells: usize) {
    let mut grown = vec![0.0; values.len() + 2 * cells];
    grown[cells..cells + values.len()].copy_from_slice(values);
    *values = grown;
}

/// Deposits one chunk into a local window; returns the window's first lattice index and its densities.
fn deposit_chunk(xs: &[f64], qs: &[f64], dx: f64, m: i64) -> Result<(i64, Vec<f64>)> {
    let mut cells = Vec::with_capacity(xs.len());
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for &x in xs {
        let (k, w) = locate(x, dx, m).ok_or(Error::ParticleOutsideGrid {
            position: x,
            half_length: lattice_coordinate(m, dx),
        })?;
        lo = lo.min(k);
        hi = hi.max(k + 1);
        cells.push((k, w));
    }
    if cells.is_empty() {
        return Ok((-m, Vec::new()));
    }
    let mut density = vec![0.0; (hi - lo + 1) as usize];
    let inv_dx = 1.0 / dx;
    for (&(k, w), &q) in cells.iter().zip(qs) {
        let i = (k - lo) as usize;
        let weight = q * inv_dx;
        density[i] += weight * (1.0 - w);
        density[i + 1] += weight * w;
    }
    Ok((lo, density))
}

/// Offsets this close to a gridpoint (in cells) are snapped onto it at the grid edges.
const EDGE_SNAP: f64 = 1e-9;

/// Left gridpoint index `k` in `[-m, m-1]` and fractional offset `w in [0, 1]` of `x`.
#[inline]
fn locate(x: f64, dx: f64, m: i64) -> Option<(i64, f64)> {
    let s = x / dx;
    if !s.is_finite() {
        return None;
    }
    let k = s.floor();
    let w = s - k;
    let k = k as i64;
    if k >= -m && k < m {
        Some((k, w))
    } else if k == m && w <= EDGE_SNAP {
        Some((m - 1, 1.0))
    } else if k == -m - 1 && w >= 1.0 - EDGE_SNAP {
        Some((-m, 0.0))
    } else {
        None
    }
}

/// Piecewise-linear view of the gridded field; zero outside `[-L^n, L^n]`.
#[derive(Debug, Clone, Copy)]
pub struct FieldInterpolant<'a> {
    field: &'a [f64],
    spacing: f64,
    half_cells: usize,
}

impl<'a> FieldInterpolant<'a> {
    /// Interpolant over raw gridpoint values on `x_l = l dx`, `|l| <= (len-1)/2`.
    pub fn new(field: &'a [f64], spacing: f64) -> Self {
        assert!(field.len() % 2 == 1);
        FieldInterpolant {
            field,
            spacing,
            half_cells: field.len() / 2,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match locate(x, self.spacing, self.half_cells as i64) {
            Some((k, w)) => {
                let i = (k + self.half_cells as i64) as usize;
                self.field[i] * (1.0 - w) + self.field[i + 1] * w
            }
            None => 0.0,
        }
    }
}
