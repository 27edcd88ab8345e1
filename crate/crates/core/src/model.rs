//! Run configuration and the closed-form scenarios the simulator is exercised on.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative slack allowed when checking that a length is a whole number of cells.
const LATTICE_TOLERANCE: f64 = 1e-9;

/// Mesh, domain and stopping parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Time step.
    pub dt: f64,
    /// Spatial lattice and grid spacing.
    pub dx: f64,
    /// Velocity lattice spacing.
    pub dv: f64,
    /// Initial spatial half-length of the truncated domain.
    pub half_length: f64,
    /// Initial velocity half-width of the particle lattice.
    pub velocity_half_width: f64,
    /// Stopping time.
    pub stop_time: f64,
    /// Radius outside which the initial density equals the background.
    pub neutrality_radius: f64,
}

impl SimConfig {
    /// Uniform mesh `dt = dx = dv = mesh`.
    pub fn uniform(
        mesh: f64,
        half_length: f64,
        velocity_half_width: f64,
        stop_time: f64,
        neutrality_radius: f64,
    ) -> Self {
        SimConfig {
            dt: mesh,
            dx: mesh,
            dv: mesh,
            half_length,
            velocity_half_width,
            stop_time,
            neutrality_radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("dx", self.dx),
            ("dv", self.dv),
            ("L", self.half_length),
            ("Q", self.velocity_half_width),
            ("T", self.stop_time),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        let r = self.neutrality_radius;
        if !(r.is_finite() && r >= 0.0 && r < self.half_length) {
            return Err(Error::InvalidConfig(format!(
                "R must satisfy 0 <= R < L, got R = {r}, L = {}",
                self.half_length
            )));
        }
        whole_cells("L/dx", self.half_length, self.dx)?;
        whole_cells("Q/dv", self.velocity_half_width, self.dv)?;
        Ok(())
    }

    /// Number of cells between the origin and the initial grid edge.
    pub fn half_cells(&self) -> usize {
        (self.half_length / self.dx).round() as usize
    }

    /// Number of velocity lattice steps between zero and `Q`.
    pub fn velocity_cells(&self) -> usize {
        (self.velocity_half_width / self.dv).round() as usize
    }

    /// Number of time steps needed to reach the stopping time.
    pub fn total_steps(&self) -> usize {
        steps_to_reach(self.stop_time, self.dt)
    }

    /// Same domain with every mesh spacing divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        SimConfig {
            dt: self.dt / factor,
            dx: self.dx / factor,
            dv: self.dv / factor,
            ..*self
        }
    }
}

fn whole_cells(what: &str, length: f64, spacing: f64) -> Result<()> {
    let ratio = length / spacing;
    if (ratio - ratio.round()).abs() > LATTICE_TOLERANCE * ratio.max(1.0) || ratio.round() < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "{what} must be a positive integer, got {ratio}"
        )));
    }
    Ok(())
}

/// Smallest `n` with `n * dt >= t`, forgiving round-off in the ratio.
pub(crate) fn steps_to_reach(t: f64, dt: f64) -> usize {
    let ratio = t / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= LATTICE_TOLERANCE * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// `A (B - z^2)^3` on `|z| < sqrt(B)`, zero elsewhere.
pub fn bump_profile(z: f64, amplitude: f64, width_sq: f64) -> f64 {
    let s = width_sq - z * z;
    if s > 0.0 {
        amplitude * s * s * s
    } else {
        0.0
    }
}

pub type PhaseDensity = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial phase-space density together with the fixed positive background.
///
/// The background enters the scheme only through its velocity integral, so it is
/// stored as a charge density `b(x)`. All functions are total: they return zero
/// outside their support.
#[derive(Clone)]
pub struct Scenario {
    name: String,
    initial_density: PhaseDensity,
    background_charge: Profile,
    analytic_field: Option<Profile>,
    analytic_rho: Option<Profile>,
    support_radius: f64,
    velocity_support: f64,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("support_radius", &self.support_radius)
            .field("velocity_support", &self.velocity_support)
            .field("analytic_field", &self.analytic_field.is_some())
            .finish()
    }
}

impl Scenario {
    /// Builds a scenario from its density and background.
    ///
    /// `support_radius` bounds the region where `f_0` differs from the background and
    /// `velocity_support` bounds the velocity support of `f_0`.
    pub fn new(
        name: impl Into<String>,
        initial_density: PhaseDensity,
        background_charge: Profile,
        support_radius: f64,
        velocity_support: f64,
    ) -> Self {
        Scenario {
            name: name.into(),
            initial_density,
            background_charge,
            analytic_field: None,
            analytic_rho: None,
            support_radius,
            velocity_support,
        }
    }

    pub fn with_analytic(mut self, field: Profile, rho: Profile) -> Self {
        self.analytic_field = Some(field);
        self.analytic_rho = Some(rho);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn initial_density(&self, x: f64, v: f64) -> f64 {
        (self.initial_density)(x, v)
    }

    pub fn background_charge(&self, x: f64) -> f64 {
        (self.background_charge)(x)
    }

    pub fn analytic_field(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        self.analytic_field.as_deref()
    }

    pub fn analytic_rho(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        self.analytic_rho.as_deref()
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn velocity_support(&self) -> f64 {
        self.velocity_support
    }

    /// Checks that the perturbation fits inside `[-R, R]` and the velocity support inside `[-Q, Q]`.
    pub fn check_fits(&self, cfg: &SimConfig) -> Result<()> {
        let mismatch = |reason: String| Error::ScenarioMismatch {
            scenario: self.name.clone(),
            reason,
        };
        if self.support_radius > cfg.neutrality_radius + LATTICE_TOLERANCE {
            return Err(mismatch(format!(
                "perturbation radius {} exceeds R = {}",
                self.support_radius, cfg.neutrality_radius
            )));
        }
        if self.support_radius >= cfg.half_length {
            return Err(mismatch(format!(
                "perturbation radius {} is not inside [-L, L] with L = {}",
                self.support_radius, cfg.half_length
            )));
        }
        if self.velocity_support > cfg.velocity_half_width + LATTICE_TOLERANCE {
            return Err(mismatch(format!(
                "velocity support {} exceeds Q = {}",
                self.velocity_support, cfg.velocity_half_width
            )));
        }
        Ok(())
    }
}

/// Steady potential well `U(x) = -(1 - x^2)^3 / 2` on `(-1, 1)`.
pub fn steady_potential(x: f64) -> f64 {
    -0.5 * bump_profile(x, 1.0, 1.0)
}

/// `E(x) = U'(x) = 3x(1 - x^2)^2` on `(-1, 1)`.
pub fn steady_field(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let s = 1.0 - x * x;
        3.0 * x * s * s
    } else {
        0.0
    }
}

/// `rho(x) = E'(x) = 3(1 - x^2)(1 - 5x^2)` on `(-1, 1)`.
pub fn steady_rho(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let x2 = x * x;
        3.0 * (1.0 - x2) * (1.0 - 5.0 * x2)
    } else {
        0.0
    }
}

/// Velocity integral of the steady density: `(2/3)(1 - x^2)^{9/2}` on `(-1, 1)`.
pub fn steady_number_density(x: f64) -> f64 {
    if x.abs() < 1.0 {
        2.0 / 3.0 * (1.0 - x * x).powf(4.5)
    } else {
        0.0
    }
}

/// Time-independent solution `f = G(v^2/2 + U(x))` with `G(e) = max(-e, 0)`.
pub fn steady_state_scenario() -> Scenario {
    let density: PhaseDensity = Arc::new(|x, v| {
        let energy = 0.5 * v * v + steady_potential(x);
        if energy < 0.0 {
            -energy
        } else {
            0.0
        }
    });
    let background: Profile = Arc::new(|x| steady_rho(x) + steady_number_density(x));
    Scenario::new("steady_state", density, background, 1.0, 1.0)
        .with_analytic(Arc::new(steady_field), Arc::new(steady_rho))
}

/// Amplitude of the odd perturbation `x U(x,1,1) U(v, A, 0.6)`.
pub const PERTURBATION_AMPLITUDE: f64 = 0.1;

/// Background `F(v) = U(v, 1, 1)` perturbed by `x U(x, 1, 1) U(v, 0.1, 0.6)`.
///
/// The background charge is the lattice sum `sum_j F(j dv) dv` over `|j dv| <= Q`, so
/// that the particle charges cancel it exactly at `t = 0` outside the perturbation.
pub fn perturbation_scenario(dv: f64, velocity_half_width: f64) -> Scenario {
    perturbation_scenario_with_amplitude(PERTURBATION_AMPLITUDE, dv, velocity_half_width)
}

/// Unperturbed plasma `f_0 = F`, which must stay field-free.
pub fn neutral_scenario(dv: f64, velocity_half_width: f64) -> Scenario {
    perturbation_scenario_with_amplitude(0.0, dv, velocity_half_width)
}

pub fn perturbation_scenario_with_amplitude(
    amplitude: f64,
    dv: f64,
    velocity_half_width: f64,
) -> Scenario {
    let background_density =
        lattice_velocity_integral(|v| bump_profile(v, 1.0, 1.0), dv, velocity_half_width);
    let density: PhaseDensity = Arc::new(move |x, v| {
        bump_profile(v, 1.0, 1.0) + x * bump_profile(x, 1.0, 1.0) * bump_profile(v, amplitude, 0.6)
    });
    let background: Profile = Arc::new(move |_| background_density);
    let name = if amplitude == 0.0 {
        "neutral"
    } else {
        "perturbation"
    };
    let radius = if amplitude == 0.0 { 0.0 } else { 1.0 };
    Scenario::new(name, density, background, radius, 1.0)
}

/// `sum_j g(j dv) dv` over the velocity lattice `|j| <= Q/dv`, summed in ascending `j`.
pub fn lattice_velocity_integral(g: impl Fn(f64) -> f64, dv: f64, velocity_half_width: f64) -> f64 {
    let cells = (velocity_half_width / dv).round() as i64;
    (-cells..=cells)
        .map(|j| g(lattice_coordinate(j, dv)) * dv)
        .sum()
}

/// Lattice coordinate `k * spacing`; the one expression used everywhere a lattice point is formed.
#[inline]
pub fn lattice_coordinate(k: i64, spacing: f64) -> f64 {
    k as f64 * spacing
}
