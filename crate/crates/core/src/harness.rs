//! Time loop, full runs and mesh-convergence studies.

use std::time::Instant;

use log::warn;

use crate::config::{RunConfig, ScenarioKind};
use crate::diagnostics::{
    convergence_rate, field_energy, steady_error, sup_field, sup_field_within, DiagnosticsSeries,
    StepRecord,
};
use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::model::{lattice_coordinate, steps_to_reach, Scenario, SimConfig};
use crate::output::{FieldSnapshot, RunManifest};
use crate::particles::{ForceSign, ParticleSet, PushSummary};
use crate::validity::{Validity, ValidityTracker};

/// Complete simulation state at time level `t^n`: positions and field at `t^n`,
/// velocities at `t^{n-1/2}`, and the speeds recorded for steps `0..n`.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    scenario: Scenario,
    sign: ForceSign,
    monitor_half_width: f64,
    particles: ParticleSet,
    grid: FieldGrid,
    tracker: ValidityTracker,
    step: usize,
    cfl_warned: bool,
}

impl Simulation {
    /// Initializes the lattice, solves for the initial field and staggers the velocities to `t^{-1/2}`.
    pub fn new(
        cfg: SimConfig,
        scenario: Scenario,
        sign: ForceSign,
        monitor_half_width: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        scenario.check_fits(&cfg)?;
        let mut particles = ParticleSet::initialize(&scenario, &cfg)?;
        let mut grid = FieldGrid::new(&cfg, &scenario);
        grid.deposit_charge(&particles)?;
        grid.integrate_field();
        particles.half_step_back(&grid.interpolant(), cfg.dt, sign);
        Ok(Simulation {
            tracker: ValidityTracker::new(cfg.half_length, cfg.dt),
            cfg,
            scenario,
            sign,
            monitor_half_width,
            particles,
            grid,
            step: 0,
            cfl_warned: false,
        })
    }

    pub fn from_run_config(run: &RunConfig) -> Result<Self> {
        run.validate()?;
        Simulation::new(
            run.sim,
            run.build_scenario(),
            run.force_sign,
            run.monitor_half_width(),
        )
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    pub fn tracker(&self) -> &ValidityTracker {
        &self.tracker
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        lattice_coordinate(self.step as i64, self.cfg.dt)
    }

    /// Observables at `t^n` without advancing; the velocity push is only previewed.
    pub fn observe(&self) -> StepRecord {
        let summary = self
            .particles
            .preview_push(&self.grid.interpolant(), self.cfg.dt, self.sign);
        let mut tracker = self.tracker.clone();
        tracker.record_step(summary.max_speed);
        self.record(summary, tracker.valid_interval())
    }

    /// Advances from `t^n` to `t^{n+1}` and returns the observables at `t^n`.
    ///
    /// Order: push velocities with `E^n`, record `S^{n+1/2}`, enlarge the grid,
    /// push positions, deposit, solve for `E^{n+1}`.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let dt = self.cfg.dt;
        let summary = self
            .particles
            .push_velocities(&self.grid.interpolant(), dt, self.sign);
        self.tracker.record_step(summary.max_speed);
        let record = self.record(summary, self.tracker.valid_interval());

        if summary.max_speed * dt > self.cfg.dx && !self.cfl_warned {
            warn!(
                "step {}: max speed {} crosses more than one cell per step (dt = {}, dx = {})",
                self.step, summary.max_speed, dt, self.cfg.dx
            );
            self.cfl_warned = true;
        }
        self.grid.enlarge(summary.max_speed, dt);
        self.particles.push_positions(dt);
        self.grid.deposit_charge(&self.particles)?;
        self.grid.integrate_field();
        self.step += 1;
        self.grid.set_step(self.step);
        Ok(record)
    }

    /// `sup |E_l - E_exact(x_l)|` over the current valid interval, if the scenario has an exact field.
    pub fn steady_error(&self) -> Result<f64> {
        let exact = self
            .scenario
            .analytic_field()
            .ok_or_else(|| Error::NoAnalyticField(self.scenario.name().to_string()))?;
        steady_error(&self.grid, exact, &self.tracker.valid_interval())
    }

    fn record(&self, summary: PushSummary, validity: Validity) -> StepRecord {
        StepRecord {
            step: self.step,
            time: self.time(),
            sup_field: sup_field(&self.grid, &validity).ok(),
            monitor_sup_field: sup_field_within(&self.grid, self.monitor_half_width),
            energy: summary.centered_kinetic + field_energy(&self.grid),
            grid_half_length: self.grid.half_length(),
            valid_half_width: validity.half_width(),
            max_speed: summary.max_speed,
            steady_error: self
                .scenario
                .analytic_field()
                .and_then(|exact| steady_error(&self.grid, exact, &validity).ok()),
        }
    }

    pub fn snapshot(&self) -> FieldSnapshot {
        FieldSnapshot {
            step: self.step,
            time: self.time(),
            x: self.grid.coordinates().collect(),
            rho: self.grid.rho().to_vec(),
            field: self.grid.field().to_vec(),
        }
    }
}

/// Result of [`run_simulation`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub snapshots: Vec<FieldSnapshot>,
    pub manifest: RunManifest,
}

/// Runs a configuration from `t = 0` until `T`, or until the valid interval is
/// exhausted unless `continue_past_exhaustion` is set.
pub fn run_simulation(run: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let mut sim = Simulation::from_run_config(run)?;
    let (series, snapshots) = drive(
        &mut sim,
        run.sim.total_steps(),
        run.snapshot_stride,
        run.continue_past_exhaustion,
    )?;
    let manifest = RunManifest {
        config: run.render(),
        scenario: sim.scenario().name().to_string(),
        total_steps: sim.step_index(),
        exhaustion_step: series.exhaustion_index().map(|i| series.steps[i]),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        checksum: String::new(),
    };
    Ok(RunOutput {
        series,
        snapshots,
        manifest,
    })
}

/// Steps `sim` up to step `final_step`, recording every time level including the last.
pub fn drive(
    sim: &mut Simulation,
    final_step: usize,
    snapshot_stride: usize,
    continue_past_exhaustion: bool,
) -> Result<(DiagnosticsSeries, Vec<FieldSnapshot>)> {
    let mut series = DiagnosticsSeries::default();
    let mut snapshots = Vec::new();
    loop {
        let n = sim.step_index();
        if snapshot_stride > 0 && n.is_multiple_of(snapshot_stride) {
            snapshots.push(sim.snapshot());
        }
        let record = if n >= final_step {
            sim.observe()
        } else {
            sim.advance()?
        };
        series.push(&record);
        if n >= final_step || (record.sup_field.is_none() && !continue_past_exhaustion) {
            break;
        }
    }
    Ok((series, snapshots))
}

/// Sample times of the steady-state error table.
pub const STEADY_SAMPLE_TIMES: [f64; 5] = [0.0, 0.12, 0.24, 0.36, 0.48];

/// Steady-state errors per mesh level at a set of sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub meshes: Vec<f64>,
    pub times: Vec<f64>,
    /// `errors[level][k]` is the error on `meshes[level]` at `times[k]`.
    pub errors: Vec<Vec<f64>>,
    /// Fitted order per sample time; `None` where an error vanished.
    pub rates: Vec<Option<f64>>,
}

impl ConvergenceTable {
    /// Error reduction factors between consecutive levels at sample `k`.
    pub fn reduction_factors(&self, k: usize) -> Vec<f64> {
        self.errors.windows(2).map(|w| w[0][k] / w[1][k]).collect()
    }
}

/// Runs the steady-state scenario on `levels` successively halved meshes.
pub fn run_convergence_study(
    base: &SimConfig,
    levels: usize,
    sign: ForceSign,
) -> Result<ConvergenceTable> {
    run_convergence_study_with(base, levels, &STEADY_SAMPLE_TIMES, |cfg| {
        steady_errors_at(cfg, sign, &STEADY_SAMPLE_TIMES)
    })
}

/// Convergence study with an injected solver returning one error per sample time.
pub fn run_convergence_study_with(
    base: &SimConfig,
    levels: usize,
    times: &[f64],
    solver: impl Fn(&SimConfig) -> Result<Vec<f64>>,
) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(Error::Convergence(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    let finest = base.refined(f64::from(1u32 << (levels - 1)));
    finest
        .validate()
        .map_err(|e| Error::Convergence(format!("finest level is not lattice-aligned: {e}")))?;

    let mut meshes = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    for level in 0..levels {
        let cfg = base.refined(f64::from(1u32 << level));
        let errs = solver(&cfg)?;
        if errs.len() != times.len() {
            return Err(Error::Convergence(format!(
                "solver returned {} errors for {} sample times",
                errs.len(),
                times.len()
            )));
        }
        meshes.push(cfg.dx);
        errors.push(errs);
    }
    let rates = (0..times.len())
        .map(|k| {
            let column: Vec<(f64, f64)> = meshes
                .iter()
                .zip(&errors)
                .map(|(h, e)| (*h, e[k]))
                .collect();
            convergence_rate(&column).ok()
        })
        .collect();
    Ok(ConvergenceTable {
        meshes,
        times: times.to_vec(),
        errors,
        rates,
    })
}

/// Steady-state field error at each sample time on one mesh.
pub fn steady_errors_at(cfg: &SimConfig, sign: ForceSign, times: &[f64]) -> Result<Vec<f64>> {
    let last = times.iter().copied().fold(0.0, f64::max);
    let cfg = SimConfig {
        stop_time: cfg.stop_time.max(last),
        ..*cfg
    };
    let targets: Vec<usize> = times.iter().map(|t| steps_to_reach(*t, cfg.dt)).collect();
    let mut sim = Simulation::new(
        cfg,
        ScenarioKind::SteadyState.build(&cfg),
        sign,
        cfg.neutrality_radius,
    )?;
    let final_step = targets.iter().copied().max().unwrap_or(0);
    let (series, _) = drive(&mut sim, final_step, 0, true)?;
    targets
        .iter()
        .map(|&n| {
            series.steady_error[n]
                .ok_or_else(|| Error::Convergence(format!("no steady error at step {n}")))
        })
        .collect()
}
