//! Time integration.
//!
//! One step is: choose `Δt` from the CFL rule, solve the elliptic system for
//! the potentials of the current state, then advance with the two-stage
//! Richtmyer Lax-Wendroff scheme. The potentials stay frozen at their
//! step-`n` values through both stages; at half-step faces `Σ` is the
//! two-point face average.
//!
//! In 2D the predictor builds x-face and y-face half states independently
//! (each from the flux along its own axis) and the corrector differences both
//! face fluxes. The corrector source is evaluated at the mean of the half
//! states on the faces surrounding the cell.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::elliptic::{self, EllipticRhs, Potentials, SolveReport};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{self, Cell, ConservedState, Model, ModelKind, StateForm};
use crate::operators::{self, StencilMode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    LaxWendroff,
    /// Diffusive baseline; Euler only.
    LaxFriedrichs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub cfl: f64,
    pub t_end: f64,
    /// Times at which the driver stops exactly and records a snapshot.
    pub snapshot_times: Vec<f64>,
}

impl StepControl {
    pub fn new(cfl: f64, t_end: f64) -> Result<Self> {
        let c = Self { cfl, t_end, snapshot_times: Vec::new() };
        c.validate()?;
        Ok(c)
    }

    pub fn with_snapshots(mut self, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        times.dedup();
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("CFL number must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        Ok(())
    }

    /// First output time strictly after `t` (snapshot or `t_end`).
    fn next_stop(&self, t: f64) -> f64 {
        self.snapshot_times.iter().copied().find(|&s| s > t && s < self.t_end).unwrap_or(self.t_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
    pub min_rho: f64,
    /// Smallest `π` (entropy form) or pressure (energy form).
    pub min_thermo: f64,
    /// `Δt Σ S·vol` for the momentum components this step.
    pub momentum_source: [f64; 2],
}

/// `Δt = C·Δx / max(|u| + c)`, shortened to land on the next output time.
pub fn compute_dt(model: &Model, state: &ConservedState, control: &StepControl) -> Result<f64> {
    let h = state.grid().min_spacing();
    let speed = model::max_signal_speed(model, state)?;
    let dt = if speed > 0.0 { control.cfl * h / speed } else { h };
    let stop = control.next_stop(state.time);
    Ok(dt.min(stop - state.time))
}

fn axis_spacing(grid: &Grid, axis: usize) -> f64 {
    if axis == 0 {
        grid.dx()
    } else {
        grid.dy()
    }
}

/// Advances `state` by one Richtmyer Lax-Wendroff step with frozen
/// potentials. Returns the new state and `Δt Σ_cells S_momentum · vol`.
pub fn lw_step(model: &Model, state: &ConservedState, potentials: &Potentials, dt: f64) -> Result<(ConservedState, [f64; 2])> {
    model.check_state(state)?;
    if potentials.grid() != state.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *state.grid();
    let n = grid.len();
    let axes = grid.dim();
    let q = state.to_cells();
    let regularized = model.kind != ModelKind::Euler;
    let sig = potentials.sigma.values();
    let sigma_at = |k: usize| if regularized { sig[k] } else { 0.0 };

    // Momentum source S = -π∇χ at the cells (TIGRE only).
    let has_source = model.kind == ModelKind::Tigre;
    let (chi_x, chi_y) = if has_source {
        (operators::ddx(&potentials.chi).into_values(), operators::ddy(&potentials.chi).into_values())
    } else {
        (Vec::new(), Vec::new())
    };
    let source_at = |k: usize, pi: f64| -> [f64; 2] {
        if has_source {
            [-pi * chi_x[k], -pi * chi_y[k]]
        } else {
            [0.0, 0.0]
        }
    };
    // Predictor source weight multiplying Δt(S_i + S_{i+1}).
    let predictor_weight = match model.stencils {
        StencilMode::Consistent => 0.25,
        StencilMode::Verbatim => 0.5,
    };

    let mut pressure = Vec::with_capacity(n);
    for (k, c) in q.iter().enumerate() {
        pressure.push(model.admissible(c, "step start", &grid, k)?);
    }

    // Face half states and their fluxes: faces[axis][k] sits between cell k
    // and its forward neighbour along that axis.
    let mut face_flux: Vec<Vec<Cell>> = Vec::with_capacity(axes);
    let mut face_pi: Vec<Vec<f64>> = Vec::with_capacity(axes);
    for axis in 0..axes {
        let stage = if axis == 0 { "x half step" } else { "y half step" };
        let lam = 0.5 * dt / axis_spacing(&grid, axis);
        let cell_flux: Vec<Cell> = (0..n).map(|k| model.flux_cell(&q[k], pressure[k], sigma_at(k), axis)).collect();
        let mut fluxes = Vec::with_capacity(n);
        let mut pis = Vec::with_capacity(n);
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let k = grid.index(i, j);
                let m = grid.neighbours(i, j)[if axis == 0 { 0 } else { 2 }];
                let (sk, sm) = (source_at(k, q[k][3]), source_at(m, q[m][3]));
                let mut h = [0.0; 4];
                for c in 0..4 {
                    h[c] = 0.5 * (q[k][c] + q[m][c]) - lam * (cell_flux[m][c] - cell_flux[k][c]);
                }
                h[1] += predictor_weight * dt * (sk[0] + sm[0]);
                h[2] += predictor_weight * dt * (sk[1] + sm[1]);
                let p = model.admissible(&h, stage, &grid, k)?;
                fluxes.push(model.flux_cell(&h, p, 0.5 * (sigma_at(k) + sigma_at(m)), axis));
                pis.push(h[3]);
            }
        }
        face_flux.push(fluxes);
        face_pi.push(pis);
    }

    let mut next = Vec::with_capacity(n);
    let mut src_sum = [0.0, 0.0];
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.index(i, j);
            let [_, w, _, s] = grid.neighbours(i, j);
            let mut qn = q[k];
            let mut pi_mean = 0.0;
            for axis in 0..axes {
                let back = if axis == 0 { w } else { s };
                let lam = dt / axis_spacing(&grid, axis);
                let (fp, fm) = (&face_flux[axis][k], &face_flux[axis][back]);
                for c in 0..4 {
                    qn[c] -= lam * (fp[c] - fm[c]);
                }
                pi_mean += face_pi[axis][k] + face_pi[axis][back];
            }
            if has_source {
                pi_mean /= (2 * axes) as f64;
                let src = source_at(k, pi_mean);
                qn[1] += dt * src[0];
                qn[2] += dt * src[1];
                src_sum[0] += src[0];
                src_sum[1] += src[1];
            }
            model.admissible(&qn, "full step", &grid, k)?;
            next.push(qn);
        }
    }
    let vol = grid.cell_volume();
    let integral = [dt * src_sum[0] * vol, dt * src_sum[1] * vol];
    Ok((ConservedState::from_cells(state.form, grid, &next, state.time + dt), integral))
}

/// Lax-Friedrichs step for the Euler equations:
/// `q_i ← mean(axis neighbours) - Σ_axes Δt/(2h) (F(q_{i+1}) - F(q_{i-1}))`.
pub fn lf_step(model: &Model, state: &ConservedState, dt: f64) -> Result<ConservedState> {
    if model.kind != ModelKind::Euler {
        return Err(Error::Unsupported("Lax-Friedrichs is only provided for the Euler equations".into()));
    }
    model.check_state(state)?;
    let grid = *state.grid();
    let n = grid.len();
    let q = state.to_cells();
    let mut fluxes: Vec<Vec<Cell>> = Vec::new();
    for axis in 0..grid.dim() {
        let mut f = Vec::with_capacity(n);
        for (k, c) in q.iter().enumerate() {
            let p = model.admissible(c, "step start", &grid, k)?;
            f.push(model.flux_cell(c, p, 0.0, axis));
        }
        fluxes.push(f);
    }
    let weight = 1.0 / (2 * grid.dim()) as f64;
    let mut next = Vec::with_capacity(n);
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.index(i, j);
            let nb = grid.neighbours(i, j);
            let mut qn = [0.0; 4];
            for axis in 0..grid.dim() {
                let (fwd, back) = (nb[2 * axis], nb[2 * axis + 1]);
                let lam = 0.5 * dt / axis_spacing(&grid, axis);
                for c in 0..4 {
                    qn[c] += weight * (q[fwd][c] + q[back][c]) - lam * (fluxes[axis][fwd][c] - fluxes[axis][back][c]);
                }
            }
            model.admissible(&qn, "full step", &grid, k)?;
            next.push(qn);
        }
    }
    Ok(ConservedState::from_cells(state.form, grid, &next, state.time + dt))
}

/// State and potentials at an output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: ConservedState,
    pub potentials: Potentials,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: ConservedState,
    pub potentials: Potentials,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Step-by-step driver holding the evolving state, the potential history
/// and the accumulated momentum source.
#[derive(Debug, Clone)]
pub struct Simulation {
    model: Model,
    scheme: Scheme,
    control: StepControl,
    state: ConservedState,
    potentials: Potentials,
    step: usize,
    source_total: [f64; 2],
    last_solve: Option<SolveReport>,
}

impl Simulation {
    pub fn new(model: Model, scheme: Scheme, init: ConservedState, control: StepControl) -> Result<Self> {
        control.validate()?;
        model.check_state(&init)?;
        if let Some(reg) = &model.reg {
            reg.validate()?;
        }
        if scheme == Scheme::LaxFriedrichs && model.kind != ModelKind::Euler {
            return Err(Error::Unsupported("Lax-Friedrichs is only provided for the Euler equations".into()));
        }
        let potentials = Potentials::zeros(*init.grid());
        Ok(Self { model, scheme, control, state: init, potentials, step: 0, source_total: [0.0; 2], last_solve: None })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn state(&self) -> &ConservedState {
        &self.state
    }

    pub fn potentials(&self) -> &Potentials {
        &self.potentials
    }

    pub fn control(&self) -> &StepControl {
        &self.control
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn last_solve(&self) -> Option<&SolveReport> {
        self.last_solve.as_ref()
    }

    /// `Σ_steps Δt Σ S·vol`, the momentum the TIGRE source has injected.
    pub fn accumulated_source(&self) -> [f64; 2] {
        self.source_total
    }

    pub fn is_finished(&self) -> bool {
        self.state.time >= self.control.t_end
    }

    /// Right-hand side of the elliptic system for the current state.
    pub fn elliptic_rhs(&self) -> Result<Option<EllipticRhs>> {
        let Some(reg) = &self.model.reg else { return Ok(None) };
        let u = self.state.velocity();
        Ok(Some(match self.model.kind {
            ModelKind::Tigre => elliptic::build_rhs_tigre(&u, &self.state.thermo, reg, self.model.stencils)?,
            _ => EllipticRhs::scalar(elliptic::build_rhs_igr(&u, reg)),
        }))
    }

    /// Solves for the potentials of the current state and pushes them onto
    /// the warm-start history.
    fn solve_potentials(&mut self) -> Result<Option<SolveReport>> {
        let Some(rhs) = self.elliptic_rhs()? else { return Ok(None) };
        let reg = self.model.reg.as_ref().expect("regularized model");
        let pi = (self.model.kind == ModelKind::Tigre).then_some(&self.state.thermo);
        let report = elliptic::solve_potentials(
            &self.state.rho,
            pi,
            &rhs,
            reg,
            self.model.stencils,
            &mut self.potentials,
            self.model.warm_start,
        )?;
        Ok(Some(report))
    }

    /// Takes one step. Errors are wrapped with the step index and time.
    pub fn step(&mut self) -> Result<StepRecord> {
        let (step, time) = (self.step, self.state.time);
        self.advance().map_err(|e| Error::Aborted { step: step + 1, time, source: Box::new(e) })
    }

    fn advance(&mut self) -> Result<StepRecord> {
        let dt = compute_dt(&self.model, &self.state, &self.control)?;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("non-positive time step {dt:e}")));
        }
        let report = self.solve_potentials()?;
        let (mut next, src) = match self.scheme {
            Scheme::LaxWendroff => lw_step(&self.model, &self.state, &self.potentials, dt)?,
            Scheme::LaxFriedrichs => (lf_step(&self.model, &self.state, dt)?, [0.0; 2]),
        };
        // land exactly on output times
        let stop = self.control.next_stop(self.state.time);
        if dt == stop - self.state.time {
            next.time = stop;
        }
        self.state = next;
        self.step += 1;
        self.source_total[0] += src[0];
        self.source_total[1] += src[1];
        let (sweeps, residual, converged) = match &report {
            Some(r) => (r.sweeps, r.residual, r.converged),
            None => (0, 0.0, true),
        };
        self.last_solve = report;
        let min_thermo = match self.state.form {
            StateForm::Entropy => self.state.thermo.min(),
            StateForm::Energy => self.state.pressure(&self.model.eos).min(),
        };
        Ok(StepRecord {
            step: self.step,
            time: self.state.time,
            dt,
            sweeps,
            residual,
            converged,
            min_rho: self.state.rho.min(),
            min_thermo,
            momentum_source: src,
        })
    }

    pub fn diagnostics(&self, record: Option<&StepRecord>) -> Result<DiagnosticsRecord> {
        let mut d = diagnostics::totals(&self.state, &self.model.eos)?;
        if let Some(r) = record {
            d.sweeps = Some(r.sweeps);
            d.residual = Some(r.residual);
        }
        Ok(d)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { state: self.state.clone(), potentials: self.potentials.clone() }
    }

    /// Whether the current time is one of the requested output times.
    pub fn at_snapshot_time(&self) -> bool {
        self.control.snapshot_times.iter().any(|&s| s == self.state.time)
    }

    /// Runs to `t_end`, recording diagnostics every step (with an initial
    /// row at step 0) and snapshots at the requested times.
    pub fn run(mut self) -> Result<RunOutput> {
        let mut out = RunOutput {
            state: self.state.clone(),
            potentials: self.potentials.clone(),
            diagnostics: Vec::new(),
            steps: Vec::new(),
            snapshots: Vec::new(),
        };
        if self.is_finished() {
            return Ok(out);
        }
        out.diagnostics.push(self.diagnostics(None)?);
        if self.at_snapshot_time() {
            out.snapshots.push(self.snapshot());
        }
        while !self.is_finished() {
            let rec = self.step()?;
            out.diagnostics.push(self.diagnostics(Some(&rec))?);
            out.steps.push(rec);
            if self.at_snapshot_time() {
                out.snapshots.push(self.snapshot());
            }
        }
        out.state = self.state;
        out.potentials = self.potentials;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::RegParams;
    use crate::eos::EosParams;
    use crate::grid::{ScalarField, VectorField};

    fn constant_state(form: StateForm, grid: Grid) -> ConservedState {
        let u = VectorField::new(ScalarField::constant(grid, 0.3), ScalarField::constant(grid, -0.2)).unwrap();
        ConservedState::from_pressure(
            form,
            &EosParams::default(),
            ScalarField::constant(grid, 0.8),
            &u,
            &ScalarField::constant(grid, 1.1),
        )
        .unwrap()
    }

    #[test]
    fn dt_lands_on_snapshots_and_end() {
        let g = Grid::line(100).unwrap();
        let st = constant_state(StateForm::Energy, g);
        let m = Model::euler(EosParams::default());
        let ctl = StepControl::new(0.4, 1.0).unwrap().with_snapshots(vec![0.001]);
        assert_eq!(compute_dt(&m, &st, &ctl).unwrap(), 0.001);
        let ctl = StepControl::new(0.4, 1.0).unwrap();
        let full = compute_dt(&m, &st, &ctl).unwrap();
        let ctl2 = StepControl::new(0.8, 1.0).unwrap();
        assert!((compute_dt(&m, &st, &ctl2).unwrap() - 2.0 * full).abs() < 1e-15);
    }

    #[test]
    fn rest_state_dt_is_cfl_over_sound_speed() {
        let g = Grid::square(16, 16).unwrap();
        let eos = EosParams::default();
        let st = ConservedState::from_pressure(
            StateForm::Energy,
            &eos,
            ScalarField::constant(g, 1.0),
            &VectorField::zeros(g),
            &ScalarField::constant(g, 1.0),
        )
        .unwrap();
        let dt = compute_dt(&Model::euler(eos), &st, &StepControl::new(0.5, 10.0).unwrap()).unwrap();
        assert!((dt - 0.5 / 16.0 / 1.4f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_state_is_fixed_point_of_lw_and_lf() {
        for g in [Grid::line(12).unwrap(), Grid::square(8, 6).unwrap()] {
            let eos = EosParams::default();
            let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap();
            for model in [Model::euler(eos), Model::igr(eos, reg), Model::tigre(eos, reg)] {
                let st = constant_state(model.form(), g);
                let (next, src) = lw_step(&model, &st, &Potentials::zeros(g), 1e-3).unwrap();
                assert_eq!(next.rho, st.rho);
                assert_eq!(next.momentum, st.momentum);
                assert_eq!(next.thermo, st.thermo);
                assert_eq!(src, [0.0, 0.0]);
            }
            let st = constant_state(StateForm::Energy, g);
            let next = lf_step(&Model::euler(eos), &st, 1e-3).unwrap();
            assert_eq!(next.rho, st.rho);
            assert_eq!(next.thermo, st.thermo);
        }
    }

    #[test]
    fn lf_rejects_regularized_models() {
        let g = Grid::line(8).unwrap();
        let eos = EosParams::default();
        let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap();
        let st = constant_state(StateForm::Energy, g);
        assert!(lf_step(&Model::igr(eos, reg), &st, 1e-3).is_err());
        assert!(Simulation::new(Model::igr(eos, reg), Scheme::LaxFriedrichs, st, StepControl::new(0.4, 1.0).unwrap())
            .is_err());
    }

    #[test]
    fn zero_end_time_returns_initial_state() {
        let g = Grid::line(8).unwrap();
        let st = constant_state(StateForm::Energy, g);
        let sim =
            Simulation::new(Model::euler(EosParams::default()), Scheme::LaxWendroff, st.clone(), StepControl::new(0.4, 0.0).unwrap())
                .unwrap();
        let out = sim.run().unwrap();
        assert_eq!(out.state, st);
        assert!(out.diagnostics.is_empty());
        assert!(out.steps.is_empty());
    }

    #[test]
    fn oversized_step_reports_positivity_failure() {
        let g = Grid::line(64).unwrap();
        let eos = EosParams::default();
        let st = crate::experiments::init_sod(g, &eos, StateForm::Energy).unwrap();
        let model = Model::euler(eos);
        let err = lw_step(&model, &st, &Potentials::zeros(g), 1.0).unwrap_err();
        assert!(matches!(err, Error::Positivity { .. } | Error::NonFinite { .. }), "{err}");
        let err = lf_step(&model, &st, 1.0).unwrap_err();
        assert!(matches!(err, Error::Positivity { .. } | Error::NonFinite { .. }), "{err}");
    }

}
