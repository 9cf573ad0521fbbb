//! Conserved-variable layouts and the flux/source closures of the three models.
//!
//! | model | state            | potentials | momentum source |
//! |-------|------------------|------------|-----------------|
//! | Euler | `(ρ, ρu, E)`     | none       | 0               |
//! | IGR   | `(ρ, ρu, E)`     | `Σ`        | 0               |
//! | TIGRE | `(ρ, ρu, π)`     | `Σ, χ`     | `-π∇χ`          |

use crate::elliptic::{Potentials, RegParams, WarmStart};
use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::operators::{self, StencilMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Euler,
    Igr,
    Tigre,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Euler => "euler",
            ModelKind::Igr => "igr",
            ModelKind::Tigre => "tigre",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(ModelKind::Euler),
            "igr" => Ok(ModelKind::Igr),
            "tigre" => Ok(ModelKind::Tigre),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Third conserved variable: total energy density or entropy density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateForm {
    Energy,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub eos: EosParams,
    /// Present for IGR and TIGRE.
    pub reg: Option<RegParams>,
    pub stencils: StencilMode,
    pub warm_start: WarmStart,
}

impl Model {
    pub fn euler(eos: EosParams) -> Self {
        Self { kind: ModelKind::Euler, eos, reg: None, stencils: StencilMode::default(), warm_start: WarmStart::default() }
    }

    pub fn igr(eos: EosParams, reg: RegParams) -> Self {
        Self { kind: ModelKind::Igr, reg: Some(reg), ..Self::euler(eos) }
    }

    pub fn tigre(eos: EosParams, reg: RegParams) -> Self {
        Self { kind: ModelKind::Tigre, reg: Some(reg), ..Self::euler(eos) }
    }

    pub fn new(kind: ModelKind, eos: EosParams, reg: RegParams) -> Self {
        match kind {
            ModelKind::Euler => Self::euler(eos),
            ModelKind::Igr => Self::igr(eos, reg),
            ModelKind::Tigre => Self::tigre(eos, reg),
        }
    }

    pub fn with_stencils(mut self, stencils: StencilMode) -> Self {
        self.stencils = stencils;
        self
    }

    pub fn with_warm_start(mut self, warm: WarmStart) -> Self {
        self.warm_start = warm;
        self
    }

    pub fn form(&self) -> StateForm {
        match self.kind {
            ModelKind::Euler | ModelKind::Igr => StateForm::Energy,
            ModelKind::Tigre => StateForm::Entropy,
        }
    }

    pub fn check_state(&self, state: &ConservedState) -> Result<()> {
        if state.form != self.form() {
            return Err(Error::InvalidParameter(format!(
                "{} needs a {:?}-form state, got {:?}",
                self.kind.name(),
                self.form(),
                state.form
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn pressure_cell(&self, q: &Cell) -> f64 {
        match self.form() {
            StateForm::Energy => self.eos.p_energy(q[0], [q[1], q[2]], q[3]),
            StateForm::Entropy => self.eos.p_rho_pi(q[0], q[3]),
        }
    }

    /// Flux of one cell state along `axis` (0 = x, 1 = y) with entropic
    /// pressure `sigma` and precomputed mechanical pressure `p`.
    #[inline]
    pub(crate) fn flux_cell(&self, q: &Cell, p: f64, sigma: f64, axis: usize) -> Cell {
        let vel = q[1 + axis] / q[0];
        let total_p = p + sigma;
        let third = match self.form() {
            StateForm::Energy => (q[3] + total_p) * vel,
            StateForm::Entropy => q[3] * vel,
        };
        let mut f = [q[1 + axis], q[1] * vel, q[2] * vel, third];
        f[1 + axis] += total_p;
        f
    }

    /// Checks one cell state, returning its pressure.
    #[inline]
    pub(crate) fn admissible(&self, q: &Cell, stage: &'static str, grid: &Grid, k: usize) -> Result<f64> {
        let at = |quantity, value: f64| {
            let (i, j) = grid.coords(k);
            if value.is_nan() {
                Error::NonFinite { quantity, stage, i, j }
            } else {
                Error::Positivity { quantity, stage, i, j, value }
            }
        };
        if !(q[0] > 0.0 && q[0].is_finite()) {
            return Err(at("density", q[0]));
        }
        if !(q[1].is_finite() && q[2].is_finite()) {
            let (i, j) = grid.coords(k);
            return Err(Error::NonFinite { quantity: "momentum", stage, i, j });
        }
        if self.form() == StateForm::Entropy && !(q[3] > 0.0 && q[3].is_finite()) {
            return Err(at("entropy density", q[3]));
        }
        let p = self.pressure_cell(q);
        if !(p > 0.0 && p.is_finite()) {
            return Err(at("pressure", p));
        }
        Ok(p)
    }
}

/// `[ρ, m_x, m_y, E or π]` at one cell.
pub(crate) type Cell = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct ConservedState {
    pub form: StateForm,
    pub rho: ScalarField,
    pub momentum: VectorField,
    /// `E` in energy form, `π` in entropy form.
    pub thermo: ScalarField,
    pub time: f64,
}

impl ConservedState {
    /// Builds a state from density, velocity and pressure.
    pub fn from_pressure(
        form: StateForm,
        eos: &EosParams,
        rho: ScalarField,
        u: &VectorField,
        p: &ScalarField,
    ) -> Result<Self> {
        rho.check_grid(p)?;
        rho.check_grid(u.x())?;
        rho.require_positive("density")?;
        p.require_positive("pressure")?;
        let momentum = VectorField::new(&rho * u.x(), &rho * u.y())?;
        let n = rho.values().len();
        let mut thermo = Vec::with_capacity(n);
        for k in 0..n {
            let r = rho.values()[k];
            let pk = p.values()[k];
            thermo.push(match form {
                StateForm::Energy => {
                    eos.energy_from_pressure(r, [momentum.x().values()[k], momentum.y().values()[k]], pk)?
                }
                StateForm::Entropy => r * eos.entropy_from_pressure(r, pk)?,
            });
        }
        let thermo = ScalarField::from_vec(*rho.grid(), thermo)?;
        Ok(Self { form, rho, momentum, thermo, time: 0.0 })
    }

    /// Builds a state from density, velocity and entropy density `π = ρs`.
    pub fn from_entropy_density(
        form: StateForm,
        eos: &EosParams,
        rho: ScalarField,
        u: &VectorField,
        pi: ScalarField,
    ) -> Result<Self> {
        rho.check_grid(&pi)?;
        rho.require_positive("density")?;
        pi.require_positive("entropy density")?;
        match form {
            StateForm::Entropy => {
                let momentum = VectorField::new(&rho * u.x(), &rho * u.y())?;
                Ok(Self { form, rho, momentum, thermo: pi, time: 0.0 })
            }
            StateForm::Energy => {
                let p = rho.zip_map(&pi, |r, q| eos.p_rho_pi(r, q))?;
                Self::from_pressure(form, eos, rho, u, &p)
            }
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn velocity(&self) -> VectorField {
        VectorField::new(
            self.momentum.x().zip_map(&self.rho, |m, r| m / r).expect("same grid"),
            self.momentum.y().zip_map(&self.rho, |m, r| m / r).expect("same grid"),
        )
        .expect("same grid")
    }

    pub fn pressure(&self, eos: &EosParams) -> ScalarField {
        let n = self.rho.values().len();
        let r = self.rho.values();
        let (mx, my) = (self.momentum.x().values(), self.momentum.y().values());
        let t = self.thermo.values();
        let vals = (0..n)
            .map(|k| match self.form {
                StateForm::Energy => eos.p_energy(r[k], [mx[k], my[k]], t[k]),
                StateForm::Entropy => eos.p_rho_pi(r[k], t[k]),
            })
            .collect();
        ScalarField::from_vec(*self.grid(), vals).expect("same grid")
    }

    /// Specific entropy `s = π/ρ` (entropy form only).
    pub fn specific_entropy(&self) -> Result<ScalarField> {
        match self.form {
            StateForm::Entropy => self.thermo.zip_map(&self.rho, |p, r| p / r),
            StateForm::Energy => Err(Error::Unsupported("specific entropy is carried only in entropy form".into())),
        }
    }

    /// `π` for either form; energy-form states derive it through the EOS.
    pub fn entropy_density(&self, eos: &EosParams) -> Result<ScalarField> {
        match self.form {
            StateForm::Entropy => Ok(self.thermo.clone()),
            StateForm::Energy => {
                let p = self.pressure(eos);
                let vals = self
                    .rho
                    .values()
                    .iter()
                    .zip(p.values())
                    .map(|(&r, &p)| eos.entropy_from_pressure(r, p).map(|s| r * s))
                    .collect::<Result<Vec<_>>>()?;
                ScalarField::from_vec(*self.grid(), vals)
            }
        }
    }

    /// Total energy density `½ρ|u|² + p/(γ-1)`.
    pub fn total_energy(&self, eos: &EosParams) -> ScalarField {
        match self.form {
            StateForm::Energy => self.thermo.clone(),
            StateForm::Entropy => {
                let p = self.pressure(eos);
                let r = self.rho.values();
                let (mx, my) = (self.momentum.x().values(), self.momentum.y().values());
                let vals = (0..r.len())
                    .map(|k| 0.5 * (mx[k] * mx[k] + my[k] * my[k]) / r[k] + p.values()[k] / (eos.gamma() - 1.0))
                    .collect();
                ScalarField::from_vec(*self.grid(), vals).expect("same grid")
            }
        }
    }

    pub(crate) fn to_cells(&self) -> Vec<Cell> {
        let (r, t) = (self.rho.values(), self.thermo.values());
        let (mx, my) = (self.momentum.x().values(), self.momentum.y().values());
        (0..r.len()).map(|k| [r[k], mx[k], my[k], t[k]]).collect()
    }

    pub(crate) fn from_cells(form: StateForm, grid: Grid, cells: &[Cell], time: f64) -> Self {
        let col = |c: usize| ScalarField::from_vec(grid, cells.iter().map(|q| q[c]).collect()).expect("length");
        Self {
            form,
            rho: col(0),
            momentum: VectorField::new(col(1), col(2)).expect("same grid"),
            thermo: col(3),
            time,
        }
    }
}

fn check_potentials(state: &ConservedState, potentials: &Potentials) -> Result<()> {
    if potentials.grid() != state.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Flux fields `[mass, momentum x, momentum y, energy or entropy]` along
/// `axis` (0 = x, 1 = y). Euler ignores the potentials.
pub fn flux(model: &Model, state: &ConservedState, potentials: &Potentials, axis: usize) -> Result<[ScalarField; 4]> {
    model.check_state(state)?;
    check_potentials(state, potentials)?;
    if axis > 1 {
        return Err(Error::InvalidParameter(format!("axis {axis}")));
    }
    let grid = *state.grid();
    let cells = state.to_cells();
    let sig = potentials.sigma.values();
    let mut out: [Vec<f64>; 4] = Default::default();
    for (k, q) in cells.iter().enumerate() {
        let p = model.admissible(q, "flux evaluation", &grid, k)?;
        let s = if model.kind == ModelKind::Euler { 0.0 } else { sig[k] };
        let f = model.flux_cell(q, p, s, axis);
        for c in 0..4 {
            out[c].push(f[c]);
        }
    }
    Ok(out.map(|v| ScalarField::from_vec(grid, v).expect("length")))
}

/// Source fields; only TIGRE has one, `(0, -π∇χ, 0)`.
pub fn source(model: &Model, state: &ConservedState, potentials: &Potentials) -> Result<[ScalarField; 4]> {
    model.check_state(state)?;
    check_potentials(state, potentials)?;
    let grid = *state.grid();
    let zero = ScalarField::zeros(grid);
    if model.kind != ModelKind::Tigre {
        return Ok([zero.clone(), zero.clone(), zero.clone(), zero]);
    }
    let gx = operators::ddx(&potentials.chi);
    let gy = operators::ddy(&potentials.chi);
    let sx = state.thermo.zip_map(&gx, |p, g| -p * g)?;
    let sy = state.thermo.zip_map(&gy, |p, g| -p * g)?;
    Ok([zero.clone(), sx, sy, zero])
}

/// `max(|u| + c)` over the grid.
pub fn max_signal_speed(model: &Model, state: &ConservedState) -> Result<f64> {
    model.check_state(state)?;
    let grid = *state.grid();
    let mut best: f64 = 0.0;
    for (k, q) in state.to_cells().iter().enumerate() {
        let p = model.admissible(q, "signal speed", &grid, k)?;
        let speed = q[1].hypot(q[2]) / q[0] + model.eos.c(q[0], p);
        best = best.max(speed);
    }
    Ok(best)
}
