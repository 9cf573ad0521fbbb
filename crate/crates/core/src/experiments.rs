//! Initial conditions for the benchmark problems.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::model::{ConservedState, StateForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Sod,
    Acoustic,
    Kh,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Sod => "sod",
            Preset::Acoustic => "acoustic",
            Preset::Kh => "kh",
        }
    }

    /// Default `(dim, nx, ny)`.
    pub fn default_grid(&self) -> (usize, usize, usize) {
        match self {
            Preset::Sod => (1, 500, 1),
            Preset::Acoustic | Preset::Kh => (2, 256, 256),
        }
    }

    pub fn default_t_end(&self) -> f64 {
        match self {
            Preset::Sod => 0.5,
            Preset::Acoustic => 1.0,
            Preset::Kh => 4.0,
        }
    }

    /// Snapshot times, `t = 0` and the end time included.
    pub fn default_snapshots(&self, t_end: f64) -> Vec<f64> {
        match self {
            Preset::Sod => {
                let mut v: Vec<f64> = [0.0, 0.125, 0.25, 0.5].into_iter().filter(|&t| t < t_end).collect();
                v.push(t_end);
                v
            }
            _ => vec![0.0, t_end],
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sod" => Ok(Preset::Sod),
            "acoustic" => Ok(Preset::Acoustic),
            "kh" => Ok(Preset::Kh),
            other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
        }
    }
}

fn require_dim(grid: &Grid, dim: usize, what: &str) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::Unsupported(format!("{what} needs a {dim}D grid, got {}D", grid.dim())));
    }
    Ok(())
}

/// Periodic smoothed Sod tube: `ψ(x) = ½(tanh((x - 0.25)/ε) - tanh((x - 0.75)/ε))`
/// blends the left state `(ρ, p) = (1, 1)` into the right state
/// `(0.125, 0.1)`, with `ε = 0.03`.
pub fn init_sod(grid: Grid, eos: &EosParams, form: StateForm) -> Result<ConservedState> {
    require_dim(&grid, 1, "the Sod tube")?;
    let (x_l, x_r, eps) = (0.25, 0.75, 0.03);
    let psi = |x: f64| 0.5 * (((x - x_l) / eps).tanh() - ((x - x_r) / eps).tanh());
    let rho = ScalarField::from_fn(grid, |x, _| 1.0 - (1.0 - 0.125) * psi(x));
    let p = ScalarField::from_fn(grid, |x, _| 1.0 - (1.0 - 0.1) * psi(x));
    ConservedState::from_pressure(form, eos, rho, &VectorField::zeros(grid), &p)
}

/// Compact bump `exp(-1/(1 - r²))` for `r² < 1`, zero outside.
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Radius parameter of the isotropic acoustic bump.
pub const ACOUSTIC_EPS: f64 = 0.01;

/// Two compactly supported bumps at rest: an isotropic one of radius `eps`
/// at `(0.3, 0.4)` and one with angular radius `0.1(1 + 0.18 cos 4θ)` at
/// `(0.7, 0.6)`. `ρ = 1 + 0.1b`, `π = 0.2 + 0.1b`.
pub fn init_acoustic(grid: Grid, eos: &EosParams, form: StateForm, eps: f64) -> Result<ConservedState> {
    require_dim(&grid, 2, "the acoustic test")?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("bump radius must be positive, got {eps}")));
    }
    let b = |x: f64, y: f64| {
        let b1 = bump(((x - 0.3).powi(2) + (y - 0.4).powi(2)) / (eps * eps));
        let theta = (y - 0.6).atan2(x - 0.7);
        let e2 = 0.1 * (1.0 + 0.18 * (4.0 * theta).cos());
        let b2 = bump(((x - 0.7).powi(2) + (y - 0.6).powi(2)) / (e2 * e2));
        b1 + b2
    };
    let rho = ScalarField::from_fn(grid, |x, y| 1.0 + 0.1 * b(x, y));
    let pi = ScalarField::from_fn(grid, |x, y| 0.2 + 0.1 * b(x, y));
    ConservedState::from_entropy_density(form, eos, rho, &VectorField::zeros(grid), pi)
}

/// Kelvin-Helmholtz shear layer centred on `y = 0.5`:
/// `u = (¼tanh((δy + w)/h) - ¼tanh((δy - w)/h), A sin(2πx) exp(-δy²/h))` with
/// `δy = (y - 0.5 + 0.5) mod 1 - 0.5`, `w = 0.1`, `h = 0.01`, `A = 0.01`,
/// on `ρ = 1`, `π = 0.2`.
pub fn init_kh(grid: Grid, eos: &EosParams, form: StateForm) -> Result<ConservedState> {
    require_dim(&grid, 2, "the shear layer")?;
    let (w, h, a, y0) = (0.1, 0.01, 0.01, 0.5);
    let dy = |y: f64| (y - y0 + 0.5).rem_euclid(1.0) - 0.5;
    let ux = ScalarField::from_fn(grid, |_, y| 0.25 * ((dy(y) + w) / h).tanh() - 0.25 * ((dy(y) - w) / h).tanh());
    let uy = ScalarField::from_fn(grid, |x, y| a * (2.0 * PI * x).sin() * (-dy(y) * dy(y) / h).exp());
    let u = VectorField::new(ux, uy)?;
    ConservedState::from_entropy_density(
        form,
        eos,
        ScalarField::constant(grid, 1.0),
        &u,
        ScalarField::constant(grid, 0.2),
    )
}

/// Uniform state at rest.
pub fn init_uniform(grid: Grid, eos: &EosParams, form: StateForm, rho: f64, p: f64) -> Result<ConservedState> {
    ConservedState::from_pressure(
        form,
        eos,
        ScalarField::constant(grid, rho),
        &VectorField::zeros(grid),
        &ScalarField::constant(grid, p),
    )
}

/// Isentropic standing plane wave along `x`: `p = p₀(1 + a cos 2πkx)` with
/// `ρ = ρ₀(p/p₀)^{1/γ}` so the specific entropy is uniform, at rest.
pub fn init_plane_wave(
    grid: Grid,
    eos: &EosParams,
    form: StateForm,
    rho0: f64,
    p0: f64,
    amplitude: f64,
    k: u32,
) -> Result<ConservedState> {
    let shape = |x: f64| 1.0 + amplitude * (2.0 * PI * k as f64 * x).cos();
    let p = ScalarField::from_fn(grid, |x, _| p0 * shape(x));
    let rho = ScalarField::from_fn(grid, |x, _| rho0 * shape(x).powf(1.0 / eos.gamma()));
    ConservedState::from_pressure(form, eos, rho, &VectorField::zeros(grid), &p)
}

/// Builds the preset's initial state. `acoustic_eps` overrides the radius of
/// the isotropic acoustic bump.
pub fn initial_state(
    preset: Preset,
    grid: Grid,
    eos: &EosParams,
    form: StateForm,
    acoustic_eps: Option<f64>,
) -> Result<ConservedState> {
    match preset {
        Preset::Sod => init_sod(grid, eos, form),
        Preset::Acoustic => init_acoustic(grid, eos, form, acoustic_eps.unwrap_or(ACOUSTIC_EPS)),
        Preset::Kh => init_kh(grid, eos, form),
    }
}
