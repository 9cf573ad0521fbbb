//! The per-step elliptic problems for the regularization potentials.
//!
//! IGR solves the scalar screened equation
//!
//! ```text
//! ρ⁻¹Σ - α∇·(ρ⁻¹∇Σ) = f₁
//! ```
//!
//! and TIGRE the coupled system
//!
//! ```text
//! ρ⁻¹Σ - α∇·(ρ⁻¹∇Σ) - α∇·(πρ⁻¹∇χ)       = f₁
//! χ    - βπ⁻¹[∇·(πρ⁻¹∇Σ) + ∇·(π²ρ⁻¹∇χ)] = f₂
//! ```
//!
//! Both are discretized with the face-averaged conservative stencil of
//! [`operators::weighted_div`] and solved by red-black block Gauss-Seidel:
//! red cells have `i + j` even, every sweep updates all red cells and then
//! all black cells, and each cell update solves its own 2×2 diagonal block by
//! Cramer's rule.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::operators::{self, StencilMode};

/// Determinants below this magnitude make a cell block singular.
pub const SINGULAR_DET: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegParams {
    pub alpha: f64,
    pub beta: f64,
    /// Target for `‖A x - f‖₂ / max(‖f‖₂, residual_floor)`.
    pub tol: f64,
    pub max_sweeps: usize,
    pub residual_floor: f64,
    /// Turn a sweep-cap exit into an error instead of a flagged report.
    pub strict: bool,
}

impl RegParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let reg = Self { alpha, beta, tol: 1e-10, max_sweeps: 200, residual_floor: 1e-14, strict: false };
        reg.validate()?;
        Ok(reg)
    }

    /// `α = a·Δx²`, `β = b·Δx²` with `Δx` the finest spacing of `grid`.
    pub fn scaled(grid: &Grid, alpha_coef: f64, beta_coef: f64) -> Result<Self> {
        let h2 = grid.min_spacing().powi(2);
        Self::new(alpha_coef * h2, beta_coef * h2)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1".into());
        }
        if !(self.residual_floor > 0.0) {
            return bad(format!("residual floor must be positive, got {}", self.residual_floor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticRhs {
    pub f1: ScalarField,
    pub f2: ScalarField,
}

impl EllipticRhs {
    /// Right-hand side of the scalar (IGR) problem; `f2` is zero.
    pub fn scalar(f1: ScalarField) -> Self {
        let f2 = ScalarField::zeros(*f1.grid());
        Self { f1, f2 }
    }
}

/// `α((div u)² + tr((∇u)²))`.
pub fn build_rhs_igr(u: &VectorField, reg: &RegParams) -> ScalarField {
    let d = operators::div_sq(u);
    let t = operators::tr_grad_u_sq(u);
    d.zip_map(&t, |a, b| reg.alpha * (a + b)).expect("same grid")
}

/// `f₁` as for IGR and `f₂ = β(div_π(u)² - tr((∇u)²) + ∇²log π[u,u])`.
pub fn build_rhs_tigre(u: &VectorField, pi: &ScalarField, reg: &RegParams, mode: StencilMode) -> Result<EllipticRhs> {
    let f1 = build_rhs_igr(u, reg);
    let dpi = operators::div_pi(u, pi, mode)?;
    let tr = operators::tr_grad_u_sq(u);
    let hess = operators::hessian_log_pi_uu(pi, u, mode)?;
    let vals = dpi
        .values()
        .iter()
        .zip(tr.values())
        .zip(hess.values())
        .map(|((&d, &t), &h)| reg.beta * (d * d - t + h))
        .collect();
    Ok(EllipticRhs { f1, f2: ScalarField::from_vec(*pi.grid(), vals)? })
}

/// TIGRE operator applied to `(Σ, χ)`, assembled from [`operators::weighted_div`].
///
/// In `Verbatim` mode the second row is `χ - β[∇·(g₁₂∇(Σ/π)) + ∇·(g₂₂∇(χ/π))]`,
/// i.e. `π⁻¹` multiplies the operand rather than the row.
pub fn apply_tigre_operator(
    sigma: &ScalarField,
    chi: &ScalarField,
    rho: &ScalarField,
    pi: &ScalarField,
    reg: &RegParams,
    mode: StencilMode,
) -> Result<(ScalarField, ScalarField)> {
    rho.require_positive("density")?;
    pi.require_positive("entropy density")?;
    let g11 = rho.map(f64::recip);
    let g12 = pi.zip_map(rho, |p, r| p / r)?;
    let g22 = pi.zip_map(rho, |p, r| p * p / r)?;

    let l11s = operators::weighted_div(&g11, sigma)?;
    let l12c = operators::weighted_div(&g12, chi)?;
    let row1 = ScalarField::from_vec(
        *rho.grid(),
        (0..rho.values().len())
            .map(|k| {
                g11.values()[k] * sigma.values()[k] - reg.alpha * l11s.values()[k] - reg.alpha * l12c.values()[k]
            })
            .collect(),
    )?;

    let row2 = match mode {
        StencilMode::Consistent => {
            let a = operators::weighted_div(&g12, sigma)?;
            let b = operators::weighted_div(&g22, chi)?;
            ScalarField::from_vec(
                *rho.grid(),
                (0..rho.values().len())
                    .map(|k| chi.values()[k] - reg.beta / pi.values()[k] * (a.values()[k] + b.values()[k]))
                    .collect(),
            )?
        }
        StencilMode::Verbatim => {
            let a = operators::weighted_div(&g12, &sigma.zip_map(pi, |s, p| s / p)?)?;
            let b = operators::weighted_div(&g22, &chi.zip_map(pi, |c, p| c / p)?)?;
            ScalarField::from_vec(
                *rho.grid(),
                (0..rho.values().len())
                    .map(|k| chi.values()[k] - reg.beta * (a.values()[k] + b.values()[k]))
                    .collect(),
            )?
        }
    };
    Ok((row1, row2))
}

/// IGR operator `ρ⁻¹Σ - α∇·(ρ⁻¹∇Σ)`.
pub fn apply_igr_operator(sigma: &ScalarField, rho: &ScalarField, reg: &RegParams) -> Result<ScalarField> {
    rho.require_positive("density")?;
    let g11 = rho.map(f64::recip);
    let l = operators::weighted_div(&g11, sigma)?;
    g11.zip_map(sigma, |g, s| g * s)?.zip_map(&l, |a, b| a - reg.alpha * b)
}

/// How the first Gauss-Seidel iterate is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WarmStart {
    /// `2Σⁿ - Σⁿ⁻¹` once two levels are known.
    #[default]
    Extrapolate,
    /// `Σⁿ`.
    Previous,
    /// Zero.
    Cold,
}

/// Current and previous potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub sigma: ScalarField,
    pub chi: ScalarField,
    pub prev_sigma: ScalarField,
    pub prev_chi: ScalarField,
    levels: u8,
}

impl Potentials {
    pub fn zeros(grid: Grid) -> Self {
        let z = ScalarField::zeros(grid);
        Self { sigma: z.clone(), chi: z.clone(), prev_sigma: z.clone(), prev_chi: z, levels: 0 }
    }

    pub fn grid(&self) -> &Grid {
        self.sigma.grid()
    }

    /// Number of solved levels held (0, 1 or 2).
    pub fn levels(&self) -> u8 {
        self.levels
    }

    pub fn initial_guess(&self, warm: WarmStart) -> (ScalarField, ScalarField) {
        match (warm, self.levels) {
            (WarmStart::Cold, _) | (_, 0) => (ScalarField::zeros(*self.grid()), ScalarField::zeros(*self.grid())),
            (WarmStart::Previous, _) | (WarmStart::Extrapolate, 1) => (self.sigma.clone(), self.chi.clone()),
            (WarmStart::Extrapolate, _) => (
                self.sigma.zip_map(&self.prev_sigma, |a, b| 2.0 * a - b).expect("same grid"),
                self.chi.zip_map(&self.prev_chi, |a, b| 2.0 * a - b).expect("same grid"),
            ),
        }
    }

    pub fn push(&mut self, sigma: ScalarField, chi: ScalarField) {
        self.prev_sigma = std::mem::replace(&mut self.sigma, sigma);
        self.prev_chi = std::mem::replace(&mut self.chi, chi);
        self.levels = (self.levels + 1).min(2);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub sweeps: usize,
    /// Final relative residual.
    pub residual: f64,
    pub converged: bool,
    /// Relative residual after each sweep.
    pub history: Vec<f64>,
}

/// Cell-wise coefficients of the discrete system
///
/// ```text
/// row₁ = a₁₁Σ_k + a₁₂χ_k - Σ_faces (c₁₁Σ_nb + c₁₂χ_nb)
/// row₂ = a₂₁Σ_k + a₂₂χ_k - Σ_faces w (c₂₁Σ_nb + c₂₂χ_nb)
/// ```
///
/// with `w = π_k⁻¹` (consistent) or `π_nb⁻¹` (verbatim). Face couplings are
/// symmetric, so they are stored once per face.
pub struct BlockSystem {
    grid: Grid,
    coupled: bool,
    verbatim: bool,
    /// `[a11, a12, a21, a22]` per cell.
    diag: Vec<[f64; 4]>,
    /// `[c11, c12, c21, c22]` on the east face of each cell.
    east: Vec<[f64; 4]>,
    /// Same for the north face; empty on 1D grids.
    north: Vec<[f64; 4]>,
    /// `π⁻¹` per cell; empty unless coupled.
    inv_pi: Vec<f64>,
}

impl BlockSystem {
    /// Assembles the TIGRE system when `pi` is given and `β > 0`; otherwise the
    /// scalar `Σ` system (χ pinned to zero).
    pub fn assemble(rho: &ScalarField, pi: Option<&ScalarField>, reg: &RegParams, mode: StencilMode) -> Result<Self> {
        reg.validate()?;
        rho.require_positive("density")?;
        if let Some(pi) = pi {
            rho.check_grid(pi)?;
            pi.require_positive("entropy density")?;
        }
        let grid = *rho.grid();
        let n = grid.len();
        let coupled = pi.is_some() && reg.beta > 0.0;
        let r = rho.values();
        let p = pi.map(|f| f.values());

        let face = |k: usize, m: usize, h: f64| -> [f64; 4] {
            let (wa, wb) = (reg.alpha / (h * h), reg.beta / (h * h));
            let g11 = 0.5 * (1.0 / r[k] + 1.0 / r[m]);
            match p {
                Some(p) if coupled => {
                    let g12 = 0.5 * (p[k] / r[k] + p[m] / r[m]);
                    let g22 = 0.5 * (p[k] * p[k] / r[k] + p[m] * p[m] / r[m]);
                    [wa * g11, wa * g12, wb * g12, wb * g22]
                }
                _ => [wa * g11, 0.0, 0.0, 0.0],
            }
        };
        let mut east = Vec::with_capacity(n);
        let mut north = Vec::with_capacity(if grid.is_2d() { n } else { 0 });
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let k = grid.index(i, j);
                let [e, _, nn, _] = grid.neighbours(i, j);
                east.push(face(k, e, grid.dx()));
                if grid.is_2d() {
                    north.push(face(k, nn, grid.dy()));
                }
            }
        }
        let inv_pi: Vec<f64> = match p {
            Some(p) if coupled => p.iter().map(|v| 1.0 / v).collect(),
            _ => Vec::new(),
        };

        let mut diag = Vec::with_capacity(n);
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let k = grid.index(i, j);
                let [_, w, _, s] = grid.neighbours(i, j);
                let mut sum = [0.0; 4];
                let faces: &[&[f64; 4]] =
                    if grid.is_2d() { &[&east[k], &east[w], &north[k], &north[s]] } else { &[&east[k], &east[w]] };
                for c in faces {
                    for q in 0..4 {
                        sum[q] += c[q];
                    }
                }
                let d = if coupled {
                    [1.0 / r[k] + sum[0], sum[1], inv_pi[k] * sum[2], 1.0 + inv_pi[k] * sum[3]]
                } else {
                    [1.0 / r[k] + sum[0], 0.0, 0.0, 1.0]
                };
                diag.push(d);
            }
        }
        Ok(Self { grid, coupled, verbatim: mode == StencilMode::Verbatim, diag, east, north, inv_pi })
    }

    pub fn is_coupled(&self) -> bool {
        self.coupled
    }

    /// `(A x)` for both rows.
    pub fn apply(&self, sigma: &[f64], chi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                let k = self.grid.index(i, j);
                let (a, b, _) = self.gather(i, j, sigma, chi);
                let d = &self.diag[k];
                r1[k] = d[0] * sigma[k] + d[1] * chi[k] - a;
                r2[k] = d[2] * sigma[k] + d[3] * chi[k] - b;
            }
        }
        (r1, r2)
    }

    /// Neighbour sums `(Σ_f c₁·x_nb, Σ_f w c₂·x_nb)` of cell `(i, j)` and
    /// its flat index.
    #[inline(always)]
    fn gather(&self, i: usize, j: usize, sigma: &[f64], chi: &[f64]) -> (f64, f64, usize) {
        let nx = self.grid.nx();
        let k = j * nx + i;
        let e = if i + 1 == nx { k + 1 - nx } else { k + 1 };
        let w = if i == 0 { k + nx - 1 } else { k - 1 };
        if !self.coupled {
            let (ce, cw) = (&self.east[k], &self.east[w]);
            let mut b1 = ce[0] * sigma[e] + cw[0] * sigma[w];
            if !self.north.is_empty() {
                let (nn, s) = self.ns(j, k);
                b1 += self.north[k][0] * sigma[nn] + self.north[s][0] * sigma[s];
            }
            return (b1, 0.0, k);
        }
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        let mut add = |c: &[f64; 4], m: usize| {
            let (s, x) = (sigma[m], chi[m]);
            b1 += c[0] * s + c[1] * x;
            let t = c[2] * s + c[3] * x;
            b2 += if self.verbatim { self.inv_pi[m] * t } else { t };
        };
        add(&self.east[k], e);
        add(&self.east[w], w);
        if !self.north.is_empty() {
            let (nn, s) = self.ns(j, k);
            add(&self.north[k], nn);
            add(&self.north[s], s);
        }
        if !self.verbatim {
            b2 *= self.inv_pi[k];
        }
        (b1, b2, k)
    }

    #[inline(always)]
    fn ns(&self, j: usize, k: usize) -> (usize, usize) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let n = if j + 1 == ny { k + nx - nx * ny } else { k + nx };
        let s = if j == 0 { k + nx * ny - nx } else { k - nx };
        (n, s)
    }

    /// Sum of squared residuals over the cells of one colour.
    fn residual_sq(&self, colour: usize, sigma: &[f64], chi: &[f64], f1: &[f64], f2: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.grid.ny() {
            for i in ((j + colour) % 2..self.grid.nx()).step_by(2) {
                let (a, b, k) = self.gather(i, j, sigma, chi);
                let d = &self.diag[k];
                let e1 = f1[k] + a - d[0] * sigma[k] - d[1] * chi[k];
                let e2 = f2[k] + b - d[2] * sigma[k] - d[3] * chi[k];
                acc += e1 * e1 + e2 * e2;
            }
        }
        acc
    }

    /// `‖f - A x‖₂` right after a full sweep. When the colouring is
    /// consistent across the periodic seams the black rows are already
    /// satisfied, so only red rows are evaluated.
    fn residual_norm(&self, sigma: &[f64], chi: &[f64], f1: &[f64], f2: &[f64]) -> f64 {
        let even = self.grid.nx() % 2 == 0 && (self.grid.ny() == 1 || self.grid.ny() % 2 == 0);
        let mut acc = self.residual_sq(0, sigma, chi, f1, f2);
        if !even {
            acc += self.residual_sq(1, sigma, chi, f1, f2);
        }
        acc.sqrt()
    }

    /// Updates every cell of one colour in place (`colour` 0 = red).
    fn sweep_colour(&self, colour: usize, sigma: &mut [f64], chi: &mut [f64], f1: &[f64], f2: &[f64]) -> Result<()> {
        for j in 0..self.grid.ny() {
            for i in ((j + colour) % 2..self.grid.nx()).step_by(2) {
                let (a, b, k) = self.gather(i, j, sigma, chi);
                let d = &self.diag[k];
                let b1 = f1[k] + a;
                if !self.coupled {
                    sigma[k] = b1 / d[0];
                    continue;
                }
                let b2 = f2[k] + b;
                let det = d[0] * d[3] - d[1] * d[2];
                if !(det.abs() >= SINGULAR_DET) {
                    return Err(Error::SingularBlock { cell: k, det });
                }
                sigma[k] = (b1 * d[3] - d[1] * b2) / det;
                chi[k] = (d[0] * b2 - d[2] * b1) / det;
            }
        }
        Ok(())
    }

    /// Runs red-black sweeps from `(sigma, chi)` until the relative residual
    /// meets `reg.tol` or `reg.max_sweeps` is reached. At least one sweep is
    /// always performed.
    pub fn solve(
        &self,
        rhs: &EllipticRhs,
        sigma: &mut ScalarField,
        chi: &mut ScalarField,
        reg: &RegParams,
    ) -> Result<SolveReport> {
        for f in [&rhs.f1, &rhs.f2, &*sigma, &*chi] {
            if *f.grid() != self.grid {
                return Err(Error::GridMismatch);
            }
        }
        let (f1, f2) = (rhs.f1.values(), rhs.f2.values());
        let f2 = if self.coupled { f2.to_vec() } else { vec![0.0; f1.len()] };
        if !self.coupled {
            chi.values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let rhs_norm = f1.iter().chain(&f2).map(|v| v * v).sum::<f64>().sqrt();
        let scale = rhs_norm.max(reg.residual_floor);

        let mut history = Vec::new();
        let mut residual = f64::INFINITY;
        for _ in 0..reg.max_sweeps.max(1) {
            let (s, c) = (sigma.values_mut(), chi.values_mut());
            self.sweep_colour(0, s, c, f1, &f2)?;
            self.sweep_colour(1, s, c, f1, &f2)?;
            residual = self.residual_norm(sigma.values(), chi.values(), f1, &f2) / scale;
            history.push(residual);
            if residual <= reg.tol {
                break;
            }
        }
        let converged = residual <= reg.tol;
        if !converged && reg.strict {
            return Err(Error::NotConverged { sweeps: history.len(), residual });
        }
        Ok(SolveReport { sweeps: history.len(), residual, converged, history })
    }
}

/// Solves from an explicit initial iterate without touching any history.
pub fn solve_from(
    rho: &ScalarField,
    pi: Option<&ScalarField>,
    rhs: &EllipticRhs,
    reg: &RegParams,
    mode: StencilMode,
    guess: (ScalarField, ScalarField),
) -> Result<(ScalarField, ScalarField, SolveReport)> {
    let system = BlockSystem::assemble(rho, pi, reg, mode)?;
    let (mut sigma, mut chi) = guess;
    let report = system.solve(rhs, &mut sigma, &mut chi, reg)?;
    Ok((sigma, chi, report))
}

/// Solves for the step's potentials starting from the warm-start guess built
/// out of `potentials`, then pushes the result onto it.
///
/// `pi = None` (or `β = 0`) selects the scalar IGR iteration with `χ ≡ 0`.
pub fn solve_potentials(
    rho: &ScalarField,
    pi: Option<&ScalarField>,
    rhs: &EllipticRhs,
    reg: &RegParams,
    mode: StencilMode,
    potentials: &mut Potentials,
    warm: WarmStart,
) -> Result<SolveReport> {
    let guess = potentials.initial_guess(warm);
    let (sigma, chi, report) = solve_from(rho, pi, rhs, reg, mode, guess)?;
    potentials.push(sigma, chi);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn smooth_state(g: Grid) -> (ScalarField, ScalarField, VectorField) {
        let rho = ScalarField::from_fn(g, |x, y| 1.0 + 0.3 * (TAU * x).sin() * (TAU * y).cos());
        let pi = ScalarField::from_fn(g, |x, y| 0.5 + 0.2 * (TAU * (x + y)).cos());
        let u = VectorField::new(
            ScalarField::from_fn(g, |x, y| 0.4 * (TAU * x).cos() + 0.1 * (TAU * y).sin()),
            ScalarField::from_fn(g, |x, y| -0.3 * (TAU * y).sin() * (TAU * x).cos()),
        )
        .unwrap();
        (rho, pi, u)
    }

    #[test]
    fn constant_flow_has_zero_rhs() {
        let g = Grid::square(8, 8).unwrap();
        let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap();
        let u = VectorField::new(ScalarField::constant(g, 0.3), ScalarField::constant(g, -0.1)).unwrap();
        let pi = ScalarField::constant(g, 0.2);
        let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
        assert_eq!(rhs.f1.max_abs(), 0.0);
        assert_eq!(rhs.f2.max_abs(), 0.0);

        let (_, pi, _) = smooth_state(g);
        let rhs = build_rhs_tigre(&VectorField::zeros(g), &pi, &reg, StencilMode::Consistent).unwrap();
        assert_eq!(rhs.f1.max_abs(), 0.0);
        assert_eq!(rhs.f2.max_abs(), 0.0);
    }

    #[test]
    fn igr_rhs_is_twice_alpha_gradient_squared_in_1d() {
        let g = Grid::line(32).unwrap();
        let reg = RegParams::new(0.01, 0.02).unwrap();
        let u = VectorField::along_x(ScalarField::from_fn(g, |x, _| (TAU * x).sin()));
        let f1 = build_rhs_igr(&u, &reg);
        let d = operators::ddx(u.x());
        for k in 0..32 {
            let expected = 2.0 * 0.01 * d.values()[k].powi(2);
            assert!((f1.values()[k] - expected).abs() < 1e-15 * expected.max(1.0));
        }
        let pi = ScalarField::constant(g, 0.7);
        let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
        assert_eq!(rhs.f1, f1);
    }

    #[test]
    fn chi_rhs_cancels_for_constant_entropy_density_in_1d() {
        // div_π u = D_x u exactly when π is constant, and log π has no
        // curvature, so f₂ vanishes to roundoff on every grid.
        for n in [32, 64, 128] {
            let g = Grid::line(n).unwrap();
            let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap();
            let u = VectorField::along_x(ScalarField::from_fn(g, |x, _| (TAU * x).sin()));
            let pi = ScalarField::constant(g, 0.2);
            let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
            assert!(rhs.f2.max_abs() < 1e-12 * reg.beta * TAU * TAU);
        }
    }

    #[test]
    fn zero_rhs_zero_guess_stays_zero() {
        let g = Grid::square(8, 8).unwrap();
        let (rho, pi, _) = smooth_state(g);
        let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap();
        let rhs = EllipticRhs { f1: ScalarField::zeros(g), f2: ScalarField::zeros(g) };
        let mut pots = Potentials::zeros(g);
        let rep = solve_potentials(&rho, Some(&pi), &rhs, &reg, StencilMode::Consistent, &mut pots, WarmStart::Extrapolate)
            .unwrap();
        assert_eq!(rep.sweeps, 1);
        assert!(rep.converged);
        assert_eq!(pots.sigma.max_abs(), 0.0);
        assert_eq!(pots.chi.max_abs(), 0.0);
    }

    #[test]
    fn zero_potentials_map_to_zero() {
        let g = Grid::square(8, 8).unwrap();
        let (rho, pi, _) = smooth_state(g);
        let reg = RegParams::new(0.3, 0.2).unwrap();
        let z = ScalarField::zeros(g);
        let (a, b) = apply_tigre_operator(&z, &z, &rho, &pi, &reg, StencilMode::Consistent).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn beta_zero_leaves_identity_row() {
        let g = Grid::square(8, 8).unwrap();
        let (rho, pi, _) = smooth_state(g);
        let reg = RegParams::new(0.01, 0.0).unwrap();
        let sigma = ScalarField::from_fn(g, |x, y| (TAU * x).cos() * y);
        let chi = ScalarField::from_fn(g, |x, y| x * x - y);
        let (_, row2) = apply_tigre_operator(&sigma, &chi, &rho, &pi, &reg, StencilMode::Consistent).unwrap();
        assert_eq!(row2, chi);
    }

    #[test]
    fn block_coefficients_match_weighted_div_assembly() {
        for mode in [StencilMode::Consistent, StencilMode::Verbatim] {
            for g in [Grid::square(8, 6).unwrap(), Grid::line(10).unwrap()] {
                let (rho, pi, _) = smooth_state(g);
                let reg = RegParams::new(0.02, 0.03).unwrap();
                let sigma = ScalarField::from_fn(g, |x, y| (TAU * x).sin() + y);
                let chi = ScalarField::from_fn(g, |x, y| (TAU * y).cos() * x);
                let sys = BlockSystem::assemble(&rho, Some(&pi), &reg, mode).unwrap();
                let (a1, a2) = sys.apply(sigma.values(), chi.values());
                let (b1, b2) = apply_tigre_operator(&sigma, &chi, &rho, &pi, &reg, mode).unwrap();
                for k in 0..g.len() {
                    assert!((a1[k] - b1.values()[k]).abs() < 1e-10, "{mode:?} row1 cell {k}");
                    assert!((a2[k] - b2.values()[k]).abs() < 1e-10, "{mode:?} row2 cell {k}");
                }
            }
        }
    }

    #[test]
    fn igr_path_equals_tigre_path_at_beta_zero() {
        let g = Grid::square(16, 16).unwrap();
        let (rho, pi, u) = smooth_state(g);
        let reg = RegParams::scaled(&g, 1.0, 0.0).unwrap();
        let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
        let zero = (ScalarField::zeros(g), ScalarField::zeros(g));
        let (s_t, c_t, _) = solve_from(&rho, Some(&pi), &rhs, &reg, StencilMode::Consistent, zero.clone()).unwrap();
        let (s_i, _, _) =
            solve_from(&rho, None, &EllipticRhs::scalar(build_rhs_igr(&u, &reg)), &reg, StencilMode::Consistent, zero)
                .unwrap();
        assert_eq!(c_t.max_abs(), 0.0);
        assert!((&s_t - &s_i).max_abs() <= 1e-12);
    }

    #[test]
    fn residual_history_is_monotone_and_converges() {
        let g = Grid::square(16, 16).unwrap();
        let (rho, pi, u) = smooth_state(g);
        let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap();
        let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
        let zero = (ScalarField::zeros(g), ScalarField::zeros(g));
        let (_, _, rep) = solve_from(&rho, Some(&pi), &rhs, &reg, StencilMode::Consistent, zero).unwrap();
        assert!(rep.converged, "{:?}", rep.history);
        for w in rep.history.windows(2) {
            assert!(w[1] <= w[0], "{:?}", rep.history);
        }
    }

    #[test]
    fn sweep_cap_is_flagged_or_fatal_in_strict_mode() {
        let g = Grid::square(16, 16).unwrap();
        let (rho, pi, u) = smooth_state(g);
        let reg = RegParams::scaled(&g, 10.0, 10.0).unwrap().with_max_sweeps(2).with_tol(1e-14);
        let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
        let zero = (ScalarField::zeros(g), ScalarField::zeros(g));
        let (_, _, rep) = solve_from(&rho, Some(&pi), &rhs, &reg, StencilMode::Consistent, zero.clone()).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.sweeps, 2);
        let strict = reg.strict(true);
        assert!(matches!(
            solve_from(&rho, Some(&pi), &rhs, &strict, StencilMode::Consistent, zero),
            Err(Error::NotConverged { sweeps: 2, .. })
        ));
    }

    #[test]
    fn warm_start_levels() {
        let g = Grid::line(8).unwrap();
        let mut p = Potentials::zeros(g);
        assert_eq!(p.initial_guess(WarmStart::Extrapolate).0.max_abs(), 0.0);
        p.push(ScalarField::constant(g, 1.0), ScalarField::constant(g, -1.0));
        assert_eq!(p.initial_guess(WarmStart::Extrapolate).0, ScalarField::constant(g, 1.0));
        p.push(ScalarField::constant(g, 3.0), ScalarField::constant(g, -2.0));
        let (s, c) = p.initial_guess(WarmStart::Extrapolate);
        assert_eq!(s, ScalarField::constant(g, 5.0));
        assert_eq!(c, ScalarField::constant(g, -3.0));
        assert_eq!(p.initial_guess(WarmStart::Previous).0, ScalarField::constant(g, 3.0));
        assert_eq!(p.initial_guess(WarmStart::Cold).0.max_abs(), 0.0);
    }

    #[test]
    fn chi_rhs_shift_moves_only_the_gauge() {
        // Adding a constant to f₂ with β → small leaves ∇χ's change equal to
        // the gradient of the χ response; on constant (ρ, π) the response to a
        // constant is that constant, so π∇χ is unchanged.
        let g = Grid::square(8, 8).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let pi = ScalarField::constant(g, 0.2);
        let (_, _, u) = smooth_state(g);
        let reg = RegParams::scaled(&g, 1.0, 1.0).unwrap().with_tol(1e-13);
        let rhs = build_rhs_tigre(&u, &pi, &reg, StencilMode::Consistent).unwrap();
        let shifted = EllipticRhs { f1: rhs.f1.clone(), f2: rhs.f2.map(|v| v + 0.25) };
        let zero = (ScalarField::zeros(g), ScalarField::zeros(g));
        let (s0, c0, _) = solve_from(&rho, Some(&pi), &rhs, &reg, StencilMode::Consistent, zero.clone()).unwrap();
        let (s1, c1, _) = solve_from(&rho, Some(&pi), &shifted, &reg, StencilMode::Consistent, zero).unwrap();
        assert!((&s1 - &s0).max_abs() < 1e-10);
        let dc = &c1 - &c0;
        assert!((dc.max() - 0.25).abs() < 1e-10 && (dc.min() - 0.25).abs() < 1e-10);
        let src0 = operators::ddx(&c0).scale(0.2);
        let src1 = operators::ddx(&c1).scale(0.2);
        assert!((&src1 - &src0).max_abs() < 1e-8);
    }

    #[test]
    fn singular_blocks_are_hard_errors() {
        // α = 0 with ρ⁻¹ underflowing to zero leaves a zero Σ pivot.
        let g = Grid::line(8).unwrap();
        let rho = ScalarField::constant(g, f64::MAX);
        let pi = ScalarField::constant(g, 1.0);
        let reg = RegParams::new(0.0, 1e-3).unwrap();
        let rhs = EllipticRhs { f1: ScalarField::constant(g, 1.0), f2: ScalarField::zeros(g) };
        let zero = (ScalarField::zeros(g), ScalarField::zeros(g));
        let r = solve_from(&rho, Some(&pi), &rhs, &reg, StencilMode::Consistent, zero);
        assert!(matches!(r, Err(Error::SingularBlock { .. })), "{r:?}");
    }
}
