//! Centred finite-difference operators on periodic grids.
//!
//! Every operator maps cell-centred fields to a cell-centred field on the same
//! grid. Face quantities appear only as two-point averages
//! `ḡ_{i+1/2} = (g_i + g_{i+1}) / 2`.

use crate::error::Result;
use crate::grid::{Grid, ScalarField, VectorField};

/// Selects between the default second-order stencils and the alternative
/// forms kept for side-by-side comparisons.
///
/// `Verbatim` changes three things:
/// * `div_pi` multiplies the face-averaged `π` by the *neighbour-cell*
///   velocity and divides by `Δx` (its constant-`π` limit is twice the
///   centred divergence);
/// * the mixed term of `hessian_log_pi_uu` is written `uˣuʸ/(2ΔxΔy)` rather
///   than `2uˣuʸ/(4ΔxΔy)`; the two agree up to rounding;
/// * the `χ` row of the elliptic system applies `π⁻¹` to the neighbour
///   values instead of the row (see [`crate::elliptic`]).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StencilMode {
    #[default]
    Consistent,
    Verbatim,
}

fn build(grid: Grid, mut f: impl FnMut(usize, usize, [usize; 4], usize) -> f64) -> ScalarField {
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            out.push(f(i, j, grid.neighbours(i, j), grid.index(i, j)));
        }
    }
    ScalarField::from_vec(grid, out).expect("length matches grid")
}

/// `(f_{i+1,j} - f_{i-1,j}) / 2Δx`.
pub fn ddx(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let v = f.values();
    let inv = 0.5 / g.dx();
    build(g, |_, _, [e, w, _, _], _| (v[e] - v[w]) * inv)
}

/// `(f_{i,j+1} - f_{i,j-1}) / 2Δy`; identically zero on 1D grids.
pub fn ddy(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    if !g.is_2d() {
        return ScalarField::zeros(g);
    }
    let v = f.values();
    let inv = 0.5 / g.dy();
    build(g, |_, _, [_, _, n, s], _| (v[n] - v[s]) * inv)
}

/// Centred divergence `D_x u^x + D_y u^y`.
pub fn divergence(u: &VectorField) -> ScalarField {
    let a = ddx(u.x());
    let b = ddy(u.y());
    &a + &b
}

pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField::new(ddx(f), ddy(f)).expect("same grid")
}

/// `(D_x u^x + D_y u^y)²`.
pub fn div_sq(u: &VectorField) -> ScalarField {
    divergence(u).map(|d| d * d)
}

/// `(D_x u^x)² + 2 (D_x u^y)(D_y u^x) + (D_y u^y)²`.
pub fn tr_grad_u_sq(u: &VectorField) -> ScalarField {
    let uxx = ddx(u.x());
    if !u.grid().is_2d() {
        return uxx.map(|d| d * d);
    }
    let uyx = ddx(u.y());
    let uxy = ddy(u.x());
    let uyy = ddy(u.y());
    let g = *u.grid();
    let (a, b, c, d) = (uxx.values(), uyx.values(), uxy.values(), uyy.values());
    build(g, |_, _, _, k| a[k] * a[k] + 2.0 * b[k] * c[k] + d[k] * d[k])
}

/// Entropy-weighted divergence `π⁻¹ ∇·(πu)` with face-averaged weights.
///
/// The consistent form uses face fluxes `π̄_{i+1/2} ū_{i+1/2}` built from
/// two-point averages of both factors; it is second order and reduces to the
/// centred divergence for constant `π`.
pub fn div_pi(u: &VectorField, pi: &ScalarField, mode: StencilMode) -> Result<ScalarField> {
    u.x().check_grid(pi)?;
    pi.require_positive("entropy density")?;
    let g = *pi.grid();
    let p = pi.values();
    let ux = u.x().values();
    let uy = u.y().values();
    let two_d = g.is_2d();
    let (dx, dy) = (g.dx(), g.dy());

    Ok(build(g, |_, _, [e, w, n, s], k| {
        let pe = 0.5 * (p[k] + p[e]);
        let pw = 0.5 * (p[k] + p[w]);
        let mut acc = match mode {
            StencilMode::Consistent => {
                (pe * 0.5 * (ux[k] + ux[e]) - pw * 0.5 * (ux[k] + ux[w])) / dx
            }
            StencilMode::Verbatim => (pe * ux[e] - pw * ux[w]) / dx,
        };
        if two_d {
            let pn = 0.5 * (p[k] + p[n]);
            let ps = 0.5 * (p[k] + p[s]);
            acc += match mode {
                StencilMode::Consistent => {
                    (pn * 0.5 * (uy[k] + uy[n]) - ps * 0.5 * (uy[k] + uy[s])) / dy
                }
                StencilMode::Verbatim => (pn * uy[n] - ps * uy[s]) / dy,
            };
        }
        acc / p[k]
    }))
}

/// `∇² log π [u, u]` from three-point second differences and the four-point
/// cross stencil. On 1D grids only the `xx` term survives.
pub fn hessian_log_pi_uu(pi: &ScalarField, u: &VectorField, mode: StencilMode) -> Result<ScalarField> {
    u.x().check_grid(pi)?;
    pi.require_positive("entropy density")?;
    let g = *pi.grid();
    let lp = pi.map(f64::ln);
    let l = lp.values();
    let ux = u.x().values();
    let uy = u.y().values();
    let (dx, dy) = (g.dx(), g.dy());
    let two_d = g.is_2d();
    // the contraction carries 2uˣuʸ∂ₓᵧ; over 2ΔxΔy the factor 2 is folded in
    let cross_den = match mode {
        StencilMode::Consistent => 4.0 * dx * dy,
        StencilMode::Verbatim => 2.0 * dx * dy,
    };
    let cross_weight = match mode {
        StencilMode::Consistent => 2.0,
        StencilMode::Verbatim => 1.0,
    };

    Ok(build(g, |i, j, [e, w, n, s], k| {
        let dxx = (l[e] - 2.0 * l[k] + l[w]) / (dx * dx);
        let mut acc = ux[k] * ux[k] * dxx;
        if two_d {
            let (i, j) = (i as isize, j as isize);
            let dyy = (l[n] - 2.0 * l[k] + l[s]) / (dy * dy);
            let dxy = (lp.sample(i + 1, j + 1) - lp.sample(i - 1, j + 1) - lp.sample(i + 1, j - 1)
                + lp.sample(i - 1, j - 1))
                / cross_den;
            acc += cross_weight * ux[k] * uy[k] * dxy + uy[k] * uy[k] * dyy;
        }
        acc
    }))
}

/// Conservative `∇·(g∇f)` with face-averaged coefficients:
///
/// `[ḡ_{i+1/2}(f_{i+1} - f_i) - ḡ_{i-1/2}(f_i - f_{i-1})] / Δx²` plus the
/// `y` analogue. Symmetric and negative semidefinite for positive `g`.
pub fn weighted_div(g: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    g.check_grid(f)?;
    g.require_positive("coefficient")?;
    let grid = *g.grid();
    let (gv, fv) = (g.values(), f.values());
    let (idx2, idy2) = (1.0 / (grid.dx() * grid.dx()), 1.0 / (grid.dy() * grid.dy()));
    let two_d = grid.is_2d();

    Ok(build(grid, |_, _, [e, w, n, s], k| {
        let ge = 0.5 * (gv[k] + gv[e]);
        let gw = 0.5 * (gv[k] + gv[w]);
        let mut acc = (ge * (fv[e] - fv[k]) - gw * (fv[k] - fv[w])) * idx2;
        if two_d {
            let gn = 0.5 * (gv[k] + gv[n]);
            let gs = 0.5 * (gv[k] + gv[s]);
            acc += (gn * (fv[n] - fv[k]) - gs * (fv[k] - fv[s])) * idy2;
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn sq(n: usize) -> Grid {
        Grid::square(n, n).unwrap()
    }

    fn vec2(g: Grid, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> VectorField {
        VectorField::new(ScalarField::from_fn(g, fx), ScalarField::from_fn(g, fy)).unwrap()
    }

    #[test]
    fn constants_differentiate_to_zero() {
        let g = sq(8);
        let c = ScalarField::constant(g, 3.7);
        assert_eq!(ddx(&c).max_abs(), 0.0);
        assert_eq!(ddy(&c).max_abs(), 0.0);
        let u = vec2(g, |_, _| 0.3, |_, _| -1.2);
        assert_eq!(div_sq(&u).max_abs(), 0.0);
        assert_eq!(tr_grad_u_sq(&u).max_abs(), 0.0);
        let pi = ScalarField::constant(g, 0.2);
        assert_eq!(hessian_log_pi_uu(&pi, &u, StencilMode::Consistent).unwrap().max_abs(), 0.0);
        assert!(weighted_div(&pi, &c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ddy_vanishes_on_lines() {
        let g = Grid::line(16).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (TAU * x).sin());
        assert_eq!(ddy(&f).max_abs(), 0.0);
    }

    #[test]
    fn ddx_exact_on_sawtooth_interior() {
        let g = Grid::line(16).unwrap();
        let f = ScalarField::from_fn(g, |x, _| 3.0 * x);
        let d = ddx(&f);
        for i in 1..15 {
            assert!((d.get(i, 0) - 3.0).abs() < 1e-12);
        }
        // periodic images at the seam: (f_1 - f_{15}) / 2Δx
        let expected = (f.get(1, 0) - f.get(15, 0)) * 8.0;
        assert!((d.get(0, 0) - expected).abs() < 1e-12);
        assert!(d.get(0, 0) < 0.0);
    }

    #[test]
    fn ddx_sine_error_quarters_on_refinement() {
        let err = |n: usize| {
            let g = Grid::line(n).unwrap();
            let f = ScalarField::from_fn(g, |x, _| (TAU * x).sin());
            let exact = ScalarField::from_fn(g, |x, _| TAU * (TAU * x).cos());
            (&ddx(&f) - &exact).max_abs()
        };
        let ratio = err(256) / err(512);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn div_sq_on_linear_profile() {
        // u^x = a·x on the interior of a line is exactly linear
        let g = sq(16);
        let u = vec2(g, |x, _| 0.7 * x, |_, _| 0.0);
        let d = div_sq(&u);
        for j in 0..16 {
            for i in 1..15 {
                assert!((d.get(i, j) - 0.49).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn div_sq_of_rotational_field_is_fourth_order_small() {
        // u = ∇⊥ψ with ψ = sin(2πx) sin(2πy): centred divergence of the
        // sampled analytic field is O(Δx²), its square O(Δx⁴).
        let g = sq(128);
        let u = vec2(
            g,
            |x, y| TAU * (TAU * x).sin() * (TAU * y).cos(),
            |x, y| -TAU * (TAU * x).cos() * (TAU * y).sin(),
        );
        let m = div_sq(&u).max_abs();
        let h: f64 = 1.0 / 128.0;
        assert!(m < 1e3 * h.powi(4), "max {m}");
    }

    #[test]
    fn tr_grad_u_sq_rotation_sign() {
        // Smooth periodic rotation u = (-sin 2πy, sin 2πx): near the centre
        // ∂_x u^y ∂_y u^x < 0 so tr((∇u)²) = 2 (∂_x u^y)(∂_y u^x) < 0.
        let g = sq(64);
        let u = vec2(g, |_, y| -(TAU * y).sin(), |x, _| (TAU * x).sin());
        let t = tr_grad_u_sq(&u);
        for j in 0..64 {
            for i in 0..64 {
                let (x, y) = (g.x(i), g.y(j));
                let exact = 2.0 * (TAU * (TAU * x).cos()) * (-TAU * (TAU * y).cos());
                assert!((t.get(i, j) - exact).abs() < 0.01 * 2.0 * TAU * TAU, "{} vs {exact}", t.get(i, j));
            }
        }
        assert!(t.get(32, 32) < 0.0);
    }

    #[test]
    fn tr_grad_u_sq_in_1d_is_square_of_derivative() {
        let g = Grid::line(64).unwrap();
        let u = VectorField::along_x(ScalarField::from_fn(g, |x, _| (TAU * x).sin()));
        let d = ddx(u.x()).map(|v| v * v);
        assert_eq!(tr_grad_u_sq(&u), d);
        assert_eq!(div_sq(&u), d);
    }

    #[test]
    fn div_pi_constant_weight_reduces_to_centred_divergence() {
        let g = sq(32);
        let u = vec2(g, |x, y| (TAU * x).sin() * (TAU * y).cos(), |x, y| (TAU * (x + y)).cos());
        let pi = ScalarField::constant(g, 0.37);
        let consistent = div_pi(&u, &pi, StencilMode::Consistent).unwrap();
        let verbatim = div_pi(&u, &pi, StencilMode::Verbatim).unwrap();
        let centred = divergence(&u);
        assert!((&consistent - &centred).max_abs() < 1e-11);
        // the neighbour-velocity form doubles the centred divergence
        assert!((&verbatim - &centred.scale(2.0)).max_abs() < 1e-11);
    }

    #[test]
    fn zero_velocity_gives_zero() {
        let g = sq(8);
        let u = VectorField::zeros(g);
        let pi = ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * (TAU * x).sin() * (TAU * y).sin());
        assert_eq!(div_pi(&u, &pi, StencilMode::Consistent).unwrap().max_abs(), 0.0);
        assert_eq!(hessian_log_pi_uu(&pi, &u, StencilMode::Consistent).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn non_positive_weights_are_domain_errors() {
        let g = sq(8);
        let u = VectorField::zeros(g);
        let mut pi = ScalarField::constant(g, 1.0);
        pi.set(3, 2, 0.0);
        assert!(div_pi(&u, &pi, StencilMode::Consistent).is_err());
        assert!(hessian_log_pi_uu(&pi, &u, StencilMode::Consistent).is_err());
        assert!(weighted_div(&pi, &pi).is_err());
    }

    #[test]
    fn weighted_div_unit_coefficient_is_laplacian() {
        let err = |n: usize| {
            let g = Grid::line(n).unwrap();
            let one = ScalarField::constant(g, 1.0);
            let f = ScalarField::from_fn(g, |x, _| (TAU * x).sin());
            let exact = f.scale(-TAU * TAU);
            (&weighted_div(&one, &f).unwrap() - &exact).max_abs()
        };
        let ratio = err(128) / err(256);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn hessian_cross_term_matches_full_contraction() {
        // log π = sin(2πx) sin(2πy), u = (1, 1): contraction is
        // ∂xx + 2∂xy + ∂yy of log π
        let g = sq(64);
        let pi = ScalarField::from_fn(g, |x, y| ((TAU * x).sin() * (TAU * y).sin()).exp());
        let u = vec2(g, |_, _| 1.0, |_, _| 1.0);
        let c = hessian_log_pi_uu(&pi, &u, StencilMode::Consistent).unwrap();
        let v = hessian_log_pi_uu(&pi, &u, StencilMode::Verbatim).unwrap();
        assert!((&c - &v).max_abs() < 1e-9);
        let exact = ScalarField::from_fn(g, |x, y| {
            TAU * TAU * (-2.0 * (TAU * x).sin() * (TAU * y).sin() + 2.0 * (TAU * x).cos() * (TAU * y).cos())
        });
        assert!((&c - &exact).max_abs() < 0.01 * TAU * TAU);
    }
}
