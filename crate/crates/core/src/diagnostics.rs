//! Conserved totals, the discrete total variation of density, and radially
//! averaged power spectra.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::model::ConservedState;
use crate::operators;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    pub momentum: [f64; 2],
    pub energy: f64,
    pub entropy: f64,
    pub tv_rho: f64,
    pub sweeps: Option<usize>,
    pub residual: Option<f64>,
}

/// Grid integrals of `ρ`, `ρu`, `½ρ|u|² + p/(γ-1)`, `π` and `TV_h(ρ)`.
pub fn totals(state: &ConservedState, eos: &EosParams) -> Result<DiagnosticsRecord> {
    Ok(DiagnosticsRecord {
        time: state.time,
        mass: state.rho.integral(),
        momentum: state.momentum.integral(),
        energy: state.total_energy(eos).integral(),
        entropy: state.entropy_density(eos)?.integral(),
        tv_rho: total_variation(&state.rho),
        sweeps: None,
        residual: None,
    })
}

/// `Σ √((D_xρ)² + (D_yρ)²) · vol` with centred differences.
pub fn total_variation(rho: &ScalarField) -> f64 {
    let dx = operators::ddx(rho);
    let dy = operators::ddy(rho);
    let s: f64 = dx.values().iter().zip(dy.values()).map(|(a, b)| a.hypot(*b)).sum();
    s * rho.grid().cell_volume()
}

/// Unitary-scaled forward DFT: `f̂(k) = (1/N) Σ f(x) e^{-2πi k·x}` with `N`
/// the number of cells, so a constant field lands entirely in `k = 0`.
pub fn dft(field: &ScalarField) -> Vec<Complex<f64>> {
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut data: Vec<Complex<f64>> = field.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();

    let row = planner.plan_fft_forward(nx);
    row.process(&mut data);

    if ny > 1 {
        let col = planner.plan_fft_forward(ny);
        let mut buf = vec![Complex::new(0.0, 0.0); ny];
        for i in 0..nx {
            for j in 0..ny {
                buf[j] = data[j * nx + i];
            }
            col.process(&mut buf);
            for j in 0..ny {
                data[j * nx + i] = buf[j];
            }
        }
    }
    let scale = 1.0 / (nx * ny) as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    data
}

/// Signed integer wavenumber of DFT index `i` on an axis of `n` cells.
fn wavenumber(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Shell-averaged power on the annuli `b ≤ |k| < b + 1`, covering every
/// mode up to the corner of the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSpectrum {
    /// Mean squared modulus per shell, indexed by `b`.
    pub power: Vec<f64>,
    /// Number of modes `|Ω_b|` in each shell.
    pub counts: Vec<usize>,
}

impl ShellSpectrum {
    fn accumulate(nx: usize, ny: usize, modes: impl Fn(usize) -> f64) -> Self {
        let mut sums: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for j in 0..ny {
            let ky = wavenumber(j, ny);
            for i in 0..nx {
                let kx = wavenumber(i, nx);
                let b = kx.hypot(ky).floor() as usize;
                if b >= sums.len() {
                    sums.resize(b + 1, 0.0);
                    counts.resize(b + 1, 0);
                }
                sums[b] += modes(j * nx + i);
                counts[b] += 1;
            }
        }
        let power = sums.iter().zip(&counts).map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        Self { power, counts }
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// `Σ_b P(k_b)`, the total spectral mass.
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    /// `Σ_b |Ω_b| P(k_b)`, equal to `Σ_k |f̂(k)|²`.
    pub fn mode_sum(&self) -> f64 {
        self.power.iter().zip(&self.counts).map(|(p, &c)| p * c as f64).sum()
    }

    /// Variance-weighted mean wavenumber `√(Σ b²P_b / Σ P_b)` over `b ≥ 1`.
    pub fn k_rms(&self) -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (b, &p) in self.power.iter().enumerate().skip(1) {
            num += (b * b) as f64 * p;
            den += p;
        }
        if !(den > 0.0) {
            return Err(Error::Unsupported("spectrum has no power outside the mean mode".into()));
        }
        Ok((num / den).sqrt())
    }
}

/// `P(k_b) = |Ω_b|⁻¹ Σ_{k∈Ω_b} |f̂(k)|²`.
pub fn power_spectrum(field: &ScalarField) -> ShellSpectrum {
    let hat = dft(field);
    let g = field.grid();
    ShellSpectrum::accumulate(g.nx(), g.ny(), |k| hat[k].norm_sqr())
}

/// `E(k_b) = (2|Ω_b|)⁻¹ Σ_{k∈Ω_b} |û(k)|²`.
pub fn kinetic_spectrum(u: &VectorField) -> ShellSpectrum {
    let hx = dft(u.x());
    let hy = dft(u.y());
    let g = u.grid();
    ShellSpectrum::accumulate(g.nx(), g.ny(), |k| 0.5 * (hx[k].norm_sqr() + hy[k].norm_sqr()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub time: f64,
    pub pressure: ShellSpectrum,
    pub kinetic: ShellSpectrum,
}

impl SpectrumRecord {
    pub fn of_state(state: &ConservedState, eos: &EosParams) -> Self {
        Self {
            time: state.time,
            pressure: power_spectrum(&state.pressure(eos)),
            kinetic: kinetic_spectrum(&state.velocity()),
        }
    }

    pub fn k_rms_pressure(&self) -> Option<f64> {
        self.pressure.k_rms().ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn uniform_density_has_unit_mass() {
        let g = Grid::square(16, 16).unwrap();
        let eos = EosParams::default();
        let st = ConservedState::from_pressure(
            crate::model::StateForm::Energy,
            &eos,
            ScalarField::constant(g, 1.0),
            &VectorField::zeros(g),
            &ScalarField::constant(g, 1.0),
        )
        .unwrap();
        let rec = totals(&st, &eos).unwrap();
        assert!((rec.mass - 1.0).abs() < 1e-14);
        assert!((rec.energy - 2.5).abs() < 1e-14);
        assert_eq!(rec.entropy, 0.0);
        assert_eq!(rec.tv_rho, 0.0);
    }

    #[test]
    fn tv_of_sine_is_four() {
        // ∫₀¹ |2π cos 2πx| dx = 4; the centred difference scales the
        // derivative by sinc(2πΔx), an O(Δx²) deficit.
        for n in [256, 1024] {
            let g = Grid::line(n).unwrap();
            let rho = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin());
            let h = 1.0 / n as f64;
            let tv = total_variation(&rho);
            assert!((tv - 4.0).abs() < 4.0 * (2.0 * PI * h).powi(2), "n={n} tv={tv}");
        }
    }

    #[test]
    fn tv_of_ramp_between_plateaus() {
        // Monotone profile from 1 to 3 and back: TV = 2 + 2.
        let g = Grid::line(400).unwrap();
        let rho = ScalarField::from_fn(g, |x, _| 2.0 - ((x - 0.25) / 0.03).tanh() + ((x - 0.75) / 0.03).tanh());
        let tv = total_variation(&rho);
        assert!((tv - 4.0).abs() < 1e-3, "tv={tv}");
    }

    #[test]
    fn constant_field_spectrum() {
        let g = Grid::square(16, 16).unwrap();
        let s = power_spectrum(&ScalarField::constant(g, 1.5));
        assert!((s.power[0] - 2.25).abs() < 1e-14);
        assert!(s.power.iter().skip(1).all(|&p| p < 1e-28));
        assert!(s.k_rms().is_err());
    }

    #[test]
    fn single_mode_lands_in_its_shell() {
        let g = Grid::square(32, 32).unwrap();
        let f = ScalarField::from_fn(g, |x, _| 0.8 * (2.0 * PI * 3.0 * x).cos());
        let s = power_spectrum(&f);
        for (b, &p) in s.power.iter().enumerate() {
            if b != 3 {
                assert!(p < 1e-28, "shell {b} has {p}");
            }
        }
        assert!((s.power[3] * s.counts[3] as f64 - 0.5 * 0.64).abs() < 1e-14);
        assert!((s.k_rms().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn k_rms_of_two_shells() {
        let s = ShellSpectrum { power: vec![5.0, 0.0, 0.0, 1.0, 1.0], counts: vec![1; 5] };
        assert!((s.k_rms().unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn line_spectra_bin_by_absolute_wavenumber() {
        let g = Grid::line(64).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * 5.0 * x).sin());
        let s = power_spectrum(&f);
        assert_eq!(s.counts[5], 2);
        assert!((s.power[5] - 0.25).abs() < 1e-14);
        assert_eq!(s.len(), 33);
    }

    #[test]
    fn kinetic_spectrum_halves_component_power() {
        let g = Grid::square(16, 16).unwrap();
        let u = VectorField::new(
            ScalarField::from_fn(g, |_, y| (2.0 * PI * 2.0 * y).sin()),
            ScalarField::from_fn(g, |x, _| (2.0 * PI * 2.0 * x).cos()),
        )
        .unwrap();
        let e = kinetic_spectrum(&u);
        // each component carries ½ in shell 2; E sums them with a ½ factor
        assert!((e.mode_sum() - 0.5).abs() < 1e-14);
    }

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_holds(seed in any::<u64>(), nx in prop::sample::select(vec![8usize, 16, 12, 20]), ny in prop::sample::select(vec![8usize, 16, 10])) {
            let g = Grid::square(nx, ny).unwrap();
            let f = ScalarField::from_vec(g, noise(seed, g.len())).unwrap();
            let s = power_spectrum(&f);
            let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
            prop_assert!((s.mode_sum() - direct).abs() <= 1e-10 * direct);
        }

        #[test]
        fn spectrum_ignores_cyclic_shifts(seed in any::<u64>(), di in 0usize..16, dj in 0usize..16) {
            let g = Grid::square(16, 16).unwrap();
            let f = ScalarField::from_vec(g, noise(seed, g.len())).unwrap();
            let shifted = ScalarField::from_fn(g, |_, _| 0.0);
            let mut shifted = shifted;
            for j in 0..16 {
                for i in 0..16 {
                    shifted.set(i, j, f.sample((i + di) as isize, (j + dj) as isize));
                }
            }
            let a = power_spectrum(&f);
            let b = power_spectrum(&shifted);
            for (x, y) in a.power.iter().zip(&b.power) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3));
            }
        }
    }
}
