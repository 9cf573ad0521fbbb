//! Structured-grid solvers for the compressible Euler equations and two
//! inviscid regularizations of them:
//!
//! * **IGR**, which adds an entropic pressure `Σ` to the energy-form
//!   equations in `(ρ, ρu, E)`;
//! * **TIGRE**, which evolves `(ρ, ρu, π)` with `π = ρs` the entropy density
//!   and couples `Σ` to a second potential `χ` that acts on the momentum
//!   through the source `-π∇χ`.
//!
//! Both potentials come from a screened, variable-coefficient elliptic
//! system that is solved once per time step with red-black block
//! Gauss-Seidel. Time integration is the two-step Richtmyer Lax-Wendroff
//! scheme, with Lax-Friedrichs available as a diffusive baseline for Euler.
//!
//! All grids are uniform and periodic on the unit box `[0,1)^d`, `d ∈ {1,2}`.

pub mod diagnostics;
pub mod elliptic;
pub mod eos;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod model;
pub mod operators;
pub mod raster;
pub mod stepper;

pub use diagnostics::{DiagnosticsRecord, ShellSpectrum, SpectrumRecord};
pub use elliptic::{Potentials, RegParams, SolveReport, WarmStart};
pub use eos::EosParams;
pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, VectorField};
pub use model::{ConservedState, Model, ModelKind, StateForm};
pub use operators::StencilMode;
pub use experiments::Preset;
pub use stepper::{RunOutput, Scheme, Simulation, Snapshot, StepControl, StepRecord};
