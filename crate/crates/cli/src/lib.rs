//! Command-line driver: presets, config files, run orchestration and output
//! files (diagnostics and spectrum CSVs, raster snapshots, manifest).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use sha2::{Digest, Sha256};
use tigre_core::diagnostics::{DiagnosticsRecord, SpectrumRecord};
use tigre_core::elliptic::WarmStart;
use tigre_core::experiments::{self, Preset};
use tigre_core::stepper::{Scheme, Simulation, Snapshot, StepControl};
use tigre_core::{raster, EosParams, Grid, Model, ModelKind, RegParams, ScalarField, StencilMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("run aborted: {0}")]
    Aborted(tigre_core::Error),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(tigre_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Aborted(_) => EXIT_ABORT,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Io(_) | CliError::Core(_) => EXIT_IO,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Flags. Every option can also be given in the config file under the same
/// name (dashes or underscores); flags win.
#[derive(Debug, Default, Parser)]
#[command(name = "tigre", version, about = "Euler, IGR and TIGRE runs on periodic structured grids")]
pub struct Flags {
    /// `key = value` config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sod | acoustic | kh
    #[arg(long)]
    pub preset: Option<String>,
    /// euler | igr | tigre
    #[arg(long)]
    pub model: Option<String>,
    /// lw | lf (lf is Euler only)
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
    /// α = alpha_coef · Δx²
    #[arg(long)]
    pub alpha_coef: Option<f64>,
    /// β = beta_coef · Δx²
    #[arg(long)]
    pub beta_coef: Option<f64>,
    /// Absolute α, overrides --alpha-coef
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Absolute β, overrides --beta-coef
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// extrapolate | previous | cold
    #[arg(long)]
    pub warm_start: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub cv: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Radius of the isotropic acoustic bump
    #[arg(long)]
    pub acoustic_eps: Option<f64>,
    /// Comma-separated snapshot times
    #[arg(long)]
    pub snapshots: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the alternative printed stencils
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fidelity_verbatim_stencils: Option<bool>,
    /// Re-run and compare checksums against the manifest in --out
    #[arg(long)]
    pub verify: bool,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub model: ModelKind,
    pub scheme: Scheme,
    pub nx: usize,
    pub ny: usize,
    pub t_end: f64,
    pub cfl: f64,
    pub alpha_coef: f64,
    pub beta_coef: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub warm_start: WarmStart,
    pub eos: EosParams,
    pub acoustic_eps: f64,
    pub snapshots: Vec<f64>,
    pub out: PathBuf,
    pub verbatim: bool,
}

const KEYS: &[&str] = &[
    "preset",
    "model",
    "scheme",
    "nx",
    "ny",
    "t_end",
    "cfl",
    "alpha_coef",
    "beta_coef",
    "alpha",
    "beta",
    "tol",
    "max_sweeps",
    "warm_start",
    "gamma",
    "cv",
    "kappa",
    "acoustic_eps",
    "snapshots",
    "out",
    "fidelity_verbatim_stencils",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("config line {}: unknown key '{}'", n + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| usage(format!("invalid value '{v}' for {key}")))
}

fn parse_times(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_value("snapshots", s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(usage(format!("invalid value '{v}' for {key}"))),
    }
}

fn parse_scheme(v: &str) -> Result<Scheme, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "lw" | "lax-wendroff" => Ok(Scheme::LaxWendroff),
        "lf" | "lax-friedrichs" => Ok(Scheme::LaxFriedrichs),
        _ => Err(usage(format!("unknown scheme '{v}'"))),
    }
}

fn parse_warm(v: &str) -> Result<WarmStart, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "extrapolate" => Ok(WarmStart::Extrapolate),
        "previous" => Ok(WarmStart::Previous),
        "cold" => Ok(WarmStart::Cold),
        _ => Err(usage(format!("unknown warm start '{v}'"))),
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::LaxWendroff => "lw",
        Scheme::LaxFriedrichs => "lf",
    }
}

fn warm_name(w: WarmStart) -> &'static str {
    match w {
        WarmStart::Extrapolate => "extrapolate",
        WarmStart::Previous => "previous",
        WarmStart::Cold => "cold",
    }
}

impl RunConfig {
    /// Layers flags over the config file over preset defaults.
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let mut file = match &flags.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut take = |key: &str, flag: Option<String>| flag.or_else(|| file.remove(key));

        let preset: Preset = take("preset", flags.preset.clone())
            .ok_or_else(|| usage("no preset given (use --preset or a config file)"))?
            .parse()
            .map_err(|e: tigre_core::Error| usage(e.to_string()))?;
        let model: ModelKind = take("model", flags.model.clone())
            .unwrap_or_else(|| "tigre".into())
            .parse()
            .map_err(|e: tigre_core::Error| usage(e.to_string()))?;
        let scheme = parse_scheme(&take("scheme", flags.scheme.clone()).unwrap_or_else(|| "lw".into()))?;
        let (dim, nx0, ny0) = preset.default_grid();
        let nx = match take("nx", flags.nx.map(|v| v.to_string())) {
            Some(v) => parse_value("nx", &v)?,
            None => nx0,
        };
        let ny = match take("ny", flags.ny.map(|v| v.to_string())) {
            Some(v) => parse_value("ny", &v)?,
            None if dim == 2 => nx,
            None => ny0,
        };
        let num = |key: &str, flag: Option<f64>, file: &mut BTreeMap<String, String>| -> Result<Option<f64>, CliError> {
            match flag.map(|v| v.to_string()).or_else(|| file.remove(key)) {
                Some(v) => parse_value(key, &v).map(Some),
                None => Ok(None),
            }
        };
        let t_end = num("t_end", flags.t_end, &mut file)?.unwrap_or(preset.default_t_end());
        let cfl = num("cfl", flags.cfl, &mut file)?.unwrap_or(0.4);
        let alpha_coef = num("alpha_coef", flags.alpha_coef, &mut file)?.unwrap_or(1.0);
        let beta_coef = num("beta_coef", flags.beta_coef, &mut file)?.unwrap_or(1.0);
        let alpha_abs = num("alpha", flags.alpha, &mut file)?;
        let beta_abs = num("beta", flags.beta, &mut file)?;
        let tol = num("tol", flags.tol, &mut file)?.unwrap_or(1e-10);
        let gamma = num("gamma", flags.gamma, &mut file)?.unwrap_or(1.4);
        let cv = num("cv", flags.cv, &mut file)?.unwrap_or(2.5);
        let kappa = num("kappa", flags.kappa, &mut file)?.unwrap_or(1.0);
        let acoustic_eps = num("acoustic_eps", flags.acoustic_eps, &mut file)?.unwrap_or(experiments::ACOUSTIC_EPS);
        let max_sweeps = match flags.max_sweeps.map(|v| v.to_string()).or_else(|| file.remove("max_sweeps")) {
            Some(v) => parse_value("max_sweeps", &v)?,
            None => 200,
        };
        let warm_start = match flags.warm_start.clone().or_else(|| file.remove("warm_start")) {
            Some(v) => parse_warm(&v)?,
            None => WarmStart::Extrapolate,
        };
        let snapshots = match flags.snapshots.clone().or_else(|| file.remove("snapshots")) {
            Some(v) => parse_times(&v)?,
            None => preset.default_snapshots(t_end),
        };
        let out = flags
            .out
            .clone()
            .or_else(|| file.remove("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}", preset.name(), model.name())));
        let verbatim = match flags.fidelity_verbatim_stencils {
            Some(b) => b,
            None => match file.remove("fidelity_verbatim_stencils") {
                Some(v) => parse_bool("fidelity_verbatim_stencils", &v)?,
                None => false,
            },
        };

        let grid = Grid::new(dim, nx, ny).map_err(|e| usage(e.to_string()))?;
        let alpha = alpha_abs.unwrap_or(alpha_coef * grid.dx() * grid.dx());
        let beta = beta_abs.unwrap_or(beta_coef * grid.dx() * grid.dx());
        let eos = EosParams::new(gamma, cv, kappa).map_err(|e| usage(e.to_string()))?;
        if snapshots.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(usage("snapshot times must be non-negative"));
        }
        let cfg = Self {
            preset,
            model,
            scheme,
            nx,
            ny: grid.ny(),
            t_end,
            cfl,
            alpha_coef,
            beta_coef,
            alpha,
            beta,
            tol,
            max_sweeps,
            warm_start,
            eos,
            acoustic_eps,
            snapshots,
            out,
            verbatim,
        };
        cfg.control()?;
        cfg.model()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Grid {
        let (dim, _, _) = self.preset.default_grid();
        Grid::new(dim, self.nx, self.ny).expect("validated in resolve")
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let stencils = if self.verbatim { StencilMode::Verbatim } else { StencilMode::Consistent };
        let model = match self.model {
            ModelKind::Euler => Model::euler(self.eos),
            kind => {
                let reg = RegParams::new(self.alpha, self.beta)
                    .map_err(|e| usage(e.to_string()))?
                    .with_tol(self.tol)
                    .with_max_sweeps(self.max_sweeps);
                reg.validate().map_err(|e| usage(e.to_string()))?;
                Model::new(kind, self.eos, reg)
            }
        };
        if self.scheme == Scheme::LaxFriedrichs && self.model != ModelKind::Euler {
            return Err(usage("the lf scheme is only available for the euler model"));
        }
        Ok(model.with_stencils(stencils).with_warm_start(self.warm_start))
    }

    pub fn control(&self) -> Result<StepControl, CliError> {
        Ok(StepControl::new(self.cfl, self.t_end).map_err(|e| usage(e.to_string()))?.with_snapshots(self.snapshots.clone()))
    }

    /// `key = value` echo, also a valid config file.
    pub fn echo(&self) -> String {
        let times: Vec<String> = self.snapshots.iter().map(|t| format!("{t}")).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        kv("preset", self.preset.name().into());
        kv("model", self.model.name().into());
        kv("scheme", scheme_name(self.scheme).into());
        kv("nx", self.nx.to_string());
        kv("ny", self.ny.to_string());
        kv("t_end", format!("{}", self.t_end));
        kv("cfl", format!("{}", self.cfl));
        kv("alpha_coef", format!("{}", self.alpha_coef));
        kv("beta_coef", format!("{}", self.beta_coef));
        kv("alpha", format!("{:e}", self.alpha));
        kv("beta", format!("{:e}", self.beta));
        kv("tol", format!("{:e}", self.tol));
        kv("max_sweeps", self.max_sweeps.to_string());
        kv("warm_start", warm_name(self.warm_start).into());
        kv("gamma", format!("{}", self.eos.gamma()));
        kv("cv", format!("{}", self.eos.cv()));
        kv("kappa", format!("{}", self.eos.kappa()));
        kv("acoustic_eps", format!("{}", self.acoustic_eps));
        kv("snapshots", times.join(","));
        kv("out", self.out.display().to_string());
        kv("fidelity_verbatim_stencils", self.verbatim.to_string());
        s
    }
}

/// In-memory run products, keyed by file name.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: BTreeMap<String, Vec<u8>>,
    pub steps: usize,
    pub abort: Option<tigre_core::Error>,
}

pub const DIAGNOSTICS_HEADER: &str = "step,t,dt,mass,momentum_x,momentum_y,energy,entropy,tv_rho,sweeps,residual";

fn e17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_row(step: usize, dt: f64, d: &DiagnosticsRecord) -> String {
    format!(
        "{step},{},{},{},{},{},{},{},{},{},{}",
        e17(d.time),
        e17(dt),
        e17(d.mass),
        e17(d.momentum[0]),
        e17(d.momentum[1]),
        e17(d.energy),
        e17(d.entropy),
        e17(d.tv_rho),
        d.sweeps.unwrap_or(0),
        e17(d.residual.unwrap_or(0.0)),
    )
}

fn spectrum_rows(out: &mut String, rec: &SpectrumRecord) {
    for b in 0..rec.pressure.len() {
        writeln!(out, "{},{b},{},{}", e17(rec.time), e17(rec.pressure.power[b]), e17(rec.kinetic.power[b]))
            .expect("string write");
    }
}

fn raster_bytes(field: &ScalarField, time: f64) -> Vec<u8> {
    let mut buf = Vec::new();
    raster::write_raster(&mut buf, field, time).expect("writing to memory");
    buf
}

fn add_snapshot(files: &mut BTreeMap<String, Vec<u8>>, tag: &str, snap: &Snapshot, eos: &EosParams) {
    let st = &snap.state;
    let thermo = match st.form {
        tigre_core::StateForm::Energy => "energy",
        tigre_core::StateForm::Entropy => "pi",
    };
    let fields: [(&str, &ScalarField); 4] =
        [("rho", &st.rho), ("mx", st.momentum.x()), ("my", st.momentum.y()), (thermo, &st.thermo)];
    for (name, f) in fields {
        files.insert(format!("{tag}_{name}.bin"), raster_bytes(f, st.time));
    }
    files.insert(format!("{tag}_p.bin"), raster_bytes(&st.pressure(eos), st.time));
    files.insert(format!("{tag}_sigma.bin"), raster_bytes(&snap.potentials.sigma, st.time));
    files.insert(format!("{tag}_chi.bin"), raster_bytes(&snap.potentials.chi, st.time));
}

/// Runs the configured simulation and collects every output file. Aborts
/// are returned inside [`Outputs`] together with the partial products and a
/// `last_good` dump.
pub fn execute(cfg: &RunConfig) -> Result<Outputs, CliError> {
    let grid = cfg.grid();
    let model = cfg.model()?;
    let init = experiments::initial_state(cfg.preset, grid, &cfg.eos, model.form(), Some(cfg.acoustic_eps))
        .map_err(|e| usage(e.to_string()))?;
    let mut sim = Simulation::new(model, cfg.scheme, init, cfg.control()?).map_err(|e| usage(e.to_string()))?;

    let mut out = Outputs::default();
    let mut diag = String::from(DIAGNOSTICS_HEADER);
    diag.push('\n');
    let mut spec = String::from("t,b,P_pressure,E_kinetic\n");
    let mut snap_index = 0;
    let mut record_snapshot = |sim: &Simulation, files: &mut BTreeMap<String, Vec<u8>>, spec: &mut String| {
        add_snapshot(files, &format!("snap{snap_index:03}"), &sim.snapshot(), &cfg.eos);
        spectrum_rows(spec, &SpectrumRecord::of_state(sim.state(), &cfg.eos));
        snap_index += 1;
    };

    if !sim.is_finished() {
        let d0 = sim.diagnostics(None).map_err(CliError::Core)?;
        diag.push_str(&diagnostics_row(0, 0.0, &d0));
        diag.push('\n');
    }
    if sim.at_snapshot_time() || sim.is_finished() {
        record_snapshot(&sim, &mut out.files, &mut spec);
    }
    while !sim.is_finished() {
        let last_good = sim.snapshot();
        match sim.step() {
            Ok(rec) => {
                let d = sim.diagnostics(Some(&rec)).map_err(CliError::Core)?;
                diag.push_str(&diagnostics_row(rec.step, rec.dt, &d));
                diag.push('\n');
                if sim.at_snapshot_time() {
                    record_snapshot(&sim, &mut out.files, &mut spec);
                }
            }
            Err(e) => {
                add_snapshot(&mut out.files, "last_good", &last_good, &cfg.eos);
                out.abort = Some(e);
                break;
            }
        }
    }
    out.steps = sim.step_count();
    out.files.insert(DIAGNOSTICS_FILE.into(), diag.into_bytes());
    out.files.insert(SPECTRUM_FILE.into(), spec.into_bytes());
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_text(cfg: &RunConfig, out: &Outputs, wall_clock: f64) -> String {
    let mut s = String::new();
    writeln!(s, "# tigre run manifest").unwrap();
    writeln!(s, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
    match &out.abort {
        None => writeln!(s, "status = completed").unwrap(),
        Some(e) => writeln!(s, "status = aborted: {e}").unwrap(),
    }
    writeln!(s, "steps = {}", out.steps).unwrap();
    writeln!(s, "wall_clock_seconds = {wall_clock:.3}").unwrap();
    writeln!(s, "\n[config]").unwrap();
    s.push_str(&cfg.echo());
    writeln!(s, "\n[files]").unwrap();
    for (name, bytes) in &out.files {
        writeln!(s, "{}  {name}", sha256_hex(bytes)).unwrap();
    }
    s
}

/// `(checksum, name)` pairs from the `[files]` section of a manifest.
pub fn manifest_checksums(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .skip_while(|l| l.trim() != "[files]")
        .skip(1)
        .filter_map(|l| l.split_once("  "))
        .map(|(sum, name)| (name.trim().to_string(), sum.trim().to_string()))
        .collect()
}

fn write_outputs(dir: &Path, cfg: &RunConfig, out: &Outputs, wall_clock: f64) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in &out.files {
        fs::write(dir.join(name), bytes)?;
    }
    fs::write(dir.join(MANIFEST_FILE), manifest_text(cfg, out, wall_clock))?;
    Ok(())
}

fn verify(cfg: &RunConfig, out: &Outputs) -> Result<(), CliError> {
    let path = cfg.out.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let expected = manifest_checksums(&text);
    let mut problems = Vec::new();
    for (name, bytes) in &out.files {
        match expected.get(name) {
            Some(sum) if *sum == sha256_hex(bytes) => {}
            Some(_) => problems.push(format!("{name} differs")),
            None => problems.push(format!("{name} missing from manifest")),
        }
    }
    for name in expected.keys() {
        if !out.files.contains_key(name) {
            problems.push(format!("{name} not reproduced"));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(problems.join("; ")))
    }
}

pub fn run(flags: &Flags) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::resolve(flags)?;
    let started = Instant::now();
    let out = execute(&cfg)?;
    if flags.verify {
        verify(&cfg, &out)?;
        if let Some(e) = out.abort {
            return Err(CliError::Aborted(e));
        }
        return Ok(cfg);
    }
    write_outputs(&cfg.out, &cfg, &out, started.elapsed().as_secs_f64())?;
    match out.abort {
        Some(e) => Err(CliError::Aborted(e)),
        None => Ok(cfg),
    }
}

/// Parses `argv` (program name first), runs, and maps the outcome to an exit
/// code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = match Flags::try_parse_from(argv) {
        Ok(f) => f,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&flags) {
        Ok(cfg) => {
            if flags.verify {
                println!("verified {}", cfg.out.display());
            } else {
                println!("wrote {}", cfg.out.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("tigre: {e}");
            e.exit_code()
        }
    }
}
