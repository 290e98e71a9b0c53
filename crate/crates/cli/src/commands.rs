use std::io::Read;
use std::path::{Path, PathBuf};

use phasenoise::analytic::{check_conditions, sqrt_t_gamma_figure, steady_state_report, SteadyStateReport};
use phasenoise::config::Config;
use phasenoise::coupled::{build_model, solve, spectral_quad, CoolingReport, Method};
use phasenoise::fmt::float;
use phasenoise::noise::{estimate_psd, write_spectrum_csv, RNG_ALGORITHM};
use phasenoise::quad::QuadConfig;
use phasenoise::sim::{run_ensemble, EnsembleStats, RunMode, RunOptions, Trajectory};
use phasenoise::model::validate_system;
use phasenoise::{validate, NoiseSpec, SimConfig, SystemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::report::Fields;
use crate::scenario::{GridPoint, Scenario, SweepMode};

/// What a command produced: the main payload, an optional CSV form of it for
/// `--output`, and diagnostics for stderr.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub payload: String,
    pub csv: Option<String>,
    pub diagnostics: Vec<String>,
}

impl Outcome {
    fn from_fields(f: &Fields, diagnostics: Vec<String>) -> CliResult<Self> {
        Ok(Self {
            payload: f.render_text(),
            csv: Some(f.render_csv()?),
            diagnostics,
        })
    }
}

fn noise_fields(f: &mut Fields, noise: &NoiseSpec) {
    f.text("noise_kind", noise.kind().as_str()).num("gamma_l", noise.gamma_l());
    match noise {
        NoiseSpec::Lorentzian(l) => {
            f.num("total_strength", l.total_strength)
                .num("center_frequency", l.center_frequency)
                .num("half_width", l.half_width);
        }
        NoiseSpec::Tabulated(t) => {
            let (lo, hi) = t.range();
            f.text("spectrum_points", t.points.len().to_string())
                .num("spectrum_lo", lo)
                .num("spectrum_hi", hi);
        }
        _ => {}
    }
}

fn spectrum_text(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(w, s)| format!("{}:{}", float(*w), float(*s)))
        .collect::<Vec<_>>()
        .join(";")
}

fn condition_warnings(r: &SteadyStateReport) -> Vec<String> {
    let mut w = Vec::new();
    if !r.condition_1_ok {
        w.push(format!(
            "warning: gamma_l/kappa = {} is not below the threshold {}",
            float(r.margin_1),
            float(r.threshold)
        ));
    }
    if !r.condition_2_ok {
        w.push(format!(
            "warning: n*S(delta)/(2*kappa) = {} is not below the threshold {}; phase noise heats the cavity",
            float(r.margin_2),
            float(r.threshold)
        ));
    }
    w
}

/// Closed-form steady state and feasibility margins.
pub fn analytic(scenario: &Scenario) -> CliResult<Outcome> {
    let cfg = scenario.resolved();
    let (system, noise) = validate_system(&cfg.system, &cfg.noise)?;
    let a = &cfg.analytic;
    let r = steady_state_report(&system, &noise, a.threshold, a.target_n_add, &QuadConfig::default())?;

    let mut f = Fields::new();
    f.text("scenario_hash", scenario.hash()?)
        .text("name", cfg.name.clone().unwrap_or_default())
        .num("kappa", system.kappa)
        .num("delta", system.delta)
        .num("pump_rate", system.pump());
    noise_fields(&mut f, &noise);
    f.num("alpha_re", r.alpha_re)
        .num("alpha_im", r.alpha_im)
        .num("n", r.n)
        .num("n_add", r.n_add)
        .opt("t_eff_k", r.t_eff)
        .opt("sqrt_t_gamma", r.t_eff.map(|t| sqrt_t_gamma_figure(t, noise.gamma_l())))
        .num("threshold", r.threshold)
        .num("margin_1", r.margin_1)
        .flag("condition_1_ok", r.condition_1_ok)
        .num("margin_2", r.margin_2)
        .flag("condition_2_ok", r.condition_2_ok)
        .num("max_gamma_l", r.max_gamma_l)
        .num("max_s_at_delta", r.max_s_at_delta)
        .num("target_n_add", r.target_n_add)
        .num("max_s_for_target", r.max_s_for_target);
    for &n in &a.reference_photon_numbers {
        let c = check_conditions(&system, &noise, n, a.threshold)?;
        f.num(format!("max_gamma_l_at_n_{n:e}"), c.max_gamma_l);
    }
    Outcome::from_fields(&f, condition_warnings(&r))
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    /// Defaults to the `[sim]` frame.
    pub mode: Option<RunMode>,
    pub trajectories: Option<usize>,
    /// Writes the first trajectory here as CSV.
    pub dump: Option<PathBuf>,
}

/// The self-describing payload of one ensemble run.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario_hash: String,
    pub name: Option<&'a str>,
    pub units: &'static str,
    pub rng: &'static str,
    pub seed: u64,
    pub mode: RunMode,
    pub system: &'a SystemParams,
    pub noise: &'a NoiseSpec,
    pub sim: &'a SimConfig,
    pub warnings: &'a [String],
    pub analytic: Option<SteadyStateReport>,
    pub stats: &'a EnsembleStats,
}

/// Runs an ensemble and returns the JSON record plus the stored trajectory.
pub fn simulate(scenario: &Scenario, opts: &SimulateOptions) -> CliResult<(Outcome, Option<Trajectory>)> {
    let mut scenario = scenario.clone();
    if let Some(n) = opts.trajectories {
        scenario
            .config
            .sim
            .as_mut()
            .ok_or_else(|| CliError::Usage("--trajectories needs a [sim] section".into()))?
            .n_trajectories = n;
    }
    let cfg = scenario.resolved();
    let sim = cfg.sim()?;
    let mode = opts.mode.unwrap_or_else(|| sim.frame.into());
    let bundle = validate(&cfg.system, &cfg.noise, sim)?;
    let run_opts = RunOptions {
        store_trajectories: usize::from(opts.dump.is_some()),
    };
    let out = run_ensemble(&bundle, mode, run_opts)?;
    let a = &cfg.analytic;
    let analytic = steady_state_report(
        bundle.system(),
        bundle.noise(),
        a.threshold,
        a.target_n_add,
        &QuadConfig::default(),
    )
    .ok();
    let record = RunRecord {
        tool: "phasenoise",
        version: env!("CARGO_PKG_VERSION"),
        scenario_hash: scenario.hash()?,
        name: cfg.name.as_deref(),
        units: "rad",
        rng: RNG_ALGORITHM,
        seed: bundle.sim().seed,
        mode,
        system: bundle.system(),
        noise: bundle.noise(),
        sim: bundle.sim(),
        warnings: bundle.warnings(),
        analytic,
        stats: &out.stats,
    };
    let mut payload = serde_json::to_string_pretty(&record)?;
    payload.push('\n');
    let outcome = Outcome {
        payload,
        csv: None,
        diagnostics: bundle.warnings().iter().map(|w| format!("warning: {w}")).collect(),
    };
    Ok((outcome, out.trajectories.into_iter().next()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CoupledMethod {
    Lyapunov,
    Spectral,
    Both,
}

fn cooling_fields(f: &mut Fields, prefix: &str, r: &CoolingReport) {
    let k = |s: &str| format!("{prefix}{s}");
    f.text(k("method"), r.method.as_str())
        .num(k("n_cav"), r.n_cav)
        .num(k("n_m"), r.n_m)
        .num(k("n_m_phase"), r.n_m_phase)
        .num(k("n_cav_phase"), r.n_cav_phase)
        .opt(k("t_eff_delta_k"), r.t_eff_delta)
        .num(k("t_eff_omega_m_k"), r.t_eff_omega_m)
        .num(k("residual"), r.residual)
        .opt(k("condition"), r.condition)
        .num(k("min_symplectic_eigenvalue"), r.min_symplectic_eigenvalue)
        .flag(k("physical"), r.physical);
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Steady state of the coupled cavity and mirror.
pub fn coupled(scenario: &Scenario, method: CoupledMethod) -> CliResult<Outcome> {
    let cfg = scenario.resolved();
    let model = build_model(&cfg.system, cfg.mech()?, &cfg.noise)?;
    let quad = spectral_quad();
    let mut f = Fields::new();
    f.text("scenario_hash", scenario.hash()?)
        .text("name", cfg.name.clone().unwrap_or_default())
        .num("kappa", model.kappa)
        .num("delta", model.delta)
        .num("alpha_abs", model.alpha_abs)
        .num("omega_m", model.mech.omega_m)
        .num("gamma_m", model.mech.gamma_m)
        .num("n_th", model.mech.n_th)
        .num("g", model.g);
    noise_fields(&mut f, &model.noise);
    let reports = match method {
        CoupledMethod::Lyapunov => vec![solve(&model, Method::Lyapunov, &quad)?],
        CoupledMethod::Spectral => vec![solve(&model, Method::Spectral, &quad)?],
        CoupledMethod::Both => vec![
            solve(&model, Method::Lyapunov, &quad)?,
            solve(&model, Method::Spectral, &quad)?,
        ],
    };
    if let [r] = reports.as_slice() {
        cooling_fields(&mut f, "", r);
    } else {
        for r in &reports {
            cooling_fields(&mut f, &format!("{}.", r.method.as_str()), r);
        }
        f.num("agreement_n_m", relative_gap(reports[0].n_m, reports[1].n_m))
            .num("agreement_n_cav", relative_gap(reports[0].n_cav, reports[1].n_cav));
    }
    let warnings = reports
        .iter()
        .filter(|r| !r.physical)
        .map(|r| {
            format!(
                "warning: {}: covariance violates the uncertainty relation (min symplectic eigenvalue {})",
                r.method.as_str(),
                float(r.min_symplectic_eigenvalue)
            )
        })
        .collect();
    Outcome::from_fields(&f, warnings)
}

/// Columns of a sweep table, in order.
pub const SWEEP_COLUMNS: &[&str] = &[
    "scenario_hash",
    "point",
    "mode",
    "coordinates",
    "name",
    "kappa",
    "delta",
    "pump_rate",
    "noise_kind",
    "gamma_l",
    "total_strength",
    "center_frequency",
    "half_width",
    "spectrum",
    "dt",
    "duration",
    "burn_in",
    "n_trajectories",
    "seed",
    "substeps",
    "batches",
    "vacuum_noise",
    "omega_m",
    "gamma_m",
    "n_th",
    "g",
    "threshold",
    "alpha_re",
    "alpha_im",
    "n",
    "n_add",
    "t_eff_k",
    "margin_1",
    "margin_2",
    "condition_1_ok",
    "condition_2_ok",
    "max_gamma_l",
    "n_hat",
    "n_hat_se",
    "mean_re",
    "mean_im",
    "diverged",
    "n_cav",
    "n_m",
    "n_m_phase",
    "n_cav_phase",
    "residual",
    "physical",
];

/// One sweep row keyed by [`SWEEP_COLUMNS`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    values: Vec<String>,
}

impl SweepRow {
    fn new() -> Self {
        Self {
            values: vec![String::new(); SWEEP_COLUMNS.len()],
        }
    }

    fn set(&mut self, column: &str, value: impl Into<String>) {
        let i = SWEEP_COLUMNS
            .iter()
            .position(|c| *c == column)
            .unwrap_or_else(|| panic!("unknown sweep column {column}"));
        self.values[i] = value.into();
    }

    fn num(&mut self, column: &str, value: f64) {
        self.set(column, float(value));
    }

    pub fn get(&self, column: &str) -> Option<&str> {
        let i = SWEEP_COLUMNS.iter().position(|c| *c == column)?;
        Some(self.values[i].as_str()).filter(|v| !v.is_empty())
    }

    /// Parses a numeric cell.
    pub fn number(&self, column: &str) -> Option<f64> {
        self.get(column)?.parse().ok()
    }
}

/// Runs every grid point in every mode. Rows come back in grid order, modes
/// innermost, whatever the thread count.
pub fn sweep_rows(scenario: &Scenario, modes: &[SweepMode]) -> CliResult<Vec<SweepRow>> {
    let hash = scenario.hash()?;
    let grid = scenario.grid()?;
    let jobs: Vec<(&GridPoint, SweepMode)> = grid
        .iter()
        .flat_map(|p| modes.iter().map(move |m| (p, *m)))
        .collect();
    jobs.par_iter()
        .map(|&(p, m)| {
            sweep_row(&hash, p, m).map_err(|e| CliError::Point {
                index: p.index,
                mode: m.as_str(),
                source: Box::new(e),
            })
        })
        .collect()
}

fn sweep_row(hash: &str, point: &GridPoint, mode: SweepMode) -> CliResult<SweepRow> {
    let cfg: &Config = &point.config;
    let mut row = SweepRow::new();
    row.set("scenario_hash", hash);
    row.set("point", point.index.to_string());
    row.set("mode", mode.as_str());
    row.set(
        "coordinates",
        point
            .coordinates
            .iter()
            .map(|(k, v)| format!("{k}={}", float(*v)))
            .collect::<Vec<_>>()
            .join(";"),
    );
    row.set("name", cfg.name.clone().unwrap_or_default());
    row.num("kappa", cfg.system.kappa);
    row.num("delta", cfg.system.delta);
    row.set("noise_kind", cfg.noise.kind().as_str());
    row.num("gamma_l", cfg.noise.gamma_l());
    match &cfg.noise {
        NoiseSpec::Lorentzian(l) => {
            row.num("total_strength", l.total_strength);
            row.num("center_frequency", l.center_frequency);
            row.num("half_width", l.half_width);
        }
        NoiseSpec::Tabulated(t) => row.set("spectrum", spectrum_text(&t.points)),
        _ => {}
    }
    row.num("threshold", cfg.analytic.threshold);
    if let Some(m) = &cfg.mech {
        row.num("omega_m", m.omega_m);
        row.num("gamma_m", m.gamma_m);
        row.num("n_th", m.n_th);
    }

    let analytic = validate_system(&cfg.system, &cfg.noise).and_then(|(system, noise)| {
        let a = &cfg.analytic;
        steady_state_report(&system, &noise, a.threshold, a.target_n_add, &QuadConfig::default()).map(|r| (system, r))
    });
    let analytic = match (mode, analytic) {
        (SweepMode::Analytic, r) => Some(r?),
        (_, r) => r.ok(),
    };
    if let Some((system, r)) = &analytic {
        row.num("pump_rate", system.pump());
        row.num("alpha_re", r.alpha_re);
        row.num("alpha_im", r.alpha_im);
        row.num("n", r.n);
        row.num("n_add", r.n_add);
        if let Some(t) = r.t_eff {
            row.num("t_eff_k", t);
        }
        row.num("margin_1", r.margin_1);
        row.num("margin_2", r.margin_2);
        row.set("condition_1_ok", r.condition_1_ok.to_string());
        row.set("condition_2_ok", r.condition_2_ok.to_string());
        row.num("max_gamma_l", r.max_gamma_l);
    }

    let sim_echo = |row: &mut SweepRow, s: &SimConfig| {
        row.num("dt", s.dt);
        row.num("duration", s.duration);
        if let Some(b) = s.burn_in {
            row.num("burn_in", b);
        }
        row.set("n_trajectories", s.n_trajectories.to_string());
        row.set("seed", s.seed.to_string());
        row.set("substeps", s.substeps.to_string());
        row.set("batches", s.batches.to_string());
        row.set("vacuum_noise", s.vacuum_noise.to_string());
    };

    let run_mode = match mode {
        SweepMode::Displaced => Some(RunMode::Displaced),
        SweepMode::Lab => Some(RunMode::Lab),
        SweepMode::Twin => Some(RunMode::Twin),
        _ => None,
    };
    if let Some(run_mode) = run_mode {
        let bundle = validate(&cfg.system, &cfg.noise, cfg.sim()?)?;
        sim_echo(&mut row, bundle.sim());
        let stats = run_ensemble(&bundle, run_mode, RunOptions::default())?.stats;
        let m = stats.primary();
        row.num("n_hat", m.occupation);
        row.num("n_hat_se", m.occupation_se);
        row.num("mean_re", m.mean_re);
        row.num("mean_im", m.mean_im);
        row.set("diverged", stats.diverged.to_string());
    } else if let Some(s) = &cfg.sim {
        sim_echo(&mut row, s);
    }

    let method = match mode {
        SweepMode::CoupledLyapunov => Some(Method::Lyapunov),
        SweepMode::CoupledSpectral => Some(Method::Spectral),
        _ => None,
    };
    if let Some(method) = method {
        let model = build_model(&cfg.system, cfg.mech()?, &cfg.noise)?;
        let r = solve(&model, method, &spectral_quad())?;
        row.num("g", model.g);
        row.num("n_cav", r.n_cav);
        row.num("n_m", r.n_m);
        row.num("n_m_phase", r.n_m_phase);
        row.num("n_cav_phase", r.n_cav_phase);
        row.num("residual", r.residual);
        row.set("physical", r.physical.to_string());
    } else if let Some(g) = cfg.mech.as_ref().and_then(|m| m.g) {
        row.num("g", g);
    }
    Ok(row)
}

pub fn render_sweep(rows: &[SweepRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record(&r.values)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| phasenoise::Error::Io(e.into_error()))?).expect("csv output is utf-8"))
}

/// Parameter sweep as one CSV table.
pub fn sweep(scenario: &Scenario, modes: &[SweepMode]) -> CliResult<Outcome> {
    let modes = if !modes.is_empty() {
        modes.to_vec()
    } else {
        match scenario.sweep.as_ref().map(|s| s.modes.clone()) {
            Some(m) if !m.is_empty() => m,
            _ => vec![SweepMode::Analytic],
        }
    };
    let rows = sweep_rows(scenario, &modes)?;
    Ok(Outcome {
        payload: render_sweep(&rows)?,
        csv: None,
        diagnostics: vec![format!("{} rows", rows.len())],
    })
}

#[derive(Debug, Clone)]
pub struct PsdOptions {
    pub input: PathBuf,
    /// Column to analyse; defaults to the second column, or the only one.
    pub column: Option<String>,
    /// Sample spacing; defaults to the spacing of a `t` column.
    pub dt: Option<f64>,
    pub segment: Option<usize>,
    pub overlap: f64,
}

fn read_columns(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, cell) in rec.iter().enumerate().take(headers.len()) {
            let x = cell
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("{} row {}: {e} ({cell:?})", path.display(), i + 2)))?;
            cols[j].push(x);
        }
    }
    Ok((headers, cols))
}

/// Welch spectrum of one column of a sample file, in the spectrum-table format.
pub fn psd(opts: &PsdOptions) -> CliResult<Outcome> {
    let (headers, cols) = read_columns(&opts.input)?;
    let idx = match &opts.column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("no column {name:?}; columns are {}", headers.join(", "))))?,
        None if headers.len() >= 2 => 1,
        None if headers.len() == 1 => 0,
        None => return Err(CliError::Usage(format!("{}: no columns", opts.input.display()))),
    };
    let dt = match opts.dt {
        Some(dt) => dt,
        None => {
            let t = headers
                .iter()
                .position(|h| h == "t")
                .map(|i| &cols[i])
                .ok_or_else(|| CliError::Usage("no t column; pass --dt".into()))?;
            if t.len() < 2 {
                return Err(CliError::Usage("need at least two samples".into()));
            }
            (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64
        }
    };
    let samples = &cols[idx];
    let segment = opts.segment.unwrap_or_else(|| {
        let target = (samples.len() / 8).clamp(2, 1 << 16);
        1usize << target.ilog2()
    });
    let est = estimate_psd(samples, dt, segment, opts.overlap)?;
    let mut out = Vec::new();
    write_spectrum_csv(&mut out, est.omega.iter().copied().zip(est.density.iter().copied()))?;
    Ok(Outcome {
        payload: String::from_utf8(out).expect("csv output is utf-8"),
        csv: None,
        diagnostics: vec![format!(
            "column {}: {} segments of {} samples, dt = {}",
            headers[idx],
            est.segments,
            est.segment_length,
            float(dt)
        )],
    })
}
