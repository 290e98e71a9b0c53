//! Physical parameter types shared by every other module, and their validation.
//!
//! Rates are angular (rad/s). A spectrum `S(ω)` is the two-sided power spectral
//! density of the laser frequency fluctuation `φ̇`, normalised so that
//! `⟨φ̇(t)φ̇(s)⟩ = ∫ dω/2π S(ω) e^{iω(t−s)}`; white phase diffusion of linewidth
//! `Γ_l` is the constant spectrum `S = 2Γ_l`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR};
use crate::{Error, Result, Violation};

/// Upper bound on `dt·max(κ+Γ_l, |Δ|)`.
pub const MAX_STEP_PRODUCT: f64 = 0.1;
/// Relative tolerance for a pump rate given alongside laser power and wavelength.
pub const PUMP_CONSISTENCY_RTOL: f64 = 1e-12;

/// Single-cavity parameters.
///
/// The pump amplitude may be given directly (`pump_rate`), derived from
/// `laser_power` + `laser_wavelength`, or derived from a target intracavity
/// `photon_number`. After [`validate_system`] the pump rate is always present
/// and `photon_number` has been folded into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Cavity amplitude decay rate κ.
    pub kappa: f64,
    /// Detuning Δ.
    #[serde(default)]
    pub delta: f64,
    /// Pump amplitude E, s⁻¹.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_rate: Option<f64>,
    /// Laser power, W.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser_power: Option<f64>,
    /// Laser wavelength, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser_wavelength: Option<f64>,
    /// Target |α|², an alternative to specifying the pump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_number: Option<f64>,
}

impl SystemParams {
    pub fn new(kappa: f64, delta: f64, pump_rate: f64) -> Self {
        Self {
            kappa,
            delta,
            pump_rate: Some(pump_rate),
            laser_power: None,
            laser_wavelength: None,
            photon_number: None,
        }
    }

    /// Builds parameters whose steady amplitude has `|α|² = n` under a
    /// phase-diffusion damping `gamma_l`, with α real and positive up to the
    /// detuning phase.
    pub fn with_photon_number(kappa: f64, delta: f64, gamma_l: f64, n: f64) -> Self {
        Self::new(kappa, delta, pump_for_photon_number(kappa, delta, gamma_l, n))
    }

    /// Pump rate; zero if unresolved.
    pub fn pump(&self) -> f64 {
        self.pump_rate.unwrap_or(0.0)
    }
}

fn pump_for_photon_number(kappa: f64, delta: f64, gamma_l: f64, n: f64) -> f64 {
    n.sqrt() * Complex64::new(kappa + gamma_l, delta).norm()
}

/// Pump amplitude `E = √(2κP/ħω_L)` with `ω_L = 2πc/λ`.
///
/// This is the usual input-coupling normalisation for a one-sided cavity of
/// total amplitude decay κ. It is only one of several conventions in use;
/// give `pump_rate` directly to override it.
pub fn pump_rate_from_power(power: f64, wavelength: f64, kappa: f64) -> Result<f64> {
    for (name, v) in [("power", power), ("wavelength", wavelength), ("kappa", kappa)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let photon_energy = HBAR * 2.0 * std::f64::consts::PI * C / wavelength;
    Ok((2.0 * kappa * power / photon_energy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    White,
    Lorentzian,
    Tabulated,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::White => "white",
            NoiseKind::Lorentzian => "lorentzian",
            NoiseKind::Tabulated => "tabulated",
        }
    }
}

/// Symmetric Lorentzian pair
/// `S(ω) = W·γ·[1/(γ²+(ω−ω₀)²) + 1/(γ²+(ω+ω₀)²)]`.
///
/// `total_strength` W is the variance of φ̇, i.e. `∫ dω/2π S(ω)`. This is the
/// spectrum of the real part of a complex Ornstein–Uhlenbeck process rotating
/// at ω₀ with damping γ, which is how it is synthesised in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lorentzian {
    /// Phase-diffusion damping added to κ; zero for a non-diffusing phase.
    #[serde(default)]
    pub gamma_l: f64,
    pub total_strength: f64,
    pub center_frequency: f64,
    pub half_width: f64,
}

impl Lorentzian {
    pub fn density(&self, omega: f64) -> f64 {
        let g = self.half_width;
        let a = omega - self.center_frequency;
        let b = omega + self.center_frequency;
        self.total_strength * g * (1.0 / (g * g + a * a) + 1.0 / (g * g + b * b))
    }
}

/// Piecewise-linear spectrum through `(ω, S)` points, ω ≥ 0 strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated {
    #[serde(default)]
    pub gamma_l: f64,
    pub points: Vec<(f64, f64)>,
}

impl Tabulated {
    pub fn range(&self) -> (f64, f64) {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => (f64::NAN, f64::NAN),
        }
    }

    /// Linear interpolation at `w ≥ 0`; `None` outside the tabulated range.
    pub fn interpolate(&self, w: f64) -> Option<f64> {
        let pts = &self.points;
        let (lo, hi) = self.range();
        if !(w >= lo && w <= hi) {
            return None;
        }
        let i = pts.partition_point(|p| p.0 <= w);
        if i == 0 {
            return Some(pts[0].1);
        }
        if i >= pts.len() {
            return Some(pts[pts.len() - 1].1);
        }
        let (w0, s0) = pts[i - 1];
        let (w1, s1) = pts[i];
        let t = (w - w0) / (w1 - w0);
        Some(s0 + t * (s1 - s0))
    }

    /// Interpolation with flat extension beyond either end of the table.
    pub fn interpolate_clamped(&self, w: f64) -> f64 {
        let (lo, hi) = self.range();
        self.interpolate(w.clamp(lo, hi)).unwrap_or(0.0)
    }
}

/// Laser frequency-noise model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    White {
        gamma_l: f64,
    },
    Lorentzian(Lorentzian),
    Tabulated(Tabulated),
}

impl NoiseSpec {
    pub fn white(gamma_l: f64) -> Self {
        NoiseSpec::White { gamma_l }
    }

    pub fn lorentzian(total_strength: f64, center_frequency: f64, half_width: f64) -> Self {
        NoiseSpec::Lorentzian(Lorentzian {
            gamma_l: 0.0,
            total_strength,
            center_frequency,
            half_width,
        })
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Self {
        NoiseSpec::Tabulated(Tabulated {
            gamma_l: 0.0,
            points,
        })
    }

    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseSpec::None => NoiseKind::None,
            NoiseSpec::White { .. } => NoiseKind::White,
            NoiseSpec::Lorentzian(_) => NoiseKind::Lorentzian,
            NoiseSpec::Tabulated(_) => NoiseKind::Tabulated,
        }
    }

    /// Linewidth Γ_l entering the damping `κ+Γ_l` of the displaced mode.
    pub fn gamma_l(&self) -> f64 {
        match self {
            NoiseSpec::None => 0.0,
            NoiseSpec::White { gamma_l } => *gamma_l,
            NoiseSpec::Lorentzian(l) => l.gamma_l,
            NoiseSpec::Tabulated(t) => t.gamma_l,
        }
    }

    /// `S(|ω|)`; `None` where a tabulated spectrum is undefined.
    pub fn spectral_density(&self, omega: f64) -> Option<f64> {
        let w = omega.abs();
        match self {
            NoiseSpec::None => Some(0.0),
            NoiseSpec::White { gamma_l } => Some(2.0 * gamma_l),
            NoiseSpec::Lorentzian(l) => Some(l.density(w)),
            NoiseSpec::Tabulated(t) => t.interpolate(w),
        }
    }

    /// Whether `S` is defined for every ω in `[lo, hi]`.
    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        match self {
            NoiseSpec::Tabulated(t) => {
                let (a, b) = t.range();
                // |ω| over the interval
                let (wmin, wmax) = if lo <= 0.0 && hi >= 0.0 {
                    (0.0, lo.abs().max(hi.abs()))
                } else {
                    (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()))
                };
                a <= wmin && b >= wmax
            }
            _ => true,
        }
    }

    /// Frequencies where the spectrum has kinks or peaks worth splitting a
    /// quadrature at (non-negative side only).
    pub fn features(&self) -> Vec<f64> {
        match self {
            NoiseSpec::Lorentzian(l) => {
                let mut v = vec![l.center_frequency];
                for k in [1.0, 10.0] {
                    v.push(l.center_frequency + k * l.half_width);
                    v.push((l.center_frequency - k * l.half_width).max(0.0));
                }
                v
            }
            NoiseSpec::Tabulated(t) => t.points.iter().map(|p| p.0).collect(),
            _ => Vec::new(),
        }
    }

    fn check(&self, out: &mut Vec<Violation>) {
        let nonneg = |out: &mut Vec<Violation>, field: &str, v: f64| {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Violation::new(field, format!("must be finite and >= 0, got {v}")));
            }
        };
        match self {
            NoiseSpec::None => {}
            NoiseSpec::White { gamma_l } => nonneg(out, "noise.gamma_l", *gamma_l),
            NoiseSpec::Lorentzian(l) => {
                nonneg(out, "noise.gamma_l", l.gamma_l);
                nonneg(out, "noise.total_strength", l.total_strength);
                nonneg(out, "noise.center_frequency", l.center_frequency);
                if !(l.half_width > 0.0 && l.half_width.is_finite()) {
                    out.push(Violation::new(
                        "noise.half_width",
                        format!("must be > 0, got {}", l.half_width),
                    ));
                }
            }
            NoiseSpec::Tabulated(t) => {
                nonneg(out, "noise.gamma_l", t.gamma_l);
                if t.points.len() < 2 {
                    out.push(Violation::new("noise.points", "need at least two (ω, S) points"));
                }
                for (i, &(w, s)) in t.points.iter().enumerate() {
                    if !(w >= 0.0 && w.is_finite()) {
                        out.push(Violation::new(
                            format!("noise.points[{i}].omega"),
                            format!("must be finite and >= 0, got {w}"),
                        ));
                    }
                    if !(s >= 0.0 && s.is_finite()) {
                        out.push(Violation::new(
                            format!("noise.points[{i}].S"),
                            format!("must be finite and >= 0, got {s}"),
                        ));
                    }
                }
                for (i, pair) in t.points.windows(2).enumerate() {
                    if !(pair[1].0 > pair[0].0) {
                        out.push(Violation::new(
                            format!("noise.points[{}].omega", i + 1),
                            format!(
                                "grid must be strictly increasing ({} after {})",
                                pair[1].0, pair[0].0
                            ),
                        ));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    #[default]
    Displaced,
}

fn default_true() -> bool {
    true
}

fn default_batches() -> usize {
    16
}

fn default_substeps() -> u32 {
    1
}

fn is_one(v: &u32) -> bool {
    *v == 1
}

/// Integration and ensemble settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Discarded initial interval; defaults to `10/κ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    pub n_trajectories: usize,
    pub seed: u64,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default = "default_true")]
    pub vacuum_noise: bool,
    /// Batches per trajectory for the error bars.
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Noise is drawn on a grid `dt/substeps` and summed per step, so that a
    /// run at `dt` with `substeps = 2` sees the same Brownian path as a run at
    /// `dt/2`.
    #[serde(default = "default_substeps", skip_serializing_if = "is_one")]
    pub substeps: u32,
}

impl SimConfig {
    pub fn new(dt: f64, duration: f64, n_trajectories: usize, seed: u64) -> Self {
        Self {
            dt,
            duration,
            burn_in: None,
            n_trajectories,
            seed,
            frame: Frame::Displaced,
            vacuum_noise: true,
            batches: default_batches(),
            substeps: 1,
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in.unwrap_or(0.0) / self.dt).round() as usize
    }
}

/// A parameter bundle that has passed [`validate`]. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validated {
    system: SystemParams,
    noise: NoiseSpec,
    sim: SimConfig,
    #[serde(skip)]
    warnings: Vec<String>,
}

impl Validated {
    pub fn system(&self) -> &SystemParams {
        &self.system
    }
    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }
    pub fn sim(&self) -> &SimConfig {
        &self.sim
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
    pub fn into_parts(self) -> (SystemParams, NoiseSpec, SimConfig) {
        (self.system, self.noise, self.sim)
    }
}

/// Validates the physical parameters alone and resolves the pump rate.
pub fn validate_system(params: &SystemParams, noise: &NoiseSpec) -> Result<(SystemParams, NoiseSpec)> {
    let mut v = Vec::new();
    let p = check_system(params, noise, &mut v);
    if v.is_empty() {
        Ok((p, noise.clone()))
    } else {
        Err(Error::Invalid(v))
    }
}

fn check_system(params: &SystemParams, noise: &NoiseSpec, v: &mut Vec<Violation>) -> SystemParams {
    let mut p = params.clone();
    if !(p.kappa > 0.0 && p.kappa.is_finite()) {
        v.push(Violation::new("system.kappa", format!("must be > 0, got {}", p.kappa)));
    }
    if !p.delta.is_finite() {
        v.push(Violation::new("system.delta", "must be finite"));
    }
    noise.check(v);

    if let Some(l) = p.laser_wavelength {
        if !(l > 0.0 && l.is_finite()) {
            v.push(Violation::new("system.laser_wavelength", format!("must be > 0, got {l}")));
        }
    }
    if let Some(pw) = p.laser_power {
        if !(pw >= 0.0 && pw.is_finite()) {
            v.push(Violation::new("system.laser_power", format!("must be >= 0, got {pw}")));
        }
    }
    if let Some(e) = p.pump_rate {
        if !(e >= 0.0 && e.is_finite()) {
            v.push(Violation::new("system.pump_rate", format!("must be >= 0, got {e}")));
        }
    }
    if !v.is_empty() {
        return p;
    }

    let derived = match (p.laser_power, p.laser_wavelength) {
        (Some(pw), Some(l)) => Some(if pw == 0.0 {
            0.0
        } else {
            pump_rate_from_power(pw, l, p.kappa).unwrap_or(f64::NAN)
        }),
        (Some(_), None) | (None, Some(_)) => {
            v.push(Violation::new(
                "system.laser_power",
                "laser_power and laser_wavelength must be given together",
            ));
            None
        }
        (None, None) => None,
    };

    if let Some(n) = p.photon_number {
        if p.pump_rate.is_some() || derived.is_some() {
            v.push(Violation::new(
                "system.photon_number",
                "give either photon_number or the pump (pump_rate / laser_power), not both",
            ));
        } else if !(n >= 0.0 && n.is_finite()) {
            v.push(Violation::new("system.photon_number", format!("must be >= 0, got {n}")));
        } else {
            p.pump_rate = Some(pump_for_photon_number(p.kappa, p.delta, noise.gamma_l(), n));
            p.photon_number = None;
        }
        return p;
    }

    match (p.pump_rate, derived) {
        (Some(e), Some(d)) => {
            if (e - d).abs() > PUMP_CONSISTENCY_RTOL * d.abs() {
                v.push(Violation::new(
                    "system.pump_rate",
                    format!("{e} disagrees with the value {d} derived from laser power and wavelength"),
                ));
            }
        }
        (None, Some(d)) => p.pump_rate = Some(d),
        (Some(_), None) => {}
        (None, None) => v.push(Violation::new(
            "system.pump_rate",
            "missing: give pump_rate, laser_power + laser_wavelength, or photon_number",
        )),
    }
    p
}

/// Checks every invariant of the bundle and resolves defaults. Returns all
/// violations at once; never mutates the inputs.
pub fn validate(params: &SystemParams, noise: &NoiseSpec, cfg: &SimConfig) -> Result<Validated> {
    let mut v = Vec::new();
    let system = check_system(params, noise, &mut v);
    let mut sim = cfg.clone();
    let mut warnings = Vec::new();

    if !(sim.dt > 0.0 && sim.dt.is_finite()) {
        v.push(Violation::new("sim.dt", format!("must be > 0, got {}", sim.dt)));
    }
    if !(sim.duration > 0.0 && sim.duration.is_finite()) {
        v.push(Violation::new("sim.duration", format!("must be > 0, got {}", sim.duration)));
    }
    if sim.n_trajectories < 1 {
        v.push(Violation::new("sim.n_trajectories", "must be >= 1"));
    }
    if sim.batches < 1 {
        v.push(Violation::new("sim.batches", "must be >= 1"));
    }
    if sim.substeps < 1 {
        v.push(Violation::new("sim.substeps", "must be >= 1"));
    }
    let kappa = system.kappa;
    let burn_in = sim.burn_in.unwrap_or(10.0 / kappa);
    if !(burn_in >= 0.0 && burn_in < sim.duration) {
        v.push(Violation::new(
            "sim.burn_in",
            format!("must satisfy 0 <= burn_in < duration ({} given, duration {})", burn_in, sim.duration),
        ));
    } else if kappa > 0.0 && burn_in < 5.0 / kappa {
        warnings.push(format!(
            "sim.burn_in = {burn_in} is shorter than the recommended 5/kappa = {}",
            5.0 / kappa
        ));
    }
    sim.burn_in = Some(burn_in);

    let rate = (kappa + noise.gamma_l()).max(system.delta.abs());
    if sim.dt > 0.0 && rate.is_finite() && sim.dt * rate > MAX_STEP_PRODUCT {
        v.push(Violation::new(
            "sim.dt",
            format!(
                "dt*max(kappa+gamma_l, |delta|) = {} exceeds {MAX_STEP_PRODUCT}",
                sim.dt * rate
            ),
        ));
    }
    if v.is_empty() {
        let kept = sim.steps().saturating_sub(sim.burn_in_steps());
        if kept < sim.batches {
            v.push(Violation::new(
                "sim.duration",
                format!("only {kept} steps remain after burn-in; need at least one per batch ({})", sim.batches),
            ));
        }
    }

    if v.is_empty() {
        Ok(Validated {
            system,
            noise: noise.clone(),
            sim,
            warnings,
        })
    } else {
        Err(Error::Invalid(v))
    }
}
