//! Time-domain integration of the single- and twin-cavity stochastic equations
//! and ensemble estimation of steady-state occupations.
//!
//! Amplitudes are c-numbers in the symmetrised representation: vacuum input
//! over a step is `w/√2` with `E|w|² = dt`, so a cavity in its vacuum state
//! has `⟨|δa|²⟩ = ½` and the normal-ordered occupation is `⟨|δa|²⟩ − ½`.
//!
//! Every stepper is an exponential integrator: the linear drift is propagated
//! exactly and additive noise carries the factor
//! `√((1 − e^{−2r·dt})/(2r·dt))`, `r` the damping rate, which makes the
//! per-step second moments of white noise exact.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::mean_amplitude;
use crate::model::{Frame, NoiseKind, NoiseSpec, SystemParams, Validated};
use crate::noise::{stream, Channel, PhaseSource, VacuumSource};
use crate::{Error, Result};

/// A trajectory is abandoned once `|a|` exceeds this multiple of `max(|α|, 1)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Largest tolerated fraction of divergent trajectories.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `√((1 − e^{−2r·dt})/(2r·dt))`, → 1 as `r·dt → 0`.
fn white_factor(rate: f64, dt: f64) -> f64 {
    let x = 2.0 * rate * dt;
    if x == 0.0 {
        1.0
    } else {
        (-(-x).exp_m1() / x).sqrt()
    }
}

/// `(1 − e^{−λdt})/(λdt)`, → 1 as `λdt → 0`.
fn hold_factor(lambda: Complex64, dt: f64) -> Complex64 {
    let z = lambda * dt;
    if z.norm() < 1e-8 {
        Complex64::new(1.0, 0.0) - 0.5 * z
    } else {
        (Complex64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// Displaced-frame update `ȧ = −(κ+Γ_l+iΔ)a + iαφ̇ + √(2κ)a_in`.
///
/// The `(α + a)φ̇` drive is approximated by `αφ̇`. White phase noise is
/// scaled by the same exact factor as the vacuum; colored phase increments
/// are treated as a frequency held constant over the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacedStep {
    decay: Complex64,
    drive: Complex64,
    vacuum: f64,
}

impl DisplacedStep {
    pub fn new(params: &SystemParams, noise: &NoiseSpec, dt: f64) -> Self {
        Self::with_alpha(params, noise, dt, mean_amplitude(params, noise.gamma_l()))
    }

    pub fn with_alpha(params: &SystemParams, noise: &NoiseSpec, dt: f64, alpha: Complex64) -> Self {
        let kp = params.kappa + noise.gamma_l();
        let lambda = Complex64::new(kp, params.delta);
        let phase_factor = match noise.kind() {
            NoiseKind::Lorentzian | NoiseKind::Tabulated => hold_factor(lambda, dt),
            _ => Complex64::new(white_factor(kp, dt), 0.0),
        };
        Self {
            decay: (-lambda * dt).exp(),
            drive: I * alpha * phase_factor,
            vacuum: params.kappa.sqrt() * white_factor(kp, dt),
        }
    }

    #[inline]
    pub fn step(&self, a: Complex64, dphi: f64, w: Complex64) -> Complex64 {
        self.decay * a + self.drive * dphi + self.vacuum * w
    }
}

/// One displaced-frame step; see [`DisplacedStep`].
pub fn step_displaced(a: Complex64, dt: f64, params: &SystemParams, noise: &NoiseSpec, dphi: f64, w: Complex64) -> Complex64 {
    DisplacedStep::new(params, noise, dt).step(a, dphi, w)
}

/// Lab-frame update `ȧ = −(κ+iΔ)a + E e^{−iφ} + √(2κ)a_in`, with the pump
/// phase taken at the midpoint of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabStep {
    decay: Complex64,
    pump: Complex64,
    vacuum: f64,
}

impl LabStep {
    pub fn new(params: &SystemParams, dt: f64) -> Self {
        let mu = Complex64::new(params.kappa, params.delta);
        Self {
            decay: (-mu * dt).exp(),
            pump: params.pump() * dt * hold_factor(mu, dt),
            vacuum: params.kappa.sqrt() * white_factor(params.kappa, dt),
        }
    }

    #[inline]
    pub fn step(&self, a: Complex64, phi: f64, dphi: f64, w: Complex64) -> (Complex64, f64) {
        let mid = phi + 0.5 * dphi;
        let a = self.decay * a + self.pump * Complex64::from_polar(1.0, -mid) + self.vacuum * w;
        (a, phi + dphi)
    }
}

/// One lab-frame step; see [`LabStep`].
pub fn step_lab(a: Complex64, phi: f64, dt: f64, params: &SystemParams, dphi: f64, w: Complex64) -> (Complex64, f64) {
    LabStep::new(params, dt).step(a, phi, dphi, w)
}

/// Differential mode of two identically pumped cavities,
/// `ȧ = −(κ+Γ_l+iΔ)a + iφ̇a + √(2κ)a_in`: the additive `iαφ̇` drive has
/// cancelled and the multiplicative term is applied as an exact rotation
/// `e^{iΔφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinStep {
    decay: Complex64,
    vacuum: f64,
}

impl TwinStep {
    pub fn new(params: &SystemParams, noise: &NoiseSpec, dt: f64) -> Self {
        let kp = params.kappa + noise.gamma_l();
        Self {
            decay: (-Complex64::new(kp, params.delta) * dt).exp(),
            vacuum: params.kappa.sqrt() * white_factor(kp, dt),
        }
    }

    #[inline]
    pub fn step(&self, a: Complex64, dphi: f64, w: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, dphi) * (self.decay * a + self.vacuum * w)
    }
}

/// One twin-cavity differential-mode step; see [`TwinStep`].
pub fn step_twin(a: Complex64, dt: f64, params: &SystemParams, noise: &NoiseSpec, dphi: f64, w: Complex64) -> Complex64 {
    TwinStep::new(params, noise, dt).step(a, dphi, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Displaced,
    /// Lab frame; statistics are taken of the phase-referenced `a·e^{iφ}`.
    Lab,
    Twin,
    /// Two lab-frame cavities driven by one φ path and independent vacua.
    TwoCavityLab,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Displaced => "displaced",
            RunMode::Lab => "lab",
            RunMode::Twin => "twin",
            RunMode::TwoCavityLab => "two_cavity_lab",
        }
    }

    /// Labels of the modes reported, in order.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            RunMode::Displaced | RunMode::Lab => &["a"],
            RunMode::Twin => &["diff"],
            RunMode::TwoCavityLab => &["a", "b", "sum", "diff"],
        }
    }
}

impl From<Frame> for RunMode {
    fn from(f: Frame) -> Self {
        match f {
            Frame::Lab => RunMode::Lab,
            Frame::Displaced => RunMode::Displaced,
        }
    }
}

/// Stored samples of one trajectory, one per step after `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub mode: RunMode,
    pub times: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Option<Vec<Complex64>>,
}

impl Trajectory {
    /// CSV with columns `t,re_a,im_a[,re_b,im_b]`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        use crate::fmt::float;
        if self.b.is_some() {
            writeln!(w, "t,re_a,im_a,re_b,im_b")?;
        } else {
            writeln!(w, "t,re_a,im_a")?;
        }
        for (k, t) in self.times.iter().enumerate() {
            let a = self.a[k];
            match &self.b {
                Some(b) => writeln!(w, "{},{},{},{},{}", float(*t), float(a.re), float(a.im), float(b[k].re), float(b[k].im))?,
                None => writeln!(w, "{},{},{}", float(*t), float(a.re), float(a.im))?,
            }
        }
        Ok(())
    }
}

/// Moment estimates for one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeStats {
    pub label: String,
    pub mean_re: f64,
    pub mean_im: f64,
    pub mean_se: f64,
    /// `⟨|a|²⟩`.
    pub raw_second_moment: f64,
    /// `⟨|a − ⟨a⟩|²⟩ − ½`; not clipped at zero.
    pub occupation: f64,
    pub occupation_se: f64,
    pub samples: u64,
    pub batches: usize,
}

impl ModeStats {
    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.mean_re, self.mean_im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub mode: RunMode,
    pub trajectories: usize,
    pub diverged: usize,
    pub modes: Vec<ModeStats>,
}

impl EnsembleStats {
    pub fn get(&self, label: &str) -> Option<&ModeStats> {
        self.modes.iter().find(|m| m.label == label)
    }

    /// The first (or only) mode.
    pub fn primary(&self) -> &ModeStats {
        &self.modes[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub stats: EnsembleStats,
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Keep full samples of the first this-many trajectories.
    pub store_trajectories: usize,
}

/// Per-batch sums of `z`, `|z|²` for a shifted amplitude `z = a − shift`.
#[derive(Debug, Clone, Copy, Default)]
struct BatchSum {
    count: u64,
    sum: Complex64,
    sum_sq: f64,
}

struct TrajectoryResult {
    batches: Vec<Vec<BatchSum>>,
    stored: Option<Trajectory>,
    diverged_at: Option<usize>,
}

struct Plan<'a> {
    mode: RunMode,
    params: &'a SystemParams,
    noise: &'a NoiseSpec,
    dt: f64,
    steps: usize,
    burn: usize,
    batches: usize,
    seed: u64,
    substeps: u32,
    vacuum: bool,
    alpha: Complex64,
    limit: f64,
    shifts: Vec<Complex64>,
}

impl Plan<'_> {
    fn batch_of(&self, step: usize) -> Option<usize> {
        if step < self.burn {
            return None;
        }
        let kept = self.steps - self.burn;
        Some((step - self.burn) * self.batches / kept)
    }

    fn run(&self, traj: usize, store: bool) -> Result<TrajectoryResult> {
        let t = traj as u64;
        let mut phase = PhaseSource::new(self.noise, stream(self.seed, t, Channel::Phase), self.dt, self.steps, self.substeps)?;
        let mut va = VacuumSource::new(stream(self.seed, t, Channel::VacuumA), self.dt, self.substeps, self.vacuum);
        let two = matches!(self.mode, RunMode::Twin | RunMode::TwoCavityLab);
        let mut vb = VacuumSource::new(stream(self.seed, t, Channel::VacuumB), self.dt, self.substeps, self.vacuum && two);

        let tracked = self.mode.labels().len();
        let mut sums = vec![vec![BatchSum::default(); self.batches]; tracked];
        let mut stored_a = Vec::new();
        let mut stored_b = Vec::new();
        if store {
            stored_a.reserve(self.steps);
        }

        let displaced = DisplacedStep::with_alpha(self.params, self.noise, self.dt, self.alpha);
        let lab = LabStep::new(self.params, self.dt);
        let twin = TwinStep::new(self.params, self.noise, self.dt);
        let s = std::f64::consts::FRAC_1_SQRT_2;

        let (mut a, mut b) = match self.mode {
            RunMode::Displaced | RunMode::Twin => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            RunMode::Lab | RunMode::TwoCavityLab => (self.alpha, self.alpha),
        };
        let mut phi = 0.0;
        let mut values = [Complex64::new(0.0, 0.0); 4];

        for step in 0..self.steps {
            let dphi = phase.next();
            let wa = va.next();
            match self.mode {
                RunMode::Displaced => {
                    a = displaced.step(a, dphi, wa);
                    values[0] = a;
                }
                RunMode::Twin => {
                    let wb = vb.next();
                    a = twin.step(a, dphi, s * (wa - wb));
                    values[0] = a;
                }
                RunMode::Lab => {
                    let (na, nphi) = lab.step(a, phi, dphi, wa);
                    a = na;
                    phi = nphi;
                    values[0] = a * Complex64::from_polar(1.0, phi);
                }
                RunMode::TwoCavityLab => {
                    let wb = vb.next();
                    let (na, nphi) = lab.step(a, phi, dphi, wa);
                    let (nb, _) = lab.step(b, phi, dphi, wb);
                    a = na;
                    b = nb;
                    phi = nphi;
                    let rot = Complex64::from_polar(1.0, phi);
                    let (ca, cb) = (a * rot, b * rot);
                    values = [ca, cb, s * (ca + cb), s * (ca - cb)];
                }
            }
            if !(a.norm() <= self.limit && b.norm() <= self.limit) {
                return Ok(TrajectoryResult {
                    batches: Vec::new(),
                    stored: None,
                    diverged_at: Some(step),
                });
            }
            if store {
                stored_a.push(a);
                if self.mode == RunMode::TwoCavityLab {
                    stored_b.push(b);
                }
            }
            if let Some(k) = self.batch_of(step) {
                for (m, v) in values.iter().take(tracked).enumerate() {
                    let z = v - self.shifts[m];
                    let bs = &mut sums[m][k];
                    bs.count += 1;
                    bs.sum += z;
                    bs.sum_sq += z.norm_sqr();
                }
            }
        }

        let stored = store.then(|| Trajectory {
            dt: self.dt,
            mode: self.mode,
            times: (1..=self.steps).map(|k| k as f64 * self.dt).collect(),
            a: stored_a,
            b: (self.mode == RunMode::TwoCavityLab).then_some(stored_b),
        });
        Ok(TrajectoryResult {
            batches: sums,
            stored,
            diverged_at: None,
        })
    }
}

fn finish(label: &str, shift: Complex64, batches: &[BatchSum]) -> ModeStats {
    let n: u64 = batches.iter().map(|b| b.count).sum();
    let nf = n as f64;
    let sum: Complex64 = batches.iter().map(|b| b.sum).sum();
    let sum_sq: f64 = batches.iter().map(|b| b.sum_sq).sum();
    let mu = sum / nf;
    let central = sum_sq / nf - mu.norm_sqr();

    let used: Vec<&BatchSum> = batches.iter().filter(|b| b.count > 0).collect();
    let nb = used.len() as f64;
    let per_batch: Vec<(Complex64, f64)> = used
        .iter()
        .map(|b| {
            let c = b.count as f64;
            let m1 = b.sum / c;
            let m2 = b.sum_sq / c - 2.0 * (mu.conj() * m1).re + mu.norm_sqr();
            (m1, m2)
        })
        .collect();
    let (mean_se, occ_se) = if used.len() > 1 {
        let m2bar = per_batch.iter().map(|p| p.1).sum::<f64>() / nb;
        let m1bar = per_batch.iter().map(|p| p.0).sum::<Complex64>() / nb;
        let v2 = per_batch.iter().map(|p| (p.1 - m2bar).powi(2)).sum::<f64>() / (nb - 1.0);
        let v1 = per_batch.iter().map(|p| (p.0 - m1bar).norm_sqr()).sum::<f64>() / (nb - 1.0);
        ((v1 / nb).sqrt(), (v2 / nb).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };

    let mean = mu + shift;
    ModeStats {
        label: label.to_string(),
        mean_re: mean.re,
        mean_im: mean.im,
        mean_se,
        raw_second_moment: sum_sq / nf + 2.0 * (shift.conj() * mu).re + shift.norm_sqr(),
        occupation: central - 0.5,
        occupation_se: occ_se,
        samples: n,
        batches: used.len(),
    }
}

/// Integrates `n_trajectories` independent trajectories and estimates the
/// steady moments of every mode of `mode`.
///
/// Results are identical for any thread count: trajectories are merged in
/// index order.
pub fn run_ensemble(bundle: &Validated, mode: RunMode, opts: RunOptions) -> Result<EnsembleOutput> {
    let params = bundle.system();
    let noise = bundle.noise();
    let cfg = bundle.sim();
    let alpha = mean_amplitude(params, noise.gamma_l());
    let steps = cfg.steps();
    let burn = cfg.burn_in_steps().min(steps.saturating_sub(1));
    let zero = Complex64::new(0.0, 0.0);
    let shifts = match mode {
        RunMode::Displaced | RunMode::Twin => vec![zero],
        RunMode::Lab => vec![alpha],
        RunMode::TwoCavityLab => vec![alpha, alpha, std::f64::consts::SQRT_2 * alpha, zero],
    };
    let plan = Plan {
        mode,
        params,
        noise,
        dt: cfg.dt,
        steps,
        burn,
        batches: cfg.batches.min(steps - burn).max(1),
        seed: cfg.seed,
        substeps: cfg.substeps,
        vacuum: cfg.vacuum_noise,
        alpha,
        limit: DIVERGENCE_FACTOR * alpha.norm().max(1.0),
        shifts,
    };

    run_plan(&plan, cfg.n_trajectories, opts)
}

fn run_plan(plan: &Plan<'_>, n_trajectories: usize, opts: RunOptions) -> Result<EnsembleOutput> {
    let mode = plan.mode;
    let results: Vec<TrajectoryResult> = (0..n_trajectories)
        .into_par_iter()
        .map(|t| plan.run(t, t < opts.store_trajectories))
        .collect::<Result<_>>()?;

    let total = results.len();
    let diverged: Vec<(usize, usize)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.diverged_at.map(|s| (i, s)))
        .collect();
    if !diverged.is_empty() && (diverged.len() as f64 > MAX_DIVERGED_FRACTION * total as f64 || diverged.len() == total) {
        return Err(Error::Divergence {
            diverged: diverged.len(),
            total,
            first: diverged[0].0,
            step: diverged[0].1,
        });
    }

    let labels = mode.labels();
    let mut per_mode: Vec<Vec<BatchSum>> = vec![Vec::new(); labels.len()];
    let mut trajectories = Vec::new();
    for r in results {
        for (m, b) in r.batches.into_iter().enumerate() {
            per_mode[m].extend(b);
        }
        if let Some(t) = r.stored {
            trajectories.push(t);
        }
    }
    let modes = labels
        .iter()
        .enumerate()
        .map(|(m, l)| finish(l, plan.shifts[m], &per_mode[m]))
        .collect();
    Ok(EnsembleOutput {
        stats: EnsembleStats {
            mode,
            trajectories: total - diverged.len(),
            diverged: diverged.len(),
            modes,
        },
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{displaced_vacuum_offset, phase_noise_occupation_white};
    use crate::model::{validate, SimConfig};

    fn bundle(params: SystemParams, noise: NoiseSpec, dt: f64, duration: f64, n: usize, seed: u64) -> Validated {
        validate(&params, &noise, &SimConfig::new(dt, duration, n, seed)).unwrap()
    }

    #[test]
    fn pure_decay_is_exact() {
        let p = SystemParams::new(1.0, 0.0, 0.0);
        let st = DisplacedStep::new(&p, &NoiseSpec::None, 0.01);
        let mut a = Complex64::new(1.0, 0.0);
        for _ in 0..100 {
            a = st.step(a, 0.0, Complex64::new(0.0, 0.0));
        }
        assert!((a.re - (-1.0f64).exp()).abs() < 1e-14 && a.im.abs() < 1e-15);
        let one = step_displaced(Complex64::new(1.0, 0.0), 1.0, &p, &NoiseSpec::None, 0.0, Complex64::new(0.0, 0.0));
        assert!((one.re - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn lab_fixed_point() {
        let p = SystemParams::new(2.0, 3.0, 5.0);
        let fixed = Complex64::new(5.0, 0.0) / Complex64::new(2.0, 3.0);
        let (a, phi) = step_lab(fixed, 0.0, 0.01, &p, 0.0, Complex64::new(0.0, 0.0));
        assert!((a - fixed).norm() < 1e-14);
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn twin_without_phase_noise_is_displaced_without_drive() {
        let p = SystemParams::new(1.0, 0.7, 100.0);
        let n = NoiseSpec::None;
        let d = DisplacedStep::with_alpha(&p, &n, 0.01, Complex64::new(0.0, 0.0));
        let t = TwinStep::new(&p, &n, 0.01);
        let a = Complex64::new(0.3, -0.2);
        let w = Complex64::new(0.01, 0.02);
        assert!((d.step(a, 0.0, w) - t.step(a, 0.0, w)).norm() < 1e-16);
    }

    #[test]
    fn vacuum_only_occupation_is_half() {
        let b = bundle(SystemParams::new(1.0, 0.5, 0.0), NoiseSpec::None, 0.05, 200.0, 200, 1);
        let s = run_ensemble(&b, RunMode::Displaced, RunOptions::default()).unwrap().stats;
        let m = s.primary();
        assert!((m.raw_second_moment - 0.5).abs() < 3.0 * m.occupation_se, "{m:?}");
        assert!(m.occupation.abs() < 3.0 * m.occupation_se);
    }

    #[test]
    fn frames_coincide_without_pump() {
        let b = bundle(SystemParams::new(1.0, 0.5, 0.0), NoiseSpec::None, 0.05, 100.0, 50, 3);
        let d = run_ensemble(&b, RunMode::Displaced, RunOptions::default()).unwrap().stats;
        let l = run_ensemble(&b, RunMode::Lab, RunOptions::default()).unwrap().stats;
        // same vacuum path, same exact linear propagation
        assert!((d.primary().occupation - l.primary().occupation).abs() < 1e-12);
    }

    #[test]
    fn phase_noise_occupation_matches_analytic() {
        let (n, kappa, g) = (1e4, 1.0, 1e-3);
        let p = SystemParams::with_photon_number(kappa, 0.5, g, n);
        let b = bundle(p, NoiseSpec::white(g), 0.01, 100.0, 300, 5);
        let s = run_ensemble(&b, RunMode::Displaced, RunOptions::default()).unwrap().stats;
        let m = s.primary();
        let exact = phase_noise_occupation_white(n, kappa, g) + displaced_vacuum_offset(kappa, g);
        assert!((m.occupation - exact).abs() < 3.0 * m.occupation_se, "{} ± {} vs {exact}", m.occupation, m.occupation_se);
        assert!(m.occupation_se < 0.05 * exact);
    }

    #[test]
    fn lab_mean_has_linewidth_shifted_denominator() {
        let (kappa, g, delta) = (1.0, 1.0, 0.5);
        let p = SystemParams::new(kappa, delta, 20.0);
        let b = bundle(p.clone(), NoiseSpec::white(g), 0.005, 60.0, 200, 9);
        let s = run_ensemble(&b, RunMode::Lab, RunOptions::default()).unwrap().stats;
        let m = s.primary();
        let alpha = mean_amplitude(&p, g);
        let naive = mean_amplitude(&p, 0.0);
        assert!((m.mean() - alpha).norm() < 3.0 * m.mean_se, "{} vs {alpha} (se {})", m.mean(), m.mean_se);
        assert!((m.mean() - naive).norm() > 20.0 * m.mean_se);
    }

    #[test]
    fn se_scales_with_trajectories() {
        let p = SystemParams::with_photon_number(1.0, 0.0, 0.01, 100.0);
        let se = |n| {
            let b = bundle(p.clone(), NoiseSpec::white(0.01), 0.02, 60.0, n, 17);
            run_ensemble(&b, RunMode::Displaced, RunOptions::default()).unwrap().stats.primary().occupation_se
        };
        let r = se(100) / se(200);
        assert!((r / 2f64.sqrt() - 1.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn single_trajectory_is_single_integration() {
        let p = SystemParams::with_photon_number(1.0, 0.3, 0.01, 50.0);
        let b = bundle(p.clone(), NoiseSpec::white(0.01), 0.01, 30.0, 1, 4);
        let out = run_ensemble(&b, RunMode::Displaced, RunOptions { store_trajectories: 1 }).unwrap();
        let tr = &out.trajectories[0];
        assert_eq!(tr.a.len(), 3000);
        let path = crate::noise::NoisePath::generate(3000, 0.01, &NoiseSpec::white(0.01), 4, 0).unwrap();
        let st = DisplacedStep::new(&p, &NoiseSpec::white(0.01), 0.01);
        let mut a = Complex64::new(0.0, 0.0);
        for k in 0..3000 {
            a = st.step(a, path.phase_increments[k], path.vacuum_increments[k]);
            assert_eq!(a, tr.a[k]);
        }
        let kept: Vec<Complex64> = tr.a[1000..].to_vec();
        let mu = kept.iter().sum::<Complex64>() / kept.len() as f64;
        let occ = kept.iter().map(|z| (z - mu).norm_sqr()).sum::<f64>() / kept.len() as f64 - 0.5;
        assert!((out.stats.primary().occupation - occ).abs() < 1e-9);
    }

    #[test]
    fn divergence_is_reported() {
        let p = SystemParams::with_photon_number(1.0, 0.0, 0.1, 1e4);
        let noise = NoiseSpec::white(0.1);
        let shifts = vec![Complex64::new(0.0, 0.0)];
        let mut plan = Plan {
            mode: RunMode::Displaced,
            params: &p,
            noise: &noise,
            dt: 0.01,
            steps: 2000,
            burn: 1000,
            batches: 4,
            seed: 0,
            substeps: 1,
            vacuum: true,
            alpha: mean_amplitude(&p, 0.1),
            limit: f64::INFINITY,
            shifts,
        };
        let ok = run_plan(&plan, 8, RunOptions::default()).unwrap();
        assert_eq!(ok.stats.diverged, 0);
        assert_eq!(ok.stats.trajectories, 8);
        plan.limit = 1.0;
        match run_plan(&plan, 8, RunOptions::default()) {
            Err(Error::Divergence { diverged, total, .. }) => assert_eq!((diverged, total), (8, 8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trajectory_csv_columns() {
        let p = SystemParams::with_photon_number(1.0, 0.3, 0.01, 50.0);
        let mut cfg = SimConfig::new(0.01, 1.0, 1, 4);
        cfg.burn_in = Some(0.1);
        let b = validate(&p, &NoiseSpec::white(0.01), &cfg).unwrap();
        let out = run_ensemble(&b, RunMode::TwoCavityLab, RunOptions { store_trajectories: 1 }).unwrap();
        let mut buf = Vec::new();
        out.trajectories[0].write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re_a,im_a,re_b,im_b\n"));
        assert_eq!(text.lines().count(), 101);
    }
}
