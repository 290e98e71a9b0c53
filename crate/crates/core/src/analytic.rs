//! Closed-form steady-state results for the displaced cavity mode.
//!
//! The displaced fluctuation `a` obeys
//! `ȧ = −(κ+Γ_l+iΔ)a + iαφ̇ + √(2κ)a_in` with `α = E/(κ+Γ_l+iΔ)`.
//! Everything here is the exact linear-response answer of that equation; the
//! order-of-magnitude forms `nΓ_l/κ` and `k_B T ∼ ħΔ·nΓ_l/κ` are recovered
//! for `Γ_l ≪ κ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::constants::{HBAR, K_B};
use crate::model::{Lorentzian, NoiseSpec, SystemParams};
use crate::quad::{integrate_scalar, QuadConfig};
use crate::{Error, Result};

pub use crate::constants::PhysicalConstants;

/// Half-width of the frequency band, in units of `κ+Γ_l`, over which a
/// tabulated spectrum must be defined. Outside it the spectrum is taken flat
/// at its band-edge values; the tails then carry a fraction
/// `(π/2 − atan 50)/π ≈ 0.64 %` of the weight per side.
pub const BAND_HALF_WIDTH: f64 = 50.0;

/// Default reading of "≪".
pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// `α = E/(κ+Γ_l+iΔ)`.
pub fn mean_amplitude(params: &SystemParams, gamma_l: f64) -> Complex64 {
    Complex64::new(params.pump(), 0.0) / Complex64::new(params.kappa + gamma_l, params.delta)
}

/// `n_add = n·Γ_l/(κ+Γ_l)`: the part of `⟨a†a⟩` driven by white phase noise.
pub fn phase_noise_occupation_white(n: f64, kappa: f64, gamma_l: f64) -> f64 {
    n * gamma_l / (kappa + gamma_l)
}

/// Normal-ordered vacuum contribution of the displaced equation,
/// `κ/(2(κ+Γ_l)) − ½ = −Γ_l/(2(κ+Γ_l))`.
///
/// The equation damps at `κ+Γ_l` but is fed vacuum only at κ, so the full
/// steady occupation of the simulated mode is
/// `phase_noise_occupation_white + displaced_vacuum_offset`.
pub fn displaced_vacuum_offset(kappa: f64, gamma_l: f64) -> f64 {
    -gamma_l / (2.0 * (kappa + gamma_l))
}

/// `n_add = n ∫ dω/2π S(ω) / ((κ+Γ_l)² + (Δ−ω)²)`.
///
/// Computed with the substitution `ω = Δ + κ' tan θ`, which maps the cavity
/// response onto `dθ/κ'`; Lorentzian lines are instead mapped onto their own
/// peaks. Spectra defined everywhere are integrated over the whole line;
/// tabulated spectra must cover `Δ ± 50κ'` and are extended flat beyond it.
pub fn phase_noise_occupation_colored(
    n: f64,
    kappa: f64,
    gamma_l: f64,
    delta: f64,
    noise: &NoiseSpec,
    quad: &QuadConfig,
) -> Result<f64> {
    let kp = kappa + gamma_l;
    if !(kp > 0.0) {
        return Err(Error::Domain(format!("kappa + gamma_l must be > 0, got {kp}")));
    }
    let eval = |w: f64| -> Result<f64> {
        match noise.spectral_density(w) {
            Some(s) if s >= 0.0 => Ok(s),
            Some(s) => Err(Error::Domain(format!("negative spectral density {s} at ω = {w}"))),
            None => Err(Error::BandNotCovered {
                lo: delta - BAND_HALF_WIDTH * kp,
                hi: delta + BAND_HALF_WIDTH * kp,
                context: "phase-noise occupation quadrature".into(),
            }),
        }
    };

    if let NoiseSpec::Lorentzian(l) = noise {
        return lorentzian_occupation(n, kp, delta, l, quad);
    }

    let (theta_max, tails) = match noise {
        NoiseSpec::Tabulated(_) => {
            let lo = delta - BAND_HALF_WIDTH * kp;
            let hi = delta + BAND_HALF_WIDTH * kp;
            if !noise.covers(lo, hi) {
                return Err(Error::BandNotCovered {
                    lo,
                    hi,
                    context: "tabulated spectrum in phase-noise occupation".into(),
                });
            }
            let t = BAND_HALF_WIDTH.atan();
            (t, (eval(lo)? + eval(hi)?) * (0.5 * PI - t))
        }
        _ => (0.5 * PI, 0.0),
    };

    let mut pts = vec![-theta_max, 0.0, theta_max];
    for f in noise.features() {
        for w in [f, -f] {
            let th = ((w - delta) / kp).atan();
            if th.abs() < theta_max {
                pts.push(th);
            }
        }
    }

    let mut failure = None;
    let (body, _) = integrate_scalar(
        |th| match eval(delta + kp * th.tan()) {
            Ok(s) => s,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &pts,
        quad,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(n * (body + tails) / (2.0 * PI * kp))
}

/// Each peak of the pair is integrated in its own variable
/// `ω = ±ω₀ + γ tan ψ`, which absorbs the peak into `dψ` and leaves the
/// bounded cavity response, so arbitrarily narrow lines are resolved.
fn lorentzian_occupation(n: f64, kp: f64, delta: f64, l: &Lorentzian, quad: &QuadConfig) -> Result<f64> {
    let g = l.half_width;
    let mut total = 0.0;
    for c in [l.center_frequency, -l.center_frequency] {
        let mut pts = vec![-0.5 * PI, 0.5 * PI];
        for k in [0.0, 1.0, -1.0, 10.0, -10.0] {
            pts.push(((delta + k * kp - c) / g).atan());
        }
        let (v, _) = integrate_scalar(
            |psi| {
                let w = c + g * psi.tan();
                1.0 / (kp * kp + (delta - w) * (delta - w))
            },
            &pts,
            quad,
        )?;
        total += v;
    }
    Ok(n * l.total_strength * total / (2.0 * PI))
}

/// `T_eff = ħΔ·n_add/k_B`: the bath temperature whose thermal input noise at
/// the oscillator frequency Δ carries the same occupation.
pub fn effective_temperature(n_add: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "effective temperature needs a positive frequency quantum, got Δ = {delta}"
        )));
    }
    Ok(HBAR * delta * n_add / K_B)
}

/// `√(T·Γ_l)`, a relative figure of merit with no absolute calibration.
pub fn sqrt_t_gamma_figure(temperature: f64, gamma_l: f64) -> f64 {
    (temperature * gamma_l).sqrt()
}

/// Feasibility margins: `Γ_l/κ` against the atomic-style condition and
/// `n·S(Δ)/(2κ)` (white: `nΓ_l/κ`) against the cavity-refrigerator condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub threshold: f64,
    pub margin_1: f64,
    pub margin_2: f64,
    pub condition_1_ok: bool,
    pub condition_2_ok: bool,
    /// `S(Δ)` used for the second margin.
    pub s_at_delta: f64,
    /// Largest white linewidth with `margin_2 = threshold`.
    pub max_gamma_l: f64,
    /// Largest `S(Δ)` with `margin_2 = threshold`.
    pub max_s_at_delta: f64,
}

pub fn check_conditions(params: &SystemParams, noise: &NoiseSpec, n: f64, threshold: f64) -> Result<ConditionReport> {
    let kappa = params.kappa;
    let s_at_delta = noise.spectral_density(params.delta).ok_or_else(|| Error::BandNotCovered {
        lo: params.delta,
        hi: params.delta,
        context: "S(Δ) for the feasibility margins".into(),
    })?;
    let margin_1 = noise.gamma_l() / kappa;
    let margin_2 = n * s_at_delta / (2.0 * kappa);
    let max_gamma_l = if n > 0.0 { threshold * kappa / n } else { f64::INFINITY };
    Ok(ConditionReport {
        threshold,
        margin_1,
        margin_2,
        condition_1_ok: margin_1 < threshold,
        condition_2_ok: margin_2 < threshold,
        s_at_delta,
        max_gamma_l,
        max_s_at_delta: 2.0 * max_gamma_l,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateReport {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub n: f64,
    pub n_add: f64,
    /// `None` when Δ ≤ 0.
    pub t_eff: Option<f64>,
    pub margin_1: f64,
    pub margin_2: f64,
    pub threshold: f64,
    pub condition_1_ok: bool,
    pub condition_2_ok: bool,
    pub max_gamma_l: f64,
    pub max_s_at_delta: f64,
    pub target_n_add: f64,
    /// `S(Δ)` giving `n_add = target_n_add` for a spectrum flat over the cavity line.
    pub max_s_for_target: f64,
}

/// Everything [`crate::analytic`] knows about one parameter set.
pub fn steady_state_report(
    params: &SystemParams,
    noise: &NoiseSpec,
    threshold: f64,
    target_n_add: f64,
    quad: &QuadConfig,
) -> Result<SteadyStateReport> {
    let gamma_l = noise.gamma_l();
    let alpha = mean_amplitude(params, gamma_l);
    let n = alpha.norm_sqr();
    let n_add = match noise {
        NoiseSpec::None => 0.0,
        NoiseSpec::White { gamma_l } => phase_noise_occupation_white(n, params.kappa, *gamma_l),
        _ => phase_noise_occupation_colored(n, params.kappa, gamma_l, params.delta, noise, quad)?,
    };
    let cond = check_conditions(params, noise, n, threshold)?;
    let kp = params.kappa + gamma_l;
    Ok(SteadyStateReport {
        alpha_re: alpha.re,
        alpha_im: alpha.im,
        n,
        n_add,
        t_eff: effective_temperature(n_add, params.delta).ok(),
        margin_1: cond.margin_1,
        margin_2: cond.margin_2,
        threshold,
        condition_1_ok: cond.condition_1_ok,
        condition_2_ok: cond.condition_2_ok,
        max_gamma_l: cond.max_gamma_l,
        max_s_at_delta: cond.max_s_at_delta,
        target_n_add,
        max_s_for_target: if n > 0.0 { 2.0 * kp * target_n_add / n } else { f64::INFINITY },
    })
}
