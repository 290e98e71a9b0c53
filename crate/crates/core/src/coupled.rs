//! Linearized cavity–mirror steady state with laser phase noise.
//!
//! State ordering is `(X, Y, x, p)`: cavity amplitude and phase quadratures
//! in the frame where the mean amplitude α is real and positive, then mirror
//! position and momentum, all symmetrically ordered so that vacuum has
//! variance ½. With `κ' = κ + Γ_l` the drift is
//!
//! ```text
//!       ⎡ −κ'   Δ    0     0  ⎤
//!   A = ⎢ −Δ   −κ'   g     0  ⎥
//!       ⎢  0    0    0    ω_m ⎥
//!       ⎣  g    0   −ω_m  −γ_m⎦
//! ```
//!
//! which is the Hamiltonian `Δ(X²+Y²)/2 + ω_m(x²+p²)/2 − gXx` plus damping.
//! Cavity vacuum enters as `diag(κ, κ)`, the mirror bath as `γ_m(2n_th+1)` on
//! `p`, and φ̇ drives the phase quadrature through `v = (0, √2|α|, 0, 0)`.
//! Lorentzian frequency noise is realised by appending the real
//! Ornstein–Uhlenbeck pair `(u₁, u₂)` with `φ̇ = u₁`, giving a 6×6 system.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{effective_temperature, mean_amplitude, BAND_HALF_WIDTH};
use crate::constants::{HBAR, K_B};
use crate::model::{validate_system, NoiseSpec, SystemParams};
use crate::quad::{integrate, QuadConfig};
use crate::{Error, Result, Violation};

/// Solves above this condition number of the Kronecker-sum operator are refused.
pub const MAX_CONDITION: f64 = 1e15;
/// Tolerance on the smallest eigenvalue of `V + iΩ/2`, relative to `max V_ii`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalParams {
    pub omega_m: f64,
    pub gamma_m: f64,
    #[serde(default)]
    pub n_th: f64,
    /// Linearized coupling g. Mutually exclusive with `g0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Single-photon coupling; `g = g0·|α|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
}

impl MechanicalParams {
    pub fn new(omega_m: f64, gamma_m: f64, n_th: f64, g: f64) -> Self {
        Self { omega_m, gamma_m, n_th, g: Some(g), g0: None }
    }

    /// Linearized coupling at mean amplitude `alpha_abs`.
    pub fn coupling(&self, alpha_abs: f64) -> f64 {
        match (self.g, self.g0) {
            (Some(g), _) => g,
            (None, Some(g0)) => g0 * alpha_abs,
            (None, None) => 0.0,
        }
    }

    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (field, v) in [("mech.omega_m", self.omega_m), ("mech.gamma_m", self.gamma_m)] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.n_th >= 0.0 && self.n_th.is_finite()) {
            out.push(Violation::new("mech.n_th", format!("must be finite and >= 0, got {}", self.n_th)));
        }
        match (self.g, self.g0) {
            (Some(_), Some(_)) => out.push(Violation::new("mech.g", "give either g or g0, not both")),
            (None, None) => out.push(Violation::new("mech.g", "missing coupling: give g or g0")),
            _ => {}
        }
        for (field, v) in [("mech.g", self.g), ("mech.g0", self.g0)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    out.push(Violation::new(field, format!("must be finite, got {v}")));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledModel {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    /// Phase-noise weights on `(X, Y, x, p)`.
    pub phase_weights: Vector4<f64>,
    pub kappa: f64,
    pub delta: f64,
    pub gamma_l: f64,
    pub alpha_abs: f64,
    pub g: f64,
    pub mech: MechanicalParams,
    pub noise: NoiseSpec,
}

impl CoupledModel {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    fn quantum_drift(&self) -> Matrix4<f64> {
        self.drift.fixed_view::<4, 4>(0, 0).into_owned()
    }

    /// Cavity and bath diffusion without the phase channel.
    fn quantum_diffusion(&self) -> Matrix4<f64> {
        let k = self.kappa;
        let m = &self.mech;
        Matrix4::from_diagonal(&Vector4::new(k, k, 0.0, m.gamma_m * (2.0 * m.n_th + 1.0)))
    }

    /// Same mirror, cavity and amplitude with the phase noise removed entirely.
    pub fn without_phase_noise(&self) -> Self {
        assemble(self.kappa, self.delta, 0.0, self.alpha_abs, self.g, &self.mech, &NoiseSpec::None)
    }
}

fn assemble(kappa: f64, delta: f64, gamma_l: f64, alpha_abs: f64, g: f64, mech: &MechanicalParams, noise: &NoiseSpec) -> CoupledModel {
    let kp = kappa + gamma_l;
    let augmented = matches!(noise, NoiseSpec::Lorentzian(_));
    let n = if augmented { 6 } else { 4 };
    let mut a = DMatrix::zeros(n, n);
    a[(0, 0)] = -kp;
    a[(0, 1)] = delta;
    a[(1, 0)] = -delta;
    a[(1, 1)] = -kp;
    a[(1, 2)] = g;
    a[(2, 3)] = mech.omega_m;
    a[(3, 0)] = g;
    a[(3, 2)] = -mech.omega_m;
    a[(3, 3)] = -mech.gamma_m;

    let v = Vector4::new(0.0, 2f64.sqrt() * alpha_abs, 0.0, 0.0);
    let mut d = DMatrix::zeros(n, n);
    d[(0, 0)] = kappa;
    d[(1, 1)] = kappa;
    d[(3, 3)] = mech.gamma_m * (2.0 * mech.n_th + 1.0);
    match noise {
        NoiseSpec::White { gamma_l } => {
            for i in 0..4 {
                for j in 0..4 {
                    d[(i, j)] += 2.0 * gamma_l * v[i] * v[j];
                }
            }
        }
        NoiseSpec::Lorentzian(l) => {
            for i in 0..4 {
                a[(i, 4)] = v[i];
            }
            let (gm, w0) = (l.half_width, l.center_frequency);
            a[(4, 4)] = -gm;
            a[(4, 5)] = w0;
            a[(5, 4)] = -w0;
            a[(5, 5)] = -gm;
            d[(4, 4)] = 2.0 * l.total_strength * gm;
            d[(5, 5)] = 2.0 * l.total_strength * gm;
        }
        NoiseSpec::None | NoiseSpec::Tabulated(_) => {}
    }
    CoupledModel {
        drift: a,
        diffusion: d,
        phase_weights: v,
        kappa,
        delta,
        gamma_l,
        alpha_abs,
        g,
        mech: mech.clone(),
        noise: noise.clone(),
    }
}

fn check_hurwitz(a: &DMatrix<f64>) -> Result<()> {
    let eig = a.complex_eigenvalues();
    if eig.iter().all(|z| z.re < 0.0) {
        Ok(())
    } else {
        Err(Error::Unstable {
            eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
        })
    }
}

/// Builds the linear model around `α = E/(κ+Γ_l+iΔ)` and refuses unstable drift.
pub fn build_model(params: &SystemParams, mech: &MechanicalParams, noise: &NoiseSpec) -> Result<CoupledModel> {
    let mut violations = match validate_system(params, noise) {
        Err(Error::Invalid(v)) => v,
        Err(e) => return Err(e),
        Ok(_) => Vec::new(),
    };
    violations.extend(mech.check());
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let (params, noise) = validate_system(params, noise)?;
    let (params, noise) = (&params, &noise);
    let gamma_l = noise.gamma_l();
    let alpha_abs = mean_amplitude(params, gamma_l).norm();
    let model = assemble(params.kappa, params.delta, gamma_l, alpha_abs, mech.coupling(alpha_abs), mech, noise);
    check_hurwitz(&model.drift)?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lyapunov,
    Spectral,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lyapunov => "lyapunov",
            Method::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingReport {
    pub method: Method,
    /// Row-major covariance of `(X, Y, x, p)`.
    pub covariance: [[f64; 4]; 4],
    pub n_cav: f64,
    pub n_m: f64,
    /// `n_m` minus the same solve without phase noise.
    pub n_m_phase: f64,
    /// `n_cav` minus the same solve without phase noise.
    pub n_cav_phase: f64,
    /// `ħΔ·n_cav_phase/k_B`; `None` when Δ ≤ 0.
    pub t_eff_delta: Option<f64>,
    /// `ħω_m·n_cav_phase/k_B`.
    pub t_eff_omega_m: f64,
    /// `‖AV+VAᵀ+D‖_F / ‖D‖_F`; the spectral route reports it for its own V.
    pub residual: f64,
    /// Condition estimate of the Lyapunov operator; `None` for the spectral route.
    pub condition: Option<f64>,
    /// Smallest eigenvalue of `V + iΩ/2`.
    pub min_symplectic_eigenvalue: f64,
    pub physical: bool,
}

struct Solution {
    v: Matrix4<f64>,
    residual: f64,
    condition: Option<f64>,
}

fn occupations(v: &Matrix4<f64>) -> (f64, f64) {
    ((v[(0, 0)] + v[(1, 1)] - 1.0) / 2.0, (v[(2, 2)] + v[(3, 3)] - 1.0) / 2.0)
}

fn physicality(v: &Matrix4<f64>) -> (f64, bool) {
    let mut omega = Matrix4::zeros();
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 1.0;
    omega[(3, 2)] = -1.0;
    let mut big = DMatrix::zeros(8, 8);
    for i in 0..4 {
        for j in 0..4 {
            big[(i, j)] = v[(i, j)];
            big[(i + 4, j + 4)] = v[(i, j)];
            big[(i, j + 4)] = -0.5 * omega[(i, j)];
            big[(i + 4, j)] = 0.5 * omega[(i, j)];
        }
    }
    let min = big.symmetric_eigenvalues().min();
    let scale = (0..4).map(|i| v[(i, i)].abs()).fold(1.0, f64::max);
    (min, min >= -PHYSICALITY_TOL * scale)
}

/// Without coupling the mechanical block is exactly thermal; the linear
/// solve only reproduces that to rounding.
fn decoupled_thermal(model: &CoupledModel, sol: &mut Solution) {
    if model.g != 0.0 {
        return;
    }
    let half = model.mech.n_th + 0.5;
    for i in 0..4 {
        for j in 2..4 {
            let x = if i == j { half } else { 0.0 };
            sol.v[(i, j)] = x;
            sol.v[(j, i)] = x;
        }
    }
}

fn report(method: Method, model: &CoupledModel, mut full: Solution, mut base: Solution) -> CoolingReport {
    decoupled_thermal(model, &mut full);
    decoupled_thermal(model, &mut base);
    let (n_cav, mut n_m) = occupations(&full.v);
    let (c0, mut m0) = occupations(&base.v);
    if model.g == 0.0 {
        n_m = model.mech.n_th;
        m0 = model.mech.n_th;
    }
    let (min_eig, physical) = physicality(&full.v);
    let n_cav_phase = n_cav - c0;
    let mut covariance = [[0.0; 4]; 4];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = full.v[(i, j)];
        }
    }
    CoolingReport {
        method,
        covariance,
        n_cav,
        n_m,
        n_m_phase: n_m - m0,
        n_cav_phase,
        t_eff_delta: effective_temperature(n_cav_phase, model.delta).ok(),
        t_eff_omega_m: HBAR * model.mech.omega_m * n_cav_phase / K_B,
        residual: full.residual,
        condition: full.condition,
        min_symplectic_eigenvalue: min_eig,
        physical,
    }
}

fn lyapunov_residual(a: &DMatrix<f64>, v: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    a * v + v * a.transpose() + d
}

/// Dense solve of `AV + VAᵀ + D = 0` through the Kronecker-sum operator, with
/// rates scaled to order one and one step of iterative refinement.
fn lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    check_hurwitz(a)?;
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let a_s = a / scale;
    let d_s = d / scale;
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(&a_s) + a_s.kronecker(&eye);

    let sv = op.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }

    let lu = op.lu();
    let solve = |rhs: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let b = DVector::from_iterator(n * n, rhs.iter().map(|x| -x));
        let x = lu.solve(&b).ok_or(Error::IllConditioned { condition })?;
        Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
    };
    let mut v = solve(&d_s)?;
    v = (&v + v.transpose()) * 0.5;
    for _ in 0..2 {
        let r = lyapunov_residual(&a_s, &v, &d_s);
        let dv = solve(&r)?;
        v += (&dv + dv.transpose()) * 0.5;
    }
    let dn = d.norm();
    let residual = if dn > 0.0 { lyapunov_residual(a, &v, d).norm() / dn } else { lyapunov_residual(a, &v, d).norm() };
    Ok((v, residual, condition))
}

fn solve_lyapunov_model(model: &CoupledModel) -> Result<Solution> {
    if matches!(model.noise, NoiseSpec::Tabulated(_)) {
        return Err(Error::Domain(
            "a tabulated spectrum has no finite state-space realisation; use the spectral method".into(),
        ));
    }
    let (v, residual, condition) = lyapunov(&model.drift, &model.diffusion)?;
    Ok(Solution {
        v: v.fixed_view::<4, 4>(0, 0).into_owned(),
        residual,
        condition: Some(condition),
    })
}

/// Steady covariance from the continuous Lyapunov equation.
pub fn solve_steady(model: &CoupledModel) -> Result<CoolingReport> {
    let full = solve_lyapunov_model(model)?;
    let base = solve_lyapunov_model(&model.without_phase_noise())?;
    Ok(report(Method::Lyapunov, model, full, base))
}

const UPPER: [(usize, usize); 10] = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

/// `V = ∫ dω/2π H(ω)[D + S(ω) v vᵀ]H(ω)†` with `H = (−iω − A)⁻¹`, on the
/// 4×4 quantum block, for any spectrum.
fn spectral_covariance(model: &CoupledModel, quad: &QuadConfig) -> Result<Matrix4<f64>> {
    let a = model.quantum_drift();
    let d = model.quantum_diffusion();
    let v = model.phase_weights;
    let kp = model.kappa + model.gamma_l;
    let noise = &model.noise;

    let eig = a.complex_eigenvalues();
    let top = eig.iter().map(|z| z.im.abs()).fold(model.delta.abs().max(model.mech.omega_m), f64::max);
    let band = top + BAND_HALF_WIDTH * kp;
    if let NoiseSpec::Tabulated(_) = noise {
        if !noise.covers(0.0, band) {
            return Err(Error::BandNotCovered {
                lo: 0.0,
                hi: band,
                context: "tabulated spectrum in the coupled spectral solve".into(),
            });
        }
    }
    let density = |w: f64| -> f64 {
        match noise {
            NoiseSpec::Tabulated(t) => t.interpolate_clamped(w.abs()),
            _ => noise.spectral_density(w).unwrap_or(0.0),
        }
    };

    let s = eig.iter().map(|z| z.norm()).fold(kp, f64::max);
    let mut marks = vec![0.0];
    for z in eig.iter() {
        let w = z.im.abs();
        let width = z.re.abs();
        marks.push(w);
        for k in [1.0, 3.0, 10.0, 100.0] {
            marks.push(w + k * width);
            marks.push((w - k * width).max(0.0));
        }
    }
    marks.extend(noise.features());
    let mut pts = vec![-0.5 * PI, 0.5 * PI];
    for m in marks {
        for w in [m, -m] {
            pts.push((w / s).atan());
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);

    let vc = v.map(|x| Complex64::new(x, 0.0));
    let dc = d.map(|x| Complex64::new(x, 0.0));
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let mut singular = false;
    let mut integrand = |th: f64| -> [f64; 10] {
        let (sin, cos) = th.sin_cos();
        let w = s * sin / cos;
        let jac = s / (cos * cos) / (2.0 * PI);
        let m = Matrix4::<Complex64>::from_diagonal_element(Complex64::new(0.0, -w)) - ac;
        let Some(h) = m.try_inverse() else {
            singular = true;
            return [0.0; 10];
        };
        let hv = h * vc;
        let core = h * dc * h.adjoint() + hv * hv.adjoint() * Complex64::new(density(w), 0.0);
        let mut out = [0.0; 10];
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            out[k] = core[(i, j)].re * jac;
        }
        out
    };

    // a coarse pass fixes the absolute scale, then every entry is refined against it
    let coarse = integrate(&mut integrand, &pts, &QuadConfig { rel_tol: 1e-6, ..*quad })?;
    let scale = [0, 4, 7, 9].iter().map(|&k| coarse.value[k].abs()).fold(0.0, f64::max);
    let fine = QuadConfig {
        abs_tol: quad.abs_tol.max(quad.rel_tol * 1e-3 * scale),
        ..*quad
    };
    let q = integrate(&mut integrand, &pts, &fine)?;
    if singular {
        return Err(Error::Quadrature("transfer matrix singular on the real axis".into()));
    }
    let mut vm = Matrix4::zeros();
    for (k, &(i, j)) in UPPER.iter().enumerate() {
        vm[(i, j)] = q.value[k];
        vm[(j, i)] = q.value[k];
    }
    Ok(vm)
}

fn spectral_solution(model: &CoupledModel, quad: &QuadConfig) -> Result<Solution> {
    check_hurwitz(&model.drift)?;
    let v = spectral_covariance(model, quad)?;
    let residual = match model.noise {
        // the state-space form exists; report how well the spectral V satisfies it
        NoiseSpec::White { .. } | NoiseSpec::None => {
            let vd = DMatrix::from_fn(4, 4, |i, j| v[(i, j)]);
            let r = lyapunov_residual(&model.drift, &vd, &model.diffusion);
            r.norm() / model.diffusion.norm().max(f64::MIN_POSITIVE)
        }
        _ => f64::NAN,
    };
    Ok(Solution { v, residual, condition: None })
}

/// Steady covariance by integrating closed-loop transfer functions against
/// the vacuum, bath and phase-noise spectra.
pub fn solve_spectral(model: &CoupledModel, quad: &QuadConfig) -> Result<CoolingReport> {
    let full = spectral_solution(model, quad)?;
    let base = spectral_solution(&model.without_phase_noise(), quad)?;
    Ok(report(Method::Spectral, model, full, base))
}

pub fn solve(model: &CoupledModel, method: Method, quad: &QuadConfig) -> Result<CoolingReport> {
    match method {
        Method::Lyapunov => solve_steady(model),
        Method::Spectral => solve_spectral(model, quad),
    }
}

/// Default quadrature settings for the spectral route.
pub fn spectral_quad() -> QuadConfig {
    QuadConfig {
        rel_tol: 1e-9,
        abs_tol: 0.0,
        max_intervals: 50_000,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{displaced_vacuum_offset, phase_noise_occupation_colored, phase_noise_occupation_white};

    fn mech(g: f64) -> MechanicalParams {
        MechanicalParams::new(1.0, 1e-3, 10.0, g)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn decoupled_thermal_state() {
        let p = SystemParams::with_photon_number(1.0, 1.0, 0.0, 1e4);
        let m = build_model(&p, &mech(0.0), &NoiseSpec::None).unwrap();
        let r = solve_steady(&m).unwrap();
        assert_eq!(r.n_m, 10.0);
        let noisy = build_model(&p, &mech(0.0), &NoiseSpec::white(1e-3)).unwrap();
        for r in [solve_steady(&noisy).unwrap(), solve_spectral(&noisy, &spectral_quad()).unwrap()] {
            assert_eq!(r.n_m, 10.0);
            assert_eq!(r.n_m_phase, 0.0);
        }
        assert!(r.n_cav.abs() < 1e-14);
        assert!(r.residual < 1e-12);
        assert!(r.physical);
    }

    #[test]
    fn decoupled_cavity_matches_analytic() {
        for (n, g) in [(1e4, 1e-3), (1e8, 1e-2), (1e10, 0.3)] {
            let p = SystemParams::with_photon_number(1.0, 0.7, g, n);
            let m = build_model(&p, &mech(0.0), &NoiseSpec::white(g)).unwrap();
            let r = solve_steady(&m).unwrap();
            let exact = phase_noise_occupation_white(n, 1.0, g) + displaced_vacuum_offset(1.0, g);
            assert!(rel(r.n_cav, exact) < 1e-10, "{} vs {exact}", r.n_cav);
            assert!((r.n_m - 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_rows_vanish_without_noise() {
        let p = SystemParams::new(1.0, 0.5, 3.0);
        let m = build_model(&p, &mech(0.1), &NoiseSpec::None).unwrap();
        assert!(m.diffusion.row(1).iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(m.diffusion[(0, 1)], 0.0);
        assert_eq!(m.dim(), 4);
        let m0 = build_model(&p, &mech(0.0), &NoiseSpec::None).unwrap();
        assert!(m0.drift.view((0, 2), (2, 2)).iter().all(|&x| x == 0.0));
        assert!(m0.drift.view((2, 0), (2, 2)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn large_amplitude_phase_weight_equals_vacuum() {
        let kappa = 1e7;
        let p = SystemParams::with_photon_number(kappa, kappa, 1e-3, 1e10);
        let m = build_model(&p, &MechanicalParams::new(1e7, 10.0, 100.0, 1e5), &NoiseSpec::white(1e-3)).unwrap();
        let phase = m.diffusion[(1, 1)] - kappa;
        // quadrature normalisation carries twice the complex-amplitude weight
        assert!(rel(phase, 4e7) < 1e-9, "{phase}");
        // complex-amplitude weight 2|α|²Γ_l against 2κ
        assert!(rel(2.0 * m.alpha_abs.powi(2) * 1e-3, 2.0 * kappa) < 1e-9);
    }

    #[test]
    fn small_coupling_is_quadratic() {
        let p = SystemParams::with_photon_number(1.0, 1.0, 1e-3, 1e3);
        let noise = NoiseSpec::white(1e-3);
        let nm = |g| solve_steady(&build_model(&p, &mech(g), &noise).unwrap()).unwrap().n_m;
        let base = nm(0.0);
        let g = 1e-3;
        let ratio = (nm(g) - base) / (nm(g / 2.0) - base);
        assert!((ratio / 4.0 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn sideband_cooling_and_heating_grow_with_linewidth() {
        let mm = MechanicalParams::new(1.0, 1e-4, 100.0, 0.05);
        let p = SystemParams::with_photon_number(0.2, 1.0, 0.0, 1e4);
        let cooled = solve_steady(&build_model(&p, &mm, &NoiseSpec::None).unwrap()).unwrap();
        assert!(cooled.n_m < 3.0, "{}", cooled.n_m);
        let mut last = cooled.n_m;
        for gl in [1e-5, 1e-4, 1e-3, 1e-2] {
            let r = solve_steady(&build_model(&p, &mm, &NoiseSpec::white(gl)).unwrap()).unwrap();
            assert!(r.n_m >= last, "Γ={gl}: {} < {last}", r.n_m);
            assert!(r.physical);
            last = r.n_m;
        }
    }

    #[test]
    fn blue_detuning_is_unstable() {
        let p = SystemParams::new(0.1, -1.0, 1.0);
        let err = build_model(&p, &MechanicalParams::new(1.0, 1e-3, 0.0, 0.3), &NoiseSpec::None).unwrap_err();
        match err {
            Error::Unstable { eigenvalues } => assert!(eigenvalues.iter().any(|e| e.0 >= 0.0)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn spectral_matches_lyapunov_white() {
        let p = SystemParams::with_photon_number(0.5, 1.0, 1e-3, 1e4);
        let m = build_model(&p, &MechanicalParams::new(1.0, 1e-2, 5.0, 0.05), &NoiseSpec::white(1e-3)).unwrap();
        let a = solve_steady(&m).unwrap();
        let b = solve_spectral(&m, &spectral_quad()).unwrap();
        assert!(rel(b.n_m, a.n_m) < 1e-6, "{} vs {}", b.n_m, a.n_m);
        assert!(rel(b.n_cav, a.n_cav) < 1e-6, "{} vs {}", b.n_cav, a.n_cav);
        assert!(rel(b.n_m_phase, a.n_m_phase) < 1e-4);
    }

    #[test]
    fn spectral_matches_lyapunov_lorentzian() {
        let p = SystemParams::with_photon_number(0.5, 1.0, 0.0, 1e4);
        let noise = NoiseSpec::lorentzian(1e-3, 0.8, 0.2);
        let m = build_model(&p, &MechanicalParams::new(1.0, 1e-2, 5.0, 0.05), &noise).unwrap();
        assert_eq!(m.dim(), 6);
        let a = solve_steady(&m).unwrap();
        let b = solve_spectral(&m, &spectral_quad()).unwrap();
        assert!(rel(b.n_m, a.n_m) < 1e-6, "{} vs {}", b.n_m, a.n_m);
        assert!(rel(b.n_cav, a.n_cav) < 1e-6, "{} vs {}", b.n_cav, a.n_cav);
    }

    #[test]
    fn decoupled_colored_cavity_matches_quadrature() {
        let p = SystemParams::with_photon_number(1.0, 2.0, 0.0, 1e6);
        let noise = NoiseSpec::lorentzian(1e-4, 2.0, 0.3);
        let m = build_model(&p, &mech(0.0), &noise).unwrap();
        let r = solve_steady(&m).unwrap();
        let exact = phase_noise_occupation_colored(1e6, 1.0, 0.0, 2.0, &noise, &QuadConfig::default()).unwrap();
        assert!(rel(r.n_cav_phase, exact) < 1e-8, "{} vs {exact}", r.n_cav_phase);
    }

    #[test]
    fn zero_spectrum_matches_noiseless() {
        let p = SystemParams::with_photon_number(0.5, 1.0, 0.0, 1e4);
        let mm = MechanicalParams::new(1.0, 1e-2, 5.0, 0.05);
        let flat = NoiseSpec::tabulated(vec![(0.0, 0.0), (100.0, 0.0)]);
        let a = solve_spectral(&build_model(&p, &mm, &flat).unwrap(), &spectral_quad()).unwrap();
        let b = solve_steady(&build_model(&p, &mm, &NoiseSpec::None).unwrap()).unwrap();
        assert!(rel(a.n_m, b.n_m) < 1e-6);
        assert!(a.n_m_phase.abs() < 1e-12);
    }

    #[test]
    fn tabulated_needs_spectral_route_and_coverage() {
        let p = SystemParams::with_photon_number(0.5, 1.0, 0.0, 1e4);
        let mm = MechanicalParams::new(1.0, 1e-2, 5.0, 0.05);
        let short = NoiseSpec::tabulated(vec![(0.0, 1e-3), (2.0, 1e-3)]);
        let m = build_model(&p, &mm, &short).unwrap();
        assert!(matches!(solve_steady(&m), Err(Error::Domain(_))));
        assert!(matches!(solve_spectral(&m, &spectral_quad()), Err(Error::BandNotCovered { .. })));
    }

    #[test]
    fn equal_power_spectra_share_scales_with_s_at_delta() {
        // both lines are flat across a cavity line much narrower than either
        let p = SystemParams::with_photon_number(0.05, 1.0, 0.0, 1e4);
        let mm = MechanicalParams::new(1.0, 1e-3, 0.0, 0.01);
        let w = 1e-4;
        let near = NoiseSpec::lorentzian(w, 0.0, 5.0);
        let far = NoiseSpec::lorentzian(w, 0.0, 50.0);
        let s_ratio = near.spectral_density(1.0).unwrap() / far.spectral_density(1.0).unwrap();
        let a = solve_steady(&build_model(&p, &mm, &near).unwrap()).unwrap();
        let b = solve_steady(&build_model(&p, &mm, &far).unwrap()).unwrap();
        let share = a.n_cav_phase / b.n_cav_phase;
        assert!((share / s_ratio - 1.0).abs() < 0.15, "{share} vs {s_ratio}");
        let mirror = a.n_m_phase / b.n_m_phase;
        assert!((mirror / s_ratio - 1.0).abs() < 0.15, "{mirror} vs {s_ratio}");
    }

    #[test]
    fn coupling_from_single_photon_rate() {
        let mut mm = mech(0.0);
        mm.g = None;
        mm.g0 = Some(1e-3);
        let p = SystemParams::with_photon_number(1.0, 1.0, 0.0, 1e4);
        let m = build_model(&p, &mm, &NoiseSpec::None).unwrap();
        assert!(rel(m.g, 0.1) < 1e-12);
        mm.g = Some(0.1);
        assert!(matches!(build_model(&p, &mm, &NoiseSpec::None), Err(Error::Invalid(_))));
    }

    #[test]
    fn every_pump_form_sets_the_amplitude() {
        let mm = mech(0.0);
        let mut p = SystemParams::with_photon_number(1.0, 1.0, 0.0, 1e4);
        p.pump_rate = None;
        p.photon_number = Some(1e4);
        let m = build_model(&p, &mm, &NoiseSpec::None).unwrap();
        assert!(rel(m.alpha_abs, 100.0) < 1e-12);
        p.photon_number = None;
        assert!(matches!(build_model(&p, &mm, &NoiseSpec::None), Err(Error::Invalid(_))));
    }
}
