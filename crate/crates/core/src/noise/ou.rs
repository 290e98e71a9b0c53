use num_complex::Complex64;
use rand::Rng;

use super::complex_normal;
use crate::model::Lorentzian;
use crate::quad::{integrate, QuadConfig};
use crate::{Error, Result};

/// `e^z − 1` without cancellation near zero.
fn expm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let h = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * c - 2.0 * h * h, z.re.exp() * s)
}

/// Complex Ornstein–Uhlenbeck filter `dz = −(γ+iω₀)z dt + σ dW` whose real
/// part has the [`Lorentzian`] spectrum, with `σ² = 4Wγ`.
///
/// Each call to [`increment`](Self::increment) returns the exact integral
/// `∫ Re z dt` over one step together with the exact state update, sampled
/// jointly, so the step size is not limited by γ or ω₀.
#[derive(Debug, Clone)]
pub struct LorentzianOu {
    z: Complex64,
    decay: Complex64,
    carry: Complex64,
    l11: f64,
    l21: Complex64,
    l22: f64,
}

impl LorentzianOu {
    /// Starts the filter in its stationary distribution.
    pub fn new<R: Rng + ?Sized>(spec: &Lorentzian, dt: f64, rng: &mut R) -> Result<Self> {
        let gamma = spec.half_width;
        if !(gamma > 0.0) || !(dt > 0.0) {
            return Err(Error::Domain("lorentzian filter needs half_width > 0 and dt > 0".into()));
        }
        let mu = Complex64::new(gamma, spec.center_frequency);
        let sigma2 = 4.0 * spec.total_strength * gamma;

        // g(u) = (1 − e^{−μu})/μ; the step integral is z₀g(h) + ∫ σ g(h−s) dW(s)
        let g = |u: f64| -expm1(-mu * u) / mu;
        let cfg = QuadConfig { rel_tol: 1e-12, abs_tol: 0.0, max_intervals: 2000 };
        let q = integrate(
            |u| {
                let e = (-mu * u).exp();
                let gu = g(u);
                let c12 = e * gu.conj();
                [gu.norm_sqr(), c12.re, c12.im]
            },
            &[0.0, dt],
            &cfg,
        )?;
        let c11 = sigma2 * (-(-2.0 * gamma * dt).exp_m1()) / (2.0 * gamma);
        let c22 = sigma2 * q.value[0];
        let c12 = sigma2 * Complex64::new(q.value[1], q.value[2]);

        let (l11, l21, l22) = if c11 > 0.0 {
            let l11 = c11.sqrt();
            let l21 = c12.conj() / l11;
            (l11, l21, (c22 - l21.norm_sqr()).max(0.0).sqrt())
        } else {
            (0.0, Complex64::new(0.0, 0.0), 0.0)
        };

        let z = (sigma2 / (2.0 * gamma)).sqrt() * complex_normal(rng);
        Ok(Self {
            z,
            decay: (-mu * dt).exp(),
            carry: g(dt),
            l11,
            l21,
            l22,
        })
    }

    /// Current `φ̇ = Re z`.
    pub fn frequency(&self) -> f64 {
        self.z.re
    }

    #[inline]
    pub fn increment<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let x1 = complex_normal(rng);
        let x2 = complex_normal(rng);
        let integral = self.z * self.carry + self.l21 * x1 + self.l22 * x2;
        self.z = self.decay * self.z + self.l11 * x1;
        integral.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{stream, Channel};

    #[test]
    fn expm1_small_and_large() {
        let z = Complex64::new(1e-12, -2e-12);
        assert!((expm1(z) - z).norm() < 1e-23);
        let z = Complex64::new(0.3, 2.0);
        assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-15);
    }

    /// Increment variance of `∫ Re z` against the double-integral oracle
    /// `2∫₀^h (h−τ) C(τ) dτ`, `C(τ) = W e^{−γτ} cos ω₀τ`.
    #[test]
    fn increment_variance_matches_autocovariance() {
        for (w, c, g, h) in [(1.0, 0.0, 2.0, 0.05), (0.5, 30.0, 1.0, 0.01), (2.0, 5.0, 50.0, 0.2), (1.0, 0.0, 0.1, 0.01)] {
            let spec = Lorentzian { gamma_l: 0.0, total_strength: w, center_frequency: c, half_width: g };
            let mut rng = stream(11, 0, Channel::Phase);
            let mut ou = LorentzianOu::new(&spec, h, &mut rng).unwrap();
            let n = 400_000;
            let xs: Vec<f64> = (0..n).map(|_| ou.increment(&mut rng)).collect();
            let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;

            let m = 200_000;
            let dtau = h / m as f64;
            let mut oracle = 0.0;
            for i in 0..m {
                let t = (i as f64 + 0.5) * dtau;
                oracle += 2.0 * (h - t) * w * (-g * t).exp() * (c * t).cos() * dtau;
            }
            // correlated samples: allow a generous statistical gate
            let tau_c = (1.0 / (g * h)).max(1.0);
            let se = oracle * (2.0 * tau_c / n as f64).sqrt();
            assert!((var - oracle).abs() < 5.0 * se, "W={w} c={c} g={g}: {var} vs {oracle}");
        }
    }
}
