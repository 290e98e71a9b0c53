//! Reproducible stochastic inputs: vacuum noise, laser phase-noise paths and
//! spectrum estimation.
//!
//! Every trajectory owns independent ChaCha streams, one per noise channel, so
//! runs in different modes that share a seed also share their noise paths.

mod ou;
mod psd;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::model::NoiseSpec;
use crate::{Error, Result};

pub use ou::LorentzianOu;
pub use psd::{estimate_psd, read_spectrum_csv, write_spectrum_csv, PsdEstimate};

/// Identity of the random number generator, echoed in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9) seeded by seed_from_u64(seed); \
     stream = 4*trajectory + channel (0 phase, 1 vacuum a, 2 vacuum b); \
     normals via rand_distr::StandardNormal";

/// Noise channel within a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Phase = 0,
    VacuumA = 1,
    VacuumB = 2,
}

/// The generator for one `(seed, trajectory, channel)`.
pub fn stream(seed: u64, trajectory: u64, channel: Channel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory.wrapping_mul(4).wrapping_add(channel as u64));
    rng
}

#[inline]
pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Circular complex Gaussian with `E|z|² = 1`.
#[inline]
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * normal(rng), s * normal(rng))
}

fn check_grid(steps: usize, dt: f64) -> Result<()> {
    if steps < 1 {
        return Err(Error::Domain("steps must be >= 1".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    Ok(())
}

/// Vacuum input increments: circular complex Gaussian, `E[|w|²] = dt`.
///
/// The symmetrised vacuum input over a step is `w/√2`, so each quadrature of
/// `a_in` carries spectral density ½.
pub fn gen_vacuum<R: Rng + ?Sized>(steps: usize, dt: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    check_grid(steps, dt)?;
    let sd = dt.sqrt();
    Ok((0..steps).map(|_| sd * complex_normal(rng)).collect())
}

/// White phase diffusion: i.i.d. `Δφ ~ N(0, 2Γ_l·dt)`.
pub fn gen_phase_white<R: Rng + ?Sized>(steps: usize, dt: f64, gamma_l: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_grid(steps, dt)?;
    if !(gamma_l >= 0.0) {
        return Err(Error::Domain(format!("gamma_l must be >= 0, got {gamma_l}")));
    }
    let sd = (2.0 * gamma_l * dt).sqrt();
    Ok((0..steps).map(|_| sd * normal(rng)).collect())
}

/// Phase increments whose derivative has the spectrum of `noise`.
///
/// Lorentzian spectra run an exactly discretised complex OU filter (streaming,
/// any `dt`). Tabulated spectra use circulant synthesis on a periodic grid of
/// at least twice the path length; the table must cover the resolvable band
/// `[2π/duration, π/dt]`, and bins below its first point take its first value.
pub fn gen_phase_colored<R: Rng + ?Sized>(steps: usize, dt: f64, noise: &NoiseSpec, rng: &mut R) -> Result<Vec<f64>> {
    check_grid(steps, dt)?;
    match noise {
        NoiseSpec::Lorentzian(l) => {
            let mut ou = LorentzianOu::new(l, dt, rng)?;
            Ok((0..steps).map(|_| ou.increment(rng)).collect())
        }
        NoiseSpec::Tabulated(t) => {
            let lo = 2.0 * PI / (steps as f64 * dt);
            let hi = PI / dt;
            if !noise.covers(lo, hi) {
                return Err(Error::BandNotCovered {
                    lo,
                    hi,
                    context: "tabulated spectrum for phase-noise synthesis".into(),
                });
            }
            let m = (2 * steps).next_power_of_two().max(2);
            let scale = 1.0 / (m as f64 * dt);
            let mut bins = vec![Complex64::new(0.0, 0.0); m];
            for k in 0..=m / 2 {
                let w = 2.0 * PI * k as f64 / (m as f64 * dt);
                let var = t.interpolate_clamped(w) * scale;
                if k == 0 || k == m / 2 {
                    bins[k] = Complex64::new(var.sqrt() * normal(rng), 0.0);
                } else {
                    let c = var.sqrt() * complex_normal(rng);
                    bins[k] = c;
                    bins[m - k] = c.conj();
                }
            }
            FftPlanner::new().plan_fft_inverse(m).process(&mut bins);
            Ok(bins[..steps].iter().map(|x| x.re * dt).collect())
        }
        other => Err(Error::Domain(format!(
            "colored synthesis needs a lorentzian or tabulated spectrum, got {}",
            other.kind().as_str()
        ))),
    }
}

/// Phase and vacuum increments for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub phase_increments: Vec<f64>,
    pub vacuum_increments: Vec<Complex64>,
}

impl NoisePath {
    /// Draws the path of `trajectory` from the phase and vacuum-a channels.
    pub fn generate(steps: usize, dt: f64, noise: &NoiseSpec, seed: u64, trajectory: u64) -> Result<Self> {
        let mut ph = stream(seed, trajectory, Channel::Phase);
        let mut va = stream(seed, trajectory, Channel::VacuumA);
        let phase_increments = match noise {
            NoiseSpec::None => {
                check_grid(steps, dt)?;
                vec![0.0; steps]
            }
            NoiseSpec::White { gamma_l } => gen_phase_white(steps, dt, *gamma_l, &mut ph)?,
            _ => gen_phase_colored(steps, dt, noise, &mut ph)?,
        };
        let vacuum_increments = gen_vacuum(steps, dt, &mut va)?;
        Ok(Self {
            dt,
            phase_increments,
            vacuum_increments,
        })
    }

    pub fn len(&self) -> usize {
        self.phase_increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_increments.is_empty()
    }
}

/// Streaming vacuum increments, summed over `substeps` draws per step.
#[derive(Debug, Clone)]
pub(crate) struct VacuumSource {
    rng: Option<ChaCha8Rng>,
    sd: f64,
    substeps: u32,
}

impl VacuumSource {
    pub fn new(rng: ChaCha8Rng, dt: f64, substeps: u32, enabled: bool) -> Self {
        Self {
            rng: enabled.then_some(rng),
            sd: (dt / substeps as f64).sqrt(),
            substeps,
        }
    }

    #[inline]
    pub fn next(&mut self) -> Complex64 {
        match &mut self.rng {
            None => Complex64::new(0.0, 0.0),
            Some(rng) => {
                let mut w = Complex64::new(0.0, 0.0);
                for _ in 0..self.substeps {
                    w += self.sd * complex_normal(rng);
                }
                w
            }
        }
    }
}

/// Streaming phase increments, summed over `substeps` per step.
#[derive(Debug, Clone)]
pub(crate) enum PhaseSource {
    Zero,
    White { rng: ChaCha8Rng, sd: f64, substeps: u32 },
    Ou { rng: ChaCha8Rng, ou: LorentzianOu, substeps: u32 },
    Buffered { incs: Vec<f64>, pos: usize, substeps: u32 },
}

impl PhaseSource {
    pub fn new(noise: &NoiseSpec, mut rng: ChaCha8Rng, dt: f64, steps: usize, substeps: u32) -> Result<Self> {
        let h = dt / substeps as f64;
        Ok(match noise {
            NoiseSpec::None => PhaseSource::Zero,
            NoiseSpec::White { gamma_l } if *gamma_l == 0.0 => PhaseSource::Zero,
            NoiseSpec::White { gamma_l } => PhaseSource::White {
                rng,
                sd: (2.0 * gamma_l * h).sqrt(),
                substeps,
            },
            NoiseSpec::Lorentzian(l) => {
                let ou = LorentzianOu::new(l, h, &mut rng)?;
                PhaseSource::Ou { rng, ou, substeps }
            }
            NoiseSpec::Tabulated(_) => PhaseSource::Buffered {
                incs: gen_phase_colored(steps * substeps as usize, h, noise, &mut rng)?,
                pos: 0,
                substeps,
            },
        })
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        match self {
            PhaseSource::Zero => 0.0,
            PhaseSource::White { rng, sd, substeps } => {
                let mut s = 0.0;
                for _ in 0..*substeps {
                    s += *sd * normal(rng);
                }
                s
            }
            PhaseSource::Ou { rng, ou, substeps } => {
                let mut s = 0.0;
                for _ in 0..*substeps {
                    s += ou.increment(rng);
                }
                s
            }
            PhaseSource::Buffered { incs, pos, substeps } => {
                let end = (*pos + *substeps as usize).min(incs.len());
                let s = incs[*pos..end].iter().sum();
                *pos = end;
                s
            }
        }
    }
}
