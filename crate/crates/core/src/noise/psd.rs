use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{fmt, Error, Result};

/// Welch estimate of a two-sided spectrum on `ω_j = 2πj/(L·dt)`, `j = 0..=L/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    pub std_err: Vec<f64>,
    pub segments: usize,
    pub segment_length: usize,
    pub dt: f64,
}

impl PsdEstimate {
    /// `∫ dω/2π S` over `[−π/dt, π/dt]`; equals the sample variance for white input.
    pub fn integrated_power(&self) -> f64 {
        let l = self.segment_length;
        let dw = 2.0 * PI / (l as f64 * self.dt);
        let mut s = 0.0;
        for (j, &v) in self.density.iter().enumerate() {
            let twice = j != 0 && !(l.is_multiple_of(2) && j == l / 2);
            s += if twice { 2.0 * v } else { v };
        }
        s * dw / (2.0 * PI)
    }

    /// `(ω, S)` of the largest bin.
    pub fn peak(&self) -> (f64, f64) {
        self.omega
            .iter()
            .zip(&self.density)
            .fold((f64::NAN, f64::NEG_INFINITY), |m, (&w, &s)| if s > m.1 { (w, s) } else { m })
    }
}

/// Averaged periodogram with a Hann window.
///
/// Normalised so that samples `x_k` of a white process `⟨x(t)x(s)⟩ = qδ(t−s)`,
/// i.e. `var(x_k) = q/dt`, give `S = q` in every bin. The standard error is
/// `S/√segments`.
pub fn estimate_psd(samples: &[f64], dt: f64, segment_length: usize, overlap: f64) -> Result<PsdEstimate> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Domain(format!("overlap must be in [0, 1), got {overlap}")));
    }
    if segment_length < 2 || segment_length > samples.len() {
        return Err(Error::Domain(format!(
            "segment length {segment_length} needs 2 <= L <= {} samples",
            samples.len()
        )));
    }
    let l = segment_length;
    let hop = (((1.0 - overlap) * l as f64).round() as usize).max(1);
    let window: Vec<f64> = (0..l)
        .map(|k| {
            let s = (PI * k as f64 / l as f64).sin();
            s * s
        })
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(l);

    let bins = l / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0;
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    let mut start = 0;
    while start + l <= samples.len() {
        for k in 0..l {
            buf[k] = Complex64::new(samples[start + k] * window[k], 0.0);
        }
        fft.process(&mut buf);
        for j in 0..bins {
            acc[j] += buf[j].norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let norm = dt / (wss * segments as f64);
    let density: Vec<f64> = acc.iter().map(|a| a * norm).collect();
    let std_err = density.iter().map(|s| s / (segments as f64).sqrt()).collect();
    Ok(PsdEstimate {
        omega: (0..bins).map(|j| 2.0 * PI * j as f64 / (l as f64 * dt)).collect(),
        density,
        std_err,
        segments,
        segment_length: l,
        dt,
    })
}

/// Reads a two-column `(ω rad/s, S)` table with a header row.
pub fn read_spectrum_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("spectrum csv: {e}")))?;
        if rec.len() < 2 {
            return Err(Error::Config(format!("spectrum csv row {}: expected two columns", i + 2)));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("spectrum csv row {}: {e} ({s:?})", i + 2)))
        };
        out.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok(out)
}

/// Writes `omega_rad_per_s,S` rows.
pub fn write_spectrum_csv<W: Write>(mut w: W, points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    writeln!(w, "omega_rad_per_s,S")?;
    for (o, s) in points {
        writeln!(w, "{},{}", fmt::float(o), fmt::float(s))?;
    }
    Ok(())
}
