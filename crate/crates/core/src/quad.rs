//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
    pub intervals: usize,
}

struct Piece<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
    abs: [f64; K],
    key: f64,
}

impl<const K: usize> PartialEq for Piece<K> {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl<const K: usize> Eq for Piece<K> {}
impl<const K: usize> PartialOrd for Piece<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Piece<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn kronrod<const K: usize, F: FnMut(f64) -> [f64; K]>(
    f: &mut F,
    a: f64,
    b: f64,
) -> ([f64; K], [f64; K], [f64; K]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [[0.0; K]; 15];
    fv[7] = f(c);
    for j in 0..7 {
        fv[j] = f(c - h * XGK[j]);
        fv[14 - j] = f(c + h * XGK[j]);
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let mut abs = [0.0; K];
    for k in 0..K {
        let mut rk = WGK[7] * fv[7][k];
        let mut rg = WG[3] * fv[7][k];
        let mut ra = WGK[7] * fv[7][k].abs();
        for j in 0..7 {
            let s = fv[j][k] + fv[14 - j][k];
            rk += WGK[j] * s;
            ra += WGK[j] * (fv[j][k].abs() + fv[14 - j][k].abs());
            if j % 2 == 1 {
                rg += WG[j / 2] * s;
            }
        }
        let mean = 0.5 * rk;
        let mut asc = WGK[7] * (fv[7][k] - mean).abs();
        for j in 0..7 {
            asc += WGK[j] * ((fv[j][k] - mean).abs() + (fv[14 - j][k] - mean).abs());
        }
        let (rk, ra, asc) = (rk * h, ra * h.abs(), asc * h.abs());
        let mut err = ((rk - rg * h).abs()).max(0.0);
        if asc != 0.0 && err != 0.0 {
            err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
        }
        if ra > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * ra);
        }
        value[k] = rk;
        error[k] = err;
        abs[k] = ra;
    }
    (value, error, abs)
}

/// Components far smaller than the largest are judged against this fraction of it.
pub const VECTOR_FLOOR: f64 = 1e-8;

/// Integrates `f` over `[points[0], points.last()]`, splitting first at every
/// interior point. Each component `k` converges when its error is below
/// `abs_tol + rel_tol·max(∫|f_k|, VECTOR_FLOOR·max_j ∫|f_j|)`.
pub fn integrate<const K: usize, F>(mut f: F, points: &[f64], cfg: &QuadConfig) -> Result<Quadrature<K>>
where
    F: FnMut(f64) -> [f64; K],
{
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Ok(Quadrature {
            value: [0.0; K],
            error: [0.0; K],
            intervals: 0,
        });
    }

    let mut heap = BinaryHeap::new();
    let mut total = [0.0; K];
    let mut total_err = [0.0; K];
    let mut total_abs = [0.0; K];
    let mut raw = Vec::new();
    for w in pts.windows(2) {
        let (v, e, a) = kronrod(&mut f, w[0], w[1]);
        for k in 0..K {
            total[k] += v[k];
            total_err[k] += e[k];
            total_abs[k] += a[k];
        }
        raw.push((w[0], w[1], v, e, a));
    }
    let scale = |abs: &[f64; K]| -> [f64; K] {
        let floor = VECTOR_FLOOR * abs.iter().fold(0.0_f64, |m, &x| m.max(x));
        let mut s = [0.0; K];
        for k in 0..K {
            s[k] = cfg.abs_tol + cfg.rel_tol * abs[k].max(floor);
        }
        s
    };
    let key_of = |e: &[f64; K], s: &[f64; K]| -> f64 {
        (0..K)
            .map(|k| if s[k] > 0.0 { e[k] / s[k] } else if e[k] > 0.0 { f64::INFINITY } else { 0.0 })
            .fold(0.0, f64::max)
    };
    let s0 = scale(&total_abs);
    for (a, b, value, error, abs) in raw {
        let key = key_of(&error, &s0);
        heap.push(Piece { a, b, value, error, abs, key });
    }

    loop {
        let s = scale(&total_abs);
        if (0..K).all(|k| total_err[k] <= s[k]) {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::Quadrature(format!(
                "{} intervals used, error {:e} vs target {:e}",
                heap.len(),
                total_err.iter().fold(0.0_f64, |m, &x| m.max(x)),
                s.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
            )));
        }
        let Some(p) = heap.pop() else { break };
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Quadrature(format!(
                "interval [{:e}, {:e}] cannot be split further",
                p.a, p.b
            )));
        }
        let left = kronrod(&mut f, p.a, mid);
        let right = kronrod(&mut f, mid, p.b);
        for k in 0..K {
            total[k] += left.0[k] + right.0[k] - p.value[k];
            total_err[k] += left.1[k] + right.1[k] - p.error[k];
            total_abs[k] += left.2[k] + right.2[k] - p.abs[k];
        }
        let s = scale(&total_abs);
        for (a, b, (value, error, abs)) in [(p.a, mid, left), (mid, p.b, right)] {
            let key = key_of(&error, &s);
            heap.push(Piece { a, b, value, error, abs, key });
        }
    }

    // re-sum to shed the drift of incremental updates
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let intervals = heap.len();
    for p in heap {
        for k in 0..K {
            value[k] += p.value[k];
            error[k] += p.error[k];
        }
    }
    Ok(Quadrature { value, error, intervals })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], cfg: &QuadConfig) -> Result<(f64, f64)> {
    let q = integrate(|x| [f(x)], points, cfg)?;
    Ok((q.value[0], q.error[0]))
}
