//! Globally adaptive 15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights of the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Equal-width pieces the range is split into before adapting.
    pub initial_pieces: usize,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            initial_pieces: 1,
            max_intervals: 400,
        }
    }

    pub const fn pieces(mut self, n: usize) -> Self {
        self.initial_pieces = n;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Part of `error` that is rounding noise rather than truncation.
    floor: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Kronrod rule on `[a, b]` with the usual error heuristic.
fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        *slot = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let (value, res_abs, res_asc) = (res_k * half, res_abs * half.abs(), res_asc * half.abs());
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    error = error.max(floor);
    Piece {
        a,
        b,
        value,
        error,
        floor: floor.min(error),
    }
}

/// `∫_a^b f`, refining the piece with the largest error estimate until the
/// total estimate meets `max(tol.abs, tol.rel·|value|)`. Rounding noise in
/// the error estimate is not held against the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let n = tol.initial_pieces.max(1);
    let width = (b - a) / n as f64;
    let mut heap = BinaryHeap::with_capacity(tol.max_intervals + n);
    let (mut value, mut error, mut floor) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let lo = a + width * i as f64;
        let hi = if i + 1 == n { b } else { lo + width };
        let p = kronrod(&mut f, lo, hi);
        value += p.value;
        error += p.error;
        floor += p.floor;
        heap.push(p);
    }
    let mut splits = 0;
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]: value {value}, error {error}"
            )));
        }
        if error - floor <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(value);
        }
        if splits >= tol.max_intervals {
            break;
        }
        let worst = heap.pop().expect("at least one piece");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (l, r) = (kronrod(&mut f, worst.a, mid), kronrod(&mut f, mid, worst.b));
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        floor += l.floor + r.floor - worst.floor;
        heap.push(l);
        heap.push(r);
        splits += 1;
        if splits % 64 == 0 {
            // Refresh running sums so cancellation drift never hides convergence.
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
            floor = heap.iter().map(|p| p.floor).sum();
        }
    }
    value = heap.iter().map(|p| p.value).sum();
    error = heap.iter().map(|p| p.error).sum();
    floor = heap.iter().map(|p| p.floor).sum();
    if error - floor <= tol.abs.max(tol.rel * value.abs()) {
        return Ok(value);
    }
    Err(Error::Quadrature(format!(
        "∫ over [{a}, {b}] reached {} pieces with estimate {value:e} ± {error:e} (tolerance abs {:e}, rel {:e})",
        heap.len(),
        tol.abs,
        tol.rel
    )))
}
