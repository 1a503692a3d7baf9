//! One-dimensional quadrature: Gauss-Legendre rules, adaptive Gauss-Kronrod
//! (21 points) and two mapped rules for `[0, inf)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};

/// Substitution used to bring `[0, inf)` onto a finite parameter range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailMap {
    /// `r = (t / (1 - t))^gamma`, `t in (0, 1)`, adaptive Gauss-Kronrod.
    #[default]
    RationalMap,
    /// `r = e^u`, composite 16-point Gauss-Legendre with panel halving.
    ExpMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMap,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            tail_map: TailMap::RationalMap,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(IbcError::invalid("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(IbcError::invalid("abs_tol", "must be > 0"));
        }
        if self.max_subdivisions == 0 {
            return Err(IbcError::invalid("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_tail_map(mut self, tail_map: TailMap) -> Self {
        self.tail_map = tail_map;
        self
    }

    /// Same spec with both tolerances divided by `factor`.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.rel_tol /= factor;
        self.abs_tol /= factor;
        self
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, via Newton on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (
        x.iter().map(|xi| c + h * xi).collect(),
        w.iter().map(|wi| h * wi).collect(),
    )
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_931_996_085,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Kronrod panel with the embedded 10-point Gauss rule.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Estimate {
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive Gauss-Kronrod on `[a, b]`, bisecting the worst panel.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = gk21(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, est: first });
    let mut subdivisions = 1;
    loop {
        if !value.is_finite() {
            return Err(IbcError::QuadratureNotConverged {
                value,
                error,
                subdivisions,
            });
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(IbcError::QuadratureNotConverged {
                value,
                error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        value += left.value + right.value - worst.est.value;
        error += left.error + right.error - worst.est.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
        subdivisions += 1;
        // refresh the running error to avoid cancellation drift
        if subdivisions % 64 == 0 {
            error = heap.iter().map(|p| p.est.error).sum();
            value = heap.iter().map(|p| p.est.value).sum();
        }
    }
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// `int_0^inf f(r) dr` via `r = (t/(1-t))^gamma` and adaptive Gauss-Kronrod.
///
/// `gamma > 1` flattens an integrable power singularity at the origin.
pub fn integrate_rational_map<F: Fn(f64) -> f64>(f: F, gamma: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let g = move |t: f64| {
        let s = t / (1.0 - t);
        let r = s.powf(gamma);
        let jac = gamma * s.powf(gamma - 1.0) / ((1.0 - t) * (1.0 - t));
        finite_or_zero(f(r) * jac)
    };
    integrate_adaptive(g, 0.0, 1.0, spec)
}

/// `int_0^lambda f(r) dr` via `r = lambda x^gamma` and adaptive Gauss-Kronrod.
pub fn integrate_ball<F: Fn(f64) -> f64>(f: F, lambda: f64, gamma: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if lambda <= 0.0 {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let g = move |x: f64| {
        let r = lambda * x.powf(gamma);
        finite_or_zero(f(r) * lambda * gamma * x.powf(gamma - 1.0))
    };
    integrate_adaptive(g, 0.0, 1.0, spec)
}

/// `int_0^inf f(r) dr` via `r = e^u` and composite 16-point Gauss-Legendre.
///
/// Panels of width `h` are added outward from `u = 0` until three in a row
/// are negligible; `h` is then halved until two sweeps agree.
pub fn integrate_exp_map<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Estimate> {
    let (x, w) = gauss_legendre(16);
    let g = |u: f64| {
        let r = u.exp();
        finite_or_zero(f(r) * r)
    };
    let panel = |a: f64, h: f64| -> f64 {
        let c = a + 0.5 * h;
        x.iter().zip(&w).map(|(xi, wi)| wi * g(c + 0.5 * h * xi)).sum::<f64>() * 0.5 * h
    };
    let sweep = |h: f64| -> Result<f64> {
        let mut total = 0.0;
        for dir in [1.0, -1.0] {
            let mut quiet = 0;
            let mut k = 0usize;
            loop {
                let a = if dir > 0.0 { k as f64 * h } else { -((k + 1) as f64) * h };
                let p = panel(a, h);
                total += p;
                k += 1;
                if p.abs() <= 1e-3 * spec.abs_tol.max(spec.rel_tol * total.abs()) {
                    quiet += 1;
                    if quiet == 3 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                if k as f64 * h > 800.0 {
                    return Err(IbcError::QuadratureNotConverged {
                        value: total,
                        error: p.abs(),
                        subdivisions: k,
                    });
                }
            }
        }
        Ok(total)
    };
    let mut h = 1.0;
    let mut prev = sweep(h)?;
    for level in 0..spec.max_subdivisions.min(12) {
        h *= 0.5;
        let next = sweep(h)?;
        let err = (next - prev).abs();
        if err <= spec.abs_tol.max(spec.rel_tol * next.abs()) {
            return Ok(Estimate {
                value: next,
                error: err,
            });
        }
        prev = next;
        if level + 1 == spec.max_subdivisions.min(12) {
            return Err(IbcError::QuadratureNotConverged {
                value: next,
                error: err,
                subdivisions: level + 1,
            });
        }
    }
    Err(IbcError::QuadratureNotConverged {
        value: prev,
        error: f64::INFINITY,
        subdivisions: 0,
    })
}

/// Dispatches on `spec.tail_map`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, gamma: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    match spec.tail_map {
        TailMap::RationalMap => integrate_rational_map(f, gamma, spec),
        TailMap::ExpMap => integrate_exp_map(f, spec),
    }
}
