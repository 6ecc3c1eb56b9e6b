//! Gauss-Legendre rules and adaptive Gauss-Kronrod (7/15) integration.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// ascending. Newton iteration on `P_n` from Chebyshev-like initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
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
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A fixed quadrature rule on an interval: nodes ascending, positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss-Legendre with `per_panel` nodes on each panel delimited by `edges`.
pub fn composite_gauss(edges: &[f64], per_panel: usize) -> Rule {
    let (x, w) = gauss_legendre(per_panel);
    let mut nodes = Vec::with_capacity(edges.len().saturating_sub(1) * per_panel);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + h * xi);
            weights.push(h * wi);
        }
    }
    Rule { nodes, weights }
}

/// Maps the `[-1, 1]` rule `(x, w)` onto `[a, b]`.
pub fn map_rule(x: &[f64], w: &[f64], a: f64, b: f64) -> Rule {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    Rule {
        nodes: x.iter().map(|xi| c + h * xi).collect(),
        weights: w.iter().map(|wi| h * wi).collect(),
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss-Kronrod 7/15 on `[a, b]`. Stops when the summed
/// error estimate is below `max(abs_tol, rel_tol |I|)` or after `max_intervals`.
pub fn adaptive_gk(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_intervals: usize) -> Estimate {
    if a == b {
        return Estimate { value: 0.0, error: 0.0, intervals: 0 };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, val: v, err: e });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_intervals {
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Piece { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Piece { a: m, b: p.b, val: v2, err: e2 });
    }
    // re-sum to drop the running-update drift
    let value = heap.iter().map(|p| p.val).sum();
    let error = heap.iter().map(|p| p.err).sum();
    Estimate { value, error, intervals: heap.len() }
}

/// Adaptive integral with default limits: relative 1e-12, 2000 intervals.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    adaptive_gk(f, a, b, 1e-12, 1e-300, 2000).value
}
