//! Independent reference computations shared by the integration tests and
//! the acceptance harness. Nothing here calls into the library's own
//! quadrature or kernel code.

#![allow(dead_code)]

use num_complex::Complex64;
use sln_core::{FilterSet, StreamSeed, Synthesizer, TimeGrid};

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XK[i];
        let s = f(c - x) + f(c + x);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod (7/15) with absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&mut f, a, b, tol, 40)
}

/// `PV int_a^b g(x) / (x - c) dx` by folding a symmetric neighbourhood of
/// the pole: `int_0^d [g(c+u) - g(c-u)] / u du` plus the two outer pieces.
pub fn principal_value<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, c: f64, tol: f64) -> f64 {
    assert!(a < c && c < b);
    let d = (c - a).min(b - c);
    let folded = integrate(|u| (g(c + u) - g(c - u)) / u, 0.0, d, tol);
    let left = if c - d > a { integrate(|x| g(x) / (x - c), a, c - d, tol) } else { 0.0 };
    let right = if c + d < b { integrate(|x| g(x) / (x - c), c + d, b, tol) } else { 0.0 };
    folded + left + right
}

pub fn drude_j(w: f64, wc: f64) -> f64 {
    if w <= 0.0 || w > wc {
        0.0
    } else {
        w / (1.0 + (w / wc).powi(2)).powi(2)
    }
}

/// `-(2/pi) PV int_0^wc x J(x) / (x^2 - w^2) dx` for `0 < w < wc`.
pub fn im_k_etanu_oracle(w: f64, wc: f64) -> f64 {
    // x J(x) / (x^2 - w^2) = [x J(x) / (x + w)] / (x - w)
    let g = |x: f64| x * drude_j(x, wc) / (x + w);
    -(2.0 / std::f64::consts::PI) * principal_value(g, 0.0, wc, w, 1e-13)
}

/// Time-domain bath correlation `(1/pi) int_0^wc J [coth(beta w/2) cos wt - i sin wt] dw`.
pub fn bath_kernel_oracle(t: f64, beta: f64, wc: f64) -> Complex64 {
    let re = integrate(
        |w| {
            let x = 0.5 * beta * w;
            let coth_j = if x < 1e-8 { (2.0 / beta) / (1.0 + (w / wc).powi(2)).powi(2) } else { drude_j(w, wc) / x.tanh() };
            coth_j * (w * t).cos()
        },
        0.0,
        wc,
        1e-12,
    );
    let im = integrate(|w| drude_j(w, wc) * (w * t).sin(), 0.0, wc, 1e-12);
    Complex64::new(re, -im) / std::f64::consts::PI
}

/// Exact covariances of the synthesized `(eta, nu)` on a small grid, by
/// pushing every white-noise unit impulse through the synthesizer and summing
/// the outer products with the white-noise variance `1/dt`.
pub struct BruteCovariance {
    /// `<eta(j) eta(0)>`, `<eta(j) nu(0)>`, `<nu(j) nu(0)>` for `j` in the window.
    pub etaeta: Vec<Complex64>,
    pub etanu: Vec<Complex64>,
    pub nunu: Vec<Complex64>,
    /// `<eta(0) nu(j)>`: the negative-lag side of the cross correlation.
    pub nueta: Vec<Complex64>,
}

pub fn brute_covariance(fs: &FilterSet, grid: &TimeGrid) -> BruteCovariance {
    let synth = Synthesizer::new(fs, *grid).expect("grid matches filters");
    let n = grid.n();
    let m = grid.physical_len();
    let channels = fs.channels();
    let var = 1.0 / grid.dt();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = BruteCovariance {
        etaeta: vec![zero; m],
        etanu: vec![zero; m],
        nunu: vec![zero; m],
        nueta: vec![zero; m],
    };
    let seed = StreamSeed { key: 0, stream: 0 };
    for c in 0..channels {
        for j in 0..n {
            let mut white = vec![vec![0.0; n]; channels];
            white[c][j] = 1.0;
            let p = synth.from_white(&white, seed, None).expect("synthesis");
            for l in 0..m {
                out.etaeta[l] += var * p.eta_t[l] * p.eta_t[0];
                out.etanu[l] += var * p.eta_t[l] * p.nu_t[0];
                out.nunu[l] += var * p.nu_t[l] * p.nu_t[0];
                out.nueta[l] += var * p.eta_t[0] * p.nu_t[l];
            }
        }
    }
    out
}
