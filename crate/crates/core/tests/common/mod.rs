//! Shared oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use covlab::geometry::{build_lattice_with_cfl, MetricModel};
use covlab::scalarfield::{ScalarKernel, TestFunction};

/// 8-point Gauss-Legendre nodes and weights on `[−1, 1]`.
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫ g` over `[a, b]` with `n` Gauss-Legendre panels.
pub fn gauss_legendre(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for p in 0..n {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            acc += w * g(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// Antiderivative of `cos²(π y / 2r)` on `|y| < r`, zero to the left.
pub fn bump_primitive(y: f64, r: f64) -> f64 {
    if y <= -r {
        0.0
    } else if y >= r {
        r
    } else {
        0.5 * (y + r) + r / (2.0 * PI) * (PI * y / r).sin()
    }
}

pub fn bump_profile(y: f64, r: f64) -> f64 {
    if y.abs() >= r { 0.0 } else { (0.5 * PI * y / r).cos().powi(2) }
}

/// Massless causal propagator on the line applied to a tensor bump,
/// `(E f)(t, x) = ½ ∫ sgn(t − t′) φ(t′) [Ψ(x − x0 + |t − t′|) − Ψ(x − x0 − |t − t′|)] dt′`.
pub fn dalembert(t: f64, x: f64, t0: f64, x0: f64, rt: f64, rx: f64) -> f64 {
    let g = |tp: f64| {
        let d = (t - tp).abs();
        let s = (t - tp).signum();
        0.5 * s * bump_profile(tp - t0, rt) * (bump_primitive(x - x0 + d, rx) - bump_primitive(x - x0 - d, rx))
    };
    let (a, b) = (t0 - rt, t0 + rt);
    if t <= a || t >= b {
        gauss_legendre(g, a, b, 16)
    } else {
        gauss_legendre(g, a, t, 16) + gauss_legendre(g, t, b, 16)
    }
}

/// Relative max-norm error of `E f` against the closed form for `t ≤ 1.3`.
pub fn dalembert_error(nx: usize) -> f64 {
    let model = MetricModel::minkowski(0.0, 2.0, 2.0);
    let lat = build_lattice_with_cfl(&model, nx + 1, nx, 1.0).unwrap();
    let k = ScalarKernel::new(&model, &lat, 0.0).unwrap();
    let (t0, x0, r) = (0.5, 1.0, 0.1);
    let f = TestFunction::bump(&lat, t0, x0, r, r);
    let u = k.solve_causal(&f).unwrap();
    let (mut err, mut size) = (0.0_f64, 0.0_f64);
    for i in 0..lat.slice_of(1.3) {
        for j in 0..nx {
            let e = dalembert(lat.t(i), lat.x(j), t0, x0, r, r);
            size = size.max(e.abs());
            err = err.max((u[lat.site(i, j)] - e).abs());
        }
    }
    err / size
}
