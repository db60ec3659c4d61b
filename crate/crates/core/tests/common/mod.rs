//! Oracles shared by the integration suites and the acceptance gate.
#![allow(dead_code)]

use gasket_dim::branch::BranchSystem;
use gasket_dim::certify::{h_at, Direction};
use gasket_dim::chebyshev::TestFunction;
use gasket_dim::jet::Jet;
use gasket_dim::Ball;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::Float;

pub const ORACLE_PREC: u32 = 1024;

pub const BALL_OPS: [&str; 8] = ["add", "sub", "mul", "div", "sqrt", "pow", "log", "abs"];

/// A random ball together with a random point inside it.
fn ball_and_point(rng: &mut ChaCha8Rng, prec: u32, positive: bool) -> (Ball, Float) {
    let mid: f64 = if positive { rng.gen_range(0.01..20.0) } else { rng.gen_range(-20.0..20.0) };
    let rad = match rng.gen_range(0..3) {
        0 => 0.0,
        1 => mid.abs() * rng.gen_range(0.0..1e-8),
        _ => mid.abs() * rng.gen_range(0.0..0.9),
    };
    let s: f64 = rng.gen_range(-1.0..=1.0);
    let x = Float::with_val(ORACLE_PREC, mid) + Float::with_val(ORACLE_PREC, rad) * s;
    (Ball::new(Float::with_val(prec, mid), rad), x)
}

/// Number of sampled cases in which `op` misses the exact image of a point.
pub fn ball_op_failures(op: &str, cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..cases {
        let prec = [53, 128, 256][rng.gen_range(0..3)];
        let positive = matches!(op, "sqrt" | "pow" | "log");
        let (a, x) = ball_and_point(&mut rng, prec, positive);
        let (b, y) = ball_and_point(&mut rng, prec, op == "div");
        let t = Float::with_val(prec, rng.gen_range(-3.0..3.0));
        let (got, exact) = match op {
            "add" => (a.add(&b), Float::with_val(ORACLE_PREC, &x + &y)),
            "sub" => (a.sub(&b), Float::with_val(ORACLE_PREC, &x - &y)),
            "mul" => (a.mul(&b), Float::with_val(ORACLE_PREC, &x * &y)),
            "div" => (a.div(&b).expect("positive divisor"), Float::with_val(ORACLE_PREC, &x / &y)),
            "sqrt" => (a.sqrt().expect("positive"), x.sqrt()),
            "pow" => (a.pow(&t).expect("positive"), x.pow(Float::with_val(ORACLE_PREC, &t))),
            "log" => (a.ln().expect("positive"), x.ln()),
            "abs" => (a.abs(), x.abs()),
            _ => panic!("unknown op {op}"),
        };
        if !got.contains(&exact) {
            failures += 1;
        }
    }
    failures
}

/// g(x) = sqrt(25 - 4x) * (x^2 + 1) / (x + 2) + exp(x/3) * ln(x + 3)
pub fn smooth_jet(x: &Ball, order: usize) -> Jet {
    let prec = x.prec();
    let v = Jet::variable(x.clone(), order);
    let root = v.scale(&Ball::from_int(prec, -4)).add_scalar(&Ball::from_int(prec, 25)).sqrt().unwrap();
    let quot = v.mul(&v).add_scalar(&Ball::one(prec)).div(&v.add_scalar(&Ball::from_int(prec, 2))).unwrap();
    let e = v.scale(&Ball::from_ratio(prec, 1, 3)).exp();
    let l = v.add_scalar(&Ball::from_int(prec, 3)).ln().unwrap();
    root.mul(&quot).add(&e.mul(&l))
}

pub fn smooth_value(x: &Float) -> Float {
    let p = x.prec();
    let root = Float::with_val(p, 25 - Float::with_val(p, x * 4u32)).sqrt();
    let quot = (Float::with_val(p, x * x) + 1u32) / Float::with_val(p, x + 2u32);
    let e = Float::with_val(p, x / 3u32).exp();
    let l = Float::with_val(p, x + 3u32).ln();
    root * quot + e * l
}

/// Cases in which the first jet slot misses the central difference (h = 1e-6)
/// by more than its radius plus 1e-8.
pub fn jet_fd_failures(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = Float::with_val(256, 1e-6);
    let mut failures = 0;
    for _ in 0..cases {
        let c: f64 = rng.gen_range(-1.5..5.5);
        let cf = Float::with_val(256, c);
        let jet = smooth_jet(&Ball::exact(Float::with_val(128, c)), 2);
        let fd = (smooth_value(&Float::with_val(256, &cf + &h)) - smooth_value(&Float::with_val(256, &cf - &h)))
            / Float::with_val(256, &h * 2u32);
        let slot = &jet.slots[1];
        let gap = (Float::with_val(256, slot.mid() - &fd)).abs().to_f64();
        if gap > slot.rad() + 1e-8 {
            failures += 1;
        }
    }
    failures
}

/// Points of `samples` uniform draws where h contradicts the certified side of 1.
pub fn sampled_contradictions(
    system: &BranchSystem,
    f: &TestFunction,
    t: &Float,
    direction: Direction,
    samples: usize,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = system.domain;
    let mut bad = 0;
    for _ in 0..samples {
        let x = rng.gen_range(a as f64..=b as f64);
        let h = h_at(system, f, t, &Float::with_val(256, x)).expect("h evaluates");
        let ok = match direction {
            Direction::InfAboveOne => *h.mid() > 1,
            Direction::SupBelowOne => *h.mid() < 1,
        };
        if !ok {
            bad += 1;
        }
    }
    bad
}

/// Published gasket dimensions for d = 2..=10, to 14 decimals.
pub const TABLE: [(u32, &str); 9] = [
    (2, "0.55161856837246"),
    (3, "0.45183750018171"),
    (4, "0.39795943979056"),
    (5, "0.36287714809375"),
    (6, "0.33770271892130"),
    (7, "0.31850809575800"),
    (8, "0.30324865557723"),
    (9, "0.29074069840192"),
    (10, "0.28024518050407"),
];

/// Roots of a polynomial (coefficients lowest degree first) in `[a, b]`,
/// found by sign scanning and bisection at `prec` bits.
pub fn real_roots(coeffs: &[f64], a: f64, b: f64, prec: u32) -> Vec<Float> {
    let eval = |x: &Float| {
        let mut acc = Float::with_val(prec, 0);
        for c in coeffs.iter().rev() {
            acc = acc * x + *c;
        }
        acc
    };
    let steps = 20_000;
    let mut roots = Vec::new();
    let grid: Vec<Float> = (0..=steps).map(|i| Float::with_val(prec, a + (b - a) * i as f64 / steps as f64)).collect();
    for w in grid.windows(2) {
        let (mut lo, mut hi) = (w[0].clone(), w[1].clone());
        let (flo, fhi) = (eval(&lo), eval(&hi));
        if flo.is_zero() {
            roots.push(lo);
            continue;
        }
        if flo.is_sign_negative() == fhi.is_sign_negative() || fhi.is_zero() {
            continue;
        }
        let neg_lo = flo.is_sign_negative();
        for _ in 0..prec {
            let mid = Float::with_val(prec, &lo + &hi) / 2u32;
            if eval(&mid).is_sign_negative() == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(lo);
    }
    if eval(&Float::with_val(prec, b)).is_zero() {
        roots.push(Float::with_val(prec, b));
    }
    roots
}
