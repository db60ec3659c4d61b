mod common;

use std::sync::Arc;

use gasket_dim::branch::{family, make_affine_cantor, make_sierpinski_gasket, make_vicsek, BranchSystem};
use gasket_dim::chebyshev::*;
use gasket_dim::{Ball, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

const P: u32 = 128;

fn fl(x: f64) -> Float {
    Float::with_val(P, x)
}

fn moran_t() -> Float {
    Float::with_val(P, 2).ln() / Float::with_val(P, 3).ln()
}

#[test]
fn grid_examples() {
    let g = ChebyshevGrid::new(1, (0, 5), P);
    assert!(g.nodes[0].contains_f64(2.5));
    let g = ChebyshevGrid::new(2, (-1, 1), P);
    let c = Float::with_val(256, 0.5).sqrt();
    assert!(g.nodes[0].contains(&-c.clone()) && g.nodes[1].contains(&c));
    for m in [3, 8, 31, 64] {
        let g = ChebyshevGrid::new(m, (0, 7), P);
        for w in g.nodes.windows(2) {
            assert!(w[0].upper() < w[1].lower());
        }
        assert!(g.nodes[0].lower() > 0 && g.nodes[m - 1].upper() < 7);
        for i in 0..m {
            let s = g.nodes[i].add(&g.nodes[m - 1 - i]);
            assert!(s.contains_f64(7.0));
        }
    }
}

#[test]
fn polynomial_interpolation_is_exact() {
    let m = 12;
    let grid = Arc::new(ChebyshevGrid::new(m, (0, 5), P));
    // degree m - 1 with alternating coefficients
    let poly = |x: &Float| {
        let mut acc = Float::with_val(512, 0);
        for k in (0..m).rev() {
            acc = acc * x + if k % 2 == 0 { 1.0 } else { -0.5 } / (k + 1) as f64;
        }
        acc
    };
    let values: Vec<Float> = grid.nodes.iter().map(|n| Float::with_val(P, poly(&Float::with_val(512, n.mid())))).collect();
    let f = TestFunction::from_values(grid, values, fl(0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let x = Float::with_val(P, rng.gen_range(0.0..5.0));
        let want = poly(&Float::with_val(512, &x));
        let got = f.eval(&Ball::exact(x)).unwrap();
        let rel = Float::with_val(512, got.mid() - &want).abs() / want.clone().abs();
        assert!(rel.to_f64() < 1e-30, "{rel}");
    }
}

#[test]
fn eval_contains_high_precision_interpolant() {
    let s = make_sierpinski_gasket(2).unwrap();
    let grid = Arc::new(ChebyshevGrid::new(20, (0, 5), P));
    let f = build_test_function(&s, &fl(0.55), grid.clone()).unwrap();
    // the same node values interpolated at 4x precision by the first barycentric form
    let hp = 4 * P;
    let nodes: Vec<Float> = (0..20)
        .map(|j| {
            let th = Float::with_val(hp, rug::float::Constant::Pi) * (2 * j + 1) as u32 / 40u32;
            Float::with_val(hp, 2.5) - th.cos() * 2.5f64
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let x = Float::with_val(hp, rng.gen_range(0.0..5.0));
        let mut total = Float::with_val(hp, 0);
        for (i, v) in f.values.iter().enumerate() {
            let mut l = Float::with_val(hp, 1);
            for (k, xk) in nodes.iter().enumerate() {
                if k != i {
                    l *= Float::with_val(hp, &x - xk) / Float::with_val(hp, &nodes[i] - xk);
                }
            }
            total += l * v;
        }
        let got = f.eval(&Ball::exact(Float::with_val(P, &x))).unwrap();
        assert!(got.contains(&total), "{got:?} vs {total}");
    }
}

#[test]
fn constant_and_line_evaluation() {
    let grid = Arc::new(ChebyshevGrid::new(5, (0, 5), P));
    let c = TestFunction::constant(grid.clone(), 4, fl(0.0));
    assert!(c.eval(&Ball::exact(fl(3.3))).unwrap().contains_f64(4.0));
    let line: Vec<Float> = grid.nodes.iter().map(|n| n.mid().clone()).collect();
    let f = TestFunction::from_values(grid, line, fl(0.0));
    let v = f.eval(&Ball::one(P)).unwrap();
    assert!((v.mid_f64() - 1.0).abs() < 1e-30);
    assert!(matches!(f.eval(&Ball::exact(fl(5.5))), Err(Error::OutOfDomain)));
}

#[test]
fn column_sums_count_branches_at_zero() {
    for s in [make_sierpinski_gasket(2).unwrap(), make_vicsek().unwrap(), make_affine_cantor((1, 3), 2).unwrap()] {
        let grid = ChebyshevGrid::new(16, s.domain, P);
        let mat = collocation_matrix(&s, &fl(0.0), &grid).unwrap();
        let k = s.branches.len() as f64;
        for j in 0..16 {
            let rel = (mat.column_sum(j).to_f64() - k).abs() / k;
            assert!(rel < 1e-25, "{}: {rel}", s.name);
        }
    }
}

#[test]
fn one_node_matrix_is_closed_form() {
    let s = make_sierpinski_gasket(2).unwrap();
    let mat = collocation_matrix(&s, &fl(1.0), &ChebyshevGrid::new(1, (0, 5), P)).unwrap();
    let want = Float::with_val(P, 2) / Float::with_val(P, 15).sqrt();
    assert!(Float::with_val(P, mat.get(0, 0) - &want).abs() < 1e-35);
}

#[test]
fn cantor_eigenvalue_is_one_at_its_dimension() {
    let s = make_affine_cantor((1, 3), 2).unwrap();
    for m in [2, 7, 20] {
        let mat = collocation_matrix(&s, &moran_t(), &ChebyshevGrid::new(m, (0, 1), P)).unwrap();
        let (lambda, v) = leading_left_eigenvector(&mat, default_tolerance(P)).unwrap();
        assert!((lambda.to_f64() - 1.0).abs() < 1e-20);
        assert!(v.iter().all(|x| (x.to_f64() - 1.0).abs() < 1e-20));
        assert!(pressure_estimate(&s, &moran_t(), m, P).unwrap().abs() < 1e-15);
    }
    let f = build_test_function(&s, &moran_t(), Arc::new(ChebyshevGrid::new(9, (0, 1), P))).unwrap();
    assert!(f.values.iter().all(|x| (x.to_f64() - 1.0).abs() < 1e-20));
}

#[test]
fn small_matrices() {
    let scalar = CollocationMatrix { m: 1, t: fl(0.0), entries: vec![fl(2.0)] };
    let (l, v) = leading_left_eigenvector(&scalar, 1e-30).unwrap();
    assert_eq!(l, 2);
    assert_eq!(v[0], 1);
    let diag = CollocationMatrix { m: 2, t: fl(0.0), entries: vec![fl(3.0), fl(0.0), fl(0.0), fl(1.0)] };
    let (l, v) = leading_left_eigenvector(&diag, 1e-30).unwrap();
    assert!((l.to_f64() - 3.0).abs() < 1e-25);
    assert!((v[0].to_f64() - 1.0).abs() < 1e-25 && v[1].to_f64().abs() < 1e-25);
}

#[test]
fn triangle_at_zero_has_constant_eigenvector() {
    let s = make_sierpinski_gasket(2).unwrap();
    for m in [3, 30] {
        let mat = collocation_matrix(&s, &fl(0.0), &ChebyshevGrid::new(m, (0, 5), P)).unwrap();
        let (l, v) = leading_left_eigenvector(&mat, default_tolerance(P)).unwrap();
        assert!((l.to_f64() - 2.0).abs() < 1e-25);
        assert!(v.iter().all(|x| (x.to_f64() - 1.0).abs() < 1e-25));
    }
    assert!((pressure_estimate(&s, &fl(0.0), 12, P).unwrap() - 2f64.ln()).abs() < 1e-15);
    let f = build_test_function(&s, &fl(0.55), Arc::new(ChebyshevGrid::new(30, (0, 5), P))).unwrap();
    assert!(f.values.iter().all(|x| *x > 0));
}

fn pressure_systems() -> Vec<BranchSystem> {
    let mut v: Vec<BranchSystem> = (2..=10).map(|d| make_sierpinski_gasket(d).unwrap()).collect();
    v.push(make_vicsek().unwrap());
    v.push(family("cantor:r=1/3,k=2").unwrap());
    v.push(family("cantor:r=1/4,k=3").unwrap());
    v
}

#[test]
fn pressure_estimate_decreases_in_t() {
    for s in pressure_systems() {
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let p = pressure_estimate(&s, &fl(i as f64 / 19.0), 16, P).unwrap();
            assert!(p < last, "{} at t={}", s.name, i as f64 / 19.0);
            last = p;
        }
    }
    let s = make_sierpinski_gasket(2).unwrap();
    assert!(pressure_estimate(&s, &fl(0.4), 20, P).unwrap() > 0.0);
    assert!(pressure_estimate(&s, &fl(0.7), 20, P).unwrap() < 0.0);
}

#[test]
fn pressure_estimate_is_stable_in_rank() {
    let s = make_sierpinski_gasket(2).unwrap();
    for t in [0.54, 0.55, 0.56] {
        let a = pressure_estimate(&s, &fl(t), 30, P).unwrap();
        let b = pressure_estimate(&s, &fl(t), 60, P).unwrap();
        assert!((a - b).abs() <= 1e-8);
    }
}
