mod common;

use std::collections::BTreeSet;

use common::*;
use gasket_dim::bounds::moran_bracket;
use gasket_dim::branch::make_sierpinski_gasket;
use gasket_dim::lab::*;
use gasket_dim::{Ball, Error};
use nalgebra::DMatrix;
use rug::Float;

#[test]
fn vertex_and_edge_counts() {
    for n in 0..=MAX_LEVEL {
        let g = build_level_graph(n).unwrap();
        let p = 3usize.pow(n + 1);
        assert_eq!(g.vertices.len(), (p + 3) / 2);
        assert_eq!(g.edges.len(), p);
        let deg = g.degrees();
        for (i, d) in deg.iter().enumerate() {
            assert_eq!(*d, if g.boundary.contains(&i) { 2 } else { 4 });
        }
    }
    assert_eq!(build_level_graph(1).unwrap().vertices.len(), 6);
    assert_eq!(build_level_graph(2).unwrap().edges.len(), 27);
    assert!(matches!(build_level_graph(9), Err(Error::LevelTooLarge(9))));
}

#[test]
fn small_spectra() {
    assert!(matches!(dirichlet_spectrum(&build_level_graph(0).unwrap()), Err(Error::EmptyInterior)));
    let s1 = dirichlet_spectrum(&build_level_graph(1).unwrap()).unwrap();
    assert_eq!(s1.eigenvalues.len(), 3);
    for (got, want) in s1.eigenvalues.iter().zip([2.0, 5.0, 5.0]) {
        assert!((got - want).abs() < 1e-10);
    }
    let s2 = dirichlet_spectrum(&build_level_graph(2).unwrap()).unwrap();
    let r = 17f64.sqrt();
    for root in [(5.0 - r) / 2.0, (5.0 + r) / 2.0] {
        assert!(s2.eigenvalues.iter().any(|e| (e - root).abs() < 1e-9));
    }
    assert!(s2.eigenvalues.iter().all(|e| *e >= -1e-12));
}

#[test]
fn decimation_matches_every_level() {
    let spectra: Vec<SpectrumReport> =
        (1..=4).map(|n| dirichlet_spectrum(&build_level_graph(n).unwrap()).unwrap()).collect();
    for w in spectra.windows(2) {
        let rep = decimation_check(&w[0], &w[1], 1e-9);
        assert!(rep.unmatched.is_empty(), "{}->{}: {:?}", rep.lower_level, rep.upper_level, rep.unmatched);
        assert!(!rep.matched.is_empty());
        for (l, r, low) in &rep.matched {
            assert!((l * (5.0 - l) - r).abs() < 1e-9 && (r - low).abs() < 1e-9);
        }
    }
    let rep = decimation_check(&spectra[0], &spectra[1], 1e-9);
    assert!(rep.exceptional.iter().any(|e| (e - 5.0).abs() < 1e-9));
}

#[test]
fn spectra_are_symmetric() {
    for n in 1..=3 {
        let g = build_level_graph(n).unwrap();
        let edges: BTreeSet<(usize, usize)> = g.edges.iter().copied().collect();
        let base = dirichlet_spectrum(&g).unwrap().eigenvalues;
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let map = g.symmetry(perm);
            let moved: BTreeSet<(usize, usize)> =
                g.edges.iter().map(|&(i, j)| (map[i].min(map[j]), map[i].max(map[j]))).collect();
            assert_eq!(moved, edges);
            let corners: BTreeSet<usize> = g.boundary.iter().map(|&i| map[i]).collect();
            assert_eq!(corners, g.boundary.iter().copied().collect());
            // relabel the interior and re-solve
            let interior = g.interior();
            let pos = |v: usize| interior.iter().position(|&u| u == v).unwrap();
            let m = g.dirichlet_matrix().unwrap();
            let k = interior.len();
            let relabelled = DMatrix::from_fn(k, k, |a, b| m[(pos(map[interior[a]]), pos(map[interior[b]]))]);
            let mut ev: Vec<f64> = relabelled.symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            for (x, y) in ev.iter().zip(&base) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

/// Coefficients of `R^n(x) - y` with `R(x) = 5x - x^2`, lowest degree first.
fn composed(n: u32, y: f64) -> Vec<f64> {
    let mut p = vec![0.0, 1.0];
    for _ in 0..n {
        // 5p - p^2
        let mut sq = vec![0.0; 2 * p.len() - 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        let mut next: Vec<f64> = sq.iter().map(|c| -c).collect();
        for (i, a) in p.iter().enumerate() {
            next[i] += 5.0 * a;
        }
        p = next;
    }
    p[0] -= y;
    p
}

#[test]
fn backward_orbits_are_roots_of_compositions() {
    let s = make_sierpinski_gasket(2).unwrap();
    let y = Ball::from_int(128, 3);
    let o = backward_orbit(&s, &y, 0).unwrap();
    assert_eq!(o.points.len(), 1);
    assert!((o.points[0].value - 3.0).abs() < 1e-15);
    let o = backward_orbit(&s, &y, 1).unwrap();
    let r13 = 13f64.sqrt();
    let mut vals: Vec<f64> = o.points.iter().map(|p| p.value).collect();
    vals.sort_by(f64::total_cmp);
    assert!((vals[0] - (5.0 - r13) / 2.0).abs() < 1e-14 && (vals[1] - (5.0 + r13) / 2.0).abs() < 1e-14);
    for n in 1..=3 {
        let o = backward_orbit(&s, &y, n).unwrap();
        assert_eq!(o.points.len(), 1 << n);
        let roots = real_roots(&composed(n, 3.0), 0.0, 5.0, 256);
        assert_eq!(roots.len(), 1 << n);
        let mut balls: Vec<Ball> = o.points.iter().map(|p| p.ball.clone().unwrap()).collect();
        balls.sort_by(|a, b| a.mid().partial_cmp(b.mid()).unwrap());
        for (b, r) in balls.iter().zip(&roots) {
            assert!(Float::with_val(256, b.mid() - r).abs() < 1e-30);
        }
    }
    for p in backward_orbit(&s, &y, 8).unwrap().points {
        assert!(p.enclosure.0 >= 0.0 && p.enclosure.1 <= 5.0);
    }
}

#[test]
fn cascade_limit_converges() {
    let zero = cascade_limit(&Ball::zero(128), 30).unwrap();
    assert!(zero.ball.unwrap().contains_f64(0.0));
    let two = Ball::from_int(256, 2);
    let c = cascade_limit(&two, 60).unwrap();
    let tail = &c.ratios[c.ratios.len() - 10..];
    assert!(tail.iter().all(|r| (r - 0.2).abs() < 1e-3), "{tail:?}");
    let a = cascade_limit(&two, 80).unwrap().ball.unwrap();
    let b = cascade_limit(&two, 160).unwrap().ball.unwrap();
    assert!(Float::with_val(256, a.mid() - b.mid()).abs() < 1e-30);
}

#[test]
fn julia_sample_approaches_the_set() {
    let s = make_sierpinski_gasket(2).unwrap();
    let mut prev_gap = f64::INFINITY;
    for n in [4, 8, 12] {
        let pts = julia_sample(&s, n).unwrap();
        assert_eq!(pts.len(), 1 << n);
        assert!(pts.iter().all(|x| (0.0..=5.0).contains(x)));
        let gap = pts[0].max(5.0 - pts[pts.len() - 1]);
        assert!(gap < prev_gap && gap <= 5.0 * 0.5f64.powi(n as i32));
        prev_gap = gap;
    }
    let pts = julia_sample(&s, 12).unwrap();
    let dim = box_counting_dimension(&pts, 4..=9);
    let (lo, hi) = moran_bracket(2).unwrap();
    assert!(lo < dim && dim < hi, "{dim}");
}
