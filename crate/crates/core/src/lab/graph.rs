//! Level-`n` approximations `X_n` of the Sierpinski triangle and their
//! Dirichlet spectra.
//!
//! Vertex coordinates are integers `(X, Y)` standing for the point
//! `(X, Y sqrt 3) / 2^(n+1)`, so the corners are `(0, 0)`, `(2^(n+1), 0)`
//! and `(2^n, 2^n)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LEVEL: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelGraph {
    pub level: u32,
    /// Sorted by `(Y, X)`.
    pub vertices: Vec<(i64, i64)>,
    /// Vertex index pairs `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Indices of the three corners.
    pub boundary: Vec<usize>,
}

fn corners(level: u32) -> [(i64, i64); 3] {
    let s = 1i64 << level;
    [(0, 0), (2 * s, 0), (s, s)]
}

/// `X_n = T_1(X_{n-1}) u T_2(X_{n-1}) u T_3(X_{n-1})`.
pub fn build_level_graph(n: u32) -> Result<LevelGraph> {
    if n > MAX_LEVEL {
        return Err(Error::LevelTooLarge(n));
    }
    let c = corners(0);
    let mut edges: Vec<((i64, i64), (i64, i64))> = vec![(c[0], c[1]), (c[1], c[2]), (c[0], c[2])];
    for level in 1..=n {
        // T_i(x) = (x + p_i) / 2, which in the finer integer grid is a shift
        let shifts = corners(level - 1);
        edges = shifts
            .iter()
            .flat_map(|&(sx, sy)| edges.iter().map(move |&((ax, ay), (bx, by))| ((ax + sx, ay + sy), (bx + sx, by + sy))))
            .collect();
    }
    let mut index = BTreeMap::new();
    for &(a, b) in &edges {
        index.insert((a.1, a.0), ());
        index.insert((b.1, b.0), ());
    }
    let vertices: Vec<(i64, i64)> = index.keys().map(|&(y, x)| (x, y)).collect();
    let pos: BTreeMap<(i64, i64), usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut idx_edges: Vec<(usize, usize)> = edges
        .iter()
        .map(|(a, b)| {
            let (i, j) = (pos[a], pos[b]);
            (i.min(j), i.max(j))
        })
        .collect();
    idx_edges.sort_unstable();
    idx_edges.dedup();
    let boundary = corners(n).iter().map(|v| pos[v]).collect();
    Ok(LevelGraph { level: n, vertices, edges: idx_edges, boundary })
}

impl LevelGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|i| !self.boundary.contains(i)).collect()
    }

    /// `-Delta` on interior vertices with `(Delta f)(x) = sum_{y ~ x} (f(y) - f(x))`
    /// and `f = 0` on the boundary.
    pub fn dirichlet_matrix(&self) -> Result<DMatrix<f64>> {
        let interior = self.interior();
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        let mut slot = vec![usize::MAX; self.vertices.len()];
        for (k, &v) in interior.iter().enumerate() {
            slot[v] = k;
        }
        let deg = self.degrees();
        let n = interior.len();
        let mut m = DMatrix::zeros(n, n);
        for (k, &v) in interior.iter().enumerate() {
            m[(k, k)] = deg[v] as f64;
        }
        for &(i, j) in &self.edges {
            if slot[i] != usize::MAX && slot[j] != usize::MAX {
                m[(slot[i], slot[j])] = -1.0;
                m[(slot[j], slot[i])] = -1.0;
            }
        }
        Ok(m)
    }

    /// The six symmetries of the triangle, acting on barycentric lattice
    /// coordinates `(i, j, k)` with `X = 2i + j`, `Y = j`.
    pub fn symmetry(&self, perm: [usize; 3]) -> Vec<usize> {
        let s = 1i64 << self.level;
        let pos: BTreeMap<(i64, i64), usize> = self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        self.vertices
            .iter()
            .map(|&(x, y)| {
                let b = [(x - y) / 2, y, s - (x - y) / 2 - y];
                let (i, j) = (b[perm[0]], b[perm[1]]);
                pos[&(2 * i + j, j)]
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub level: u32,
    pub boundary: String,
    pub convention: String,
    /// Ascending, with repetition.
    pub eigenvalues: Vec<f64>,
    /// `(value, multiplicity)`, grouping eigenvalues within `1e-9`.
    pub multiplicities: Vec<(f64, usize)>,
}

pub const CONVENTION: &str = "(Delta f)(x) = sum over neighbours y of (f(y) - f(x)); eigenvalues of -Delta";

/// Dense (double precision, non-certified) Dirichlet spectrum of `X_n`.
pub fn dirichlet_spectrum(g: &LevelGraph) -> Result<SpectrumReport> {
    let m = g.dirichlet_matrix()?;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let mut multiplicities: Vec<(f64, usize)> = Vec::new();
    for &e in &eigenvalues {
        match multiplicities.last_mut() {
            Some((v, k)) if (e - *v).abs() < 1e-9 => *k += 1,
            _ => multiplicities.push((e, 1)),
        }
    }
    Ok(SpectrumReport {
        level: g.level,
        boundary: "dirichlet".into(),
        convention: CONVENTION.into(),
        eigenvalues,
        multiplicities,
    })
}

/// Eigenvalues for which the decimation recursion is not expected to hold.
pub const EXCEPTIONAL: [f64; 3] = [2.0, 5.0, 6.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecimationReport {
    pub lower_level: u32,
    pub upper_level: u32,
    /// `(lambda, R(lambda), matching lower eigenvalue)`.
    pub matched: Vec<(f64, f64, f64)>,
    pub exceptional: Vec<f64>,
    pub unmatched: Vec<f64>,
}

/// Check `R(lambda) = lambda (5 - lambda)` maps the upper spectrum into the lower one.
pub fn decimation_check(lower: &SpectrumReport, upper: &SpectrumReport, tol: f64) -> DecimationReport {
    let mut report = DecimationReport {
        lower_level: lower.level,
        upper_level: upper.level,
        matched: Vec::new(),
        exceptional: Vec::new(),
        unmatched: Vec::new(),
    };
    for &l in &upper.eigenvalues {
        if EXCEPTIONAL.iter().any(|e| (l - e).abs() < tol) {
            report.exceptional.push(l);
            continue;
        }
        let r = l * (5.0 - l);
        match lower.eigenvalues.iter().find(|&&x| (x - r).abs() < tol) {
            Some(&x) => report.matched.push((l, r, x)),
            None => report.unmatched.push(l),
        }
    }
    report
}
