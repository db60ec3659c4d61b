//! Chebyshev collocation of the transfer operator and candidate eigenfunctions.
//!
//! `(L_t f)(x) = sum_j |S_j'(x)|^t f(S_j(x))` is discretised on the
//! first-kind Chebyshev nodes of the domain. The collocation matrix and its
//! dominant eigenvector are computed in plain high-precision floating point;
//! they only steer the search. Certified evaluation of the resulting
//! interpolant goes through [`TestFunction`].

use std::sync::Arc;

use rug::float::Round;
use rug::Float;

use crate::ball::{add_up, mul_up, up, Ball};
use crate::branch::BranchSystem;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Extra bits for ball Clenshaw recurrences: radii grow like `(1 + sqrt 2)^m`.
pub fn guard_prec(prec: u32, m: usize) -> u32 {
    prec + (13 * m as u32).div_ceil(10) + 8
}

#[derive(Clone, Debug)]
pub struct ChebyshevGrid {
    pub m: usize,
    pub interval: (i64, i64),
    /// Increasing nodes `mid - half * cos((2j+1) pi / 2m)`, at guard precision.
    pub nodes: Vec<Ball>,
    pub barycentric_weights: Vec<Ball>,
    pub prec: u32,
    /// `cos(pi n / 2m)` for `n < 4m`.
    cos_table: Vec<Ball>,
}

impl ChebyshevGrid {
    pub fn new(m: usize, interval: (i64, i64), prec: u32) -> ChebyshevGrid {
        assert!(m >= 1, "empty grid");
        assert!(interval.0 < interval.1, "empty interval");
        let gp = guard_prec(prec, m);
        let pi = Ball::pi(gp);
        let cos_table: Vec<Ball> = (0..4 * m)
            .map(|n| {
                let mut a = pi.mul_int(n as i32);
                a.div_int_assign(2 * m as i32);
                a.cos()
            })
            .collect();
        let mut mid = Ball::from_int(gp, interval.0 + interval.1);
        mid.mul_pow2_assign(-1);
        let mut half = Ball::from_int(gp, interval.1 - interval.0);
        half.mul_pow2_assign(-1);
        let mut nodes = Vec::with_capacity(m);
        let mut barycentric_weights = Vec::with_capacity(m);
        for j in 0..m {
            let c = &cos_table[2 * j + 1];
            nodes.push(mid.sub(&half.mul(c)));
            let mut a = pi.mul_int(2 * j as i32 + 1);
            a.div_int_assign(2 * m as i32);
            let s = a.sin();
            barycentric_weights.push(if j % 2 == 0 { s } else { s.neg() });
        }
        ChebyshevGrid { m, interval, nodes, barycentric_weights, prec, cos_table }
    }

    pub fn guard_prec(&self) -> u32 {
        guard_prec(self.prec, self.m)
    }

    /// `T_k` at node `j` in the increasing ordering: `(-1)^k cos(k theta_j)`.
    fn cheb_at_node(&self, k: usize, j: usize) -> Ball {
        let n = (k * (2 * j + 1)) % (4 * self.m);
        let c = &self.cos_table[n];
        if k % 2 == 0 {
            c.clone()
        } else {
            c.neg()
        }
    }

    fn node_mids(&self) -> Vec<Float> {
        self.nodes.iter().map(|n| Float::with_val(self.prec, n.mid())).collect()
    }

    fn weight_mids(&self) -> Vec<Float> {
        self.barycentric_weights.iter().map(|w| Float::with_val(self.prec, w.mid())).collect()
    }
}

/// Lagrange basis values `l_i(y)` at a plain float point (non-certified).
fn lagrange_values(nodes: &[Float], weights: &[Float], y: &Float, out: &mut [Float]) {
    let prec = y.prec();
    if let Some(k) = nodes.iter().position(|x| x == y) {
        for (i, o) in out.iter_mut().enumerate() {
            o.assign_int(i == k);
        }
        return;
    }
    let mut sum = Float::new(prec);
    for ((x, w), o) in nodes.iter().zip(weights).zip(out.iter_mut()) {
        let mut d = Float::with_val(prec, y - x);
        d.recip_mut();
        d *= w;
        sum += &d;
        *o = d;
    }
    for o in out.iter_mut() {
        *o /= &sum;
    }
}

trait AssignInt {
    fn assign_int(&mut self, one: bool);
}

impl AssignInt for Float {
    fn assign_int(&mut self, one: bool) {
        use rug::Assign;
        self.assign(if one { 1 } else { 0 });
    }
}

/// `M_t(i, j) = (L_t l_i)(x_j)`, row-major.
#[derive(Clone, Debug)]
pub struct CollocationMatrix {
    pub m: usize,
    pub t: Float,
    pub entries: Vec<Float>,
}

impl CollocationMatrix {
    pub fn get(&self, i: usize, j: usize) -> &Float {
        &self.entries[i * self.m + j]
    }

    pub fn column_sum(&self, j: usize) -> Float {
        let mut s = Float::new(self.t.prec().max(64));
        for i in 0..self.m {
            s += self.get(i, j);
        }
        s
    }
}

pub fn collocation_matrix(system: &BranchSystem, t: &Float, grid: &ChebyshevGrid) -> Result<CollocationMatrix> {
    assert_eq!(grid.interval, system.domain, "grid interval must equal the domain");
    if t.is_sign_negative() && !t.is_zero() {
        return Err(Error::InvalidConfig("negative t".into()));
    }
    let prec = grid.prec;
    let m = grid.m;
    let nodes = grid.node_mids();
    let weights = grid.weight_mids();
    let mut entries = vec![Float::new(prec); m * m];
    let mut ell = vec![Float::new(prec); m];
    for (j, x) in nodes.iter().enumerate() {
        let xb = Ball::exact(x.clone());
        for b in &system.branches {
            let jet = b.jet(&xb, 1)?;
            let y = Float::with_val(prec, jet.slots[0].mid());
            let mut w = Float::with_val(prec, jet.slots[1].mid()).abs();
            if t.is_zero() {
                w = Float::with_val(prec, 1);
            } else {
                w.pow_round(t, Round::Nearest);
            }
            lagrange_values(&nodes, &weights, &y, &mut ell);
            for (i, l) in ell.iter().enumerate() {
                let e = &mut entries[i * m + j];
                *e += Float::with_val(prec, l * &w);
            }
        }
    }
    Ok(CollocationMatrix { m, t: t.clone(), entries })
}

trait PowRound {
    fn pow_round(&mut self, t: &Float, r: Round);
}

impl PowRound for Float {
    fn pow_round(&mut self, t: &Float, r: Round) {
        use rug::ops::PowAssignRound;
        self.pow_assign_round(t, r);
    }
}

/// Default power-iteration tolerance for a working precision.
pub fn default_tolerance(prec: u32) -> f64 {
    2f64.powi(-((7 * prec as i32) / 8).min(1000))
}

pub const MAX_POWER_ITERATIONS: usize = 20_000;

/// Dominant eigenvalue and left eigenvector (normalised to max entry 1).
pub fn leading_left_eigenvector(mat: &CollocationMatrix, tol: f64) -> Result<(Float, Vec<Float>)> {
    leading_left_eigenvector_from(mat, tol, None)
}

/// Power iteration on `M^T`, optionally warm-started.
pub fn leading_left_eigenvector_from(
    mat: &CollocationMatrix,
    tol: f64,
    start: Option<&[Float]>,
) -> Result<(Float, Vec<Float>)> {
    let m = mat.m;
    let prec = mat.entries[0].prec();
    let mut v: Vec<Float> = match start {
        Some(s) if s.len() == m && s.iter().all(|x| x.is_finite() && *x > 0) => {
            s.iter().map(|x| Float::with_val(prec, x)).collect()
        }
        _ => vec![Float::with_val(prec, 1); m],
    };
    let mut lambda = Float::with_val(prec, 0);
    let mut next = vec![Float::new(prec); m];
    for _ in 0..MAX_POWER_ITERATIONS {
        for (j, n) in next.iter_mut().enumerate() {
            let mut s = Float::new(prec);
            for (i, vi) in v.iter().enumerate() {
                s += Float::with_val(prec, mat.get(i, j) * vi);
            }
            *n = s;
        }
        let mut big = Float::new(prec);
        for n in &next {
            if n.cmp_abs(&big) == Some(std::cmp::Ordering::Greater) {
                big = n.clone();
            }
        }
        if big.is_zero() {
            return Err(Error::NoConvergence(0));
        }
        let mut vdiff: f64 = 0.0;
        for (n, vi) in next.iter_mut().zip(v.iter()) {
            *n /= &big;
            vdiff = vdiff.max(Float::with_val(prec, &*n - vi).to_f64().abs());
        }
        let ldiff = Float::with_val(prec, &big - &lambda).to_f64().abs() / big.to_f64().abs();
        std::mem::swap(&mut v, &mut next);
        lambda = big;
        if ldiff < tol && vdiff < tol {
            return Ok((lambda, v));
        }
    }
    Err(Error::NoConvergence(MAX_POWER_ITERATIONS))
}

/// A Chebyshev interpolant `f = sum v_i l_i` used as candidate eigenfunction.
///
/// The node values are exact floats, so `f` is a fixed polynomial. Its
/// Chebyshev coefficients are stored as certified balls together with upper
/// bounds `M_i` for `sup |f^(i)|` over the domain.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub grid: Arc<ChebyshevGrid>,
    pub values: Vec<Float>,
    pub t: Float,
    coeffs: Vec<Ball>,
    // Clenshaw runs on exact centres; coefficient radii enter once through
    // coeff_err[i] >= sum_k rad(c_k) sup|T_k^(i)|, already scaled to the domain.
    // Otherwise the ball recurrence would amplify them like (1 + sqrt 2)^m.
    mids: Vec<Ball>,
    coeff_err: Vec<f64>,
    bounds: Vec<f64>,
    /// `2 / (b - a)`
    scale: Ball,
}

/// Highest derivative order for which global bounds are kept.
pub const MAX_BOUND_ORDER: usize = 16;

impl TestFunction {
    pub fn from_values(grid: Arc<ChebyshevGrid>, values: Vec<Float>, t: Float) -> TestFunction {
        assert_eq!(values.len(), grid.m);
        let m = grid.m;
        let gp = grid.guard_prec();
        let mut coeffs = Vec::with_capacity(m);
        for k in 0..m {
            let mut acc = Ball::zero(gp);
            for (j, v) in values.iter().enumerate() {
                let mut term = grid.cheb_at_node(k, j);
                term.mul_assign(&Ball::exact(Float::with_val(gp, v)));
                acc.add_assign(&term);
            }
            acc.mul_pow2_assign(1);
            acc.div_int_assign(m as i32);
            if k == 0 {
                acc.mul_pow2_assign(-1);
            }
            coeffs.push(acc);
        }
        let width = grid.interval.1 - grid.interval.0;
        let scale = Ball::from_ratio(gp, 2, width);
        let s_up = scale.mag();
        let mut bounds = Vec::with_capacity(MAX_BOUND_ORDER + 1);
        let mut coeff_err = Vec::with_capacity(MAX_BOUND_ORDER + 1);
        let mut s_pow = 1.0;
        for i in 0..=MAX_BOUND_ORDER {
            let mut total = 0.0;
            let mut err = 0.0;
            for (k, c) in coeffs.iter().enumerate() {
                if k < i {
                    continue;
                }
                // T_k^(i)(1) = prod_{j<i} (k^2 - j^2) / (2j + 1)
                let mut markov = 1.0;
                for jj in 0..i {
                    let num = (k * k - jj * jj) as f64;
                    markov = up(mul_up(markov, num) / (2 * jj + 1) as f64);
                }
                total = add_up(total, mul_up(c.mag(), markov));
                err = add_up(err, mul_up(c.rad(), markov));
            }
            bounds.push(mul_up(total, s_pow));
            coeff_err.push(mul_up(err, s_pow));
            s_pow = mul_up(s_pow, s_up);
        }
        let mids = coeffs.iter().map(|c| Ball::exact(c.mid().clone())).collect();
        TestFunction { grid, values, t, coeffs, mids, coeff_err, bounds, scale }
    }

    pub fn constant(grid: Arc<ChebyshevGrid>, c: i64, t: Float) -> TestFunction {
        let prec = grid.prec;
        let values = vec![Float::with_val(prec, c); grid.m];
        TestFunction::from_values(grid, values, t)
    }

    pub fn m(&self) -> usize {
        self.grid.m
    }

    pub fn coefficients(&self) -> &[Ball] {
        &self.coeffs
    }

    /// Upper bound for `sup |f^(i)|` over the domain.
    pub fn derivative_bound(&self, i: usize) -> f64 {
        self.bounds.get(i).copied().unwrap_or(f64::INFINITY)
    }

    fn normalised(&self, y: &Ball) -> Ball {
        let (a, b) = self.grid.interval;
        let mut u = y.mul_int(2);
        u.sub_assign(&Ball::from_int(u.prec(), a + b));
        u.div_int_assign((b - a) as i32);
        u
    }

    /// Derivative jet of `f` at the exact point `y`, by Clenshaw on jets.
    pub fn point_jet(&self, y: &Float, order: usize) -> Jet {
        let gp = self.grid.guard_prec();
        let u = self.normalised(&Ball::exact(Float::with_val(gp.max(y.prec()), y)));
        let u = u.with_prec(gp);
        let m = self.coeffs.len();
        let zero = Ball::zero(gp);
        let mut b1 = vec![zero.clone(); order + 1];
        let mut b2 = vec![zero.clone(); order + 1];
        let mut next = vec![zero.clone(); order + 1];
        // b_k = c_k + 2 u b_{k+1} - b_{k+2}; derivative in u: (u b)^(n) = u b^(n) + n b^(n-1)
        for k in (1..m).rev() {
            for n in 0..=order {
                let mut v = b1[n].mul(&u);
                if n >= 1 {
                    v.add_assign(&b1[n - 1].mul_int(n as i32));
                }
                v.mul_pow2_assign(1);
                v.sub_assign(&b2[n]);
                if n == 0 {
                    v.add_assign(&self.mids[k]);
                }
                next[n] = v;
            }
            std::mem::swap(&mut b2, &mut b1);
            std::mem::swap(&mut b1, &mut next);
        }
        // f = c_0 + u b_1 - b_2
        let mut slots = Vec::with_capacity(order + 1);
        let mut s_pow = Ball::one(gp);
        for n in 0..=order {
            let mut v = b1[n].mul(&u);
            if n >= 1 {
                v.add_assign(&b1[n - 1].mul_int(n as i32));
            }
            v.sub_assign(&b2[n]);
            if n == 0 {
                v.add_assign(&self.mids[0]);
            }
            v.mul_assign(&s_pow);
            v.inflate(self.coeff_err.get(n).copied().unwrap_or(f64::INFINITY));
            s_pow.mul_assign(&self.scale);
            slots.push(v);
        }
        Jet { slots }
    }

    /// Enclosures of `f^(i)` at every point of `y` that lies in the domain.
    pub fn jet_over(&self, y: &Ball, order: usize) -> Result<Jet> {
        let (a, b) = self.grid.interval;
        let gp = self.grid.guard_prec();
        let dom = Ball::from_endpoints(
            gp.max(y.prec()),
            &Float::with_val(64, a),
            &Float::with_val(64, b),
        );
        let yc = if y.is_exact() {
            if !dom.contains(y.mid()) {
                return Err(Error::OutOfDomain);
            }
            y.clone()
        } else {
            y.intersect(&dom).ok_or(Error::OutOfDomain)?
        };
        let mut jet = self.point_jet(yc.mid(), order);
        if yc.rad() > 0.0 {
            for (i, slot) in jet.slots.iter_mut().enumerate() {
                let r = mul_up(yc.rad(), self.derivative_bound(i + 1));
                slot.inflate(r);
                let mi = self.derivative_bound(i);
                if slot.rad() > mi {
                    *slot = Ball::new(Float::new(gp), mi);
                }
            }
        }
        Ok(jet)
    }

    /// Certified enclosure of `f(x)`.
    ///
    /// A ball sitting inside a node enclosure returns the stored node value
    /// (inflated by the node width). Narrow balls well away from every node
    /// use the second barycentric form; anything else falls back to
    /// Clenshaw with a mean-value inflation.
    pub fn eval(&self, x: &Ball) -> Result<Ball> {
        let (a, b) = self.grid.interval;
        if x.lt(&Float::with_val(64, a)) || x.gt(&Float::with_val(64, b)) {
            return Err(Error::OutOfDomain);
        }
        let prec = x.prec();
        for (node, v) in self.grid.nodes.iter().zip(&self.values) {
            if node.contains_ball(x) {
                let r = mul_up(add_up(node.rad(), node.rad()), self.derivative_bound(1));
                return Ok(Ball::exact(v.clone()).inflated(r).with_prec(prec));
            }
        }
        let sep = self
            .grid
            .nodes
            .iter()
            .map(|n| x.sub(n).mig())
            .fold(f64::INFINITY, f64::min);
        let spacing = (b - a) as f64 / (self.m() * self.m()) as f64;
        if x.rad() < 1e-6 * sep && sep > 1e-3 * spacing {
            let gp = self.grid.guard_prec();
            let xg = x.with_prec(gp);
            let mut num = Ball::zero(gp);
            let mut den = Ball::zero(gp);
            for ((node, w), v) in self.grid.nodes.iter().zip(&self.grid.barycentric_weights).zip(&self.values) {
                let q = w.div(&xg.sub(node))?;
                num.add_assign(&q.mul(&Ball::exact(Float::with_val(gp, v))));
                den.add_assign(&q);
            }
            return Ok(num.div(&den)?.with_prec(prec));
        }
        Ok(self.jet_over(x, 0)?.slots[0].with_prec(prec))
    }
}

/// Collocate, take the dominant left eigenvector and wrap it as a test function.
pub fn build_test_function(system: &BranchSystem, t: &Float, grid: Arc<ChebyshevGrid>) -> Result<TestFunction> {
    build_test_function_from(system, t, grid, None).map(|(f, _)| f)
}

/// As [`build_test_function`], warm-started; also returns the eigenvalue.
pub fn build_test_function_from(
    system: &BranchSystem,
    t: &Float,
    grid: Arc<ChebyshevGrid>,
    start: Option<&[Float]>,
) -> Result<(TestFunction, Float)> {
    let mat = collocation_matrix(system, t, &grid)?;
    let (lambda, v) = leading_left_eigenvector_from(&mat, default_tolerance(grid.prec), start)?;
    if let Some(i) = v.iter().position(|x| *x <= 0) {
        return Err(Error::NonPositiveCandidate(i));
    }
    Ok((TestFunction::from_values(grid, v, t.clone()), lambda))
}

/// `log` of the dominant collocation eigenvalue: a non-certified estimate of the pressure.
pub fn pressure_estimate(system: &BranchSystem, t: &Float, m: usize, prec: u32) -> Result<f64> {
    let grid = ChebyshevGrid::new(m, system.domain, prec);
    let mat = collocation_matrix(system, t, &grid)?;
    let (lambda, _) = leading_left_eigenvector(&mat, default_tolerance(prec))?;
    Ok(lambda.ln().to_f64())
}
