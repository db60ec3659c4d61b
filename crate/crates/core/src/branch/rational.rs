//! Rational maps `P/Q` with integer coefficients.

use rug::Float;

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// `P(x) / Q(x)`, coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMap {
    pub num: Vec<i64>,
    pub den: Vec<i64>,
}

fn derivative(c: &[i64]) -> Vec<i64> {
    if c.len() <= 1 {
        return vec![0];
    }
    c.iter().enumerate().skip(1).map(|(i, &a)| a * i as i64).collect()
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    let n = a.len().max(b.len());
    let mut out: Vec<i64> = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0) - b.get(i).copied().unwrap_or(0))
        .collect();
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

pub(crate) fn horner_f64(c: &[i64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a as f64)
}

fn horner_float(c: &[i64], x: &Float) -> Float {
    let mut acc = Float::with_val(x.prec(), c[c.len() - 1]);
    for &a in c.iter().rev().skip(1) {
        acc *= x;
        acc += a;
    }
    acc
}

pub(crate) fn horner_ball(c: &[i64], x: &Ball) -> Ball {
    let prec = x.prec();
    let mut acc = Ball::from_int(prec, c[c.len() - 1]);
    for &a in c.iter().rev().skip(1) {
        acc.mul_assign(x);
        if a != 0 {
            acc.add_assign(&Ball::from_int(prec, a));
        }
    }
    acc
}

impl RationalMap {
    pub fn polynomial(num: Vec<i64>) -> RationalMap {
        RationalMap { num, den: vec![1] }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den == [1]
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        horner_f64(&self.num, x) / horner_f64(&self.den, x)
    }

    pub fn deriv_f64(&self, x: f64) -> f64 {
        let (p, q) = (horner_f64(&self.num, x), horner_f64(&self.den, x));
        let (dp, dq) = (horner_f64(&derivative(&self.num), x), horner_f64(&derivative(&self.den), x));
        (dp * q - p * dq) / (q * q)
    }

    /// Plain (non-certified) evaluation of `R(x)` and `R'(x)`.
    pub fn eval_deriv_float(&self, x: &Float) -> (Float, Float) {
        let p = horner_float(&self.num, x);
        let dp = horner_float(&derivative(&self.num), x);
        if self.is_polynomial() {
            return (p, dp);
        }
        let q = horner_float(&self.den, x);
        let dq = horner_float(&derivative(&self.den), x);
        let r = Float::with_val(x.prec(), &p / &q);
        let mut d = Float::with_val(x.prec(), &dp * &q);
        d -= Float::with_val(x.prec(), &p * &dq);
        d /= Float::with_val(x.prec(), q.square_ref());
        (r, d)
    }

    pub fn eval(&self, x: &Ball) -> Result<Ball> {
        let p = horner_ball(&self.num, x);
        if self.is_polynomial() {
            return Ok(p);
        }
        p.div(&horner_ball(&self.den, x))
    }

    /// `P(x) - y Q(x)`; vanishes exactly at preimages of `y`.
    pub fn residual(&self, x: &Ball, y: &Ball) -> Ball {
        let p = horner_ball(&self.num, x);
        let q = horner_ball(&self.den, x);
        p.sub(&q.mul(y))
    }

    /// Derivative jet of `R` seeded at `x` (pointwise valid over wide `x`).
    pub fn jet(&self, x: &Ball, order: usize) -> Result<Jet> {
        let mut pn = Vec::with_capacity(order + 1);
        let mut c = self.num.clone();
        for _ in 0..=order {
            pn.push(horner_ball(&c, x));
            c = derivative(&c);
        }
        let pj = Jet { slots: pn };
        if self.is_polynomial() {
            return Ok(pj);
        }
        let mut qn = Vec::with_capacity(order + 1);
        let mut c = self.den.clone();
        for _ in 0..=order {
            qn.push(horner_ball(&c, x));
            c = derivative(&c);
        }
        pj.div(&Jet { slots: qn })
    }

    pub fn derivative_ball(&self, x: &Ball) -> Result<Ball> {
        Ok(self.jet(x, 1)?.slots[1].clone())
    }

    /// Numerator of `R'`, that is `P'Q - PQ'`.
    pub fn critical_numerator(&self) -> Vec<i64> {
        poly_sub(
            &poly_mul(&derivative(&self.num), &self.den),
            &poly_mul(&self.num, &derivative(&self.den)),
        )
    }

    /// Certified enclosures of the real roots of `R'` in `[a, b]`, sorted.
    ///
    /// Roots are bracketed by sign changes on a fine `f64` grid and then
    /// certified by interval Newton. Multiple roots are rejected.
    pub fn critical_points(&self, a: f64, b: f64, prec: u32) -> Result<Vec<Ball>> {
        let c = self.critical_numerator();
        let dc = derivative(&c);
        let n = 4096;
        let mut out = Vec::new();
        let grid: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        for w in grid.windows(2) {
            let (fa, fb) = (horner_f64(&c, w[0]), horner_f64(&c, w[1]));
            if fa == 0.0 && w[0] == a {
                out.push(isolate_simple_root(&c, &dc, w[0], w[0], prec)?);
            }
            if fb == 0.0 || fa * fb < 0.0 {
                out.push(isolate_simple_root(&c, &dc, w[0], w[1], prec)?);
            }
        }
        Ok(out)
    }
}

/// Interval-Newton certification of a simple root of the polynomial `c` in `[lo, hi]`.
pub(crate) fn isolate_simple_root(c: &[i64], dc: &[i64], lo: f64, hi: f64, prec: u32) -> Result<Ball> {
    let (mut l, mut h) = (lo, hi);
    let fl = horner_f64(c, l);
    for _ in 0..200 {
        let m = 0.5 * (l + h);
        if m <= l || m >= h {
            break;
        }
        let fm = horner_f64(c, m);
        if fm == 0.0 {
            l = m;
            h = m;
            break;
        }
        if (fm < 0.0) == (fl < 0.0) {
            l = m;
        } else {
            h = m;
        }
    }
    let mut z = Float::with_val(prec, 0.5 * (l + h));
    for _ in 0..12 {
        let f = horner_float(c, &z);
        let d = horner_float(dc, &z);
        if d.is_zero() {
            break;
        }
        let step = Float::with_val(prec, &f / &d);
        z -= &step;
        if step.is_zero() || step.get_exp().unwrap_or(i32::MIN) < z.get_exp().unwrap_or(0) - prec as i32 {
            break;
        }
    }
    let zb = Ball::exact(z.clone());
    let fz = horner_ball(c, &zb);
    if fz.is_exact() && fz.mid().is_zero() {
        return Ok(zb);
    }
    let mut delta = crate::ball::pow2_up(z.get_exp().unwrap_or(0) as i64 - prec as i64 + 8);
    for _ in 0..20 {
        let zz = Ball::new(z.clone(), delta);
        let d = horner_ball(dc, &zz);
        if let Ok(q) = fz.div(&d) {
            let n = zb.sub(&q);
            if n.gt(&zz.lower()) && n.lt(&zz.upper()) {
                return Ok(n);
            }
        }
        delta *= 8.0;
    }
    Err(Error::RootIsolationFailure(format!("no certified root in [{lo}, {hi}]")))
}
