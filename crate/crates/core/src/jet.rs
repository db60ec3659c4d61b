//! Truncated derivative jets over balls.
//!
//! Slot `i` of a [`Jet`] encloses the `i`-th derivative (not the Taylor
//! coefficient) of the represented function. The arithmetic is pointwise
//! valid: if every input slot encloses its derivative at every point of some
//! set, so does every output slot. Seeding with a wide ball therefore gives
//! interval-wide derivative enclosures.

use rug::Float;

use crate::ball::Ball;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub slots: Vec<Ball>,
}

pub(crate) fn binom(n: usize, k: usize) -> i32 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    i32::try_from(r).expect("binomial overflow")
}

impl Jet {
    pub fn constant(c: Ball, order: usize) -> Jet {
        let prec = c.prec();
        let mut slots = Vec::with_capacity(order + 1);
        slots.push(c);
        slots.resize(order + 1, Ball::zero(prec));
        Jet { slots }
    }

    /// The identity function seeded at `x`.
    pub fn variable(x: Ball, order: usize) -> Jet {
        let prec = x.prec();
        let mut j = Jet::constant(x, order);
        if order >= 1 {
            j.slots[1] = Ball::one(prec);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.slots.len() - 1
    }

    pub fn value(&self) -> &Ball {
        &self.slots[0]
    }

    pub fn prec(&self) -> u32 {
        self.slots[0].prec()
    }

    /// Drop slots above `order`.
    pub fn truncate(mut self, order: usize) -> Jet {
        self.slots.truncate(order + 1);
        self
    }

    fn check(&self, o: &Jet) {
        assert_eq!(self.slots.len(), o.slots.len(), "jet order mismatch");
    }

    pub fn add(&self, o: &Jet) -> Jet {
        self.check(o);
        Jet {
            slots: self.slots.iter().zip(&o.slots).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        self.check(o);
        Jet {
            slots: self.slots.iter().zip(&o.slots).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            slots: self.slots.iter().map(Ball::neg).collect(),
        }
    }

    pub fn scale(&self, c: &Ball) -> Jet {
        Jet {
            slots: self.slots.iter().map(|a| a.mul(c)).collect(),
        }
    }

    pub fn add_scalar(&self, c: &Ball) -> Jet {
        let mut r = self.clone();
        r.slots[0].add_assign(c);
        r
    }

    /// Leibniz rule.
    pub fn mul(&self, o: &Jet) -> Jet {
        self.check(o);
        let p = self.order();
        let mut slots = Vec::with_capacity(p + 1);
        for n in 0..=p {
            let mut acc = self.slots[0].mul(&o.slots[n]);
            for k in 1..=n {
                let mut t = self.slots[k].mul(&o.slots[n - k]);
                let c = binom(n, k);
                if c != 1 {
                    t.mul_int_assign(c);
                }
                acc.add_assign(&t);
            }
            slots.push(acc);
        }
        Jet { slots }
    }

    /// Quotient by the recursive rule `q^(n) = (f^(n) - sum C(n,k) g^(k) q^(n-k)) / g`.
    pub fn div(&self, o: &Jet) -> Result<Jet> {
        self.check(o);
        let g0 = &o.slots[0];
        if g0.contains_zero() {
            return Err(Error::DivisorContainsZero);
        }
        let p = self.order();
        let mut q: Vec<Ball> = Vec::with_capacity(p + 1);
        for n in 0..=p {
            let mut acc = self.slots[n].clone();
            for k in 1..=n {
                let mut t = o.slots[k].mul(&q[n - k]);
                let c = binom(n, k);
                if c != 1 {
                    t.mul_int_assign(c);
                }
                acc.sub_assign(&t);
            }
            acc.div_assign(g0)?;
            q.push(acc);
        }
        Ok(Jet { slots: q })
    }

    /// Chain rule: `outer[k]` encloses the `k`-th derivative of the outer
    /// function over the range of the value slot.
    pub fn compose(&self, outer: &[Ball]) -> Jet {
        let p = self.order();
        assert!(outer.len() > p, "outer derivative list too short");
        let prec = self.prec();
        let mut slots = Vec::with_capacity(p + 1);
        slots.push(outer[0].clone());
        if p == 0 {
            return Jet { slots };
        }
        // bell[n][k] = B_{n,k}(u', u'', ...)
        let zero = Ball::zero(prec);
        let mut bell = vec![vec![zero.clone(); p + 1]; p + 1];
        bell[0][0] = Ball::one(prec);
        for n in 1..=p {
            for k in 1..=n {
                let mut acc = zero.clone();
                for i in 1..=(n - k + 1) {
                    let b = &bell[n - i][k - 1];
                    if b.is_exact() && b.mid().is_zero() {
                        continue;
                    }
                    let mut t = self.slots[i].mul(b);
                    let c = binom(n - 1, i - 1);
                    if c != 1 {
                        t.mul_int_assign(c);
                    }
                    acc.add_assign(&t);
                }
                bell[n][k] = acc;
            }
        }
        for (n, row) in bell.iter().enumerate().skip(1) {
            let mut acc = outer[1].mul(&row[1]);
            for k in 2..=n {
                acc.add_assign(&outer[k].mul(&row[k]));
            }
            slots.push(acc);
        }
        Jet { slots }
    }

    /// Derivatives of `u -> u^a` at `u` from the power `g = u^a`, using
    /// `D_k = D_{k-1} (a - k + 1) / u`.
    fn power_ladder(u: &Ball, g: Ball, a_num: impl Fn(usize) -> Ball, p: usize) -> Result<Vec<Ball>> {
        let mut out = Vec::with_capacity(p + 1);
        out.push(g);
        for k in 1..=p {
            let mut d = out[k - 1].mul(&a_num(k));
            d.div_assign(u)?;
            out.push(d);
        }
        Ok(out)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let u = self.value();
        let p = self.order();
        let g = u.sqrt()?;
        if p > 0 && u.contains_zero() {
            return Err(Error::DomainViolation("sqrt"));
        }
        let prec = self.prec();
        let outer = Jet::power_ladder(u, g, |k| Ball::from_ratio(prec, 3 - 2 * k as i64, 2), p)?;
        Ok(self.compose(&outer))
    }

    /// `u^t` for an exact real `t`.
    pub fn pow(&self, t: &Float) -> Result<Jet> {
        let u = self.value();
        let p = self.order();
        let g = u.pow(t)?;
        let prec = self.prec();
        let outer = Jet::power_ladder(
            u,
            g,
            |k| {
                let mut b = Ball::exact(Float::with_val(t.prec().max(prec), t));
                b.set_prec(prec);
                b.sub(&Ball::from_int(prec, k as i64 - 1))
            },
            p,
        )?;
        Ok(self.compose(&outer))
    }

    pub fn ln(&self) -> Result<Jet> {
        let u = self.value();
        let p = self.order();
        let mut outer = vec![u.ln()?];
        if p >= 1 {
            outer.push(u.recip()?);
            for k in 2..=p {
                let mut d = outer[k - 1].mul_int(-(k as i32 - 1));
                d.div_assign(u)?;
                outer.push(d);
            }
        }
        Ok(self.compose(&outer))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let outer = vec![e; self.order() + 1];
        self.compose(&outer)
    }

    pub fn recip(&self) -> Result<Jet> {
        let u = self.value();
        let p = self.order();
        let mut outer = vec![u.recip()?];
        for k in 1..=p {
            let mut d = outer[k - 1].mul_int(-(k as i32));
            d.div_assign(u)?;
            outer.push(d);
        }
        Ok(self.compose(&outer))
    }

    /// Jet of a local inverse `S` of `R` from `S` itself and the
    /// derivatives `rd[k]` of `R` at `S`, by solving `(R o S)' = 1` and
    /// `(R o S)^(n) = 0` for `n >= 2` with Faa di Bruno.
    pub fn inverse(value: Ball, rd: &[Ball]) -> Result<Jet> {
        let p = rd.len() - 1;
        let prec = value.prec();
        let mut s = vec![value];
        if p == 0 {
            return Ok(Jet { slots: s });
        }
        let r1 = &rd[1];
        if r1.contains_zero() {
            return Err(Error::DivisorContainsZero);
        }
        s.push(r1.recip()?);
        let zero = Ball::zero(prec);
        let mut bell = vec![vec![zero.clone(); p + 1]; p + 1];
        bell[0][0] = Ball::one(prec);
        bell[1][1] = s[1].clone();
        for n in 2..=p {
            let mut acc = zero.clone();
            for k in 2..=n {
                let mut b = zero.clone();
                for i in 1..=(n - k + 1) {
                    let mut t = s[i].mul(&bell[n - i][k - 1]);
                    let c = binom(n - 1, i - 1);
                    if c != 1 {
                        t.mul_int_assign(c);
                    }
                    b.add_assign(&t);
                }
                acc.add_assign(&rd[k].mul(&b));
                bell[n][k] = b;
            }
            let mut sn = acc.neg();
            sn.div_assign(r1)?;
            bell[n][1] = sn.clone();
            s.push(sn);
        }
        Ok(Jet { slots: s })
    }

    /// `|u|`, defined when the value slot has constant sign.
    pub fn abs(&self) -> Result<Jet> {
        if self.value().is_positive() {
            Ok(self.clone())
        } else if self.value().is_negative() {
            Ok(self.neg())
        } else {
            Err(Error::DomainViolation("abs"))
        }
    }
}

/// Jet data used by the Taylor range bound on a subinterval `[c - r, c + r]`.
///
/// `coeffs[i]` for `i < order` encloses `h^(i)(c)`; `coeffs[order]`
/// encloses `h^(order)` over the whole subinterval. `direct` is the plain
/// ball image of `h` over the subinterval.
#[derive(Clone, Debug)]
pub struct TaylorJet {
    pub center: Ball,
    pub radius: f64,
    pub coeffs: Vec<Ball>,
    pub direct: Ball,
}

impl TaylorJet {
    /// Combine a point jet at `c` with a jet seeded on the wide ball.
    pub fn from_jets(center: Ball, radius: f64, point: &Jet, wide: &Jet, order: usize) -> TaylorJet {
        assert!(point.order() + 1 >= order && wide.order() >= order);
        let mut coeffs: Vec<Ball> = point.slots[..order].to_vec();
        coeffs.push(wide.slots[order].clone());
        TaylorJet {
            center,
            radius,
            coeffs,
            direct: wide.slots[0].clone(),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }
}
