//! Real ball arithmetic.
//!
//! A [`Ball`] is a center `mid` carried as an MPFR float together with an
//! `f64` radius. Centers are rounded to nearest; whenever MPFR reports an
//! inexact result the radius absorbs one ulp of the center. Radius
//! arithmetic is done in `f64` and bumped upward after every step, so the
//! enclosure `[mid - rad, mid + rad]` always contains the exact image.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::ops::{
    AddAssignRound, DivAssignRound, MulAssignRound, NegAssign, PowAssignRound, SubAssignRound,
};
use rug::Float;

use crate::error::{Error, Result};

/// Upper bound for `2^e`.
pub(crate) fn pow2_up(e: i64) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        f64::from_bits(1)
    }
}

#[inline]
pub(crate) fn up(x: f64) -> f64 {
    if x == 0.0 || x.is_infinite() || x.is_nan() {
        if x.is_nan() {
            f64::INFINITY
        } else {
            x
        }
    } else {
        x.next_up()
    }
}

#[inline]
fn dn(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.next_down()
    }
}

#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    up(a + b)
}

#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if p == 0.0 {
        f64::from_bits(1)
    } else {
        up(p)
    }
}

/// Bound on the error of a center rounded to nearest with ternary `ord`.
#[inline]
fn round_err(x: &Float, ord: Ordering) -> f64 {
    if ord == Ordering::Equal {
        return 0.0;
    }
    match x.get_exp() {
        Some(e) => pow2_up(e as i64 - x.prec() as i64),
        None if x.is_zero() => f64::from_bits(1),
        None => f64::INFINITY,
    }
}

/// Upper bound for `|x|`.
#[inline]
pub(crate) fn mag_up(x: &Float) -> f64 {
    if x.is_sign_negative() {
        -x.to_f64_round(Round::Down)
    } else {
        x.to_f64_round(Round::Up)
    }
}

/// Lower bound for `|x|`.
#[inline]
fn mag_dn(x: &Float) -> f64 {
    if x.is_sign_negative() {
        -x.to_f64_round(Round::Up)
    } else {
        x.to_f64_round(Round::Down)
    }
}

#[derive(Clone, PartialEq)]
pub struct Ball {
    mid: Float,
    rad: f64,
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} +/- {:e}]", self.mid.to_string_radix(10, Some(24)), self.rad)
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Ball {
    /// Ball from a center and radius. The center is taken as exact.
    pub fn new(mid: Float, rad: f64) -> Ball {
        assert!(rad >= 0.0, "negative radius");
        Ball { mid, rad }
    }

    pub fn exact(mid: Float) -> Ball {
        Ball { mid, rad: 0.0 }
    }

    pub fn zero(prec: u32) -> Ball {
        Ball::exact(Float::new(prec))
    }

    pub fn one(prec: u32) -> Ball {
        Ball::from_int(prec, 1)
    }

    pub fn from_int(prec: u32, n: i64) -> Ball {
        let (mid, ord) = Float::with_val_round(prec, n, Round::Nearest);
        let rad = round_err(&mid, ord);
        Ball { mid, rad }
    }

    /// Ball containing the binary value of `x` (exact when `prec >= 53`).
    pub fn from_f64(prec: u32, x: f64) -> Ball {
        assert!(x.is_finite(), "non-finite input");
        let (mid, ord) = Float::with_val_round(prec, x, Round::Nearest);
        let rad = round_err(&mid, ord);
        Ball { mid, rad }
    }

    /// Ball containing `num / den`.
    pub fn from_ratio(prec: u32, num: i64, den: i64) -> Ball {
        assert!(den != 0, "zero denominator");
        let (mut mid, o1) = Float::with_val_round(prec + 64, num, Round::Nearest);
        debug_assert_eq!(o1, Ordering::Equal);
        let o2 = mid.div_assign_round(den, Round::Nearest);
        let mut rad = round_err(&mid, o2);
        let o3 = mid.set_prec_round(prec, Round::Nearest);
        rad = add_up(rad, round_err(&mid, o3));
        Ball { mid, rad }
    }

    /// Ball containing the real number written in `s` (decimal or rational `a/b`).
    pub fn parse(prec: u32, s: &str) -> Result<Ball> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad rational `{s}`")))?;
            let b: i64 = b.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad rational `{s}`")))?;
            if b == 0 {
                return Err(Error::InvalidConfig(format!("bad rational `{s}`")));
            }
            return Ok(Ball::from_ratio(prec, a, b));
        }
        let parsed = Float::parse(s).map_err(|_| Error::InvalidConfig(format!("bad number `{s}`")))?;
        let (mid, ord) = Float::with_val_round(prec, parsed, Round::Nearest);
        let rad = round_err(&mid, ord);
        Ok(Ball { mid, rad })
    }

    pub fn pi(prec: u32) -> Ball {
        let (mid, ord) = Float::with_val_round(prec, Constant::Pi, Round::Nearest);
        let rad = round_err(&mid, ord);
        Ball { mid, rad }
    }

    /// Smallest representable ball containing `[lo, hi]`.
    pub fn from_endpoints(prec: u32, lo: &Float, hi: &Float) -> Ball {
        debug_assert!(lo <= hi);
        let sum_prec = lo.prec().max(hi.prec()) + 2;
        let (mut mid, _) = Float::with_val_round(sum_prec, lo + hi, Round::Nearest);
        mid >>= 1;
        mid.set_prec_round(prec, Round::Nearest);
        let (d1, _) = Float::with_val_round(53, hi - &mid, Round::Up);
        let (d2, _) = Float::with_val_round(53, &mid - lo, Round::Up);
        let rad = d1.to_f64_round(Round::Up).max(d2.to_f64_round(Round::Up)).max(0.0);
        Ball { mid, rad }
    }

    pub fn from_f64_endpoints(prec: u32, lo: f64, hi: f64) -> Ball {
        let lo = Float::with_val(53, lo);
        let hi = Float::with_val(53, hi);
        Ball::from_endpoints(prec, &lo, &hi)
    }

    pub fn mid(&self) -> &Float {
        &self.mid
    }

    pub fn rad(&self) -> f64 {
        self.rad
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn is_exact(&self) -> bool {
        self.rad == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.mid.is_finite() && self.rad.is_finite()
    }

    /// Lower endpoint, rounded down.
    pub fn lower(&self) -> Float {
        Float::with_val_round(self.prec(), &self.mid - self.rad, Round::Down).0
    }

    /// Upper endpoint, rounded up.
    pub fn upper(&self) -> Float {
        Float::with_val_round(self.prec(), &self.mid + self.rad, Round::Up).0
    }

    pub fn lower_f64(&self) -> f64 {
        dn_sub(self.mid.to_f64_round(Round::Down), self.rad)
    }

    pub fn upper_f64(&self) -> f64 {
        up(self.mid.to_f64_round(Round::Up) + self.rad)
    }

    /// Upper bound for `sup |x|` over the ball.
    pub fn mag(&self) -> f64 {
        add_up(mag_up(&self.mid), self.rad)
    }

    /// Lower bound for `inf |x|` over the ball.
    pub fn mig(&self) -> f64 {
        let m = mag_dn(&self.mid);
        if m <= self.rad {
            0.0
        } else {
            dn_sub(m, self.rad)
        }
    }

    /// Width upper bound `2 rad`.
    pub fn width(&self) -> f64 {
        mul_up(self.rad, 2.0)
    }

    pub fn is_positive(&self) -> bool {
        self.mid > self.rad
    }

    pub fn is_negative(&self) -> bool {
        let r = -self.rad;
        self.mid < r
    }

    pub fn is_nonnegative(&self) -> bool {
        self.mid >= self.rad
    }

    pub fn contains_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }

    /// True when every point of the ball exceeds `x`.
    pub fn gt(&self, x: &Float) -> bool {
        let p = self.prec().max(x.prec()) + 8;
        let (d, _) = Float::with_val_round(p, &self.mid - x, Round::Down);
        d > self.rad
    }

    /// True when every point of the ball is below `x`.
    pub fn lt(&self, x: &Float) -> bool {
        let p = self.prec().max(x.prec()) + 8;
        let (d, _) = Float::with_val_round(p, x - &self.mid, Round::Down);
        d > self.rad
    }

    /// True when `x` lies in the closed ball.
    pub fn contains(&self, x: &Float) -> bool {
        let p = self.prec().max(x.prec()) + 64;
        let (mut d, _) = Float::with_val_round(p, x - &self.mid, Round::Up);
        d.abs_mut();
        if d.is_zero() {
            return true;
        }
        let (d, _) = Float::with_val_round(60, &d, Round::Up);
        d <= self.rad
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.contains(&Float::with_val(53, x))
    }

    /// True when `other` is contained in `self`.
    pub fn contains_ball(&self, other: &Ball) -> bool {
        self.contains(&other.lower()) && self.contains(&other.upper())
    }

    pub fn overlaps(&self, other: &Ball) -> bool {
        !(self.lt(&other.lower()) || self.gt(&other.upper()))
    }

    /// Add `r` to the radius.
    pub fn inflate(&mut self, r: f64) {
        assert!(r >= 0.0);
        self.rad = add_up(self.rad, r);
    }

    /// Ball with the same center and an extra radius.
    pub fn inflated(mut self, r: f64) -> Ball {
        self.inflate(r);
        self
    }

    /// Same value at a different working precision.
    pub fn with_prec(&self, prec: u32) -> Ball {
        let mut b = self.clone();
        b.set_prec(prec);
        b
    }

    pub fn set_prec(&mut self, prec: u32) {
        let ord = self.mid.set_prec_round(prec, Round::Nearest);
        self.rad = add_up(self.rad, round_err(&self.mid, ord));
    }

    #[inline]
    fn match_prec(&mut self, other: &Ball) {
        if other.prec() < self.prec() {
            self.set_prec(other.prec());
        }
    }

    pub fn intersect(&self, other: &Ball) -> Option<Ball> {
        let (l1, l2) = (self.lower(), other.lower());
        let (u1, u2) = (self.upper(), other.upper());
        let lo = if l1 >= l2 { l1 } else { l2 };
        let hi = if u1 <= u2 { u1 } else { u2 };
        if lo > hi {
            return None;
        }
        let b = Ball::from_endpoints(self.prec(), &lo, &hi);
        if b.rad >= self.rad && self.contains_ball(&b) {
            Some(self.clone())
        } else if b.rad >= other.rad && other.contains_ball(&b) {
            Some(other.with_prec(self.prec()))
        } else {
            Some(b)
        }
    }

    pub fn hull(&self, other: &Ball) -> Ball {
        let (l1, l2) = (self.lower(), other.lower());
        let (u1, u2) = (self.upper(), other.upper());
        let lo = if l1 <= l2 { l1 } else { l2 };
        let hi = if u1 >= u2 { u1 } else { u2 };
        Ball::from_endpoints(self.prec(), &lo, &hi)
    }

    pub fn add_assign(&mut self, o: &Ball) {
        self.match_prec(o);
        let ord = self.mid.add_assign_round(&o.mid, Round::Nearest);
        self.rad = add_up(add_up(self.rad, o.rad), round_err(&self.mid, ord));
    }

    pub fn sub_assign(&mut self, o: &Ball) {
        self.match_prec(o);
        let ord = self.mid.sub_assign_round(&o.mid, Round::Nearest);
        self.rad = add_up(add_up(self.rad, o.rad), round_err(&self.mid, ord));
    }

    pub fn mul_assign(&mut self, o: &Ball) {
        self.match_prec(o);
        let mut rad = 0.0;
        if self.rad != 0.0 || o.rad != 0.0 {
            let (ma, mb) = (mag_up(&self.mid), mag_up(&o.mid));
            rad = add_up(
                add_up(mul_up(ma, o.rad), mul_up(mb, self.rad)),
                mul_up(self.rad, o.rad),
            );
        }
        let ord = self.mid.mul_assign_round(&o.mid, Round::Nearest);
        self.rad = add_up(rad, round_err(&self.mid, ord));
    }

    pub fn div_assign(&mut self, o: &Ball) -> Result<()> {
        if o.contains_zero() {
            return Err(Error::DivisorContainsZero);
        }
        self.match_prec(o);
        let ord = self.mid.div_assign_round(&o.mid, Round::Nearest);
        let err = round_err(&self.mid, ord);
        let mut rad = err;
        if self.rad != 0.0 || o.rad != 0.0 {
            // |x/y - a/b| <= (ra + |a/b| rb) / (|b| - rb)
            let q = add_up(mag_up(&self.mid), err);
            let num = add_up(self.rad, mul_up(q, o.rad));
            let den = dn_sub(mag_dn(&o.mid), o.rad);
            let r = if den > 0.0 { up(num / den) } else { f64::INFINITY };
            rad = add_up(rad, r);
        }
        self.rad = rad;
        Ok(())
    }

    /// Multiply by an integer.
    pub fn mul_int_assign(&mut self, k: i32) {
        let ord = self.mid.mul_assign_round(k, Round::Nearest);
        self.rad = add_up(mul_up(self.rad, (k as f64).abs()), round_err(&self.mid, ord));
    }

    /// Divide by a non-zero integer.
    pub fn div_int_assign(&mut self, k: i32) {
        assert!(k != 0, "division by zero");
        let ord = self.mid.div_assign_round(k, Round::Nearest);
        self.rad = add_up(up(self.rad / (k as f64).abs()), round_err(&self.mid, ord));
    }

    /// Multiply by `2^k` (exact on the center).
    pub fn mul_pow2_assign(&mut self, k: i32) {
        self.mid <<= k;
        self.rad = mul_up(self.rad, pow2_up(k as i64));
    }

    pub fn neg_assign(&mut self) {
        self.mid.neg_assign();
    }

    pub fn add(&self, o: &Ball) -> Ball {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &Ball) -> Ball {
        let mut r = self.clone();
        r.sub_assign(o);
        r
    }

    pub fn mul(&self, o: &Ball) -> Ball {
        let mut r = self.clone();
        r.mul_assign(o);
        r
    }

    pub fn div(&self, o: &Ball) -> Result<Ball> {
        let mut r = self.clone();
        r.div_assign(o)?;
        Ok(r)
    }

    pub fn neg(&self) -> Ball {
        let mut r = self.clone();
        r.neg_assign();
        r
    }

    pub fn mul_int(&self, k: i32) -> Ball {
        let mut r = self.clone();
        r.mul_int_assign(k);
        r
    }

    pub fn div_int(&self, k: i32) -> Ball {
        let mut r = self.clone();
        r.div_int_assign(k);
        r
    }

    pub fn mul_pow2(&self, k: i32) -> Ball {
        let mut r = self.clone();
        r.mul_pow2_assign(k);
        r
    }

    pub fn add_int(&self, k: i64) -> Ball {
        self.add(&Ball::from_int(self.prec(), k))
    }

    pub fn sqr(&self) -> Ball {
        let mut rad = 0.0;
        if self.rad != 0.0 {
            let m = mag_up(&self.mid);
            rad = add_up(mul_up(mul_up(m, self.rad), 2.0), mul_up(self.rad, self.rad));
        }
        let mut mid = self.mid.clone();
        let ord = mid.square_round(Round::Nearest);
        let rad = add_up(rad, round_err(&mid, ord));
        Ball { mid, rad }
    }

    pub fn recip(&self) -> Result<Ball> {
        Ball::one(self.prec()).div(self)
    }

    pub fn abs(&self) -> Ball {
        if self.is_nonnegative() {
            self.clone()
        } else if self.mid <= -self.rad {
            self.neg()
        } else {
            let zero = Float::new(self.prec());
            let hi = Float::with_val_round(self.prec(), &*self.mid.as_abs() + self.rad, Round::Up).0;
            Ball::from_endpoints(self.prec(), &zero, &hi)
        }
    }

    pub fn sqrt(&self) -> Result<Ball> {
        if !self.is_nonnegative() {
            return Err(Error::DomainViolation("sqrt"));
        }
        let mut mid = self.mid.clone();
        let ord = mid.sqrt_round(Round::Nearest);
        let mut rad = round_err(&mid, ord);
        if self.rad != 0.0 {
            // Lipschitz bound away from zero, Hoelder bound near it.
            let holder = up(self.rad.sqrt());
            let lo = self.lower_f64();
            let lip = if lo > 0.0 {
                mul_up(self.rad, up(0.5 / dn(lo.sqrt())))
            } else {
                f64::INFINITY
            };
            rad = add_up(rad, lip.min(holder));
        }
        Ok(Ball { mid, rad })
    }

    pub fn ln(&self) -> Result<Ball> {
        if !self.is_positive() {
            return Err(Error::DomainViolation("log"));
        }
        let mut mid = self.mid.clone();
        let ord = mid.ln_round(Round::Nearest);
        let mut rad = round_err(&mid, ord);
        if self.rad != 0.0 {
            let lo = self.lower_f64();
            let d = if lo > 0.0 { up(up(1.0 / lo)) } else { f64::INFINITY };
            rad = add_up(rad, mul_up(self.rad, d));
        }
        Ok(Ball { mid, rad })
    }

    pub fn exp(&self) -> Ball {
        let mut mid = self.mid.clone();
        let ord = mid.exp_round(Round::Nearest);
        let mut rad = round_err(&mid, ord);
        if self.rad != 0.0 {
            let hi = self.upper_f64();
            let d = up(up(up(hi.exp())));
            rad = add_up(rad, mul_up(self.rad, d));
        }
        Ball { mid, rad }
    }

    /// `x^t` for a ball `x > 0` and an exact real exponent `t`.
    pub fn pow(&self, t: &Float) -> Result<Ball> {
        if !self.is_positive() {
            return Err(Error::DomainViolation("pow"));
        }
        if t.is_zero() {
            return Ok(Ball::one(self.prec()));
        }
        let mut mid = self.mid.clone();
        let ord = mid.pow_assign_round(t, Round::Nearest);
        let mut rad = round_err(&mid, ord);
        if self.rad != 0.0 {
            let (lo, hi) = (self.lower_f64(), self.upper_f64());
            let d = if lo > 0.0 {
                let (tl, tu) = (t.to_f64_round(Round::Down), t.to_f64_round(Round::Up));
                let mut best: f64 = 0.0;
                for x in [lo, hi] {
                    for s in [tl - 1.0, tu - 1.0] {
                        best = best.max(x.powf(s));
                    }
                }
                up(mul_up(mul_up(best, tu.abs().max(tl.abs())), 1.0 + 1e-12))
            } else {
                f64::INFINITY
            };
            rad = add_up(rad, mul_up(self.rad, d));
        }
        Ok(Ball { mid, rad })
    }

    pub fn cos(&self) -> Ball {
        let mut mid = self.mid.clone();
        let ord = mid.cos_round(Round::Nearest);
        let rad = add_up(round_err(&mid, ord), self.rad);
        Ball { mid, rad }
    }

    pub fn sin(&self) -> Ball {
        let mut mid = self.mid.clone();
        let ord = mid.sin_round(Round::Nearest);
        let rad = add_up(round_err(&mid, ord), self.rad);
        Ball { mid, rad }
    }
}

#[inline]
fn dn_sub(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.is_nan() {
        f64::NEG_INFINITY
    } else if d == 0.0 {
        if b == 0.0 {
            0.0
        } else {
            -f64::from_bits(1)
        }
    } else {
        d.next_down()
    }
}
