//! Inverse branches of a rational map by certified root isolation.

use rug::Float;

use super::rational::{horner_ball, horner_f64, RationalMap};
use crate::ball::{pow2_up, Ball};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// The inverse of `R` restricted to a monotone piece `[zl, zr]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitBranch {
    pub map: RationalMap,
    pub zl: f64,
    pub zr: f64,
    pub increasing: bool,
    dnum: Vec<i64>,
    dden: Vec<i64>,
}

fn deriv(c: &[i64]) -> Vec<i64> {
    if c.len() <= 1 {
        return vec![0];
    }
    c.iter().enumerate().skip(1).map(|(i, &a)| a * i as i64).collect()
}

impl ImplicitBranch {
    /// Build the branch after certifying that `R'` keeps one sign on `[zl, zr]`.
    pub fn new(map: RationalMap, zl: f64, zr: f64) -> Result<ImplicitBranch> {
        assert!(zl < zr);
        let increasing = map.deriv_f64(0.5 * (zl + zr)) > 0.0;
        let b = ImplicitBranch {
            dnum: deriv(&map.num),
            dden: deriv(&map.den),
            map,
            zl,
            zr,
            increasing,
        };
        b.certify_monotone(128)?;
        Ok(b)
    }

    fn certify_monotone(&self, prec: u32) -> Result<()> {
        // sign(R') = sign(P'Q - PQ') wherever Q does not vanish
        let crit = self.map.critical_numerator();
        let mut stack = vec![(self.zl, self.zr, 0u32)];
        while let Some((l, r, depth)) = stack.pop() {
            let z = Ball::from_f64_endpoints(prec, l, r);
            let q = horner_ball(&self.map.den, &z);
            let n = horner_ball(&crit, &z);
            let signed = if self.increasing { n.is_positive() } else { n.is_negative() };
            if signed && !q.contains_zero() {
                continue;
            }
            if depth > 80 {
                return Err(Error::RootIsolationFailure(format!(
                    "cannot certify monotonicity on [{}, {}]",
                    self.zl, self.zr
                )));
            }
            let m = 0.5 * (l + r);
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        }
        Ok(())
    }

    /// Approximate range `R([zl, zr])`, sorted.
    pub fn range_f64(&self) -> (f64, f64) {
        let (a, b) = (self.map.eval_f64(self.zl), self.map.eval_f64(self.zr));
        (a.min(b), a.max(b))
    }

    fn residual_f64(&self, z: f64, y: f64) -> f64 {
        horner_f64(&self.map.num, z) - y * horner_f64(&self.map.den, z)
    }

    fn guess(&self, y: f64) -> Result<f64> {
        let (mut l, mut r) = (self.zl, self.zr);
        let (fl, fr) = (self.residual_f64(l, y), self.residual_f64(r, y));
        if fl == 0.0 {
            return Ok(l);
        }
        if fr == 0.0 {
            return Ok(r);
        }
        if (fl < 0.0) == (fr < 0.0) {
            return Err(Error::RootIsolationFailure(format!(
                "y = {y} has no preimage on [{}, {}]",
                self.zl, self.zr
            )));
        }
        for _ in 0..80 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            let fm = self.residual_f64(m, y);
            if fm == 0.0 {
                return Ok(m);
            }
            if (fm < 0.0) == (fl < 0.0) {
                l = m;
            } else {
                r = m;
            }
        }
        Ok(0.5 * (l + r))
    }

    /// Enclosure of the branch value over the ball `y`.
    pub fn solve(&self, y: &Ball) -> Result<Ball> {
        let scale = y.mid_f64().abs().max(1.0);
        if y.rad() <= 1e-24 * scale {
            return self.solve_narrow(y);
        }
        // monotone: hull of the endpoint solutions
        let prec = y.prec();
        let lo = self.solve_narrow(&Ball::exact(y.lower()))?;
        let hi = self.solve_narrow(&Ball::exact(y.upper()))?;
        let h = lo.hull(&hi);
        Ok(if h.prec() == prec { h } else { h.with_prec(prec) })
    }

    fn solve_narrow(&self, y: &Ball) -> Result<Ball> {
        let prec = y.prec();
        let wp = prec + 16;
        let z0 = self.guess(y.mid_f64())?;
        let ymid = Float::with_val(wp, y.mid());
        let mut z = Float::with_val(wp, z0);
        for _ in 0..60 {
            let (r, d) = self.map.eval_deriv_float(&z);
            if d.is_zero() {
                break;
            }
            let mut step = r;
            step -= &ymid;
            step /= &d;
            z -= &step;
            let small = match (step.get_exp(), z.get_exp()) {
                (None, _) => true,
                (Some(es), Some(ez)) => es < ez - wp as i32 + 2,
                (Some(es), None) => es < -(wp as i32),
            };
            if small {
                break;
            }
        }
        let mut z = z;
        z.set_prec(prec);
        let zb = Ball::exact(z.clone());
        let res = self.map.residual(&zb, y);
        if res.is_exact() && res.mid().is_zero() {
            return Ok(zb);
        }
        let slope = {
            let d = self.map.deriv_f64(z.to_f64()).abs() * horner_f64(&self.map.den, z.to_f64()).abs();
            if d > 0.0 {
                d
            } else {
                1.0
            }
        };
        let ulp = pow2_up(z.get_exp().unwrap_or(-(prec as i32)) as i64 - prec as i64 + 4);
        let mut delta = ulp.max(4.0 * res.mag() / slope);
        for _ in 0..24 {
            let zz = Ball::new(z.clone(), delta);
            if zz.lower_f64() < self.zl || zz.upper_f64() > self.zr {
                break;
            }
            // F(z) = P(z) - y Q(z)
            let mut df = horner_ball(&self.dnum, &zz);
            if !self.map.is_polynomial() {
                df.sub_assign(&horner_ball(&self.dden, &zz).mul(y));
            }
            if let Ok(q) = res.div(&df) {
                let n = zb.sub(&q);
                if n.gt(&zz.lower()) && n.lt(&zz.upper()) {
                    return Ok(n);
                }
            }
            delta *= 4.0;
        }
        Err(Error::RootIsolationFailure(format!(
            "interval Newton failed for y = {} on [{}, {}]",
            y.mid_f64(),
            self.zl,
            self.zr
        )))
    }

    /// Derivative jet of the branch seeded at `y` (pointwise valid over wide `y`).
    pub fn jet(&self, y: &Ball, order: usize) -> Result<Jet> {
        let z = self.solve(y)?;
        if order == 0 {
            return Ok(Jet { slots: vec![z] });
        }
        let rj = self.map.jet(&z, order)?;
        Jet::inverse(z, &rj.slots)
    }
}
