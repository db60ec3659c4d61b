//! Families of contracting inverse branches.
//!
//! A [`BranchSystem`] is a domain interval `[a, b]` together with the local
//! inverses `S_j` of a decimation map `R`. The limit set of the system is
//! the Julia set whose dimension the driver certifies.

mod implicit;
mod rational;

pub use implicit::ImplicitBranch;
pub use rational::RationalMap;

use rug::{Float, Rational};

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq)]
pub enum BranchKind {
    /// `(a + sign * sqrt(a^2 - 4x)) / 2`, the inverses of `x (a - x)`.
    Quadratic { a: i64, sign: i8 },
    /// `(num/den) x + shift_num/shift_den`.
    Affine {
        num: i64,
        den: i64,
        shift_num: i64,
        shift_den: i64,
    },
    Implicit(ImplicitBranch),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub kind: BranchKind,
    pub increasing: bool,
}

impl Branch {
    /// `S([a, b])` exactly, for increasing affine branches.
    fn affine_image(&self, (a, b): (i64, i64)) -> Option<(Rational, Rational)> {
        match self.kind {
            BranchKind::Affine { num, den, shift_num, shift_den } if num > 0 && den > 0 && shift_den > 0 => {
                let slope = Rational::from((num, den));
                let shift = Rational::from((shift_num, shift_den));
                let at = |x: i64| Rational::from(&slope * x) + &shift;
                Some((at(a), at(b)))
            }
            _ => None,
        }
    }

    pub fn eval(&self, x: &Ball) -> Result<Ball> {
        let prec = x.prec();
        match &self.kind {
            BranchKind::Quadratic { a, sign } => {
                let mut u = x.mul_int(-4);
                u.add_assign(&Ball::from_int(prec, a * a));
                let mut s = u.sqrt()?;
                if *sign < 0 {
                    s.neg_assign();
                }
                s.add_assign(&Ball::from_int(prec, *a));
                s.mul_pow2_assign(-1);
                Ok(s)
            }
            BranchKind::Affine { num, den, shift_num, shift_den } => {
                let mut v = x.mul(&Ball::from_ratio(prec, *num, *den));
                v.add_assign(&Ball::from_ratio(prec, *shift_num, *shift_den));
                Ok(v)
            }
            BranchKind::Implicit(b) => b.solve(x),
        }
    }

    /// Derivative jet of the branch seeded at `x`; over a wide `x` every
    /// slot encloses the derivative on all of `x`.
    pub fn jet(&self, x: &Ball, order: usize) -> Result<Jet> {
        let prec = x.prec();
        match &self.kind {
            BranchKind::Quadratic { a, sign } => {
                let v = Jet::variable(x.clone(), order);
                let u = v.scale(&Ball::from_int(prec, -4)).add_scalar(&Ball::from_int(prec, a * a));
                let mut s = u.sqrt()?;
                if *sign < 0 {
                    s = s.neg();
                }
                s = s.add_scalar(&Ball::from_int(prec, *a));
                for slot in &mut s.slots {
                    slot.mul_pow2_assign(-1);
                }
                Ok(s)
            }
            BranchKind::Affine { num, den, .. } => {
                let mut j = Jet::constant(self.eval(x)?, order);
                if order >= 1 {
                    j.slots[1] = Ball::from_ratio(prec, *num, *den);
                }
                Ok(j)
            }
            BranchKind::Implicit(b) => b.jet(x, order),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchSystem {
    pub name: String,
    /// Integer endpoints of the domain.
    pub domain: (i64, i64),
    /// Sorted by the left endpoint of their image.
    pub branches: Vec<Branch>,
    pub decimation: Option<RationalMap>,
    /// Gasket dimension parameter, when the system belongs to that family.
    pub gasket_d: Option<u32>,
}

/// Certified facts about a system, produced by [`BranchSystem::validate`].
#[derive(Clone, Debug)]
pub struct Validation {
    pub images: Vec<Ball>,
    pub contraction: Vec<f64>,
}

impl BranchSystem {
    pub fn domain_ball(&self, prec: u32) -> Ball {
        let lo = Float::with_val(prec, self.domain.0);
        let hi = Float::with_val(prec, self.domain.1);
        Ball::from_endpoints(prec, &lo, &hi)
    }

    pub fn domain_width(&self) -> i64 {
        self.domain.1 - self.domain.0
    }

    /// Certified enclosure of `S_j([a, b])` from the endpoint values.
    pub fn image(&self, j: usize, prec: u32) -> Result<Ball> {
        let b = &self.branches[j];
        let lo = b.eval(&Ball::from_int(prec, self.domain.0))?;
        let hi = b.eval(&Ball::from_int(prec, self.domain.1))?;
        Ok(lo.hull(&hi))
    }

    /// Certified upper bound of `sup |S_j'|` over the domain.
    pub fn sup_derivative(&self, j: usize, prec: u32, pieces: usize) -> Result<f64> {
        let (a, b) = (self.domain.0 as f64, self.domain.1 as f64);
        let mut best: f64 = 0.0;
        for i in 0..pieces {
            let l = a + (b - a) * i as f64 / pieces as f64;
            let r = a + (b - a) * (i + 1) as f64 / pieces as f64;
            let x = Ball::from_f64_endpoints(prec, l, r);
            let jet = self.branches[j].jet(&x, 1)?;
            best = best.max(jet.slots[1].mag());
        }
        Ok(best)
    }

    /// Certify that every branch maps the domain into itself and contracts,
    /// and that branch images have disjoint interiors in the stated order.
    pub fn validate(&self, prec: u32) -> Result<Validation> {
        let mut images = Vec::with_capacity(self.branches.len());
        let lo = Float::with_val(prec, self.domain.0);
        let hi = Float::with_val(prec, self.domain.1);
        let exact: Option<Vec<(Rational, Rational)>> = self.branches.iter().map(|b| b.affine_image(self.domain)).collect();
        if let Some(exact) = &exact {
            // affine images are rationals; rounding their ball enclosures would
            // spoil touching or domain-filling endpoints such as 1/3 + 2/3
            for (j, (l, h)) in exact.iter().enumerate() {
                if *l < self.domain.0 || *h > self.domain.1 {
                    return Err(Error::InvalidSystem(format!("branch {j} leaves the domain")));
                }
            }
            if exact.windows(2).any(|w| w[0].1 > w[1].0) {
                return Err(Error::OverlapError);
            }
        }
        for (j, b) in self.branches.iter().enumerate() {
            if exact.is_some() {
                images.push(self.image(j, prec)?);
                continue;
            }
            // monotone branches: the image is spanned by the endpoint values
            let ends = [
                b.eval(&Ball::from_int(prec, self.domain.0))?,
                b.eval(&Ball::from_int(prec, self.domain.1))?,
            ];
            for e in &ends {
                if e.lower() < lo || e.upper() > hi {
                    return Err(Error::InvalidSystem(format!("branch {j} value {e:?} leaves the domain")));
                }
            }
            images.push(ends[0].hull(&ends[1]));
        }
        for w in images.windows(2) {
            if exact.is_none() && w[0].upper() > w[1].lower() {
                return Err(Error::OverlapError);
            }
        }
        let mut contraction = Vec::with_capacity(self.branches.len());
        for j in 0..self.branches.len() {
            let mut c = self.sup_derivative(j, prec, 32)?;
            if c >= 1.0 {
                c = self.sup_derivative(j, prec, 512)?;
            }
            if c >= 1.0 {
                return Err(Error::InvalidSystem(format!("branch {j} is not certified contracting")));
            }
            contraction.push(c);
        }
        Ok(Validation { images, contraction })
    }
}

/// `R(x) = x((3+d) - x)` on `[0, 3+d]`; `d = 2` is the Sierpiński triangle.
pub fn make_sierpinski_gasket(d: u32) -> Result<BranchSystem> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("gasket dimension {d} < 2")));
    }
    let a = 3 + d as i64;
    Ok(BranchSystem {
        name: format!("sierpinski:d={d}"),
        domain: (0, a),
        branches: vec![
            Branch { kind: BranchKind::Quadratic { a, sign: -1 }, increasing: true },
            Branch { kind: BranchKind::Quadratic { a, sign: 1 }, increasing: false },
        ],
        decimation: Some(RationalMap::polynomial(vec![0, a, -1])),
        gasket_d: Some(d),
    })
}

/// Monotone pieces of `R` meeting `[a, b]`, cut at critical points and poles.
fn monotone_pieces(map: &RationalMap, a: i64, b: i64) -> Result<Vec<(f64, f64)>> {
    let w = (b - a) as f64;
    let (lo, hi) = (a as f64 - 0.25 * w, b as f64 + 0.25 * w);
    let mut cuts: Vec<f64> = Vec::new();
    for c in map.critical_points(lo, hi, 128)? {
        cuts.push(c.lower_f64());
        cuts.push(c.upper_f64());
    }
    let mut poles: Vec<f64> = Vec::new();
    if !map.is_polynomial() {
        let q = RationalMap::polynomial(map.den.clone());
        let n = 4096;
        for i in 0..n {
            let l = lo + (hi - lo) * i as f64 / n as f64;
            let r = lo + (hi - lo) * (i + 1) as f64 / n as f64;
            if q.eval_f64(l) * q.eval_f64(r) <= 0.0 {
                poles.push(l);
                poles.push(r);
            }
        }
    }
    let mut edges = vec![lo];
    edges.extend(cuts.iter().chain(poles.iter()));
    edges.push(hi);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut pieces = Vec::new();
    for pair in edges.chunks(2) {
        if let [l, r] = pair {
            // nudge inward so the certified sign check stays away from the cut
            let (l, r) = (l + 1e-12 * w, r - 1e-12 * w);
            if l < r && r > a as f64 && l < b as f64 {
                pieces.push((l, r));
            }
        }
    }
    Ok(pieces)
}

fn implicit_system(name: &str, map: RationalMap, domain: (i64, i64)) -> Result<BranchSystem> {
    let mut branches = Vec::new();
    for (l, r) in monotone_pieces(&map, domain.0, domain.1)? {
        let b = ImplicitBranch::new(map.clone(), l, r)?;
        let increasing = b.increasing;
        branches.push(Branch { kind: BranchKind::Implicit(b), increasing });
    }
    Ok(BranchSystem {
        name: name.to_string(),
        domain,
        branches,
        decimation: Some(map),
        gasket_d: None,
    })
}

/// `R(x) = 3x(5-x)(4-x)(3-x)/(14-2x)` on `[0, 6]` with its four local inverses.
///
/// The branches live on the monotone pieces of `R` over `[0, 6]`. Only the
/// first two pieces cover all of `[0, 6]` in their range, so evaluating the
/// third or fourth branch above `R`'s local maximum near `4.64` reports
/// `RootIsolationFailure`, and [`BranchSystem::validate`] rejects the system.
pub fn make_sg3() -> Result<BranchSystem> {
    let map = RationalMap { num: vec![0, 180, -141, 36, -3], den: vec![14, -2] };
    implicit_system("sg3", map, (0, 6))
}

/// `R(z) = z(6z+3)(6z+5)` on `[-1, 0]` with three inverse branches.
pub fn make_vicsek() -> Result<BranchSystem> {
    let map = RationalMap::polynomial(vec![0, 15, 48, 36]);
    implicit_system("vicsek", map, (-1, 0))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Equally spaced similarities `S_j(x) = r x + j (1 - r) / (n - 1)` on `[0, 1]`.
pub fn make_affine_cantor(ratio: (i64, i64), n_branches: u32) -> Result<BranchSystem> {
    let (num, den) = ratio;
    if den <= 0 || num <= 0 || 2 * num > den {
        return Err(Error::InvalidConfig(format!("ratio {num}/{den} outside (0, 1/2]")));
    }
    if n_branches < 2 {
        return Err(Error::InvalidConfig("need at least two branches".into()));
    }
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    let k = n_branches as i64;
    if k * num > den {
        return Err(Error::OverlapError);
    }
    let branches = (0..k)
        .map(|j| {
            let (sn, sd) = (j * (den - num), den * (k - 1));
            let g = gcd(sn, sd).max(1);
            Branch {
                kind: BranchKind::Affine { num, den, shift_num: sn / g, shift_den: sd / g },
                increasing: true,
            }
        })
        .collect();
    Ok(BranchSystem {
        name: format!("cantor:r={num}/{den},k={n_branches}"),
        domain: (0, 1),
        branches,
        decimation: None,
        gasket_d: None,
    })
}

/// Exact rational from a decimal (`0.25`) or fraction (`1/4`) literal.
pub fn parse_rational(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::InvalidConfig(format!("bad ratio `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok((a, b));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 17 || !frac.chars().all(|c| c.is_ascii_digit()) || int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let den = 10i64.pow(frac.len() as u32);
    let ip: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let fp: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = ip.checked_mul(den).and_then(|v| v.checked_add(fp)).ok_or_else(bad)?;
    let g = gcd(num, den).max(1);
    Ok((num / g, den / g))
}

/// Look up a family identifier: `sierpinski:d=<n>`, `sg3`, `vicsek`,
/// `cantor:r=<ratio>,k=<branches>`.
pub fn family(id: &str) -> Result<BranchSystem> {
    let unknown = || Error::UnknownFamily(id.to_string());
    let id = id.trim();
    match id {
        "sg3" => return make_sg3(),
        "vicsek" => return make_vicsek(),
        _ => {}
    }
    if let Some(rest) = id.strip_prefix("sierpinski:d=") {
        let d: u32 = rest.parse().map_err(|_| unknown())?;
        return make_sierpinski_gasket(d);
    }
    if let Some(rest) = id.strip_prefix("cantor:") {
        let mut ratio = None;
        let mut k = None;
        for part in rest.split(',') {
            match part.split_once('=') {
                Some(("r", v)) => ratio = Some(parse_rational(v)?),
                Some(("k", v)) => k = Some(v.parse::<u32>().map_err(|_| unknown())?),
                _ => return Err(unknown()),
            }
        }
        return make_affine_cantor(ratio.ok_or_else(unknown)?, k.ok_or_else(unknown)?);
    }
    Err(unknown())
}
