//! Backward orbits, the cascade limit and samples of the Julia set.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::ball::Ball;
use crate::branch::BranchSystem;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    /// Branch word `w_1 .. w_n` of `S_{w_1} o .. o S_{w_n}(y)`.
    pub word: Vec<usize>,
    pub value: f64,
    /// The certified enclosure, as `[mid, rad]`.
    pub enclosure: (f64, f64),
    #[serde(skip)]
    pub ball: Option<Ball>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardOrbit {
    pub seed: f64,
    pub generations: u32,
    /// Sorted by value.
    pub points: Vec<OrbitPoint>,
}

pub const MAX_GENERATIONS: u32 = 20;

fn inside(system: &BranchSystem, b: &Ball) -> bool {
    let (a, c) = system.domain;
    !b.lt(&Float::with_val(64, a)) && !b.gt(&Float::with_val(64, c))
}

/// All images of `y` under words of length `n`, each a certified ball.
///
/// Words whose innermost branch is undefined at the current point (the
/// point lies outside that branch's range) are dropped.
pub fn backward_orbit(system: &BranchSystem, y: &Ball, n: u32) -> Result<BackwardOrbit> {
    if n > MAX_GENERATIONS {
        return Err(Error::InvalidConfig(format!("{n} generations exceed {MAX_GENERATIONS}")));
    }
    if !inside(system, y) {
        return Err(Error::OutOfDomain);
    }
    let mut level: Vec<(Vec<usize>, Ball)> = vec![(Vec::new(), y.clone())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * system.branches.len());
        for (word, x) in &level {
            for (j, b) in system.branches.iter().enumerate() {
                match b.eval(x) {
                    Ok(v) if inside(system, &v) => {
                        let mut w = Vec::with_capacity(word.len() + 1);
                        w.push(j);
                        w.extend_from_slice(word);
                        next.push((w, v));
                    }
                    Ok(_) | Err(Error::DomainViolation(_)) | Err(Error::RootIsolationFailure(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        level = next;
    }
    let mut points: Vec<OrbitPoint> = level
        .into_iter()
        .map(|(word, b)| OrbitPoint { word, value: b.mid_f64(), enclosure: (b.mid_f64(), b.rad()), ball: Some(b) })
        .collect();
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(BackwardOrbit { seed: y.mid_f64(), generations: n, points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeLimit {
    pub z: f64,
    pub iterations: usize,
    /// Certified enclosure of `5^N S_-^N(z)`.
    pub value: (String, f64),
    #[serde(skip)]
    pub ball: Option<Ball>,
    /// `5^n S_-^n(z)` for `n = 0..=N`.
    pub iterates: Vec<f64>,
    /// `|x_{n+1} - x_n| / |x_n - x_{n-1}|`.
    pub ratios: Vec<f64>,
}

pub const MAX_CASCADE: usize = 200;

/// `5^N S_-^N(z)` for the triangle map `x (5 - x)`, where
/// `S_-(x) = 2x / (5 + sqrt(25 - 4x))` is its inverse branch through 0
/// (written without the cancellation in `(5 - sqrt(25 - 4x)) / 2`).
pub fn cascade_limit(z: &Ball, iterations: usize) -> Result<CascadeLimit> {
    if iterations > MAX_CASCADE {
        return Err(Error::InvalidConfig(format!("{iterations} iterations exceed {MAX_CASCADE}")));
    }
    if z.lt(&Float::with_val(64, 0)) || z.gt(&Float::with_val(64, 5)) {
        return Err(Error::OutOfDomain);
    }
    let prec = z.prec();
    let mut x = z.clone();
    let mut scale = Ball::one(prec);
    let mut exact = vec![z.mid().clone()];
    for _ in 0..iterations {
        let mut u = x.mul_int(-4);
        u.add_assign(&Ball::from_int(prec, 25));
        let den = u.sqrt()?.add_int(5);
        x = x.mul_int(2).div(&den)?;
        scale.mul_int_assign(5);
        exact.push(x.mul(&scale).mid().clone());
    }
    let value = x.mul(&scale);
    // the differences drop below f64 resolution long before N = 200
    let ratios = exact
        .windows(3)
        .map(|w| {
            let d1 = Float::with_val(prec, &w[2] - &w[1]).abs();
            let d0 = Float::with_val(prec, &w[1] - &w[0]).abs();
            (d1 / d0).to_f64()
        })
        .collect();
    let iterates = exact.iter().map(Float::to_f64).collect();
    Ok(CascadeLimit {
        z: z.mid_f64(),
        iterations,
        value: (value.mid().to_string(), value.rad()),
        ball: Some(value),
        iterates,
        ratios,
    })
}

/// All `B^n` branch-word images of the domain midpoint, ascending.
pub fn julia_sample(system: &BranchSystem, n: u32) -> Result<Vec<f64>> {
    let b = system.branches.len() as u32;
    if n > 16 || b.checked_pow(n).is_none_or(|c| c > 1 << 20) {
        return Err(Error::InvalidConfig(format!("sample depth {n} too large")));
    }
    let (a, c) = system.domain;
    let mut mid = Ball::from_int(64, a + c);
    mid.mul_pow2_assign(-1);
    let mut pts = vec![mid];
    for _ in 0..n {
        let mut next = Vec::with_capacity(pts.len() * b as usize);
        for x in &pts {
            for br in &system.branches {
                next.push(br.eval(x)?);
            }
        }
        pts = next;
    }
    let mut out: Vec<f64> = pts.iter().map(Ball::mid_f64).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Least-squares slope of `log N(delta)` against `log(1/delta)` for boxes
/// of side `delta = 2^-j`, `j` in `scales`.
pub fn box_counting_dimension(points: &[f64], scales: std::ops::RangeInclusive<i32>) -> f64 {
    let samples: Vec<(f64, f64)> = scales
        .map(|j| {
            let delta = 2f64.powi(-j);
            let mut boxes: Vec<i64> = points.iter().map(|x| (x / delta).floor() as i64).collect();
            boxes.sort_unstable();
            boxes.dedup();
            ((1.0 / delta).ln(), (boxes.len() as f64).ln())
        })
        .collect();
    let n = samples.len() as f64;
    let (sx, sy) = samples.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}
