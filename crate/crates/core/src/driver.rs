//! Outer bisection on `t`: certified bounds `t0 < dim < t1`.
//!
//! At each midpoint `T` a candidate eigenfunction is built and the driver
//! tries to certify `inf L_T f / f > 1` (then `dim > T`) and otherwise
//! `sup L_T f / f < 1` (then `dim < T`). When neither certifies the run
//! escalates along [`RunConfig::escalation`].

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::bounds::moran_bracket_ball;
use crate::branch::{make_sierpinski_gasket, BranchSystem};
use crate::certify::{minmax_log, positive_log, Direction, VerificationLog, VerificationTask};
use crate::chebyshev::{build_test_function_from, ChebyshevGrid, TestFunction, MAX_BOUND_ORDER};
use crate::decimal::{common_digits, digits_for_width, directed_decimal, exact_decimal};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rung {
    /// Double the collocation rank, up to `m_max`.
    Rank,
    /// Double the working precision (once per run).
    Precision,
    /// Raise the depth limit by 4 (once per run).
    Depth,
    /// Move the split point to 3/8 or 5/8 of the bracket.
    Nudge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub m_initial: usize,
    pub m_max: usize,
    pub depth: u32,
    pub order: usize,
    pub precision: u32,
    pub margin: f64,
    pub escalation: Vec<Rung>,
    /// Worker threads for leaf verification; `None` uses the ambient pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub max_iterations: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            epsilon: 1e-15,
            m_initial: 30,
            m_max: 120,
            depth: 18,
            order: 2,
            precision: 128,
            margin: 0.0,
            escalation: vec![Rung::Rank, Rung::Precision, Rung::Depth, Rung::Nudge],
            threads: None,
            max_iterations: 400,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidConfig(s.into()));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.m_initial == 0 || self.m_initial > self.m_max {
            return bad("need 0 < m_initial <= m_max");
        }
        if self.order == 0 || self.order >= MAX_BOUND_ORDER {
            return bad("derivative order out of range");
        }
        if self.precision < 53 {
            return bad("precision below 53 bits");
        }
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return bad("margin must lie in [0, 1)");
        }
        if self.depth > 60 {
            return bad("depth limit above 60");
        }
        Ok(())
    }
}

/// One certified midpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointRecord {
    /// Exact decimal expansion of the dyadic split point.
    #[serde(rename = "T")]
    pub t: String,
    pub direction: Direction,
    pub m: usize,
    pub precision: u32,
    pub nudged: bool,
    /// Node values of the test function, as round-trip strings at `precision`.
    pub f_values: Vec<String>,
    pub positivity: VerificationLog,
    pub log: VerificationLog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionCertificate {
    pub family: String,
    pub status: Status,
    /// Lower bound, rounded down to the printed digits.
    pub t0: String,
    /// Upper bound, rounded up to the printed digits.
    pub t1: String,
    /// Decimal digits shared by `t0` and `t1`.
    pub digits: String,
    pub config: RunConfig,
    pub midpoints: Vec<MidpointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub iterations: usize,
    pub leaves: usize,
    pub runtime_seconds: f64,
}

/// Round-trip representation of a float at its own precision.
pub fn float_to_string(x: &Float) -> String {
    x.to_string_radix(16, None)
}

pub fn float_from_string(s: &str, prec: u32) -> Result<Float> {
    Float::parse_radix(s, 16)
        .map(|p| Float::with_val(prec, p))
        .map_err(|_| Error::Certificate(format!("bad float `{s}`")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Setting {
    m: usize,
    prec: u32,
    depth: u32,
}

struct Attempt {
    record: Option<MidpointRecord>,
    lambda: Option<Float>,
    leaves: usize,
    /// Certification skipped: the candidate eigenvalue is within the
    /// pre-nudge threshold of 1.
    too_close: bool,
}

struct Runner<'a> {
    system: &'a BranchSystem,
    config: &'a RunConfig,
    grids: HashMap<(usize, u32), Arc<ChebyshevGrid>>,
    warm: HashMap<(usize, u32), Vec<Float>>,
}

impl Runner<'_> {
    fn grid(&mut self, m: usize, prec: u32) -> Arc<ChebyshevGrid> {
        let domain = self.system.domain;
        self.grids.entry((m, prec)).or_insert_with(|| Arc::new(ChebyshevGrid::new(m, domain, prec))).clone()
    }

    fn attempt(&mut self, t: &Float, s: Setting, nudged: bool, close: Option<f64>) -> Result<Attempt> {
        let grid = self.grid(s.m, s.prec);
        let tt = Float::with_val(t.prec().max(s.prec), t);
        let start = self.warm.get(&(s.m, s.prec)).cloned();
        let (f, lambda) = match build_test_function_from(self.system, &tt, grid, start.as_deref()) {
            Ok(v) => v,
            Err(Error::NonPositiveCandidate(_) | Error::NoConvergence(_)) => {
                return Ok(Attempt { record: None, lambda: None, leaves: 0, too_close: false })
            }
            Err(e) => return Err(e),
        };
        self.warm.insert((s.m, s.prec), f.values.clone());
        if close.is_some_and(|c| (lambda.to_f64() - 1.0).abs() < c) {
            return Ok(Attempt { record: None, lambda: Some(lambda), leaves: 0, too_close: true });
        }
        let positivity = positive_log(&f, self.system, s.depth)?;
        let mut leaves = positivity.leaves;
        if !positivity.verified() {
            return Ok(Attempt { record: None, lambda: Some(lambda), leaves, too_close: false });
        }
        for direction in [Direction::InfAboveOne, Direction::SupBelowOne] {
            let log = self.run_task(&f, &tt, direction, s.depth)?;
            leaves += log.leaves;
            if log.verified() {
                let record = MidpointRecord {
                    t: exact_decimal(t),
                    direction,
                    m: s.m,
                    precision: s.prec,
                    nudged,
                    f_values: f.values.iter().map(float_to_string).collect(),
                    positivity,
                    log,
                };
                return Ok(Attempt { record: Some(record), lambda: Some(lambda), leaves, too_close: false });
            }
        }
        Ok(Attempt { record: None, lambda: Some(lambda), leaves, too_close: false })
    }

    fn run_task(&self, f: &TestFunction, t: &Float, direction: Direction, depth: u32) -> Result<VerificationLog> {
        minmax_log(&VerificationTask {
            system: self.system,
            t: t.clone(),
            f,
            direction,
            depth_limit: depth,
            order: self.config.order,
            margin: self.config.margin,
        })
    }
}

/// Bracket width below which a midpoint is moved before any certification,
/// as a multiple of the current width.
const PRE_NUDGE: f64 = 1.0 / 1024.0;

/// Certified bounds on the dimension of the limit set of `system`.
///
/// An exhausted escalation ladder is not an error: the certificate keeps
/// the last certified bounds with status [`Status::Inconclusive`].
pub fn estimate_dimension(system: &BranchSystem, config: &RunConfig) -> Result<DimensionCertificate> {
    config.validate()?;
    system.validate(config.precision)?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(|| run(system, config)),
        None => run(system, config),
    }
}

fn run(system: &BranchSystem, config: &RunConfig) -> Result<DimensionCertificate> {
    let clock = Instant::now();
    // split points are dyadic; this is enough bits for every bisection step
    let tp = config.precision.max(64) + 2 * config.max_iterations as u32;
    let mut t0 = Float::with_val(tp, 0);
    let mut t1 = Float::with_val(tp, 1);
    let eps = Float::with_val(tp, config.epsilon);
    let mut base = Setting { m: config.m_initial, prec: config.precision, depth: config.depth };
    let mut runner = Runner { system, config, grids: HashMap::new(), warm: HashMap::new() };
    let mut midpoints = Vec::new();
    let (mut precision_used, mut depth_used) = (false, false);
    let mut iterations = 0;
    let mut leaves = 0;
    let mut failure = None;

    'outer: while Float::with_val(tp, &t1 - &t0) >= eps {
        if iterations >= config.max_iterations {
            failure = Some(format!("iteration limit {} reached", config.max_iterations));
            break;
        }
        iterations += 1;
        let w = Float::with_val(tp, &t1 - &t0);
        let mut t = Float::with_val(tp, &t0 + &t1) / 2u32;
        let mut setting = base;
        let mut rung = 0;
        let mut nudges = 0;
        let mut nudged = false;
        loop {
            let close = (!nudged && config.escalation.contains(&Rung::Nudge)).then(|| w.to_f64() * PRE_NUDGE);
            let a = runner.attempt(&t, setting, nudged, close)?;
            leaves += a.leaves;
            if let Some(rec) = a.record {
                match rec.direction {
                    Direction::InfAboveOne => t0 = t.clone(),
                    Direction::SupBelowOne => t1 = t.clone(),
                }
                if !nudged {
                    base = setting;
                }
                midpoints.push(rec);
                continue 'outer;
            }
            // a split point this close to the zero of the pressure cannot certify
            if a.too_close {
                t = nudge(&t0, &w, a.lambda.as_ref().is_some_and(|l| *l > 1));
                nudged = true;
                nudges += 1;
                continue;
            }
            let mut moved = false;
            while rung < config.escalation.len() && !moved {
                match config.escalation[rung] {
                    Rung::Rank if setting.m * 2 <= config.m_max => {
                        setting.m *= 2;
                        moved = true;
                    }
                    Rung::Precision if !precision_used => {
                        setting.prec *= 2;
                        precision_used = true;
                        moved = true;
                    }
                    Rung::Depth if !depth_used => {
                        setting.depth += 4;
                        depth_used = true;
                        moved = true;
                    }
                    Rung::Nudge if nudges < 2 => {
                        let above = a.lambda.as_ref().map_or(true, |l| *l > 1);
                        // second nudge goes to the other side
                        t = nudge(&t0, &w, if nudges == 0 { above } else { !above });
                        nudged = true;
                        nudges += 1;
                        moved = true;
                    }
                    _ => rung += 1,
                }
            }
            if !moved {
                failure = Some(
                    Error::Inconclusive { t: exact_decimal(&t), t0: exact_decimal(&t0), t1: exact_decimal(&t1) }
                        .to_string(),
                );
                break 'outer;
            }
        }
    }

    let width = Float::with_val(tp, &t1 - &t0).to_f64();
    let digits = digits_for_width(width);
    let lo = directed_decimal(&t0, digits, false);
    let hi = directed_decimal(&t1, digits, true);
    Ok(DimensionCertificate {
        family: system.name.clone(),
        status: if failure.is_none() { Status::Certified } else { Status::Inconclusive },
        digits: common_digits(&lo, &hi),
        t0: lo,
        t1: hi,
        config: config.clone(),
        midpoints,
        failure,
        iterations,
        leaves,
        runtime_seconds: clock.elapsed().as_secs_f64(),
    })
}

/// `t0 + 3w/8` when the dimension seems to lie just above the midpoint,
/// else `t0 + 5w/8`, so the new split point sits at least `w/8` from it.
fn nudge(t0: &Float, w: &Float, above: bool) -> Float {
    let k = if above { 3u32 } else { 5u32 };
    Float::with_val(t0.prec(), w * k) / 8u32 + t0
}

/// One certificate per gasket dimension parameter.
pub fn table_run(d_range: std::ops::RangeInclusive<u32>, config: &RunConfig) -> Vec<Result<DimensionCertificate>> {
    d_range
        .map(|d| make_sierpinski_gasket(d).and_then(|s| estimate_dimension(&s, config)))
        .collect()
}

/// A priori bracket for the dimension: the gasket bounds when they apply,
/// otherwise the trivial `(0, 1)`.
pub fn sanity_bracket(system: &BranchSystem) -> Result<(Float, Float)> {
    match system.gasket_d {
        Some(d) => {
            let (l, u) = moran_bracket_ball(d, 128)?;
            Ok((l.lower(), u.upper()))
        }
        None => Ok((Float::with_val(128, 0), Float::with_val(128, 1))),
    }
}

/// Reject a certificate whose bounds escape the a priori bracket.
pub fn check_bracket(system: &BranchSystem, cert: &DimensionCertificate) -> Result<()> {
    let (lower, upper) = sanity_bracket(system)?;
    let t0 = Float::with_val(256, Float::parse(&cert.t0).map_err(|e| Error::Certificate(e.to_string()))?);
    let t1 = Float::with_val(256, Float::parse(&cert.t1).map_err(|e| Error::Certificate(e.to_string()))?);
    // strictly inside, except that trivial brackets admit their own endpoints
    let trivial = system.gasket_d.is_none();
    let ok = if trivial { t0 >= lower && t1 <= upper } else { t0 > lower && t1 < upper };
    if ok {
        Ok(())
    } else {
        Err(Error::BracketViolation {
            t0: cert.t0.clone(),
            t1: cert.t1.clone(),
            lower: lower.to_string(),
            upper: upper.to_string(),
        })
    }
}
