//! Rigorous verification of `inf h > 1` or `sup h < 1` for
//! `h = (L_t f) / f`, by adaptive bisection of the domain.
//!
//! Leaves are dyadic: leaf `(depth, index)` of a domain `[a, b]` is
//! `[a + index w, a + (index + 1) w]` with `w = (b - a) / 2^depth`. On each
//! leaf `h` is enclosed by the intersection of its direct ball image with
//! the derivative bound
//! `|h(x) - h(c)| <= sum_{i<p} |h^(i)(c)| r^i + sup |h^(p)| r^p`.
//! The bound is used as stated (no factorials); it is valid and only
//! slightly coarser than a Taylor remainder.

use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use rayon::prelude::*;
use rug::float::Round;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::ball::{add_up, mul_up, Ball};
use crate::branch::BranchSystem;
use crate::chebyshev::TestFunction;
use crate::error::{Error, Result};
use crate::jet::{Jet, TaylorJet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    InfAboveOne,
    SupBelowOne,
}

/// What a log certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    Positive,
    InfAboveOne,
    SupBelowOne,
}

impl From<Direction> for Check {
    fn from(d: Direction) -> Check {
        match d {
            Direction::InfAboveOne => Check::InfAboveOne,
            Direction::SupBelowOne => Check::SupBelowOne,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "direct-ball")]
    DirectBall,
    #[serde(rename = "taylor-bound")]
    TaylorBound,
}

#[derive(Clone, Debug)]
pub struct VerificationTask<'a> {
    pub system: &'a BranchSystem,
    pub t: Float,
    pub f: &'a TestFunction,
    pub direction: Direction,
    pub depth_limit: u32,
    pub order: usize,
    pub margin: f64,
}

/// One accepted leaf. Serialised compactly as
/// `[depth, index, enclosure_mid, enclosure_rad, method]`, the centre as an
/// exact radix-16 string. Near the dimension `h` is within `1e-16` of 1, so
/// an `f64` centre would lose the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordRow", into = "RecordRow")]
pub struct LeafRecord {
    pub depth: u32,
    pub index: u64,
    pub enc_mid: Float,
    pub enc_rad: f64,
    pub method: Method,
}

#[derive(Clone, Serialize, Deserialize)]
struct RecordRow(u32, u64, String, f64, Method);

impl TryFrom<RecordRow> for LeafRecord {
    type Error = String;

    fn try_from(r: RecordRow) -> std::result::Result<LeafRecord, String> {
        // four bits per hex digit keeps the parse exact
        let prec = (4 * r.2.len() as u32 + 16).max(64);
        let mid = Float::parse_radix(&r.2, 16).map_err(|_| format!("bad enclosure centre `{}`", r.2))?;
        Ok(LeafRecord { depth: r.0, index: r.1, enc_mid: Float::with_val(prec, mid), enc_rad: r.3, method: r.4 })
    }
}

impl From<LeafRecord> for RecordRow {
    fn from(r: LeafRecord) -> RecordRow {
        RecordRow(r.depth, r.index, r.enc_mid.to_string_radix(16, None), r.enc_rad, r.method)
    }
}

impl LeafRecord {
    pub fn enclosure(&self) -> Ball {
        Ball::new(self.enc_mid.clone(), self.enc_rad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Verified,
    /// Some leaf lies wholly on the wrong side: this candidate cannot certify.
    Rejected { depth: u32, index: u64 },
    /// A leaf at the depth limit straddles the threshold.
    DepthExhausted { depth: u32, index: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationLog {
    pub check: Check,
    pub domain: (i64, i64),
    pub depth_limit: u32,
    pub order: usize,
    pub margin: f64,
    /// Accepted leaves, left to right.
    pub records: Vec<LeafRecord>,
    pub outcome: Outcome,
    pub leaves: usize,
    pub max_depth: u32,
}

impl VerificationLog {
    pub fn verified(&self) -> bool {
        self.outcome == Outcome::Verified
    }
}

/// Exact endpoints of a leaf as (center, radius).
pub fn leaf_geometry(domain: (i64, i64), depth: u32, index: u64, prec: u32) -> (Float, f64) {
    let (a, b) = domain;
    let w = (b - a) as f64;
    let r = w * 2f64.powi(-(depth as i32) - 1);
    let p = prec.max(depth + 72);
    let mut c = Float::with_val(p, 2 * index + 1);
    c *= r;
    c += a;
    (c, r)
}

fn leaf_bounds(domain: (i64, i64), depth: u32, index: u64) -> (String, String) {
    let (c, r) = leaf_geometry(domain, depth, index, 64);
    let lo = Float::with_val(c.prec() + 8, &c - r);
    let hi = Float::with_val(c.prec() + 8, &c + r);
    (lo.to_string(), hi.to_string())
}

fn derivative_ball(jet: &TaylorJet, r: f64, p: usize) -> Ball {
    assert!(jet.order() >= p && p >= 1);
    let mut dev = 0.0;
    let mut rp = 1.0;
    for i in 1..=p {
        rp = mul_up(rp, r);
        dev = add_up(dev, mul_up(jet.coeffs[i].mag(), rp));
    }
    jet.coeffs[0].clone().inflated(dev)
}

/// Enclosure of `h` over `[c - r, c + r]` from a Taylor jet.
pub fn taylor_bound(jet: &TaylorJet, r: f64, p: usize) -> Ball {
    let t = derivative_ball(jet, r, p);
    t.intersect(&jet.direct).unwrap_or(t)
}

fn tighter(jet: &TaylorJet, r: f64, p: usize) -> (Ball, Method) {
    let t = derivative_ball(jet, r, p);
    let method = if jet.direct.rad() < t.rad() { Method::DirectBall } else { Method::TaylorBound };
    (t.intersect(&jet.direct).unwrap_or(t), method)
}

/// Jet of `h = (L_t f) / f`, seeded at `x` (pointwise valid over a wide `x`).
pub fn h_jet(system: &BranchSystem, f: &TestFunction, t: &Float, x: &Ball, order: usize) -> Result<Jet> {
    let prec = x.prec();
    let mut lf: Option<Jet> = None;
    for b in &system.branches {
        let s = b.jet(x, order + 1)?;
        let w = if t.is_zero() {
            Jet::constant(Ball::one(prec), order)
        } else {
            // branches are certified monotone, so the sign of S' is known
            let ds = Jet { slots: s.slots[1..].to_vec() };
            if b.increasing { ds } else { ds.neg() }.pow(t)?
        };
        let s = s.truncate(order);
        let outer = f.jet_over(&s.slots[0], order)?;
        let term = w.mul(&s.compose(&outer.slots));
        lf = Some(match lf {
            None => term,
            Some(acc) => acc.add(&term),
        });
    }
    let lf = lf.ok_or_else(|| Error::InvalidSystem("no branches".into()))?;
    lf.div(&f.jet_over(x, order)?)
}

/// Certified enclosure of `h(x)` at a single point.
pub fn h_at(system: &BranchSystem, f: &TestFunction, t: &Float, x: &Float) -> Result<Ball> {
    Ok(h_jet(system, f, t, &Ball::exact(x.clone()), 0)?.slots[0].clone())
}

enum Verdict {
    Accept,
    Reject,
    Split,
}

struct Engine<'a> {
    domain: (i64, i64),
    prec: u32,
    depth_limit: u32,
    eval: Box<dyn Fn(&Float, f64) -> Result<(Ball, Method)> + Sync + 'a>,
    judge: Box<dyn Fn(&Ball) -> Verdict + Sync + 'a>,
}

enum Stop {
    Rejected(u32, u64),
    Exhausted(u32, u64),
    Failed(Error),
}

struct Partial {
    records: Vec<LeafRecord>,
    visited: usize,
    stop: Option<Stop>,
}

/// Subtrees fanned out to the worker pool.
const FANOUT: usize = 16;

impl Engine<'_> {
    fn visit(&self, depth: u32, index: u64) -> std::result::Result<Option<LeafRecord>, Stop> {
        let (c, r) = leaf_geometry(self.domain, depth, index, self.prec);
        let (enc, method) = match (self.eval)(&c, r) {
            Ok(v) => v,
            // overestimation on a wide leaf: nothing decided yet
            Err(Error::DomainViolation(_) | Error::DivisorContainsZero) => {
                (Ball::new(Float::new(53), f64::INFINITY), Method::DirectBall)
            }
            Err(e) => return Err(Stop::Failed(e)),
        };
        match (self.judge)(&enc) {
            Verdict::Accept => {
                let enc_rad = enc.rad();
                Ok(Some(LeafRecord { depth, index, enc_mid: enc.mid().clone(), enc_rad, method }))
            }
            Verdict::Reject => Err(Stop::Rejected(depth, index)),
            Verdict::Split if depth >= self.depth_limit => Err(Stop::Exhausted(depth, index)),
            Verdict::Split => Ok(None),
        }
    }

    /// Depth-first, left child first.
    fn subtree(&self, depth: u32, index: u64, abort: &AtomicBool) -> Partial {
        let mut out = Partial { records: Vec::new(), visited: 0, stop: None };
        let mut stack = vec![(depth, index)];
        while let Some((d, i)) = stack.pop() {
            if abort.load(AtomicOrdering::Relaxed) {
                break;
            }
            out.visited += 1;
            match self.visit(d, i) {
                Ok(Some(rec)) => out.records.push(rec),
                Ok(None) => {
                    stack.push((d + 1, 2 * i + 1));
                    stack.push((d + 1, 2 * i));
                }
                Err(stop) => {
                    abort.store(true, AtomicOrdering::Relaxed);
                    out.stop = Some(stop);
                    break;
                }
            }
        }
        out
    }

    fn run(&self, check: Check, order: usize, margin: f64) -> Result<VerificationLog> {
        enum Slot {
            Done(LeafRecord),
            Open(u32, u64),
        }
        let abort = AtomicBool::new(false);
        let mut visited = 0;
        let mut frontier = vec![Slot::Open(0, 0)];
        let mut stop = None;
        // breadth-first until there is enough independent work
        loop {
            let open: Vec<(u32, u64)> = frontier
                .iter()
                .filter_map(|s| match s {
                    Slot::Open(d, i) => Some((*d, *i)),
                    Slot::Done(_) => None,
                })
                .collect();
            if open.is_empty() || open.len() >= FANOUT {
                break;
            }
            let results: Vec<_> = open.par_iter().map(|&(d, i)| self.visit(d, i)).collect();
            visited += open.len();
            let mut next = Vec::with_capacity(frontier.len() + open.len());
            let mut results = results.into_iter();
            for s in frontier {
                match s {
                    Slot::Done(r) => next.push(Slot::Done(r)),
                    Slot::Open(d, i) => match results.next().unwrap() {
                        Ok(Some(rec)) => next.push(Slot::Done(rec)),
                        Ok(None) => {
                            next.push(Slot::Open(d + 1, 2 * i));
                            next.push(Slot::Open(d + 1, 2 * i + 1));
                        }
                        Err(s) => {
                            if stop.is_none() {
                                stop = Some(s);
                            }
                            next.push(Slot::Open(d, i));
                        }
                    },
                }
            }
            frontier = next;
            if stop.is_some() {
                break;
            }
        }
        let mut records = Vec::new();
        if stop.is_none() {
            let parts: Vec<Option<Partial>> = frontier
                .par_iter()
                .map(|s| match s {
                    Slot::Open(d, i) => Some(self.subtree(*d, *i, &abort)),
                    Slot::Done(_) => None,
                })
                .collect();
            for (s, p) in frontier.into_iter().zip(parts) {
                match (s, p) {
                    (Slot::Done(r), _) => records.push(r),
                    (_, Some(p)) => {
                        visited += p.visited;
                        records.extend(p.records);
                        if stop.is_none() {
                            stop = p.stop;
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        let outcome = match stop {
            None => Outcome::Verified,
            Some(Stop::Rejected(depth, index)) => Outcome::Rejected { depth, index },
            Some(Stop::Exhausted(depth, index)) => Outcome::DepthExhausted { depth, index },
            Some(Stop::Failed(e)) => return Err(e),
        };
        let max_depth = records.iter().map(|r| r.depth).max().unwrap_or(0);
        Ok(VerificationLog {
            check,
            domain: self.domain,
            depth_limit: self.depth_limit,
            order,
            margin,
            records,
            outcome,
            leaves: visited,
            max_depth,
        })
    }
}

fn threshold(prec: u32, check: Check, margin: f64) -> Float {
    match check {
        Check::Positive => Float::with_val(prec, 0),
        Check::InfAboveOne => Float::with_val_round(prec, 1.0 + margin, Round::Up).0.max(&Float::with_val(prec, 1)),
        Check::SupBelowOne => {
            let mut x = Float::with_val(prec, 1);
            x -= Float::with_val_round(prec, margin, Round::Up).0;
            x
        }
    }
}

fn judge_for(check: Check, thr: Float) -> impl Fn(&Ball) -> Verdict + Sync {
    move |enc: &Ball| match check {
        Check::Positive | Check::InfAboveOne => {
            if enc.gt(&thr) {
                Verdict::Accept
            } else if enc.lt(&thr) {
                Verdict::Reject
            } else {
                Verdict::Split
            }
        }
        Check::SupBelowOne => {
            if enc.lt(&thr) {
                Verdict::Accept
            } else if enc.gt(&thr) {
                Verdict::Reject
            } else {
                Verdict::Split
            }
        }
    }
}

fn positive_eval<'a>(f: &'a TestFunction, prec: u32) -> impl Fn(&Float, f64) -> Result<(Ball, Method)> + Sync + 'a {
    move |c: &Float, r: f64| {
        let point = f.jet_over(&Ball::exact(Float::with_val(prec.max(c.prec()), c)), 0)?;
        let wide = f.jet_over(&Ball::new(c.clone(), r), 1)?;
        let tj = TaylorJet::from_jets(Ball::exact(c.clone()), r, &point, &wide, 1);
        Ok(tighter(&tj, r, 1))
    }
}

fn minmax_eval<'a>(
    system: &'a BranchSystem,
    f: &'a TestFunction,
    t: &'a Float,
    order: usize,
    prec: u32,
) -> impl Fn(&Float, f64) -> Result<(Ball, Method)> + Sync + 'a {
    move |c: &Float, r: f64| {
        let cb = Ball::exact(c.clone()).with_prec(prec.max(c.prec()));
        let point = h_jet(system, f, t, &cb, order - 1)?;
        let wide = h_jet(system, f, t, &Ball::new(cb.mid().clone(), r), order)?;
        let tj = TaylorJet::from_jets(cb, r, &point, &wide, order);
        Ok(tighter(&tj, r, order))
    }
}

fn no_leaf_error(domain: (i64, i64), outcome: &Outcome) -> Option<Error> {
    match *outcome {
        Outcome::DepthExhausted { depth, index } => {
            let (lo, hi) = leaf_bounds(domain, depth, index);
            Some(Error::DepthExhausted { lo, hi })
        }
        _ => None,
    }
}

/// Certify `f > 0` on the domain of `system`.
///
/// `Ok((false, log))` means a leaf where `f` is certainly non-positive;
/// an undecided leaf at depth `k` is reported as `DepthExhausted`.
pub fn verify_positive(f: &TestFunction, system: &BranchSystem, k: u32) -> Result<(bool, VerificationLog)> {
    let log = positive_log(f, system, k)?;
    if let Some(e) = no_leaf_error(system.domain, &log.outcome) {
        return Err(e);
    }
    Ok((log.verified(), log))
}

/// As [`verify_positive`], keeping the log on every outcome.
pub fn positive_log(f: &TestFunction, system: &BranchSystem, k: u32) -> Result<VerificationLog> {
    let prec = f.grid.prec;
    let engine = Engine {
        domain: system.domain,
        prec,
        depth_limit: k,
        eval: Box::new(positive_eval(f, prec)),
        judge: Box::new(judge_for(Check::Positive, threshold(prec, Check::Positive, 0.0))),
    };
    engine.run(Check::Positive, 1, 0.0)
}

/// Certify the task's inequality for `h = (L_t f) / f` over the whole domain.
///
/// `Ok((false, log))` means some leaf lies wholly on the wrong side, so no
/// amount of refinement helps with this `f`.
pub fn verify_minmax(task: &VerificationTask) -> Result<(bool, VerificationLog)> {
    let log = minmax_log(task)?;
    if let Some(e) = no_leaf_error(task.system.domain, &log.outcome) {
        return Err(e);
    }
    Ok((log.verified(), log))
}

/// As [`verify_minmax`], keeping the log on every outcome.
pub fn minmax_log(task: &VerificationTask) -> Result<VerificationLog> {
    if task.order == 0 {
        return Err(Error::InvalidConfig("derivative order must be at least 1".into()));
    }
    if task.f.grid.interval != task.system.domain {
        return Err(Error::InvalidConfig("test function lives on another interval".into()));
    }
    let prec = task.f.grid.prec;
    let check = Check::from(task.direction);
    let engine = Engine {
        domain: task.system.domain,
        prec,
        depth_limit: task.depth_limit,
        eval: Box::new(minmax_eval(task.system, task.f, &task.t, task.order, prec)),
        judge: Box::new(judge_for(check, threshold(prec, check, task.margin))),
    };
    engine.run(check, task.order, task.margin)
}

/// Leaves must tile the domain left to right.
fn check_coverage(log: &VerificationLog) -> Result<()> {
    let dmax = log.records.iter().map(|r| r.depth).max().unwrap_or(0);
    if dmax > 120 {
        return Err(Error::Certificate("leaf depth too large".into()));
    }
    let mut expected: u128 = 0;
    for (i, r) in log.records.iter().enumerate() {
        if r.depth > log.depth_limit || (r.index as u128) >> r.depth != 0 {
            return Err(Error::CoverageGap(i));
        }
        let span = 1u128 << (dmax - r.depth);
        if (r.index as u128) * span != expected {
            return Err(Error::CoverageGap(i));
        }
        expected += span;
    }
    if expected != 1u128 << dmax || log.records.is_empty() {
        return Err(Error::CoverageGap(log.records.len()));
    }
    Ok(())
}

fn replay(log: &VerificationLog, prec: u32, eval: &(dyn Fn(&Float, f64) -> Result<(Ball, Method)> + Sync)) -> Result<bool> {
    if !log.verified() {
        return Ok(false);
    }
    check_coverage(log)?;
    let thr = threshold(prec, log.check, log.margin);
    let judge = judge_for(log.check, thr);
    let bad: Vec<Option<Result<usize>>> = log
        .records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            if !matches!(judge(&r.enclosure()), Verdict::Accept) {
                return Some(Ok(i));
            }
            let (c, rad) = leaf_geometry(log.domain, r.depth, r.index, prec);
            match eval(&c, rad) {
                Err(e) => Some(Err(e)),
                Ok((fresh, _)) => {
                    // a fresh enclosure that misses the recorded one is a mismatch
                    if !matches!(judge(&fresh), Verdict::Accept) || !fresh.overlaps(&r.enclosure()) {
                        Some(Ok(i))
                    } else {
                        None
                    }
                }
            }
        })
        .collect();
    match bad.into_iter().flatten().next() {
        Some(Ok(i)) => Err(Error::InequalityFailure(i)),
        Some(Err(e)) => Err(e),
        None => Ok(true),
    }
}

/// Recompute every leaf of a verified log from scratch and confirm coverage
/// and every inequality. Enclosure mismatches are reported as inequality
/// failures at the offending leaf.
pub fn recheck_log(log: &VerificationLog, task: &VerificationTask) -> Result<bool> {
    if log.check != Check::from(task.direction) || log.domain != task.system.domain {
        return Err(Error::Certificate("log does not belong to this task".into()));
    }
    let prec = task.f.grid.prec;
    let eval = minmax_eval(task.system, task.f, &task.t, log.order.max(1), prec);
    replay(log, prec, &eval)
}

/// Replay a positivity log.
pub fn recheck_positive(log: &VerificationLog, f: &TestFunction, system: &BranchSystem) -> Result<bool> {
    if log.check != Check::Positive || log.domain != system.domain {
        return Err(Error::Certificate("not a positivity log for this system".into()));
    }
    let prec = f.grid.prec;
    let eval = positive_eval(f, prec);
    replay(log, prec, &eval)
}
