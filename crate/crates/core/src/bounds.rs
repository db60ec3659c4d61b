//! Closed-form dimension brackets for the gasket family.

use crate::ball::Ball;
use crate::error::{Error, Result};

/// `(log 2 / log(d+3), 2 log 2 / (log(d+3) + log(d-1)))` as certified balls.
pub fn moran_bracket_ball(d: u32, prec: u32) -> Result<(Ball, Ball)> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("gasket dimension {d} < 2")));
    }
    let ln2 = Ball::from_int(prec, 2).ln()?;
    let la = Ball::from_int(prec, d as i64 + 3).ln()?;
    let lb = Ball::from_int(prec, d as i64 - 1).ln()?;
    let lower = ln2.div(&la)?;
    let upper = ln2.mul_int(2).div(&la.add(&lb))?;
    Ok((lower, upper))
}

pub fn moran_bracket(d: u32) -> Result<(f64, f64)> {
    let (l, u) = moran_bracket_ball(d, 128)?;
    Ok((l.mid_f64(), u.mid_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_bracket() {
        let (l, u) = moran_bracket(2).unwrap();
        assert!((l - 0.430676558073393).abs() < 1e-14);
        assert!((u - 0.861353116146786).abs() < 1e-14);
    }

    #[test]
    fn tetra_bracket() {
        let (l, u) = moran_bracket(3).unwrap();
        assert!((l - 0.386852807234542).abs() < 1e-14);
        assert!((u - 0.557885891302260).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_d() {
        assert!(moran_bracket(1).is_err());
    }
}
