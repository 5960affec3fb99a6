//! The bump `ζ` and the substrate potential `V(x) = λ·ζ(x − nearest chain point)`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::chain::{alpha_beta, local_patch, point, PatchOffsets};
use crate::error::{FkError, Result};
use crate::golden::{Abscissa, GoldenNumber};

/// `ζ(0) = 160/27`.
pub const ZETA_MAX: f64 = 160.0 / 27.0;

/// Half-width of the support of `ζ`.
pub const SUPPORT: f64 = 1.0 / 3.0;

/// Edge of the quadratic part of `ζ`.
pub const QUADRATIC_EDGE: f64 = 0.25;

pub fn zeta(x: f64) -> f64 {
    let s = x.abs();
    if s <= QUADRATIC_EDGE {
        -64.0 * x * x + ZETA_MAX
    } else if s < SUPPORT {
        let t = 3.0 * s - 1.0;
        64.0 / 27.0 * t * t * (96.0 * s - 11.0)
    } else {
        0.0
    }
}

pub fn zeta_prime(x: f64) -> f64 {
    let s = x.abs();
    if s <= QUADRATIC_EDGE {
        -128.0 * x
    } else if s < SUPPORT {
        128.0 * (3.0 * s - 1.0) * (16.0 * s - 3.0) * x.signum()
    } else {
        0.0
    }
}

/// Second derivative of `ζ`, which jumps at `|x| = 1/3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SecondDerivative {
    Value(f64),
    /// One-sided limits from the inside (`|x| < 1/3`) and the outside.
    OneSided {
        inner: f64,
        outer: f64,
    },
}

impl SecondDerivative {
    /// The value, or the inner one-sided limit at the kink.
    pub fn inner_value(self) -> f64 {
        match self {
            SecondDerivative::Value(v) => v,
            SecondDerivative::OneSided { inner, .. } => inner,
        }
    }
}

pub fn zeta_second(x: f64) -> SecondDerivative {
    let s = x.abs();
    if s <= QUADRATIC_EDGE {
        SecondDerivative::Value(-128.0)
    } else if s < SUPPORT {
        SecondDerivative::Value(128.0 * (96.0 * s - 25.0))
    } else if s == SUPPORT {
        SecondDerivative::OneSided {
            inner: 128.0 * (96.0 * s - 25.0),
            outer: 0.0,
        }
    } else {
        SecondDerivative::Value(0.0)
    }
}

pub fn zeta_second_at_zero() -> f64 {
    -128.0
}

/// `−4/ζ''(0)`: for `λ` above this the anti-integrable equilibria are not minimal.
pub fn min_lambda_nonminimal() -> f64 {
    -4.0 / zeta_second_at_zero()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub lambda: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec { lambda: 1.0 }
    }
}

impl PotentialSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(FkError::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(PotentialSpec { lambda })
    }

    pub fn v(&self, x: impl Into<Abscissa>) -> f64 {
        self.lambda * zeta(signed_offset(x))
    }

    pub fn v_prime(&self, x: impl Into<Abscissa>) -> f64 {
        self.lambda * zeta_prime(signed_offset(x))
    }

    pub fn v_second(&self, x: impl Into<Abscissa>) -> SecondDerivative {
        match zeta_second(signed_offset(x)) {
            SecondDerivative::Value(v) => SecondDerivative::Value(self.lambda * v),
            SecondDerivative::OneSided { inner, outer } => SecondDerivative::OneSided {
                inner: self.lambda * inner,
                outer: self.lambda * outer,
            },
        }
    }
}

/// The chain point selecting the branch of `V` at `x`: `α(x)` when
/// `2x ≤ α(x) + β(x)`, else `β(x)`.
pub fn selected_point(x: impl Into<Abscissa>) -> GoldenNumber {
    let x = x.into();
    let (a, b) = alpha_beta(x);
    if x.doubled().cmp_golden(a + b) == Ordering::Greater {
        b
    } else {
        a
    }
}

/// `x` minus the selected chain point.
pub fn signed_offset(x: impl Into<Abscissa>) -> f64 {
    let x = x.into();
    x.offset_from(selected_point(x))
}

pub fn v(x: impl Into<Abscissa>, spec: &PotentialSpec) -> f64 {
    spec.v(x)
}

pub fn v_prime(x: impl Into<Abscissa>, spec: &PotentialSpec) -> f64 {
    spec.v_prime(x)
}

/// Whether `V(x) = V(y)` holds whenever the radius-1 patches at `x` and `y`
/// agree. Pairs with different patches satisfy the implication vacuously.
pub fn check_equivariance(x: impl Into<Abscissa>, y: impl Into<Abscissa>) -> bool {
    let (x, y) = (x.into(), y.into());
    let (Ok(px), Ok(py)) = (local_patch(x, 1.0), local_patch(y, 1.0)) else {
        return false;
    };
    if !px.matches(&py, 1e-12) {
        return true;
    }
    let spec = PotentialSpec::default();
    let (vx, vy) = (spec.v(x), spec.v(y));
    match (&px.offsets, &py.offsets) {
        (PatchOffsets::Exact(_), PatchOffsets::Exact(_)) => vx == vy,
        _ => vx == vy || (vx - vy).abs() <= 1e-9,
    }
}

/// Patch search: the first `y = S_k + (x − α(x))`, over the given chain
/// indices `k`, whose radius-1 patch equals that of `x` exactly (`y ≠ x`).
pub fn matched_partner(x: GoldenNumber, candidates: impl IntoIterator<Item = i64>) -> Result<Option<GoldenNumber>> {
    let (a, _) = alpha_beta(x);
    let d = x - a;
    let px = local_patch(x, 1.0)?;
    for k in candidates {
        let y = point(k)? + d;
        if y != x && local_patch(y, 1.0)?.matches(&px, 0.0) {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::TAU;

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(0.0), 160.0 / 27.0);
        assert_eq!(zeta(1.0 / 3.0), 0.0);
        let quad: f64 = -64.0 / 16.0 + 160.0 / 27.0;
        let flank: f64 = 64.0 / 27.0 * (0.75f64 - 1.0).powi(2) * (24.0 - 11.0);
        assert!((quad - 52.0 / 27.0).abs() < 1e-14);
        assert!((flank - 52.0 / 27.0).abs() < 1e-14);
        assert!((zeta(0.25) - 52.0 / 27.0).abs() < 1e-14);
        assert!((zeta(0.25 + 1e-15) - 52.0 / 27.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_is_c1() {
        let h = 1e-6;
        for &p in &[0.25, 1.0 / 3.0, -0.25, -1.0 / 3.0] {
            let left = (zeta(p) - zeta(p - h)) / h;
            let right = (zeta(p + h) - zeta(p)) / h;
            assert!((left - right).abs() < 1e-3, "p={p}");
            assert!((zeta_prime(p - 1e-12) - zeta_prime(p + 1e-12)).abs() < 1e-6);
        }
        assert_eq!(zeta_second(0.25).inner_value(), -128.0);
        assert!((zeta_second(0.25 + 1e-13).inner_value() + 128.0).abs() < 1e-6);
        assert_eq!(
            zeta_second(1.0 / 3.0),
            SecondDerivative::OneSided {
                inner: 896.0,
                outer: 0.0
            }
        );
    }

    #[test]
    fn constants() {
        assert_eq!(zeta_second_at_zero(), -128.0);
        assert_eq!(min_lambda_nonminimal(), 1.0 / 32.0);
        assert!(1.0 > min_lambda_nonminimal());
    }

    #[test]
    fn v_examples() {
        let spec = PotentialSpec::default();
        assert_eq!(spec.v(0.0), 160.0 / 27.0);
        assert_eq!(spec.v(TAU / 2.0), 0.0);
        let x = TAU * TAU + 0.1;
        assert!((spec.v(x) - 5.285_926).abs() < 1e-6);
        let s3 = PotentialSpec::new(3.0).unwrap();
        for k in 0..200 {
            let x = -20.0 + 0.37 * k as f64;
            assert_eq!(s3.v(x), 3.0 * spec.v(x));
        }
        assert!(PotentialSpec::new(0.0).is_err());
    }

    #[test]
    fn v_prime_matches_differences() {
        let spec = PotentialSpec::default();
        let h = 1e-7;
        for k in 0..4000 {
            let x = -30.0 + 0.0151 * k as f64;
            let off = signed_offset(x).abs();
            let (a, b) = alpha_beta(x);
            let tie = (2.0 * x - (a + b).to_f64()).abs();
            if (off - 0.25).abs() < 1e-4 || (off - SUPPORT).abs() < 1e-4 || tie < 1e-4 {
                continue;
            }
            let fd = (spec.v(x + h) - spec.v(x - h)) / (2.0 * h);
            assert!((fd - spec.v_prime(x)).abs() < 1e-5, "x={x} fd={fd}");
        }
    }

    #[test]
    fn equivariance_examples() {
        assert!(check_equivariance(0.3, 0.3));
        let t3 = GoldenNumber::tau_pow(3);
        assert!(check_equivariance(GoldenNumber::ZERO, t3));
        assert_eq!(v(0.0, &PotentialSpec::default()), v(t3, &PotentialSpec::default()));
        let d = Abscissa::from_f64(0.137);
        let x = d.translate(point(5).unwrap());
        let y = d.translate(point(5).unwrap() + t3 * 10);
        assert!(check_equivariance(x, y));
        let x = GoldenNumber::new(3, -1);
        let y = matched_partner(x, 10..200).unwrap().unwrap();
        assert_eq!(local_patch(x, 1.0).unwrap(), local_patch(y, 1.0).unwrap());
        assert_eq!(PotentialSpec::default().v(x), PotentialSpec::default().v(y));
    }
}
