//! Exact arithmetic in the golden integers ℤ[τ] and the golden field ℚ(τ).
//!
//! Every coordinate of the Fibonacci chain is an element `a + b·τ` with
//! integer `a`, `b`, so all chain geometry (points, gaps, super-points,
//! circumferences) is carried exactly. Floats enter only as probe positions,
//! and [`Abscissa`] compares those against golden integers without rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// τ = (1 + √5) / 2 as the nearest `f64`.
pub const TAU: f64 = 1.618_033_988_749_895;

/// √5 as the nearest `f64`.
pub const SQRT5: f64 = 2.236_067_977_499_79;

/// An element `a + b·τ` of ℤ[τ], with τ² = τ + 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct GoldenNumber {
    pub a: i64,
    pub b: i64,
}

impl GoldenNumber {
    pub const ZERO: GoldenNumber = GoldenNumber { a: 0, b: 0 };
    pub const ONE: GoldenNumber = GoldenNumber { a: 1, b: 0 };
    pub const TAU: GoldenNumber = GoldenNumber { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        GoldenNumber { a, b }
    }

    pub const fn integer(a: i64) -> Self {
        GoldenNumber { a, b: 0 }
    }

    /// τⁿ for any integer `n`. τ is a unit of ℤ[τ], so negative powers stay
    /// in the ring: τ⁻¹ = τ − 1.
    pub fn tau_pow(n: i32) -> Self {
        // τⁿ = F(n−1) + F(n)·τ with the standard Fibonacci numbers, extended to
        // negative indices by F(−k) = (−1)^(k+1) F(k).
        GoldenNumber::new(signed_fib(n as i64 - 1), signed_fib(n as i64))
    }

    pub fn to_f64(self) -> f64 {
        if self.a == 0 || self.b == 0 || (self.a < 0) == (self.b < 0) {
            return self.a as f64 + self.b as f64 * TAU;
        }
        // cancelling terms: divide the norm by the (large) conjugate instead
        let (a, b) = (self.a as i128, self.b as i128);
        let norm = a * a + a * b - b * b;
        let conj = (a + b) as f64 - b as f64 * TAU;
        norm as f64 / conj
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Exact sign of `a + b·τ`.
    pub fn signum(self) -> i32 {
        sign_quadratic_i128(self.a as i128, self.b as i128)
    }

    /// Galois conjugate `a + b·(1 − τ)`.
    pub fn conjugate(self) -> Self {
        GoldenNumber::new(self.a + self.b, -self.b)
    }

    /// Field norm `(a + bτ)(a + b − bτ) = a² + ab − b²`.
    pub fn norm(self) -> i64 {
        self.a * self.a + self.a * self.b - self.b * self.b
    }

    /// Multiplicative inverse when the element is a unit (norm ±1).
    pub fn unit_inverse(self) -> Option<Self> {
        match self.norm() {
            1 => Some(self.conjugate()),
            -1 => Some(-self.conjugate()),
            _ => None,
        }
    }

    pub fn abs(self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self
        }
    }

    /// Sum of coefficients. For a point `S_i` of the Fibonacci chain this is
    /// the chain index `i`.
    pub fn coefficient_sum(self) -> i64 {
        self.a + self.b
    }
}

fn signed_fib(n: i64) -> i64 {
    let k = n.unsigned_abs();
    let (mut f0, mut f1) = (0i64, 1i64);
    for _ in 0..k {
        let next = f0 + f1;
        f0 = f1;
        f1 = next;
    }
    if n < 0 && k.is_multiple_of(2) {
        -f0
    } else {
        f0
    }
}

/// Sign of `p + q·τ` for integers, decided via `(2p + q) + q·√5`.
fn sign_quadratic_i128(p: i128, q: i128) -> i32 {
    let s = 2 * p + q;
    let t = q;
    match (s.signum(), t.signum()) {
        (0, 0) => 0,
        (ss, ts) if ss >= 0 && ts >= 0 => 1,
        (ss, ts) if ss <= 0 && ts <= 0 => -1,
        (ss, _) => {
            let lhs = s * s;
            let rhs = 5 * t * t;
            let c = if ss > 0 { lhs.cmp(&rhs) } else { rhs.cmp(&lhs) };
            match c {
                Ordering::Greater => 1,
                Ordering::Less => -1,
                // s² = 5t² has no nonzero integer solutions
                Ordering::Equal => 0,
            }
        }
    }
}

fn sign_quadratic_big(p: &BigInt, q: &BigInt) -> i32 {
    let two = BigInt::from(2);
    let s = &two * p + q;
    let t = q.clone();
    let ss = bigsign(&s);
    let ts = bigsign(&t);
    if ss == 0 && ts == 0 {
        return 0;
    }
    if ss >= 0 && ts >= 0 {
        return 1;
    }
    if ss <= 0 && ts <= 0 {
        return -1;
    }
    let lhs = &s * &s;
    let rhs = BigInt::from(5) * &t * &t;
    let c = if ss > 0 { lhs.cmp(&rhs) } else { rhs.cmp(&lhs) };
    match c {
        Ordering::Greater => 1,
        Ordering::Less => -1,
        Ordering::Equal => 0,
    }
}

fn bigsign(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Splits a finite float into `m · 2^e` with integer `m`.
fn decompose_f64(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    let fraction = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1i64 << 52), exponent - 1075)
    };
    (if negative { -m } else { m }, e)
}

/// Exact comparison of a finite float with a golden integer.
pub fn cmp_f64_golden(x: f64, g: GoldenNumber) -> Ordering {
    assert!(x.is_finite(), "cannot compare non-finite {x} against the chain");
    let approx = g.to_f64();
    let d = x - approx;
    let scale = g.a.unsigned_abs() as f64 + g.b.unsigned_abs() as f64 * TAU + x.abs();
    let guard = 8.0 * f64::EPSILON * scale + f64::MIN_POSITIVE;
    if d > guard {
        return Ordering::Greater;
    }
    if d < -guard {
        return Ordering::Less;
    }
    // Inside the guard band: decide with big integers.
    let (m, e) = decompose_f64(x);
    let (p, q) = if e >= 0 {
        let big_x = BigInt::from(m) << (e as usize);
        (big_x - BigInt::from(g.a), -BigInt::from(g.b))
    } else {
        let k = (-e) as usize;
        (BigInt::from(m) - (BigInt::from(g.a) << k), -(BigInt::from(g.b) << k))
    };
    sign_quadratic_big(&p, &q).cmp(&0)
}

impl Ord for GoldenNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        sign_quadratic_i128(self.a as i128 - other.a as i128, self.b as i128 - other.b as i128).cmp(&0)
    }
}

impl PartialOrd for GoldenNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for GoldenNumber {
    type Output = GoldenNumber;
    fn add(self, rhs: Self) -> Self {
        GoldenNumber::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl AddAssign for GoldenNumber {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for GoldenNumber {
    type Output = GoldenNumber;
    fn sub(self, rhs: Self) -> Self {
        GoldenNumber::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl SubAssign for GoldenNumber {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Neg for GoldenNumber {
    type Output = GoldenNumber;
    fn neg(self) -> Self {
        GoldenNumber::new(-self.a, -self.b)
    }
}

impl Mul for GoldenNumber {
    type Output = GoldenNumber;
    fn mul(self, rhs: Self) -> Self {
        // (a + bτ)(c + dτ) = ac + bd + (ad + bc + bd)τ
        let bd = self.b * rhs.b;
        GoldenNumber::new(self.a * rhs.a + bd, self.a * rhs.b + self.b * rhs.a + bd)
    }
}

impl Mul<i64> for GoldenNumber {
    type Output = GoldenNumber;
    fn mul(self, k: i64) -> Self {
        GoldenNumber::new(self.a * k, self.b * k)
    }
}

impl fmt::Display for GoldenNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, b) => write!(f, "{b}τ"),
            (a, b) if b < 0 => write!(f, "{a}-{}τ", -b),
            (a, b) => write!(f, "{a}+{b}τ"),
        }
    }
}

impl Serialize for GoldenNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("GoldenNumber", 3)?;
        s.serialize_field("a", &self.a)?;
        s.serialize_field("b", &self.b)?;
        s.serialize_field("approx", &self.to_f64())?;
        s.end()
    }
}

/// An element `a + b·τ` of ℚ(τ) with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenRational {
    pub a: Ratio<i128>,
    pub b: Ratio<i128>,
}

impl GoldenRational {
    pub fn new(a: Ratio<i128>, b: Ratio<i128>) -> Self {
        GoldenRational { a, b }
    }

    pub fn zero() -> Self {
        Self::from(GoldenNumber::ZERO)
    }

    pub fn one() -> Self {
        GoldenRational::new(Ratio::one(), Ratio::zero())
    }

    /// √5 = 2τ − 1.
    pub fn sqrt5() -> Self {
        Self::from(GoldenNumber::new(-1, 2))
    }

    pub fn to_f64(&self) -> f64 {
        let ratio = |r: Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
        if self.a.is_zero() || self.b.is_zero() || (self.a < Ratio::zero()) == (self.b < Ratio::zero()) {
            return ratio(self.a) + ratio(self.b) * TAU;
        }
        let c = self.conjugate();
        ratio(self.norm()) / (ratio(c.a) + ratio(c.b) * TAU)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    fn conjugate(&self) -> Self {
        GoldenRational::new(self.a + self.b, -self.b)
    }

    fn norm(&self) -> Ratio<i128> {
        self.a * self.a + self.a * self.b - self.b * self.b
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conjugate();
        Some(GoldenRational::new(c.a / n, c.b / n))
    }

    pub fn scale(&self, k: Ratio<i128>) -> Self {
        GoldenRational::new(self.a * k, self.b * k)
    }
}

impl From<GoldenNumber> for GoldenRational {
    fn from(g: GoldenNumber) -> Self {
        GoldenRational::new(Ratio::from_integer(g.a as i128), Ratio::from_integer(g.b as i128))
    }
}

impl Add for GoldenRational {
    type Output = GoldenRational;
    fn add(self, rhs: Self) -> Self {
        GoldenRational::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for GoldenRational {
    type Output = GoldenRational;
    fn sub(self, rhs: Self) -> Self {
        GoldenRational::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Mul for GoldenRational {
    type Output = GoldenRational;
    fn mul(self, rhs: Self) -> Self {
        let bd = self.b * rhs.b;
        GoldenRational::new(self.a * rhs.a + bd, self.a * rhs.b + self.b * rhs.a + bd)
    }
}

impl fmt::Display for GoldenRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})τ", self.a, self.b)
    }
}

impl Serialize for GoldenRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("GoldenRational", 3)?;
        s.serialize_field("a", &self.a.to_string())?;
        s.serialize_field("b", &self.b.to_string())?;
        s.serialize_field("approx", &self.to_f64())?;
        s.end()
    }
}

/// A real abscissa `coef·x + shift` with `x` a float, `coef` a unit ±τᵏ of
/// ℤ[τ] and `shift` a golden integer.
///
/// Translating by chain points, reflecting and rescaling by powers of τ keep
/// the representation exact, so the greedy decomposition and the
/// super-point searches never accumulate rounding. A pure golden integer is
/// the case `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abscissa {
    x: f64,
    coef: GoldenNumber,
    shift: GoldenNumber,
}

impl Abscissa {
    pub fn from_f64(x: f64) -> Self {
        Abscissa {
            x,
            coef: GoldenNumber::ONE,
            shift: GoldenNumber::ZERO,
        }
    }

    pub fn from_golden(g: GoldenNumber) -> Self {
        Abscissa {
            x: 0.0,
            coef: GoldenNumber::ONE,
            shift: g,
        }
    }

    /// The exact golden value when the float part vanishes.
    pub fn as_golden(&self) -> Option<GoldenNumber> {
        (self.x == 0.0).then_some(self.shift)
    }

    pub fn to_f64(&self) -> f64 {
        self.coef.to_f64() * self.x + self.shift.to_f64()
    }

    /// Exact three-way comparison against a golden integer.
    pub fn cmp_golden(&self, g: GoldenNumber) -> Ordering {
        let k = g - self.shift;
        if self.x == 0.0 {
            return GoldenNumber::ZERO.cmp(&k);
        }
        let inv = self.coef.unit_inverse().expect("coefficient is a unit");
        if self.coef.signum() > 0 {
            cmp_f64_golden(self.x, k * inv)
        } else {
            cmp_f64_golden(self.x, k * inv).reverse()
        }
    }

    /// `self − g` as a float; exact in the golden part before rounding.
    pub fn offset_from(&self, g: GoldenNumber) -> f64 {
        if self.x == 0.0 {
            return (self.shift - g).to_f64();
        }
        self.coef.to_f64() * self.x + (self.shift - g).to_f64()
    }

    pub fn translate(&self, g: GoldenNumber) -> Self {
        Abscissa {
            shift: self.shift + g,
            ..*self
        }
    }

    pub fn negate(&self) -> Self {
        Abscissa {
            x: self.x,
            coef: -self.coef,
            shift: -self.shift,
        }
    }

    /// Multiplies by τᵏ.
    pub fn scale_tau(&self, k: i32) -> Self {
        let u = GoldenNumber::tau_pow(k);
        Abscissa {
            x: self.x,
            coef: self.coef * u,
            shift: self.shift * u,
        }
    }

    /// Twice the abscissa; doubling a float is exact.
    pub fn doubled(&self) -> Self {
        Abscissa {
            x: self.x * 2.0,
            coef: self.coef,
            shift: self.shift * 2,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.cmp_golden(GoldenNumber::ZERO) == Ordering::Less
    }

    /// Exact equality for abscissae sharing a float source, or when one of
    /// them is a golden integer; otherwise compares the float values.
    pub fn same_point(&self, other: &Abscissa) -> bool {
        if self.x == other.x && self.coef == other.coef {
            return self.shift == other.shift;
        }
        if let Some(g) = other.as_golden() {
            return self.cmp_golden(g) == Ordering::Equal;
        }
        if let Some(g) = self.as_golden() {
            return other.cmp_golden(g) == Ordering::Equal;
        }
        self.to_f64() == other.to_f64()
    }
}

impl From<f64> for Abscissa {
    fn from(x: f64) -> Self {
        Abscissa::from_f64(x)
    }
}

impl From<GoldenNumber> for Abscissa {
    fn from(g: GoldenNumber) -> Self {
        Abscissa::from_golden(g)
    }
}

impl Serialize for Abscissa {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}
