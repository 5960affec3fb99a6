//! Exact geometry of the Fibonacci chain `S`.
//!
//! `S_0 = 0` and `S_{i+1} = S_i + |w_i|` with `|a| = τ`, `|b| = 1`. Every
//! point is an element of ℤ[τ]; the nearest points below/above an abscissa
//! (`α`, `β`) come from the greedy decomposition of `x` into powers of τ, and
//! the level-`l` super-point sets `S^l` from word matching on `w`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{FkError, Result};
use crate::fibword::{fibonacci, prefix_counts, two_sided_letter, Letter};
use crate::golden::{Abscissa, GoldenNumber, TAU};

/// Chain indices beyond this magnitude are rejected.
pub const MAX_CHAIN_INDEX: i64 = 1_000_000_000_000;

/// Largest super-point level supported (coordinates stay well inside i64).
pub const MAX_SUPER_LEVEL: u32 = 30;

fn check_index(i: i64) -> Result<()> {
    if i.abs() > MAX_CHAIN_INDEX {
        return Err(FkError::WindowExceeded(format!(
            "chain index {i} beyond cap {MAX_CHAIN_INDEX}"
        )));
    }
    Ok(())
}

/// `S_i` exactly. For `i ≥ 0` this is `#a·τ + #b` over `w_0 … w_{i−1}`; the
/// left half mirrors through `S_{−2−k} = −τ² − S_k`.
pub fn point(i: i64) -> Result<GoldenNumber> {
    check_index(i)?;
    Ok(point_unchecked(i))
}

fn point_unchecked(i: i64) -> GoldenNumber {
    match i {
        i if i >= 0 => {
            let (na, nb) = prefix_counts(i as u64);
            GoldenNumber::new(nb as i64, na as i64)
        }
        -1 => -GoldenNumber::TAU,
        -2 => -GoldenNumber::tau_pow(2),
        i => -GoldenNumber::tau_pow(2) - point_unchecked(-i - 2),
    }
}

/// Chain index of a point of `S` (the coefficient sum of `a + bτ`).
pub fn index_of(p: GoldenNumber) -> i64 {
    p.coefficient_sum()
}

pub fn is_chain_point(g: GoldenNumber) -> bool {
    alpha(g) == g
}

/// Greedy exponents `n_1 > n_2 > … > n_r ≥ 1` with
/// `0 ≤ x − τ^{n_1} − … − τ^{n_r} < τ`, for `x ≥ 0`.
pub fn greedy_decomposition(x: impl Into<Abscissa>) -> Result<Vec<i32>> {
    let x = x.into();
    if x.is_negative() {
        return Err(FkError::invalid("greedy decomposition needs x ≥ 0"));
    }
    Ok(greedy(&x))
}

fn greedy(x: &Abscissa) -> Vec<i32> {
    let mut exponents = Vec::new();
    let mut rem = *x;
    while rem.cmp_golden(GoldenNumber::TAU) != Ordering::Less {
        // start from floor(log_τ rem) and settle it with exact comparisons
        let approx = rem.to_f64().max(TAU);
        let mut n = ((approx.ln() / TAU.ln()).floor() as i32).max(1);
        while rem.cmp_golden(GoldenNumber::tau_pow(n + 1)) != Ordering::Less {
            n += 1;
        }
        while n > 1 && rem.cmp_golden(GoldenNumber::tau_pow(n)) == Ordering::Less {
            n -= 1;
        }
        exponents.push(n);
        rem = rem.translate(-GoldenNumber::tau_pow(n));
    }
    exponents
}

/// `(α(x), β(x))` for `x ≥ 0`.
fn alpha_beta_nonnegative(x: &Abscissa) -> (GoldenNumber, GoldenNumber) {
    let exponents = greedy(x);
    let alpha = exponents
        .iter()
        .fold(GoldenNumber::ZERO, |acc, &n| acc + GoldenNumber::tau_pow(n));
    let step = match exponents.last() {
        Some(1) => GoldenNumber::ONE,
        _ => GoldenNumber::TAU,
    };
    (alpha, alpha + step)
}

/// `(α(x), β(x))`: the largest chain point `≤ x` and the smallest `> x`.
pub fn alpha_beta(x: impl Into<Abscissa>) -> (GoldenNumber, GoldenNumber) {
    let x = x.into();
    if !x.is_negative() {
        return alpha_beta_nonnegative(&x);
    }
    let tau = GoldenNumber::TAU;
    let tau2 = GoldenNumber::tau_pow(2);
    if x.cmp_golden(-tau2) != Ordering::Less {
        // S ∩ [−τ², 0] = {−τ², −τ, 0}
        return if x.cmp_golden(-tau) == Ordering::Less {
            (-tau2, -tau)
        } else {
            (-tau, GoldenNumber::ZERO)
        };
    }
    // S ∩ (−∞, −τ²] = −τ² − (S ∩ [0, ∞)); reflect through y = −x − τ².
    let y = x.negate().translate(-tau2);
    let (a, b) = alpha_beta_nonnegative(&y);
    if y.cmp_golden(a) == Ordering::Equal {
        // x itself is a chain point; β(x) comes from the predecessor of y,
        // which is α(y − 1) because consecutive gaps are at least 1.
        let (pred, _) = alpha_beta_nonnegative(&y.translate(-GoldenNumber::ONE));
        (-tau2 - a, -tau2 - pred)
    } else {
        (-tau2 - b, -tau2 - a)
    }
}

/// `(α(x), β(x))` for `x = g2/2`, decided exactly through `2α ≤ g2 < 2β`.
pub fn alpha_beta_half(g2: GoldenNumber) -> Result<(GoldenNumber, GoldenNumber)> {
    let (mut a, mut b) = alpha_beta(g2.to_f64() / 2.0);
    while a * 2 > g2 {
        b = a;
        a = point(index_of(a) - 1)?;
    }
    while b * 2 <= g2 {
        a = b;
        b = point(index_of(b) + 1)?;
    }
    Ok((a, b))
}

pub fn alpha(x: impl Into<Abscissa>) -> GoldenNumber {
    alpha_beta(x).0
}

pub fn beta(x: impl Into<Abscissa>) -> GoldenNumber {
    alpha_beta(x).1
}

/// `β(x) − α(x) ∈ {1, τ}`.
pub fn gap(x: impl Into<Abscissa>) -> GoldenNumber {
    let (a, b) = alpha_beta(x);
    b - a
}

/// Nearest chain point with ties resolved towards `α` (`2x ≤ α + β`).
pub fn nearest(x: impl Into<Abscissa>) -> GoldenNumber {
    let x = x.into();
    let (a, b) = alpha_beta(x);
    if x.doubled().cmp_golden(a + b) == Ordering::Greater {
        b
    } else {
        a
    }
}

/// Chain points `S_from … S_to` by summing letter lengths; independent of
/// [`point`] and used as a brute-force reference.
pub fn enumerate_points(from: i64, to: i64) -> Result<Vec<GoldenNumber>> {
    check_index(from)?;
    check_index(to)?;
    if to < from {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity((to - from + 1) as usize);
    // walk from S_0 outwards, then keep the requested slice
    let lo = from.min(0);
    let hi = to.max(0);
    let mut left = vec![GoldenNumber::ZERO];
    let mut acc = GoldenNumber::ZERO;
    for i in (lo..0).rev() {
        acc -= two_sided_letter(i).length();
        left.push(acc);
    }
    left.reverse();
    let mut all = left;
    acc = GoldenNumber::ZERO;
    for i in 0..hi {
        acc += two_sided_letter(i).length();
        all.push(acc);
    }
    for i in from..=to {
        out.push(all[(i - lo) as usize]);
    }
    Ok(out)
}

/// α/β by scanning a sorted run of chain points. `None` unless the run
/// brackets `x` strictly.
pub fn alpha_beta_scan(points: &[GoldenNumber], x: GoldenNumber) -> Option<(GoldenNumber, GoldenNumber)> {
    let k = points.partition_point(|&p| p <= x);
    (k > 0 && k < points.len()).then(|| (points[k - 1], points[k]))
}

/// A patch `(S − x) ∩ B_R(0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Patch {
    pub radius: f64,
    pub offsets: PatchOffsets,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PatchOffsets {
    /// Exact offsets, available when the center is a golden integer.
    Exact(Vec<GoldenNumber>),
    Approx(Vec<f64>),
}

impl Patch {
    pub fn len(&self) -> usize {
        match &self.offsets {
            PatchOffsets::Exact(v) => v.len(),
            PatchOffsets::Approx(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn approx_offsets(&self) -> Vec<f64> {
        match &self.offsets {
            PatchOffsets::Exact(v) => v.iter().map(|g| g.to_f64()).collect(),
            PatchOffsets::Approx(v) => v.clone(),
        }
    }

    /// Equality up to translation; exact for exact patches, else within `tol`.
    pub fn matches(&self, other: &Patch, tol: f64) -> bool {
        match (&self.offsets, &other.offsets) {
            (PatchOffsets::Exact(a), PatchOffsets::Exact(b)) => a == b,
            _ => {
                let a = self.approx_offsets();
                let b = other.approx_offsets();
                a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
            }
        }
    }
}

/// `(S − x) ∩ B_R(0)`, the open ball of radius `radius`.
pub fn local_patch(x: impl Into<Abscissa>, radius: f64) -> Result<Patch> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(FkError::invalid("patch radius must be positive"));
    }
    let x = x.into();
    let (a, _) = alpha_beta(x);
    let k0 = index_of(a);
    let within = |p: GoldenNumber| x.offset_from(p).abs() < radius;
    let mut lo = k0;
    while within(point(lo - 1)?) {
        lo -= 1;
    }
    let mut hi = k0;
    while within(point(hi + 1)?) {
        hi += 1;
    }
    let pts: Vec<GoldenNumber> = (lo..=hi)
        .map(point)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&p| within(p))
        .collect();
    let offsets = match x.as_golden() {
        Some(g) => PatchOffsets::Exact(pts.iter().map(|&p| p - g).collect()),
        None => PatchOffsets::Approx(pts.iter().map(|&p| -x.offset_from(p)).collect()),
    };
    Ok(Patch { radius, offsets })
}

/// Type of a level-`l` super-interval: `A` has length τ^{2l+1}, `B` τ^{2l+2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum IntervalType {
    A,
    B,
}

impl IntervalType {
    pub fn length(self, l: u32) -> GoldenNumber {
        match self {
            IntervalType::A => GoldenNumber::tau_pow(2 * l as i32 + 1),
            IntervalType::B => GoldenNumber::tau_pow(2 * l as i32 + 2),
        }
    }

    /// Circle number on the branched manifold (1 for `A`, 2 for `B`).
    pub fn circle(self) -> usize {
        match self {
            IntervalType::A => 1,
            IntervalType::B => 2,
        }
    }
}

/// `S_k ∈ S¹` iff the letters around index `k` read `ba|ab`, the word of
/// `c₁ = S ∩ [−τ², τ²]`.
pub fn is_level1_super_index(k: i64) -> bool {
    two_sided_letter(k - 2) == Letter::B
        && two_sided_letter(k - 1) == Letter::A
        && two_sided_letter(k) == Letter::A
        && two_sided_letter(k + 1) == Letter::B
}

fn check_level(l: u32) -> Result<()> {
    if l < 1 {
        return Err(FkError::invalid("super-point level must be at least 1"));
    }
    if l > MAX_SUPER_LEVEL {
        return Err(FkError::WindowExceeded(format!(
            "super-point level {l} exceeds {MAX_SUPER_LEVEL}"
        )));
    }
    Ok(())
}

/// `(α_l(x), β_l(x))`: neighbouring points of `S^l` with `α_l ≤ x < β_l`.
///
/// `ρ²` fixes `w` and rescales lengths by τ², so `S^{l+1} = τ²·S^l`; the
/// search runs on `S¹` at `x·τ^{−2(l−1)}` and scales back.
pub fn super_alpha_beta(l: u32, x: impl Into<Abscissa>) -> Result<(GoldenNumber, GoldenNumber)> {
    check_level(l)?;
    let scale = 2 * (l as i32 - 1);
    let y = x.into().scale_tau(-scale);
    let (a, _) = alpha_beta(y);
    let mut k = index_of(a);
    check_index(k)?;
    while !is_level1_super_index(k) {
        k -= 1;
    }
    let mut m = k + 1;
    while !is_level1_super_index(m) {
        m += 1;
    }
    let up = GoldenNumber::tau_pow(scale);
    Ok((point(k)? * up, point(m)? * up))
}

pub fn super_alpha(l: u32, x: impl Into<Abscissa>) -> Result<GoldenNumber> {
    Ok(super_alpha_beta(l, x)?.0)
}

pub fn super_beta(l: u32, x: impl Into<Abscissa>) -> Result<GoldenNumber> {
    Ok(super_alpha_beta(l, x)?.1)
}

/// Type of the level-`l` super-interval containing `x`.
pub fn classify_interval(l: u32, x: impl Into<Abscissa>) -> Result<IntervalType> {
    let (a, b) = super_alpha_beta(l, x)?;
    interval_type_of_gap(l, b - a)
}

pub fn interval_type_of_gap(l: u32, gap: GoldenNumber) -> Result<IntervalType> {
    if gap == IntervalType::A.length(l) {
        Ok(IntervalType::A)
    } else if gap == IntervalType::B.length(l) {
        Ok(IntervalType::B)
    } else {
        Err(FkError::Precondition(format!(
            "gap {gap} is not a level-{l} super-interval length"
        )))
    }
}

/// A level-`l` super-interval `[start, start + length)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SuperInterval {
    pub start: GoldenNumber,
    pub kind: IntervalType,
}

impl SuperInterval {
    pub fn end(&self, l: u32) -> GoldenNumber {
        self.start + self.kind.length(l)
    }
}

/// Points of `S^l` in `[from, to]`, increasing.
pub fn super_points(l: u32, from: impl Into<Abscissa>, to: impl Into<Abscissa>) -> Result<Vec<GoldenNumber>> {
    let from = from.into();
    let to = to.into();
    let (mut cur, mut next) = super_alpha_beta(l, from)?;
    let mut out = Vec::new();
    if from.cmp_golden(cur) == Ordering::Equal {
        out.push(cur);
    }
    while to.cmp_golden(next) != Ordering::Less {
        out.push(next);
        cur = next;
        next = super_beta(l, cur)?;
    }
    let _ = cur;
    Ok(out)
}

/// Consecutive super-intervals covering `[from, to]`.
pub fn super_intervals(l: u32, from: impl Into<Abscissa>, to: impl Into<Abscissa>) -> Result<Vec<SuperInterval>> {
    let to = to.into();
    let (mut start, mut end) = super_alpha_beta(l, from)?;
    let mut out = Vec::new();
    loop {
        out.push(SuperInterval {
            start,
            kind: interval_type_of_gap(l, end - start)?,
        });
        if to.cmp_golden(end) == Ordering::Less {
            break;
        }
        start = end;
        end = super_beta(l, start)?;
    }
    Ok(out)
}

/// `f_{level−1} / f_level`, the letter-`a` density of `u⁽ˡᵉᵛᵉˡ⁾`.
pub fn letter_frequency_estimate(level: u32) -> Result<f64> {
    if level < 2 {
        return Err(FkError::invalid("letter frequency estimate needs level ≥ 2"));
    }
    Ok(fibonacci(level as i64 - 1)? as f64 / fibonacci(level as i64)? as f64)
}
