//! Equilibria near the anti-integrable limit.
//!
//! In the quadratic part of the bumps `V'(u) = −128λ(u − g)`, so the
//! equilibrium equation becomes the fixed-point problem
//! `u = Φ_λ(u) = g − (Δu)/(128λ)`. `Φ_λ` is a `1/(32λ)`-contraction on the
//! ball `|u_i − g(i)| ≤ (2τ + sup|Δh|)/(128λ − 4)`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::chain::alpha_beta_half;
use crate::error::{FkError, Result};
use crate::golden::{GoldenNumber, TAU};
use crate::model::{equilibrium_residual, AnchorFn, Configuration};
use crate::potential::{min_lambda_nonminimal, selected_point, zeta_second_at_zero, PotentialSpec, QUADRATIC_EDGE};

/// `g(i)`: the chain point nearest to `h(i)`, ties going to `α(h(i))`.
pub fn anchor_g(h: &AnchorFn, i: i64) -> Result<GoldenNumber> {
    if let Some(h2) = h.exact_double(i) {
        let (a, b) = alpha_beta_half(h2)?;
        return Ok(if h2.cmp(&(a + b)) == Ordering::Greater { b } else { a });
    }
    let x = h.value(i);
    if !x.is_finite() {
        return Err(FkError::invalid(format!("anchor undefined at {i}")));
    }
    Ok(selected_point(x))
}

/// `g(i)` for `i ∈ [i_min, i_max]`.
pub fn anchor_window(h: &AnchorFn, i_min: i64, i_max: i64) -> Result<Vec<GoldenNumber>> {
    (i_min..=i_max).map(|i| anchor_g(h, i)).collect()
}

/// `−1/(λζ''(0)) = 1/(128λ)`.
pub fn step_size(lambda: f64) -> f64 {
    -1.0 / (lambda * zeta_second_at_zero())
}

/// Radius `(2τ + D)/(−λζ''(0) − 4)` of the invariant ball, `D = sup|Δh|`.
pub fn ball_radius(lambda: f64, delta_sup: f64) -> f64 {
    (2.0 * TAU + delta_sup) / (-lambda * zeta_second_at_zero() - 4.0)
}

/// Lipschitz constant `4/(−λζ''(0)) = 1/(32λ)` of `Φ_λ` in the sup norm.
pub fn contraction_factor(lambda: f64) -> f64 {
    4.0 * step_size(lambda)
}

/// `max(1/32, (2τ + 1 + sup|Δh|)/32)` with the supremum over `[i_min, i_max]`.
pub fn lambda_threshold(h: &AnchorFn, i_min: i64, i_max: i64) -> Result<f64> {
    let d = h.delta_sup(i_min - 1, i_max + 1);
    lambda_threshold_for(d)
}

pub fn lambda_threshold_for(delta_sup: f64) -> Result<f64> {
    if !delta_sup.is_finite() {
        return Err(FkError::Precondition("sup |Δh| is not finite".into()));
    }
    Ok(min_lambda_nonminimal().max((2.0 * TAU + 1.0 + delta_sup) / 32.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AilParams {
    pub lambda: f64,
    pub anchor: AnchorFn,
    /// Solve on `i ∈ [−n, n]`.
    pub n: i64,
    pub tol: f64,
    pub max_iter: usize,
}

impl AilParams {
    pub fn new(anchor: AnchorFn, n: i64) -> Self {
        AilParams {
            lambda: 1.0,
            anchor,
            n,
            tol: 1e-12,
            max_iter: 200,
        }
    }

    fn validate(&self) -> Result<f64> {
        if self.n < 1 {
            return Err(FkError::invalid("window half-width n must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(FkError::invalid("tolerance must be positive"));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(FkError::invalid("lambda must be positive"));
        }
        if !self.anchor.covers(-self.n - 2, self.n + 2) {
            return Err(FkError::invalid(format!(
                "anchor table must cover [{}, {}]",
                -self.n - 2,
                self.n + 2
            )));
        }
        let d = self.anchor.delta_sup(-self.n - 1, self.n + 1);
        let threshold = lambda_threshold_for(d)?;
        if self.lambda <= threshold {
            return Err(FkError::Contraction(format!(
                "lambda {} is not above the contraction threshold {threshold}",
                self.lambda
            )));
        }
        Ok(d)
    }
}

/// `g` on `[−n−1, n+1]`: the window plus one ghost site on each side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnchorValues {
    pub n: i64,
    pub g: Vec<GoldenNumber>,
}

impl AnchorValues {
    pub fn new(h: &AnchorFn, n: i64) -> Result<Self> {
        Ok(AnchorValues {
            n,
            g: anchor_window(h, -n - 1, n + 1)?,
        })
    }

    pub fn at(&self, i: i64) -> GoldenNumber {
        self.g[(i + self.n + 1) as usize]
    }

    /// `g(i)` for `i ∈ [−n, n]` as floats.
    pub fn interior_f64(&self) -> Vec<f64> {
        self.g[1..self.g.len() - 1].iter().map(|p| p.to_f64()).collect()
    }

    /// `(Δg)_i` for `i ∈ [−n, n]`, exact before the final rounding.
    fn laplacian(&self) -> Vec<f64> {
        self.g.windows(3).map(|w| (w[0] - w[1] * 2 + w[2]).to_f64()).collect()
    }
}

/// One application of `u ↦ g − step·Δu` on `[−n, n]`, ghost sites pinned to `g`.
pub fn contraction_step(u: &Configuration, g: &AnchorValues, step: f64, radius: f64) -> Result<Configuration> {
    let n = g.n;
    if u.i_min != -n || u.i_max() != n {
        return Err(FkError::invalid("configuration window must be [−n, n]"));
    }
    for i in u.indices() {
        let dev = (u.at(i) - g.at(i).to_f64()).abs();
        if dev > radius * (1.0 + 1e-12) {
            return Err(FkError::Precondition(format!(
                "|u_{i} − g({i})| = {dev} lies outside the ball of radius {radius}"
            )));
        }
    }
    let get = |i: i64| u.get(i).unwrap_or_else(|| g.at(i).to_f64());
    let mut out = u.clone();
    for i in u.indices() {
        let lap = get(i - 1) - 2.0 * get(i) + get(i + 1);
        out.set(i, g.at(i).to_f64() - step * lap);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointSolution {
    pub config: Configuration,
    pub g: AnchorValues,
    pub iterations: usize,
    pub final_delta: f64,
    /// `sup|u_{k+1} − u_k|` for every iteration.
    pub deltas: Vec<f64>,
    /// Equilibrium residual of every iterate, starting from `u_0 = g`.
    pub residuals: Vec<f64>,
    pub radius: f64,
    pub contraction_factor: f64,
}

impl FixedPointSolution {
    /// Consecutive step ratios `δ_{k+1}/δ_k`.
    pub fn step_ratios(&self) -> Vec<f64> {
        self.deltas.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// `sup|u_i − g(i)|`.
    pub fn max_deviation(&self) -> f64 {
        self.config
            .indices()
            .map(|i| (self.config.at(i) - self.g.at(i).to_f64()).abs())
            .fold(0.0, f64::max)
    }

    /// `sup|u − Φ(u)|` at the returned configuration, evaluated directly.
    pub fn fixed_point_defect(&self) -> f64 {
        let step = step_size(self.config.meta.lambda.unwrap_or(1.0));
        let get = |i: i64| self.config.get(i).unwrap_or_else(|| self.g.at(i).to_f64());
        self.config
            .indices()
            .map(|i| {
                let lap = get(i - 1) - 2.0 * get(i) + get(i + 1);
                (get(i) - (self.g.at(i).to_f64() - step * lap)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Iterates `Φ_λ` from `u_0 = g` until `sup|u_{k+1} − u_k| ≤ tol`.
///
/// The iteration runs on the deviation `v = u − g`. `Φ_λ` is affine, so the
/// increment `w_k = u_{k+1} − u_k` obeys `w_{k+1} = −step·Δw_k` with zero
/// ghosts; it is propagated directly instead of being recovered as a
/// difference of nearly equal iterates.
pub fn solve_fixed_point(params: &AilParams) -> Result<FixedPointSolution> {
    let d = params.validate()?;
    let spec = PotentialSpec::new(params.lambda)?;
    let n = params.n;
    let g = AnchorValues::new(&params.anchor, n)?;
    let step = step_size(params.lambda);
    let radius = ball_radius(params.lambda, d);
    let g_f = g.interior_f64();
    let lap_g = g.laplacian();
    let m = g_f.len();

    let assemble = |v: &[f64]| -> Result<Configuration> {
        Ok(Configuration::new(-n, g_f.iter().zip(v).map(|(a, b)| a + b).collect())?
            .with_anchor(params.anchor.clone())
            .with_lambda(params.lambda))
    };

    let mut v = vec![0.0; m];
    // w_0 = Φ(g) − g = −step·Δg
    let mut w: Vec<f64> = lap_g.iter().map(|l| -step * l).collect();
    let mut deltas = Vec::new();
    let mut residuals = vec![equilibrium_residual(&assemble(&v)?, &spec)?];
    let mut scratch = vec![0.0; m];
    for it in 1..=params.max_iter {
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi += wi;
        }
        let delta = w.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        deltas.push(delta);
        let cfg = assemble(&v)?;
        residuals.push(equilibrium_residual(&cfg, &spec)?);
        if let Some(bad) = v.iter().position(|x| x.abs() > radius * (1.0 + 1e-9)) {
            return Err(FkError::Contraction(format!(
                "iterate left the invariant ball at site {}",
                bad as i64 - n
            )));
        }
        if delta <= params.tol {
            if v.iter().any(|x| x.abs() >= QUADRATIC_EDGE) {
                return Err(FkError::Contraction(
                    "fixed point outside the quadratic part of V".into(),
                ));
            }
            return Ok(FixedPointSolution {
                config: cfg,
                g,
                iterations: it,
                final_delta: delta,
                deltas,
                residuals,
                radius,
                contraction_factor: contraction_factor(params.lambda),
            });
        }
        for k in 0..m {
            let left = if k == 0 { 0.0 } else { w[k - 1] };
            let right = if k + 1 == m { 0.0 } else { w[k + 1] };
            scratch[k] = -step * (left - 2.0 * w[k] + right);
        }
        std::mem::swap(&mut w, &mut scratch);
    }
    Err(FkError::NotConverged {
        iterations: params.max_iter,
        last_delta: *deltas.last().unwrap_or(&f64::NAN),
    })
}

/// `2u_i − u_{i−1} − u_{i+1} + V'(u_i)` for every `i ∈ [−n, n]`, with the
/// ghost sites `±(n+1)` held at `g`.
pub fn ghost_residuals(u: &Configuration, g: &AnchorValues, spec: &PotentialSpec) -> Result<Vec<f64>> {
    let n = g.n;
    if u.i_min != -n || u.i_max() != n {
        return Err(FkError::invalid(
            "configuration window does not match the anchor values",
        ));
    }
    let get = |i: i64| u.get(i).unwrap_or_else(|| g.at(i).to_f64());
    Ok(u.indices()
        .map(|i| {
            let x = get(i);
            2.0 * x - get(i - 1) - get(i + 1) + spec.v_prime(x)
        })
        .collect())
}

/// Thomas algorithm for `sub[i]·u_{i−1} + diag[i]·u_i + sup[i]·u_{i+1} = rhs[i]`
/// (`sub[0]` and the last `sup` are ignored).
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    if sub.len() != m || sup.len() != m || rhs.len() != m {
        return Err(FkError::invalid("tridiagonal bands and rhs must have equal length"));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut pivot = diag[0];
    for i in 0..m {
        if i > 0 {
            pivot = diag[i] - sub[i] * c[i - 1];
        }
        if pivot.abs() < 1e-300 || !pivot.is_finite() {
            return Err(FkError::Precondition(format!("zero pivot at row {i}")));
        }
        c[i] = if i + 1 < m { sup[i] / pivot } else { 0.0 };
        d[i] = if i == 0 {
            rhs[0] / pivot
        } else {
            (rhs[i] - sub[i] * d[i - 1]) / pivot
        };
    }
    let mut u = d;
    for i in (0..m - 1).rev() {
        u[i] -= c[i] * u[i + 1];
    }
    Ok(u)
}

/// Solves `T_{2n+1} u = rhs` with `T` tridiagonal `(α, 1 − 2α, α)`.
pub fn tridiagonal_solve(n: usize, alpha: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(FkError::invalid(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    let m = 2 * n + 1;
    if rhs.len() != m {
        return Err(FkError::invalid(format!("rhs must have length {m}, got {}", rhs.len())));
    }
    thomas(&vec![alpha; m], &vec![1.0 - 2.0 * alpha; m], &vec![alpha; m], rhs)
}

/// Truncated solve of `α u_{i−1} + (1 − 2α) u_i + α u_{i+1} = g(i)` on
/// `[−n, n]`. With `ghost_shift` the boundary rows carry `−α·g(∓(n+1))`,
/// which is the same closure as [`solve_fixed_point`]; without it the
/// truncation couples to zero.
pub fn solve_tridiagonal(params: &AilParams, ghost_shift: bool) -> Result<Configuration> {
    params.validate()?;
    let n = params.n;
    let g = AnchorValues::new(&params.anchor, n)?;
    let alpha = step_size(params.lambda);
    let mut rhs = g.interior_f64();
    if ghost_shift {
        let last = rhs.len() - 1;
        rhs[0] -= alpha * g.at(-n - 1).to_f64();
        rhs[last] -= alpha * g.at(n + 1).to_f64();
    }
    let u = tridiagonal_solve(n as usize, alpha, &rhs)?;
    Ok(Configuration::new(-n, u)?
        .with_anchor(params.anchor.clone())
        .with_lambda(params.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::point;
    use crate::model::equilibrium_residual_trimmed;

    #[test]
    fn anchor_examples() {
        let h = AnchorFn::default_linear();
        assert_eq!(anchor_g(&h, 0).unwrap(), GoldenNumber::ZERO);
        assert_eq!(anchor_g(&h, 1).unwrap(), GoldenNumber::tau_pow(2));
        assert_eq!(anchor_g(&h, 2).unwrap(), GoldenNumber::new(1, 3));
        assert_eq!(anchor_g(&h, 2).unwrap(), point(4).unwrap());
        for i in -300..300 {
            let g = anchor_g(&h, i).unwrap();
            assert!((g.to_f64() - h.value(i)).abs() <= TAU / 2.0 + 1e-12);
            let s = anchor_g(&AnchorFn::SignedSquare, i).unwrap();
            assert!((s.to_f64() - AnchorFn::SignedSquare.value(i)).abs() <= TAU / 2.0 + 1e-9);
        }
    }

    #[test]
    fn thresholds() {
        let lin = lambda_threshold(&AnchorFn::default_linear(), -100, 100).unwrap();
        assert!((lin - (2.0 * TAU + 1.0) / 32.0).abs() < 1e-15);
        assert!((lin - 0.13238).abs() < 1e-5);
        let sq = lambda_threshold(&AnchorFn::SignedSquare, -100, 100).unwrap();
        assert!((sq - (2.0 * TAU + 3.0) / 32.0).abs() < 1e-15);
        assert!(lambda_threshold_for(f64::INFINITY).is_err());
        let mut last = 0.0;
        for k in 0..50 {
            let t = lambda_threshold_for(0.3 * k as f64).unwrap();
            assert!(t >= last && t >= 1.0 / 32.0);
            last = t;
        }
        assert!((ball_radius(1.0, 0.0) - TAU / 62.0).abs() < 1e-16);
        assert_eq!(contraction_factor(1.0), 1.0 / 32.0);
    }

    #[test]
    fn step_from_anchor() {
        let h = AnchorFn::default_linear();
        let g = AnchorValues::new(&h, 10).unwrap();
        let u = Configuration::new(-10, g.interior_f64()).unwrap();
        let out = contraction_step(&u, &g, 1.0 / 128.0, TAU / 62.0).unwrap();
        for i in -10..=10 {
            let lap = (g.at(i - 1) - g.at(i) * 2 + g.at(i + 1)).to_f64();
            assert!((out.at(i) - (g.at(i).to_f64() - lap / 128.0)).abs() < 1e-13);
        }
        let mut far = u.clone();
        far.set(0, 1.0);
        assert!(contraction_step(&far, &g, 1.0 / 128.0, TAU / 62.0).is_err());
    }

    #[test]
    fn fixed_point_linear() {
        let sol = solve_fixed_point(&AilParams::new(AnchorFn::default_linear(), 500)).unwrap();
        assert!(sol.iterations <= 12, "{}", sol.iterations);
        assert!(sol.final_delta <= 1e-12);
        for r in sol.step_ratios() {
            assert!(r <= 1.0 / 32.0 + 1e-9, "{r}");
        }
        assert!(sol.max_deviation() <= TAU / 62.0);
        let spec = PotentialSpec::default();
        assert!(equilibrium_residual_trimmed(&sol.config, &spec, 2).unwrap() <= 1e-9);
        assert!(sol.fixed_point_defect() <= 1e-12);
        for w in sol.residuals[1..].windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn fixed_point_signed_square() {
        let sol = solve_fixed_point(&AilParams::new(AnchorFn::SignedSquare, 60)).unwrap();
        let radius = ball_radius(1.0, 2.0);
        assert!(sol.max_deviation() <= radius);
        let spec = PotentialSpec::default();
        assert!(equilibrium_residual_trimmed(&sol.config, &spec, 2).unwrap() <= 1e-8);
    }

    #[test]
    fn rejects_small_lambda() {
        let mut p = AilParams::new(AnchorFn::default_linear(), 20);
        p.lambda = 0.01;
        assert!(matches!(solve_fixed_point(&p), Err(FkError::Contraction(_))));
    }

    #[test]
    fn tridiagonal_examples() {
        let a = 1.0 / 128.0;
        let u = tridiagonal_solve(0, a, &[3.0]).unwrap();
        assert!((u[0] - 3.0 / (1.0 - 2.0 * a)).abs() < 1e-15);
        let u = tridiagonal_solve(200, a, &vec![2.5; 401]).unwrap();
        for x in &u[20..381] {
            assert!((x - 2.5).abs() < 1e-10);
        }
        assert!(tridiagonal_solve(1, 0.5, &[1.0; 3]).is_err());
        assert!(tridiagonal_solve(1, a, &[1.0; 2]).is_err());
    }

    #[test]
    fn tridiagonal_matches_fixed_point() {
        let p = AilParams::new(AnchorFn::default_linear(), 300);
        let fp = solve_fixed_point(&p).unwrap();
        let g = AnchorValues::new(&p.anchor, 300).unwrap();
        let plain = tridiagonal_solve(300, 1.0 / 128.0, &g.interior_f64()).unwrap();
        let shifted = solve_tridiagonal(&p, true).unwrap();
        for i in -150..=150 {
            let k = (i + 300) as usize;
            assert!((plain[k] - fp.config.at(i)).abs() < 1e-8);
        }
        for i in -300..=300 {
            assert!((shifted.at(i) - fp.config.at(i)).abs() < 1e-10);
        }
        let r = ghost_residuals(&shifted, &g, &PotentialSpec::default()).unwrap();
        assert_eq!(r.len(), 601);
        assert!(r.iter().all(|v| v.abs() < 1e-9));
    }
}
