//! Configurations, energies, equilibrium residuals and minimality probes.

use serde::Serialize;

use crate::error::{FkError, Result};
use crate::golden::{GoldenNumber, TAU};
use crate::potential::{selected_point, PotentialSpec, QUADRATIC_EDGE};

/// The anchor `h` a configuration is compared against.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnchorFn {
    /// `h(i) = θ·i`; `theta_double` holds `2θ` exactly when it lies in ℤ[τ].
    Linear {
        theta: f64,
        theta_double: Option<GoldenNumber>,
    },
    /// `h(i) = i²` for `i ≥ 0`, `−i²` for `i < 0`.
    SignedSquare,
    /// Tabulated values on `[i_min, i_min + values.len())`.
    Table { i_min: i64, values: Vec<f64> },
}

impl AnchorFn {
    /// `h(i) = (3τ+1)/2 · i`.
    pub fn default_linear() -> Self {
        AnchorFn::Linear {
            theta: (3.0 * TAU + 1.0) / 2.0,
            theta_double: Some(GoldenNumber::new(1, 3)),
        }
    }

    pub fn linear(theta: f64) -> Self {
        AnchorFn::Linear {
            theta,
            theta_double: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnchorFn::Linear { .. } => "linear",
            AnchorFn::SignedSquare => "h1",
            AnchorFn::Table { .. } => "table",
        }
    }

    pub fn covers(&self, i_min: i64, i_max: i64) -> bool {
        match self {
            AnchorFn::Table { i_min: lo, values } => *lo <= i_min && i_max < lo + values.len() as i64,
            _ => true,
        }
    }

    /// `h(i)`; NaN outside a table's range.
    pub fn value(&self, i: i64) -> f64 {
        match self {
            AnchorFn::Linear { theta, theta_double } => match theta_double {
                Some(t2) => (*t2 * i).to_f64() / 2.0,
                None => theta * i as f64,
            },
            AnchorFn::SignedSquare => {
                let sq = (i as f64) * (i as f64);
                if i >= 0 {
                    sq
                } else {
                    -sq
                }
            }
            AnchorFn::Table { i_min, values } => {
                let k = i - i_min;
                if k < 0 || k >= values.len() as i64 {
                    f64::NAN
                } else {
                    values[k as usize]
                }
            }
        }
    }

    /// `2h(i)` as an element of ℤ[τ], when the anchor is exact there.
    pub fn exact_double(&self, i: i64) -> Option<GoldenNumber> {
        match self {
            AnchorFn::Linear { theta_double, .. } => theta_double.map(|t2| t2 * i),
            AnchorFn::SignedSquare => {
                let sq = i.checked_mul(i)?.checked_mul(2)?;
                Some(GoldenNumber::integer(if i >= 0 { sq } else { -sq }))
            }
            AnchorFn::Table { .. } => None,
        }
    }

    /// `sup |(Δh)_i|` over `i ∈ [i_min, i_max]`.
    pub fn delta_sup(&self, i_min: i64, i_max: i64) -> f64 {
        match self {
            AnchorFn::Linear { .. } => 0.0,
            _ => (i_min..=i_max)
                .map(|i| (self.value(i - 1) - 2.0 * self.value(i) + self.value(i + 1)).abs())
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConfigMeta {
    pub anchor: Option<AnchorFn>,
    pub lambda: Option<f64>,
}

/// Positions `x_i` for `i ∈ [i_min, i_max]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Configuration {
    pub i_min: i64,
    pub positions: Vec<f64>,
    pub meta: ConfigMeta,
}

impl Configuration {
    pub fn new(i_min: i64, positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(FkError::invalid("configuration must be non-empty"));
        }
        if let Some(bad) = positions.iter().find(|x| !x.is_finite()) {
            return Err(FkError::invalid(format!("non-finite position {bad}")));
        }
        Ok(Configuration {
            i_min,
            positions,
            meta: ConfigMeta::default(),
        })
    }

    pub fn from_fn(i_min: i64, i_max: i64, f: impl Fn(i64) -> f64) -> Result<Self> {
        Configuration::new(i_min, (i_min..=i_max).map(f).collect())
    }

    pub fn with_anchor(mut self, anchor: AnchorFn) -> Self {
        self.meta.anchor = Some(anchor);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.meta.lambda = Some(lambda);
        self
    }

    pub fn i_max(&self) -> i64 {
        self.i_min + self.positions.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, i: i64) -> bool {
        i >= self.i_min && i <= self.i_max()
    }

    pub fn get(&self, i: i64) -> Option<f64> {
        self.contains(i).then(|| self.positions[(i - self.i_min) as usize])
    }

    /// `x_i`; panics outside the window.
    pub fn at(&self, i: i64) -> f64 {
        self.get(i).expect("index inside configuration window")
    }

    pub fn set(&mut self, i: i64, x: f64) {
        let k = (i - self.i_min) as usize;
        self.positions[k] = x;
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.i_min..=self.i_max()
    }
}

/// `H(ξ, η) = ½(ξ − η)² + λV(ξ)`.
pub fn pair_energy(xi: f64, eta: f64, spec: &PotentialSpec) -> f64 {
    let d = xi - eta;
    0.5 * d * d + spec.v(xi)
}

/// `Σ_{i=j}^{k−1} H(x_i, x_{i+1})`.
pub fn segment_energy(config: &Configuration, j: i64, k: i64, spec: &PotentialSpec) -> Result<f64> {
    if j >= k || !config.contains(j) || !config.contains(k) {
        return Err(FkError::invalid(format!(
            "segment [{j}, {k}] not inside [{}, {}]",
            config.i_min,
            config.i_max()
        )));
    }
    Ok((j..k).map(|i| pair_energy(config.at(i), config.at(i + 1), spec)).sum())
}

/// `2x_i − x_{i−1} − x_{i+1} + λV'(x_i)` at every interior site.
pub fn residuals(config: &Configuration, spec: &PotentialSpec) -> Result<Vec<(i64, f64)>> {
    if config.len() < 3 {
        return Err(FkError::invalid("residuals need at least 3 sites"));
    }
    Ok((config.i_min + 1..config.i_max())
        .map(|i| {
            let x = config.at(i);
            (i, 2.0 * x - config.at(i - 1) - config.at(i + 1) + spec.v_prime(x))
        })
        .collect())
}

/// Largest interior residual magnitude.
pub fn equilibrium_residual(config: &Configuration, spec: &PotentialSpec) -> Result<f64> {
    equilibrium_residual_trimmed(config, spec, 0)
}

/// Largest residual magnitude with `drop` further sites ignored at each end.
pub fn equilibrium_residual_trimmed(config: &Configuration, spec: &PotentialSpec, drop: usize) -> Result<f64> {
    let r = residuals(config, spec)?;
    if r.len() <= 2 * drop {
        return Err(FkError::invalid("window too small for trimmed residual"));
    }
    Ok(r[drop..r.len() - drop].iter().map(|(_, v)| v.abs()).fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationEstimate {
    pub estimate: f64,
    /// `2·sup|x_i − h(i)| / (i_max − i_min)`, when an anchor is attached.
    pub error_bound: Option<f64>,
}

fn rotation_over(config: &Configuration, lo: i64, hi: i64) -> RotationEstimate {
    let span = (hi - lo) as f64;
    let estimate = (config.at(hi) - config.at(lo)) / span;
    let error_bound = config.meta.anchor.as_ref().map(|h| {
        let sup = (lo..=hi).map(|i| (config.at(i) - h.value(i)).abs()).fold(0.0, f64::max);
        2.0 * sup / span
    });
    RotationEstimate { estimate, error_bound }
}

/// Two-sided slope `(x_{i_max} − x_{i_min}) / (i_max − i_min)` over a window
/// symmetric around 0.
pub fn rotation_number_estimate(config: &Configuration) -> Result<RotationEstimate> {
    let n = config.i_max();
    if config.i_min != -n || n < 10 {
        return Err(FkError::invalid("rotation estimate needs a window [-n, n] with n ≥ 10"));
    }
    Ok(rotation_over(config, -n, n))
}

/// Compares the slope over `[−n, n]` with the slope over `[−n/2, n/2]`.
/// Anchored configurations with a rotation number give estimates that agree
/// within the summed bounds; `None` without an anchor.
pub fn has_rotation_number(config: &Configuration) -> Result<Option<bool>> {
    let full = rotation_number_estimate(config)?;
    let half_n = config.i_max() / 2;
    let half = rotation_over(config, -half_n, half_n);
    Ok(match (full.error_bound, half.error_bound) {
        (Some(bf), Some(bh)) => Some((full.estimate - half.estimate).abs() <= bf + bh),
        _ => None,
    })
}

/// `sup_i |x_i − h(i)|` over the window.
pub fn type_distance(config: &Configuration, h: &AnchorFn) -> f64 {
    config
        .indices()
        .map(|i| (config.at(i) - h.value(i)).abs())
        .fold(0.0, f64::max)
}

/// Which rule of the single-site construction produced the new position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ImprovementCase {
    /// `|ū − g| ≤ 1/2`: move to `ū`.
    Midpoint,
    /// `ū − g > 1/2`: move to `g + 1/3`.
    Above,
    /// `ū − g < −1/2`: move to `g − 1/3`.
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Improvement {
    pub site: i64,
    pub case: ImprovementCase,
    pub new_position: f64,
    pub energy_decrease: f64,
}

/// Replaces `x_i` following the three-case rule and reports the strict
/// decrease of `H(x_{i−1}, ·) + H(·, x_{i+1})`, if any.
pub fn single_site_improvement(config: &Configuration, i: i64, spec: &PotentialSpec) -> Result<Option<Improvement>> {
    if !config.contains(i - 1) || !config.contains(i + 1) {
        return Err(FkError::Precondition(format!("site {i} is not interior")));
    }
    let (xl, x, xr) = (config.at(i - 1), config.at(i), config.at(i + 1));
    let g = selected_point(x);
    let g_f = g.to_f64();
    let off = (x - g_f).abs();
    if off > QUADRATIC_EDGE {
        return Err(FkError::Precondition(format!(
            "x_{i} is {off} from the nearest chain point, outside the quadratic part"
        )));
    }
    let mid = 0.5 * (xl + xr);
    let d = mid - g_f;
    let (case, new) = if d.abs() <= 0.5 {
        (ImprovementCase::Midpoint, mid)
    } else if d > 0.5 {
        (ImprovementCase::Above, g_f + 1.0 / 3.0)
    } else {
        (ImprovementCase::Below, g_f - 1.0 / 3.0)
    };
    let sq = |t: f64| t * t;
    let decrease = 0.5 * (sq(xl - x) + sq(x - xr) - sq(xl - new) - sq(new - xr)) + spec.v(x) - spec.v(new);
    Ok((decrease > 0.0).then_some(Improvement {
        site: i,
        case,
        new_position: new,
        energy_decrease: decrease,
    }))
}

/// All interior sites admitting a strict single-site improvement.
pub fn find_improvements(config: &Configuration, spec: &PotentialSpec) -> Result<Vec<Improvement>> {
    let mut out = Vec::new();
    for i in config.i_min + 1..config.i_max() {
        if let Some(imp) = single_site_improvement(config, i, spec)? {
            out.push(imp);
        }
    }
    Ok(out)
}

/// Grid oracle for minimality of the segment `x_j … x_k` with fixed ends:
/// every interior point is varied over `[x_i − 1, x_i + 1]` in steps of
/// `grid_step`, then refined at a tenth of the step around the best grid
/// point. True iff nothing beats the current energy.
pub fn brute_force_segment_check(
    config: &Configuration,
    j: i64,
    k: i64,
    grid_step: f64,
    spec: &PotentialSpec,
) -> Result<bool> {
    if k - j > 4 || k - j < 2 {
        return Err(FkError::invalid("segment must have 1 to 3 interior sites"));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(FkError::invalid("grid step must lie in (0, 1]"));
    }
    let base: Vec<f64> = (j..=k).map(|i| config.at(i)).collect();
    let energy = |pts: &[f64]| -> f64 { pts.windows(2).map(|w| pair_energy(w[0], w[1], spec)).sum() };
    let current = energy(&base);
    let tol = 1e-12 * current.abs().max(1.0);
    let m = base.len() - 2;

    let search = |center: &[f64], half: i64, step: f64| -> (f64, Vec<f64>) {
        let width = (2 * half + 1) as usize;
        let mut best = (f64::INFINITY, center.to_vec());
        let mut pts = base.clone();
        let total = width.pow(m as u32);
        for code in 0..total {
            let mut c = code;
            for t in 0..m {
                let o = (c % width) as i64 - half;
                c /= width;
                pts[t + 1] = center[t + 1] + o as f64 * step;
            }
            let e = energy(&pts);
            if e < best.0 {
                best = (e, pts.clone());
            }
        }
        best
    };

    let half = (1.0 / grid_step).round() as i64;
    let (e1, best1) = search(&base, half, grid_step);
    if e1 < current - tol {
        return Ok(false);
    }
    let (e2, _) = search(&best1, 10, grid_step / 10.0);
    Ok(e2 >= current - tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ZETA_MAX;

    fn cfg(xs: &[f64]) -> Configuration {
        Configuration::new(0, xs.to_vec()).unwrap()
    }

    #[test]
    fn pair_energy_examples() {
        let spec = PotentialSpec::default();
        assert_eq!(pair_energy(0.0, 0.0, &spec), ZETA_MAX);
        assert_eq!(pair_energy(TAU / 2.0, TAU / 2.0, &spec), 0.0);
        let off = PotentialSpec { lambda: 0.0 };
        assert_eq!(pair_energy(0.0, 1.0, &off), 0.5);
    }

    #[test]
    fn segment_energy_examples() {
        let spec = PotentialSpec::default();
        let c = 0.9;
        let e = segment_energy(&cfg(&[c, c, c]), 0, 2, &spec).unwrap();
        assert_eq!(e, 2.0 * spec.v(c));
        let e = segment_energy(&cfg(&[0.0, TAU / 2.0, TAU]), 0, 2, &spec).unwrap();
        assert!((e - (TAU * TAU / 4.0 + ZETA_MAX)).abs() < 1e-12);
        let c = cfg(&[0.1, 0.7, 1.9, 2.2, 3.5]);
        let whole = segment_energy(&c, 0, 4, &spec).unwrap();
        let parts = segment_energy(&c, 0, 2, &spec).unwrap() + segment_energy(&c, 2, 4, &spec).unwrap();
        assert!((whole - parts).abs() < 1e-12);
        assert!(segment_energy(&c, 2, 2, &spec).is_err());
    }

    #[test]
    fn residual_of_linear_flat_config() {
        // every site stays in (1/3, τ − 1/3) where V' = 0
        let spec = PotentialSpec::default();
        let c = Configuration::from_fn(-5, 5, |i| 0.8 + 0.001 * i as f64).unwrap();
        assert!(equilibrium_residual(&c, &spec).unwrap() < 1e-12);
        assert!(equilibrium_residual(&cfg(&[0.0, 1.0]), &spec).is_err());
    }

    #[test]
    fn rotation_estimate_linear() {
        let theta = 2.5;
        let c = Configuration::from_fn(-20, 20, |i| theta * i as f64)
            .unwrap()
            .with_anchor(AnchorFn::linear(theta));
        let r = rotation_number_estimate(&c).unwrap();
        assert_eq!(r.estimate, theta);
        assert_eq!(r.error_bound, Some(0.0));
        assert_eq!(has_rotation_number(&c).unwrap(), Some(true));
        assert_eq!(type_distance(&c, &AnchorFn::linear(theta)), 0.0);
        let sq = Configuration::from_fn(-20, 20, |i| AnchorFn::SignedSquare.value(i))
            .unwrap()
            .with_anchor(AnchorFn::SignedSquare);
        assert_eq!(has_rotation_number(&sq).unwrap(), Some(false));
        assert!(rotation_number_estimate(&cfg(&[0.0; 5])).is_err());
    }

    #[test]
    fn anchor_values() {
        let h = AnchorFn::default_linear();
        assert_eq!(h.exact_double(2), Some(GoldenNumber::new(2, 6)));
        assert!((h.value(1) - 2.927_050_983_124_842).abs() < 1e-14);
        assert_eq!(AnchorFn::SignedSquare.value(-3), -9.0);
        assert_eq!(AnchorFn::SignedSquare.delta_sup(-10, 10), 2.0);
        assert_eq!(h.delta_sup(-10, 10), 0.0);
        let t = AnchorFn::Table {
            i_min: -1,
            values: vec![1.0, 2.0, 4.0],
        };
        assert!(t.covers(-1, 1) && !t.covers(-1, 2));
        assert!(t.value(5).is_nan());
    }

    #[test]
    fn single_site_hand_case() {
        let spec = PotentialSpec::default();
        let c = cfg(&[-0.6, 0.01, 0.7]);
        let imp = single_site_improvement(&c, 1, &spec).unwrap().unwrap();
        assert_eq!(imp.case, ImprovementCase::Midpoint);
        assert!((imp.new_position - 0.05).abs() < 1e-15);
        assert!(imp.energy_decrease > 0.0);
        let mut moved = c.clone();
        moved.set(1, imp.new_position);
        let direct = segment_energy(&c, 0, 2, &spec).unwrap() - segment_energy(&moved, 0, 2, &spec).unwrap();
        assert!((direct - imp.energy_decrease).abs() < 1e-12);
        assert!(single_site_improvement(&c, 0, &spec).is_err());
        assert!(single_site_improvement(&cfg(&[0.0, 0.3, 0.6]), 1, &spec).is_err());
    }

    #[test]
    fn single_site_on_chain_points_is_silent() {
        // ū = x_i = g: the midpoint rule leaves the site in place
        let spec = PotentialSpec::default();
        let c = cfg(&[-1.0, 0.0, 1.0]);
        assert!(single_site_improvement(&c, 1, &spec).unwrap().is_none());
    }

    #[test]
    fn brute_force_examples() {
        let spec = PotentialSpec::default();
        // midpoint of a wide gap, away from bumps: minimal
        let c = cfg(&[TAU * TAU, 0.5 * (TAU * TAU + TAU.powi(3)), TAU.powi(3)]);
        assert!(brute_force_segment_check(&c, 0, 2, 1e-2, &spec).unwrap());
        // sitting on a bump top is not minimal
        let c = cfg(&[-0.6, 0.0, 0.6]);
        assert!(!brute_force_segment_check(&c, 0, 2, 1e-2, &spec).unwrap());
        assert!(brute_force_segment_check(&c, 0, 1, 1e-2, &spec).is_err());
    }
}
