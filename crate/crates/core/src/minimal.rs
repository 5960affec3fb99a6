//! Minimal configurations from the branched manifolds `B_l`.
//!
//! `B_l` is two circles of circumferences `τ^{2l+1}` and `τ^{2l+2}` glued at
//! `R_l`. The covering `π_l` sends `x` to the arc `x − α_l(x)` on the circle
//! matching the type of its level-`l` super-interval. Atoms are placed on
//! each circle by minimizing the cyclic segment energy and then lifted back
//! to ℝ.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{alpha_beta, index_of, point, super_alpha_beta, super_intervals, IntervalType, MAX_SUPER_LEVEL};
use crate::error::{FkError, Result};
use crate::fibword::{absolute_frequency_exact, fibonacci, MAX_SUPER_WORD_LEVEL};
use crate::golden::{Abscissa, GoldenNumber, GoldenRational};
use crate::model::{AnchorFn, Configuration};
use crate::potential::{zeta, zeta_prime, zeta_second, PotentialSpec};
use crate::solver::thomas;

fn check_level(l: u32) -> Result<()> {
    if l < 1 {
        return Err(FkError::invalid("level must be at least 1"));
    }
    if l > MAX_SUPER_WORD_LEVEL.min(MAX_SUPER_LEVEL) {
        return Err(FkError::WindowExceeded(format!("level {l} is too large")));
    }
    Ok(())
}

fn kind_of(circle: usize) -> IntervalType {
    if circle == 1 {
        IntervalType::A
    } else {
        IntervalType::B
    }
}

/// `(N_{l,1}, N_{l,2}) = (2f_{2l−2}, 2f_{2l−1})`.
pub fn atom_counts(l: u32) -> Result<(usize, usize)> {
    check_level(l)?;
    let l = l as i64;
    Ok((2 * fibonacci(2 * l - 2)? as usize, 2 * fibonacci(2 * l - 1)? as usize))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelGeometry {
    pub l: u32,
    pub circumferences: (GoldenNumber, GoldenNumber),
    pub n: (usize, usize),
    /// Arc coordinates of the `N_{l,i} − 1` free points on circle `i`.
    pub free_points: [Vec<f64>; 2],
}

impl LevelGeometry {
    pub fn circumference(&self, circle: usize) -> GoldenNumber {
        if circle == 1 {
            self.circumferences.0
        } else {
            self.circumferences.1
        }
    }

    pub fn atoms(&self, circle: usize) -> usize {
        if circle == 1 {
            self.n.0
        } else {
            self.n.1
        }
    }

    pub fn free(&self, circle: usize) -> &[f64] {
        &self.free_points[circle - 1]
    }

    pub fn validate(&self) -> Result<()> {
        for circle in 1..=2 {
            let c = self.circumference(circle).to_f64();
            let pts = self.free(circle);
            if pts.len() + 1 != self.atoms(circle) {
                return Err(FkError::invalid(format!(
                    "circle {circle} needs {} free points",
                    self.atoms(circle) - 1
                )));
            }
            let mut last = 0.0;
            for &p in pts {
                if p.is_nan() || p <= last || p >= c {
                    return Err(FkError::invalid(format!(
                        "free points on circle {circle} must increase inside (0, {c})"
                    )));
                }
                last = p;
            }
        }
        Ok(())
    }
}

/// Exact circumferences and atom counts, free points spaced uniformly.
pub fn level_geometry(l: u32) -> Result<LevelGeometry> {
    let n = atom_counts(l)?;
    let circumferences = (IntervalType::A.length(l), IntervalType::B.length(l));
    let uniform = |c: GoldenNumber, n: usize| -> Vec<f64> {
        let c = c.to_f64();
        (1..n).map(|j| c * j as f64 / n as f64).collect()
    };
    Ok(LevelGeometry {
        l,
        circumferences,
        n,
        free_points: [uniform(circumferences.0, n.0), uniform(circumferences.1, n.1)],
    })
}

/// A point of `B_l`; arc 0 on either circle is `R_l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CirclePoint {
    pub circle: usize,
    pub arc: Abscissa,
}

impl CirclePoint {
    pub fn is_r(&self) -> bool {
        self.arc.cmp_golden(GoldenNumber::ZERO) == Ordering::Equal
    }

    pub fn arc_f64(&self) -> f64 {
        self.arc.to_f64()
    }

    /// Same point of `B_l`, with every `R_l` identified.
    pub fn same_point(&self, other: &CirclePoint) -> bool {
        if self.is_r() && other.is_r() {
            return true;
        }
        self.circle == other.circle && self.arc.same_point(&other.arc)
    }
}

/// `π_l(x)`.
pub fn project(l: u32, x: impl Into<Abscissa>) -> Result<CirclePoint> {
    check_level(l)?;
    let x = x.into();
    let (a, b) = super_alpha_beta(l, x)?;
    let kind = crate::chain::interval_type_of_gap(l, b - a)?;
    Ok(CirclePoint {
        circle: kind.circle(),
        arc: x.translate(-a),
    })
}

/// `κ_l: B_{l+1} → B_l`, read off `A_{l+1} = A_l B_l` and
/// `B_{l+1} = A_l B_l B_l`.
pub fn collapse(l: u32, p: CirclePoint) -> Result<CirclePoint> {
    check_level(l + 1)?;
    let a = IntervalType::A.length(l);
    let ab = a + IntervalType::B.length(l);
    let below = |g: GoldenNumber| p.arc.cmp_golden(g) == Ordering::Less;
    let (circle, shift) = match p.circle {
        1 if below(a) => (1, GoldenNumber::ZERO),
        1 => (2, a),
        2 if below(a) => (1, GoldenNumber::ZERO),
        2 if below(ab) => (2, a),
        2 => (2, ab),
        c => return Err(FkError::invalid(format!("no circle {c}"))),
    };
    Ok(CirclePoint {
        circle,
        arc: p.arc.translate(-shift),
    })
}

/// Left end of the super-interval used as the preimage of circle `i`:
/// `[0, τ^{2l+1})` is of type A and `[−τ^{2l+2}, 0)` of type B.
fn preimage_start(l: u32, circle: usize) -> GoldenNumber {
    if circle == 1 {
        GoldenNumber::ZERO
    } else {
        -IntervalType::B.length(l)
    }
}

/// `V̂ = V∘π_l^{−1}`, evaluated at a preimage.
pub fn potential_on_level(l: u32, p: CirclePoint, spec: &PotentialSpec) -> Result<f64> {
    check_level(l)?;
    if p.circle != 1 && p.circle != 2 {
        return Err(FkError::invalid(format!("no circle {}", p.circle)));
    }
    Ok(spec.v(p.arc.translate(preimage_start(l, p.circle))))
}

/// `V̂` on one circle, tabulated from the chain points of a preimage interval.
#[derive(Clone, Debug)]
pub struct CircleModel {
    pub circumference: f64,
    pub lambda: f64,
    points: Vec<f64>,
}

impl CircleModel {
    pub fn new(l: u32, circle: usize, spec: &PotentialSpec) -> Result<Self> {
        check_level(l)?;
        let start = preimage_start(l, circle);
        let c = kind_of(circle).length(l);
        let lo = index_of(alpha_beta(start).0) - 1;
        let hi = index_of(alpha_beta(start + c).0) + 1;
        let points = (lo..=hi)
            .map(|k| point(k).map(|p| (p - start).to_f64()))
            .collect::<Result<Vec<_>>>()?;
        Ok(CircleModel {
            circumference: c.to_f64(),
            lambda: spec.lambda,
            points,
        })
    }

    fn offset(&self, y: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= y).clamp(1, self.points.len() - 1);
        let (a, b) = (self.points[k - 1], self.points[k]);
        if 2.0 * y <= a + b {
            y - a
        } else {
            y - b
        }
    }

    pub fn v(&self, y: f64) -> f64 {
        self.lambda * zeta(self.offset(y))
    }

    pub fn v_prime(&self, y: f64) -> f64 {
        self.lambda * zeta_prime(self.offset(y))
    }

    fn v_second(&self, y: f64) -> f64 {
        self.lambda * zeta_second(self.offset(y)).inner_value()
    }

    /// `Σ_{j=0}^{N−1} ½(d_{j+1} − d_j)² + V̂(d_j)` with `d_0 = 0`, `d_N = C`.
    pub fn energy(&self, free: &[f64]) -> f64 {
        let mut e = 0.0;
        let mut prev = 0.0;
        for &d in free.iter().chain(std::iter::once(&self.circumference)) {
            e += 0.5 * (d - prev) * (d - prev) + self.v(prev);
            prev = d;
        }
        e
    }

    fn neighbours(&self, free: &[f64], j: usize) -> (f64, f64) {
        let a = if j == 0 { 0.0 } else { free[j - 1] };
        let b = if j + 1 == free.len() {
            self.circumference
        } else {
            free[j + 1]
        };
        (a, b)
    }

    fn local(&self, a: f64, b: f64, y: f64) -> f64 {
        0.5 * (y - a) * (y - a) + 0.5 * (b - y) * (b - y) + self.v(y)
    }

    /// Best position for free point `j` with its neighbours held fixed:
    /// a coarse scan of `[a, b]` followed by golden-section refinement.
    fn line_search(&self, free: &[f64], j: usize) -> f64 {
        const SCAN: usize = 96;
        let (a, b) = self.neighbours(free, j);
        let f = |y: f64| self.local(a, b, y);
        let h = (b - a) / SCAN as f64;
        let f0 = f(free[j]);
        let mut best = (f0, free[j]);
        let mut best_k = None;
        for k in 1..SCAN {
            let y = a + h * k as f64;
            let v = f(y);
            if v < best.0 {
                best = (v, y);
                best_k = Some(k);
            }
        }
        let mid = 0.5 * (a + b);
        if f(mid) < best.0 {
            best = (f(mid), mid);
        }
        let (mut lo, mut hi) = match best_k {
            Some(k) => (a + h * (k - 1) as f64, a + h * (k + 1) as f64),
            None => ((best.1 - h).max(a), (best.1 + h).min(b)),
        };
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - r * (hi - lo);
        let mut x2 = lo + r * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = f(x2);
            }
            if hi - lo < 1e-14 * (1.0 + hi.abs()) {
                break;
            }
        }
        for y in [x1, x2, 0.5 * (lo + hi)] {
            let v = f(y);
            if v < best.0 && y > a && y < b {
                best = (v, y);
            }
        }
        // moves inside the rounding floor would only add noise
        if best.0 < f0 - 4.0 * f64::EPSILON * f0.abs().max(1.0) {
            best.1
        } else {
            free[j]
        }
    }

    fn sweep(&self, free: &mut [f64]) {
        for j in 0..free.len() {
            free[j] = self.line_search(free, j);
        }
    }

    /// `∂E/∂d_j`.
    pub fn gradient(&self, free: &[f64]) -> Vec<f64> {
        (0..free.len())
            .map(|j| {
                let (a, b) = self.neighbours(free, j);
                2.0 * free[j] - a - b + self.v_prime(free[j])
            })
            .collect()
    }

    fn ordered(&self, free: &[f64]) -> bool {
        let mut last = 0.0;
        for &d in free {
            if d.is_nan() || d <= last {
                return false;
            }
            last = d;
        }
        last < self.circumference
    }

    /// Damped Newton steps on the tridiagonal Hessian, with negative
    /// curvature of `V̂` clipped to zero.
    fn newton(&self, free: &mut Vec<f64>) {
        let m = free.len();
        if m == 0 {
            return;
        }
        let sup = |g: &[f64]| g.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        for _ in 0..30 {
            let g = self.gradient(free);
            let g_sup = sup(&g);
            if g_sup < 1e-13 {
                return;
            }
            let diag: Vec<f64> = free.iter().map(|&d| 2.0 + self.v_second(d).max(0.0)).collect();
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            let Ok(step) = thomas(&vec![-1.0; m], &diag, &vec![-1.0; m], &rhs) else {
                return;
            };
            let e0 = self.energy(free);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let trial: Vec<f64> = free.iter().zip(&step).map(|(d, s)| d + t * s).collect();
                // near the minimum the energy is flat to rounding; accept
                // steps that shrink the gradient without raising it
                let accept = self.ordered(&trial) && {
                    let e = self.energy(&trial);
                    e < e0 || (e <= e0 + 4.0 * f64::EPSILON * e0.abs() && sup(&self.gradient(&trial)) < g_sup)
                };
                if accept {
                    *free = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                return;
            }
        }
    }

    /// Local minimization from `init`: coordinate sweeps alternating with
    /// Newton polishing until the energy settles.
    pub fn minimize(&self, init: &[f64], max_rounds: usize) -> CircleMinimum {
        let mut free = init.to_vec();
        let mut energy = self.energy(&free);
        let mut converged = false;
        let mut rounds = 0;
        while rounds < max_rounds {
            rounds += 1;
            for _ in 0..5 {
                self.sweep(&mut free);
            }
            self.newton(&mut free);
            let e = self.energy(&free);
            let settled = energy - e <= 1e-12 * (1.0 + e.abs());
            energy = e;
            let g = self.gradient(&free).iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if settled && g < 1e-9 {
                converged = true;
                break;
            }
        }
        CircleMinimum {
            free,
            energy,
            converged,
            rounds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleMinimum {
    pub free: Vec<f64>,
    pub energy: f64,
    pub converged: bool,
    pub rounds: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub seed: u64,
    /// Random displacement of the uniform start, as a fraction of the spacing.
    pub jitter: f64,
    pub max_rounds: usize,
    pub lambda: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            restarts: 20,
            seed: 0,
            jitter: 0.4,
            max_rounds: 200,
            lambda: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleReport {
    pub circle: usize,
    pub uniform_energy: f64,
    pub energy: f64,
    pub converged: bool,
    /// Energies of the distinct local minima reached by the restarts.
    pub distinct_minima: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelOptimization {
    pub geometry: LevelGeometry,
    pub circles: [CircleReport; 2],
}

/// Minimizes the cyclic energy of `(R_l, b_1, …, b_{N−1}, R_l)` on each circle.
/// The first start is the uniform spacing; the others jitter it.
pub fn optimize_level(l: u32, settings: &OptimizerSettings) -> Result<LevelOptimization> {
    let mut geometry = level_geometry(l)?;
    let spec = PotentialSpec::new(settings.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut reports = Vec::with_capacity(2);
    for circle in 1..=2 {
        let model = CircleModel::new(l, circle, &spec)?;
        let uniform = geometry.free(circle).to_vec();
        let uniform_energy = model.energy(&uniform);
        let spacing = model.circumference / geometry.atoms(circle) as f64;
        let mut best: Option<CircleMinimum> = None;
        let mut minima: Vec<f64> = Vec::new();
        for r in 0..settings.restarts.max(1) {
            let init: Vec<f64> = if r == 0 {
                uniform.clone()
            } else {
                uniform
                    .iter()
                    .map(|&d| d + spacing * settings.jitter * rng.gen_range(-0.5..0.5))
                    .collect()
            };
            let run = model.minimize(&init, settings.max_rounds);
            if !minima.iter().any(|&e| (e - run.energy).abs() <= 1e-9 * (1.0 + e.abs())) {
                minima.push(run.energy);
            }
            if best.as_ref().is_none_or(|b| run.energy < b.energy) {
                best = Some(run);
            }
        }
        let best = best.expect("at least one restart");
        minima.sort_by(f64::total_cmp);
        geometry.free_points[circle - 1] = best.free.clone();
        reports.push(CircleReport {
            circle,
            uniform_energy,
            energy: best.energy,
            converged: best.converged,
            distinct_minima: minima,
        });
    }
    let c2 = reports.pop().expect("two circles");
    let c1 = reports.pop().expect("two circles");
    Ok(LevelOptimization {
        geometry,
        circles: [c1, c2],
    })
}

/// The level-1 segment energy written out:
/// `d² − C·d + V(d) + C²/2 + V(0)`.
pub fn level1_energy_closed_form(circle: usize, d: f64, spec: &PotentialSpec) -> f64 {
    let c = kind_of(circle).length(1).to_f64();
    d * d - c * d + spec.v(d) + c * c / 2.0 + spec.v(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftedInterval {
    pub start: GoldenNumber,
    pub kind: IntervalType,
    /// Index of the atom at `start`.
    pub first_atom: i64,
    /// Whether every atom of the interval lies inside the window.
    pub complete: bool,
}

/// Atoms `θ_{l,n}` for `n ∈ [n_min, n_max]` with `θ_{l,0} = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelConfig {
    pub l: u32,
    pub n_min: i64,
    pub theta: Vec<f64>,
    pub intervals: Vec<LiftedInterval>,
    pub geometry: LevelGeometry,
}

impl LevelConfig {
    pub fn n_max(&self) -> i64 {
        self.n_min + self.theta.len() as i64 - 1
    }

    pub fn at(&self, n: i64) -> f64 {
        self.theta[(n - self.n_min) as usize]
    }

    pub fn to_configuration(&self) -> Configuration {
        Configuration {
            i_min: self.n_min,
            positions: self.theta.clone(),
            meta: Default::default(),
        }
        .with_anchor(AnchorFn::default_linear())
    }

    /// Whether atom `n` is a preimage of `R_l`.
    pub fn is_r_atom(&self, n: i64) -> bool {
        self.intervals.iter().any(|iv| iv.first_atom == n)
    }

    pub fn max_gap(&self) -> f64 {
        self.theta.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// `π_l^{−1}` of `R_l` and the free points, indexed over `[−half_width, half_width]`.
pub fn lift(l: u32, geometry: &LevelGeometry, half_width: i64) -> Result<LevelConfig> {
    lift_range(l, geometry, -half_width, half_width)
}

pub fn lift_range(l: u32, geometry: &LevelGeometry, n_min: i64, n_max: i64) -> Result<LevelConfig> {
    check_level(l)?;
    if geometry.l != l {
        return Err(FkError::invalid("geometry level mismatch"));
    }
    geometry.validate()?;
    if n_min > 0 || n_max < 0 {
        return Err(FkError::invalid("window must contain 0"));
    }
    let atoms_of = |start: GoldenNumber, kind: IntervalType| -> Vec<f64> {
        let s = start.to_f64();
        std::iter::once(s)
            .chain(geometry.free(kind.circle()).iter().map(|d| s + d))
            .collect()
    };
    let mut right: Vec<f64> = Vec::new();
    let mut right_iv = Vec::new();
    let mut start = GoldenNumber::ZERO;
    while (right.len() as i64) <= n_max {
        let (a, b) = super_alpha_beta(l, start)?;
        let kind = crate::chain::interval_type_of_gap(l, b - a)?;
        let first = right.len() as i64;
        right.extend(atoms_of(a, kind));
        right_iv.push((a, kind, first));
        start = b;
    }
    let mut left: Vec<f64> = Vec::new();
    let mut left_iv = Vec::new();
    let mut end = GoldenNumber::ZERO;
    while (left.len() as i64) < -n_min {
        let (a, b) = super_alpha_beta(l, end - GoldenNumber::ONE)?;
        let kind = crate::chain::interval_type_of_gap(l, b - a)?;
        let atoms = atoms_of(a, kind);
        left_iv.push((a, kind, -(left.len() as i64) - atoms.len() as i64));
        left.extend(atoms.into_iter().rev());
        end = a;
    }
    left.truncate((-n_min) as usize);
    left.reverse();
    right.truncate((n_max + 1) as usize);
    let mut theta = left;
    theta.extend(right);
    let mut intervals = Vec::new();
    for (start, kind, first) in left_iv.into_iter().rev().chain(right_iv) {
        let count = geometry.atoms(kind.circle()) as i64;
        intervals.push(LiftedInterval {
            start,
            kind,
            first_atom: first,
            complete: first >= n_min && first + count - 1 <= n_max,
        });
    }
    Ok(LevelConfig {
        l,
        n_min,
        theta,
        intervals,
        geometry: geometry.clone(),
    })
}

/// `ρ_l = 1/(freq(A_l)·N_{l,1} + freq(B_l)·N_{l,2})` in ℚ(τ).
pub fn rotation_number_level(l: u32) -> Result<GoldenRational> {
    let (n1, n2) = atom_counts(l)?;
    let (fa, fb) = absolute_frequency_exact(l);
    let total = fa * GoldenRational::from(GoldenNumber::integer(n1 as i64))
        + fb * GoldenRational::from(GoldenNumber::integer(n2 as i64));
    total
        .recip()
        .ok_or_else(|| FkError::Precondition("vanishing frequency sum".into()))
}

/// Atom counts over the complete level-`m` super-intervals of one type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SheetCounts {
    pub intervals: usize,
    pub min: usize,
    pub max: usize,
}

impl SheetCounts {
    pub fn spread(&self) -> usize {
        self.max - self.min
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinatoricsReport {
    pub level: u32,
    pub sheet_level: u32,
    pub a: SheetCounts,
    pub b: SheetCounts,
    pub max_gap: f64,
    /// `2τ^{2l+3}`.
    pub gap_bound: f64,
    pub pass: bool,
}

/// Level-`m` super-intervals lying inside `[θ_first, θ_last]`, with the
/// number of atoms each contains.
fn sheet_occupancy(config: &LevelConfig, m: u32) -> Result<Vec<(IntervalType, GoldenNumber, usize)>> {
    let first = *config.theta.first().expect("non-empty");
    let last = *config.theta.last().expect("non-empty");
    let mut out = Vec::new();
    for iv in super_intervals(m, first, last)? {
        let (s, e) = (iv.start.to_f64(), iv.end(m).to_f64());
        if s < first || e > last {
            continue;
        }
        let lo = config.theta.partition_point(|&t| t < s);
        let hi = config.theta.partition_point(|&t| t < e);
        out.push((iv.kind, iv.start, hi - lo));
    }
    Ok(out)
}

/// Spread of atoms per sheet over the level-`sheet_level` super-intervals
/// of each type, and the largest gap against `2τ^{2l+3}`.
pub fn combinatorics_certificate(config: &LevelConfig, sheet_level: u32) -> Result<CombinatoricsReport> {
    check_level(sheet_level)?;
    let occ = sheet_occupancy(config, sheet_level)?;
    let counts = |kind: IntervalType| {
        let c: Vec<usize> = occ.iter().filter(|o| o.0 == kind).map(|o| o.2).collect();
        SheetCounts {
            intervals: c.len(),
            min: c.iter().copied().min().unwrap_or(0),
            max: c.iter().copied().max().unwrap_or(0),
        }
    };
    let (a, b) = (counts(IntervalType::A), counts(IntervalType::B));
    if a.intervals < 10 || b.intervals < 10 {
        return Err(FkError::Precondition(format!(
            "window covers {} type-A and {} type-B intervals at level {sheet_level}; need 10 each",
            a.intervals, b.intervals
        )));
    }
    let max_gap = config.max_gap();
    let gap_bound = 2.0 * GoldenNumber::tau_pow(2 * config.l as i32 + 3).to_f64();
    Ok(CombinatoricsReport {
        level: config.l,
        sheet_level,
        a,
        b,
        max_gap,
        gap_bound,
        pass: a.spread() <= 2 && b.spread() <= 2 && max_gap <= gap_bound,
    })
}

/// Bounds on `θ_n/n` from counting complete level-`m` circles covered by
/// `[θ_0, θ_n]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelBound {
    pub m: u32,
    pub n1: usize,
    pub n2: usize,
    /// Allowed deviation of the per-sheet atom counts from `N_{m,i}`.
    pub slack: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideBound {
    pub n: i64,
    pub slope: f64,
    pub lower: f64,
    pub upper: f64,
    pub levels: Vec<LevelBound>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub contains: bool,
    pub sides: [SideBound; 2],
}

fn side_bound(config: &LevelConfig, n: i64) -> Result<SideBound> {
    let l = config.l;
    let theta_n = config.at(n);
    let reach = theta_n.abs();
    let count = n.unsigned_abs() as f64;
    let mut levels = Vec::new();
    for m in 1..=l {
        let (big1, big2) = atom_counts(m)?;
        let (c1, c2) = (IntervalType::A.length(m).to_f64(), IntervalType::B.length(m).to_f64());
        // complete level-m intervals between θ_0 = 0 and θ_n
        let (lo, hi) = if n > 0 { (0.0, theta_n) } else { (theta_n, 0.0) };
        let ivs = super_intervals(m, lo, hi)?;
        let (mut n1, mut n2) = (0usize, 0usize);
        for iv in &ivs {
            let (s, e) = (iv.start.to_f64(), iv.end(m).to_f64());
            if s >= lo && e <= hi {
                match iv.kind {
                    IntervalType::A => n1 += 1,
                    IntervalType::B => n2 += 1,
                }
            }
        }
        // exact sheet counts give the level-l form of the inequalities;
        // counts within ±2 of N_m give the combinatorial form
        let deviation = sheet_occupancy(config, m)?
            .iter()
            .map(|&(kind, _, c)| {
                let nominal = if kind == IntervalType::A { big1 } else { big2 };
                c.abs_diff(nominal)
            })
            .max()
            .unwrap_or(0);
        let slack = match deviation {
            0 => 0.0,
            1 | 2 => 2.0,
            _ => continue,
        };
        let (lo1, lo2) = (big1 as f64 - slack, big2 as f64 - slack);
        let (hi1, hi2) = (big1 as f64 + slack, big2 as f64 + slack);
        let (n1f, n2f) = (n1 as f64, n2 as f64);
        let len_lo = n1f * c1 + n2f * c2;
        let len_hi = len_lo + 2.0 * c2;
        let cnt_lo = n1f * lo1 + n2f * lo2;
        let cnt_hi = n1f * hi1 + n2f * hi2 + 2.0 * hi2;
        let lower = len_lo / cnt_hi;
        let upper = if cnt_lo > 0.0 { len_hi / cnt_lo } else { f64::INFINITY };
        levels.push(LevelBound {
            m,
            n1,
            n2,
            slack,
            lower,
            upper,
        });
    }
    let lower = levels.iter().map(|b| b.lower).fold(0.0, f64::max);
    let upper = levels.iter().map(|b| b.upper).fold(f64::INFINITY, f64::min);
    Ok(SideBound {
        n,
        slope: reach / count,
        lower,
        upper,
        levels,
    })
}

/// Sandwich bound for the two-sided slope `(θ_{n_max} − θ_{n_min})/(n_max − n_min)`.
///
/// Each one-sided slope `θ_n/n` is bounded at every level `m ≤ l` by the
/// covering counts; the two-sided slope is their weighted mean.
pub fn sandwich_bound(config: &LevelConfig) -> Result<SandwichReport> {
    let (lo_n, hi_n) = (config.n_min, config.n_max());
    if lo_n >= 0 || hi_n <= 0 {
        return Err(FkError::invalid("sandwich bound needs atoms on both sides of 0"));
    }
    let right = side_bound(config, hi_n)?;
    let left = side_bound(config, lo_n)?;
    let (wr, wl) = (hi_n as f64, -lo_n as f64);
    let total = wr + wl;
    let estimate = (config.at(hi_n) - config.at(lo_n)) / total;
    let lower = (wr * right.lower + wl * left.lower) / total;
    let upper = (wr * right.upper + wl * left.upper) / total;
    Ok(SandwichReport {
        estimate,
        lower,
        upper,
        width: upper - lower,
        contains: lower <= estimate && estimate <= upper,
        sides: [left, right],
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Stabilization {
    pub config: LevelConfig,
    pub configs: Vec<LevelConfig>,
    /// `sup_n |θ_{l+1,n} − θ_{l,n}|` for `l = 1 … l_max − 1`.
    pub sup_differences: Vec<f64>,
}

/// Level configurations `l = 1 … l_max` on a common window.
pub fn stabilize_across_levels(l_max: u32, half_width: i64, settings: &OptimizerSettings) -> Result<Stabilization> {
    if l_max < 2 {
        return Err(FkError::invalid("stabilization needs l_max ≥ 2"));
    }
    let mut configs = Vec::new();
    for l in 1..=l_max {
        let opt = optimize_level(l, settings)?;
        configs.push(lift(l, &opt.geometry, half_width)?);
    }
    let sup_differences = configs
        .windows(2)
        .map(|w| {
            w[0].theta
                .iter()
                .zip(&w[1].theta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(Stabilization {
        config: configs.last().expect("l_max ≥ 2").clone(),
        configs,
        sup_differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::TAU;

    #[test]
    fn geometry_examples() {
        let g = level_geometry(1).unwrap();
        assert_eq!(g.circumferences, (GoldenNumber::tau_pow(3), GoldenNumber::tau_pow(4)));
        assert_eq!(g.n, (2, 2));
        assert_eq!(level_geometry(2).unwrap().n, (4, 6));
        assert_eq!(level_geometry(3).unwrap().n, (10, 16));
        for l in 1..6 {
            let (a, b) = atom_counts(l).unwrap();
            let (c, d) = atom_counts(l + 1).unwrap();
            assert_eq!((c, d), (a + b, a + 2 * b));
        }
        assert!(level_geometry(0).is_err());
    }

    #[test]
    fn project_examples() {
        assert!(project(1, 0.0).unwrap().is_r());
        let p = project(1, TAU / 2.0).unwrap();
        assert_eq!(p.circle, 1);
        assert!((p.arc_f64() - TAU / 2.0).abs() < 1e-15);
        for q in crate::chain::super_points(2, -200.0, 200.0).unwrap() {
            assert!(project(2, q).unwrap().is_r());
        }
    }

    #[test]
    fn collapse_examples() {
        let r = CirclePoint {
            circle: 1,
            arc: Abscissa::from_golden(GoldenNumber::ZERO),
        };
        assert!(collapse(1, r).unwrap().is_r());
        let p = CirclePoint {
            circle: 1,
            arc: Abscissa::from_golden(GoldenNumber::tau_pow(3)),
        };
        assert!(collapse(1, p).unwrap().is_r());
        for l in 1..4 {
            for k in -400..400 {
                let x = 0.731 * k as f64 + 0.01;
                let up = collapse(l, project(l + 1, x).unwrap()).unwrap();
                assert!(up.same_point(&project(l, x).unwrap()), "l={l} x={x}");
                let g = point(k).unwrap();
                let up = collapse(l, project(l + 1, g).unwrap()).unwrap();
                assert!(up.same_point(&project(l, g).unwrap()), "l={l} k={k}");
            }
        }
    }

    #[test]
    fn potential_on_level_examples() {
        let spec = PotentialSpec::default();
        let r = CirclePoint {
            circle: 1,
            arc: Abscissa::from_golden(GoldenNumber::ZERO),
        };
        assert_eq!(potential_on_level(1, r, &spec).unwrap(), 160.0 / 27.0);
        let t3 = GoldenNumber::tau_pow(3).to_f64();
        let p = CirclePoint {
            circle: 1,
            arc: Abscissa::from_f64(t3 / 2.0),
        };
        assert_eq!(potential_on_level(1, p, &spec).unwrap(), spec.v(t3 / 2.0));
        for l in 1..4 {
            for circle in 1..=2 {
                let model = CircleModel::new(l, circle, &spec).unwrap();
                let c = model.circumference;
                for k in 0..500 {
                    let arc = c * k as f64 / 500.0;
                    let p = CirclePoint {
                        circle,
                        arc: Abscissa::from_f64(arc),
                    };
                    assert_eq!(model.v(arc), potential_on_level(l, p, &spec).unwrap());
                }
            }
        }
    }

    #[test]
    fn level_one_optimum() {
        let opt = optimize_level(
            1,
            &OptimizerSettings {
                restarts: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let spec = PotentialSpec::default();
        for circle in 1..=2 {
            let c = opt.geometry.circumference(circle).to_f64();
            let d = opt.geometry.free(circle)[0];
            assert!((d - c / 2.0).abs() < 1e-6);
            let e = opt.circles[circle - 1].energy;
            assert!((e - level1_energy_closed_form(circle, d, &spec)).abs() < 1e-10);
            assert!(opt.circles[circle - 1].uniform_energy >= e);
        }
        let cfg = lift(1, &opt.geometry, 20).unwrap();
        assert_eq!(cfg.at(0), 0.0);
        assert!((cfg.at(1) - TAU.powi(3) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn lift_counts_and_order() {
        let g = level_geometry(2).unwrap();
        let cfg = lift(2, &g, 200).unwrap();
        assert_eq!(cfg.theta.len(), 401);
        assert!(cfg.theta.windows(2).all(|w| w[1] > w[0]));
        assert!(cfg.max_gap() <= 2.0 * TAU.powi(6));
        for w in cfg.intervals.windows(2) {
            if w[0].complete {
                let n = (w[1].first_atom - w[0].first_atom) as usize;
                assert_eq!(n, g.atoms(w[0].kind.circle()));
            }
        }
        assert!(cfg.is_r_atom(0));
    }

    #[test]
    fn rotation_number_exact() {
        let target = GoldenRational::new(num_rational::Ratio::new(1, 2), num_rational::Ratio::new(3, 2));
        for l in 1..=6 {
            assert_eq!(rotation_number_level(l).unwrap(), target);
        }
        assert!((target.to_f64() - 2.927_050_98).abs() < 1e-8);
    }
}
