//! Invariant suites behind `fkqc verify`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::{
    alpha_beta, alpha_beta_scan, enumerate_points, greedy_decomposition, interval_type_of_gap,
    letter_frequency_estimate, local_patch, point, super_points,
};
use crate::error::{FkError, Result};
use crate::fibword::{
    absolute_frequency, absolute_frequency_exact, letter_counts, one_sided_letter, one_sided_word, substitute,
    substitution_matrix_power, super_words, two_sided_window, Letter,
};
use crate::golden::{GoldenNumber, TAU};
use crate::minimal::{
    combinatorics_certificate, level1_energy_closed_form, lift, optimize_level, rotation_number_level,
    OptimizerSettings,
};
use crate::model::{equilibrium_residual_trimmed, has_rotation_number, AnchorFn};
use crate::potential::{
    check_equivariance, matched_partner, min_lambda_nonminimal, zeta, zeta_prime, zeta_second, PotentialSpec,
    SecondDerivative,
};
use crate::solver::{solve_fixed_point, solve_tridiagonal, tridiagonal_solve, AilParams, AnchorValues};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fibword,
    Chain,
    Potential,
    Solver,
    Minimal,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Fibword,
        Suite::Chain,
        Suite::Potential,
        Suite::Solver,
        Suite::Minimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fibword => "fibword",
            Suite::Chain => "chain",
            Suite::Potential => "potential",
            Suite::Solver => "solver",
            Suite::Minimal => "minimal",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = FkError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| FkError::invalid(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<Check>,
}

impl Recorder {
    /// Errors count as failures with the message as detail.
    fn check(&mut self, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) {
        let (passed, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
        self.checks.push(Check {
            suite: self.suite,
            name,
            passed,
            detail,
        });
    }
}

pub fn run_suite(suite: Suite) -> SuiteReport {
    let mut report = SuiteReport::default();
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::ALL.to_vec()
    } else {
        vec![suite]
    };
    for s in suites {
        let mut rec = Recorder {
            suite: s,
            checks: Vec::new(),
        };
        match s {
            Suite::Fibword => fibword_suite(&mut rec),
            Suite::Chain => chain_suite(&mut rec),
            Suite::Potential => potential_suite(&mut rec),
            Suite::Solver => solver_suite(&mut rec),
            Suite::Minimal => minimal_suite(&mut rec),
            Suite::All => unreachable!(),
        }
        report.checks.extend(rec.checks);
    }
    report
}

fn fibword_suite(rec: &mut Recorder) {
    rec.check("word lengths are powers of tau", || {
        for i in 1..=25u32 {
            let w = one_sided_word(i)?;
            if w.length() != GoldenNumber::tau_pow(i as i32) {
                return Ok((false, format!("level {i}")));
            }
        }
        Ok((true, "levels 1..=25, exact".into()))
    });
    rec.check("letter counts are Fibonacci numbers", || {
        for i in 1..=25u32 {
            let w = one_sided_word(i)?;
            let (na, nb) = letter_counts(i)?;
            if (w.count(Letter::A) as u64, w.count(Letter::B) as u64) != (na, nb) {
                return Ok((false, format!("level {i}")));
            }
        }
        Ok((true, "levels 1..=25".into()))
    });
    rec.check("palindromes after dropping two letters", || {
        for i in 3..=20u32 {
            let mut w = one_sided_word(i)?;
            w.letters.truncate(w.len() - 2);
            if !w.is_palindrome() {
                return Ok((false, format!("level {i}")));
            }
        }
        Ok((true, "levels 3..=20".into()))
    });
    rec.check("lazy letters match the materialized word", || {
        let w = one_sided_word(22)?;
        let bad = (0..w.len()).find(|&i| one_sided_letter(i as u64) != w.letters[i]);
        Ok((bad.is_none(), format!("{} letters, first mismatch {bad:?}", w.len())))
    });
    rec.check("two-sided window", || {
        let w = two_sided_window(-5, 4)?;
        let s: String = w.letters.iter().map(|l| l.as_char()).collect();
        Ok((s == "ababaabaab" && w.ref_index == Some(5), w.to_string()))
    });
    rec.check("two-sided word is fixed by rho squared", || {
        let right = two_sided_window(0, 999)?;
        let image = substitute(&substitute(&right));
        Ok((image.letters[..1000] == right.letters[..], "1000 letters".into()))
    });
    rec.check("super-word counts follow the substitution matrix", || {
        for l in 1..10 {
            let m = substitution_matrix_power(1);
            let (a, b) = super_words(l)?;
            let (na, nb) = super_words(l + 1)?;
            let (ca, cb) = (a.count(Letter::A) as u64, b.count(Letter::A) as u64);
            if na.count(Letter::A) as u64 != m[0][0] * ca + m[0][1] * cb
                || nb.count(Letter::A) as u64 != m[1][0] * ca + m[1][1] * cb
            {
                return Ok((false, format!("level {l}")));
            }
        }
        Ok((true, "levels 1..10".into()))
    });
    rec.check("absolute frequencies", || {
        let mut worst = 0.0f64;
        for l in 1..8 {
            let f = absolute_frequency(l);
            let (ea, eb) = absolute_frequency_exact(l);
            let (a, b) = super_words(l)?;
            let total = f.freq_a * a.length().to_f64() + f.freq_b * b.length().to_f64();
            worst = worst
                .max((total - 1.0).abs())
                .max((ea.to_f64() - f.freq_a).abs())
                .max((eb.to_f64() - f.freq_b).abs());
        }
        Ok((worst < 1e-12, format!("max deviation {worst:e}")))
    });
}

fn chain_suite(rec: &mut Recorder) {
    rec.check("point formula matches enumeration", || {
        let pts = enumerate_points(-3000, 3000)?;
        for (k, p) in (-3000..=3000).zip(&pts) {
            if point(k)? != *p {
                return Ok((false, format!("index {k}")));
            }
        }
        let gaps_ok = pts.windows(2).all(|w| {
            let d = w[1] - w[0];
            d == GoldenNumber::ONE || d == GoldenNumber::TAU
        });
        Ok((gaps_ok, "indices -3000..=3000, gaps in {1, tau}".into()))
    });
    rec.check("alpha/beta match a brute-force scan", || {
        let pts = enumerate_points(-800, 800)?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut n = 0;
        while n < 2000 {
            let b = rng.gen_range(-600i64..=600);
            let a = rng.gen_range(-1000i64..=1000) - (b as f64 * TAU).round() as i64;
            let x = GoldenNumber::new(a, b);
            if x.to_f64().abs() > 1000.0 {
                continue;
            }
            n += 1;
            if alpha_beta_scan(&pts, x) != Some(alpha_beta(x)) {
                return Ok((false, format!("x = {x}")));
            }
        }
        Ok((true, format!("{n} exact inputs in [-1000, 1000]")))
    });
    rec.check("greedy decomposition sums to alpha", || {
        for k in 0..2000 {
            let x = 0.731 * k as f64;
            let sum = greedy_decomposition(x)?
                .into_iter()
                .fold(GoldenNumber::ZERO, |acc, e| acc + GoldenNumber::tau_pow(e));
            if sum != alpha_beta(x).0 {
                return Ok((false, format!("x = {x}")));
            }
        }
        Ok((true, "2000 points in [0, 1462]".into()))
    });
    rec.check("finite local complexity", || {
        let mut classes = HashSet::new();
        for k in -3000..3000 {
            let p = local_patch(point(k)?, 3.0)?;
            classes.insert(format!("{:?}", p.offsets));
        }
        Ok((
            classes.len() <= 8,
            format!("{} radius-3 patch classes at chain points", classes.len()),
        ))
    });
    rec.check("super-point gaps have the two interval lengths", || {
        for l in 1..=4 {
            let pts = super_points(l, -5000.0, 5000.0)?;
            for w in pts.windows(2) {
                interval_type_of_gap(l, w[1] - w[0])?;
            }
        }
        Ok((true, "levels 1..=4 over [-5000, 5000]".into()))
    });
    rec.check("letter frequency tends to 1/tau", || {
        let est = letter_frequency_estimate(30)?;
        let err = (est - 1.0 / TAU).abs();
        Ok((err < 1e-12, format!("error {err:e}")))
    });
}

fn potential_suite(rec: &mut Recorder) {
    rec.check("zeta values", || {
        let ok = zeta(0.0) == 160.0 / 27.0
            && zeta(1.0 / 3.0) == 0.0
            && (zeta(0.25) - 52.0 / 27.0).abs() < 1e-14
            && zeta(0.5) == 0.0;
        Ok((ok, "zeta(0) = 160/27, zeta(1/4) = 52/27, zeta(1/3) = 0".into()))
    });
    rec.check("C1 joins", || {
        let mut worst = 0.0f64;
        for p in [0.25, 1.0 / 3.0, -0.25, -1.0 / 3.0] {
            worst = worst.max((zeta_prime(p - 1e-12) - zeta_prime(p + 1e-12)).abs());
            worst = worst.max((zeta(p - 1e-12) - zeta(p + 1e-12)).abs());
        }
        Ok((worst < 1e-6, format!("max jump {worst:e}")))
    });
    rec.check("second derivative", || {
        let ok = zeta_second(0.0) == SecondDerivative::Value(-128.0)
            && zeta_second(1.0 / 3.0)
                == SecondDerivative::OneSided {
                    inner: 896.0,
                    outer: 0.0,
                }
            && min_lambda_nonminimal() == 1.0 / 32.0;
        Ok((ok, "zeta''(0) = -128, one-sided at 1/3".into()))
    });
    rec.check("V scales with lambda", || {
        let (one, three) = (PotentialSpec::default(), PotentialSpec::new(3.0)?);
        let ok = (0..500).all(|k| {
            let x = -40.0 + 0.161 * k as f64;
            three.v(x) == 3.0 * one.v(x)
        });
        Ok((ok, "500 points".into()))
    });
    rec.check("V' matches finite differences", || {
        let spec = PotentialSpec::default();
        let mut worst = 0.0f64;
        let mut used = 0;
        for k in 0..3000 {
            let x = -30.0 + 0.0201 * k as f64;
            let h = 1e-7;
            let vp = spec.v_prime(x);
            let fd = (spec.v(x + h) - spec.v(x - h)) / (2.0 * h);
            let near_kink = [x - h, x + h].iter().any(|&y| {
                let (a, b) = alpha_beta(y);
                let off = (y - crate::potential::selected_point(y).to_f64()).abs();
                (off - 0.25).abs() < 1e-5 || (off - 1.0 / 3.0).abs() < 1e-5 || (2.0 * y - (a + b).to_f64()).abs() < 1e-5
            });
            if !near_kink {
                worst = worst.max((fd - vp).abs());
                used += 1;
            }
        }
        Ok((worst < 1e-5, format!("{used} points, max error {worst:e}")))
    });
    rec.check("equivariance on matched patches", || {
        let spec = PotentialSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pairs = 0;
        while pairs < 500 {
            let k = rng.gen_range(-700i64..700);
            let p = point(k)?;
            let x = p + GoldenNumber::new(rng.gen_range(-3..=3), rng.gen_range(-2..=2));
            let start = rng.gen_range(-700i64..700);
            let Some(y) = matched_partner(x, start..start + 200)? else {
                continue;
            };
            pairs += 1;
            if spec.v(x) != spec.v(y) || !check_equivariance(x, y) {
                return Ok((false, format!("x = {x}, y = {y}")));
            }
        }
        Ok((true, format!("{pairs} exact pairs")))
    });
}

fn solver_suite(rec: &mut Recorder) {
    let params = AilParams::new(AnchorFn::default_linear(), 300);
    let sol = solve_fixed_point(&params);
    rec.check("contraction ratio", || {
        let sol = sol.clone()?;
        let worst = sol.step_ratios().into_iter().fold(0.0, f64::max);
        Ok((
            worst <= 1.0 / 32.0 + 1e-9,
            format!("observed ratio {worst:e} (bound 1/32)"),
        ))
    });
    rec.check("convergence", || {
        let sol = sol.clone()?;
        Ok((
            sol.iterations <= 12 && sol.final_delta <= 1e-12,
            format!("{} iterations, last change {:e}", sol.iterations, sol.final_delta),
        ))
    });
    rec.check("equilibrium residual", || {
        let sol = sol.clone()?;
        let r = equilibrium_residual_trimmed(&sol.config, &PotentialSpec::default(), 2)?;
        Ok((r <= 1e-9, format!("residual {r:e}")))
    });
    rec.check("stays within tau/62 of the anchor", || {
        let sol = sol.clone()?;
        let d = sol.max_deviation();
        Ok((d <= TAU / 62.0, format!("max deviation {d}")))
    });
    rec.check("tridiagonal solve agrees", || {
        let sol = sol.clone()?;
        let g = AnchorValues::new(&params.anchor, params.n)?;
        let plain = tridiagonal_solve(params.n as usize, 1.0 / 128.0, &g.interior_f64())?;
        let shifted = solve_tridiagonal(&params, true)?;
        let mut worst = 0.0f64;
        for i in -150..=150 {
            worst = worst.max((plain[(i + params.n) as usize] - sol.config.at(i)).abs());
            worst = worst.max((shifted.at(i) - sol.config.at(i)).abs());
        }
        Ok((worst < 1e-8, format!("max difference {worst:e}")))
    });
    rec.check("small lambda is rejected", || {
        let mut p = AilParams::new(AnchorFn::default_linear(), 20);
        p.lambda = 0.01;
        Ok((solve_fixed_point(&p).is_err(), "lambda = 0.01".into()))
    });
    rec.check("signed-square anchor has no rotation number", || {
        let sol = solve_fixed_point(&AilParams::new(AnchorFn::SignedSquare, 100))?;
        let r = has_rotation_number(&sol.config)?;
        Ok((r == Some(false), format!("{r:?}")))
    });
}

fn minimal_suite(rec: &mut Recorder) {
    let settings = OptimizerSettings {
        restarts: 4,
        ..Default::default()
    };
    rec.check("rotation number of every level is (3tau+1)/2", || {
        let target = rotation_number_level(1)?;
        let ok = (2..=6).all(|l| rotation_number_level(l).is_ok_and(|r| r == target));
        Ok((
            ok && (target.to_f64() - (3.0 * TAU + 1.0) / 2.0).abs() < 1e-15,
            target.to_string(),
        ))
    });
    rec.check("level-1 free points are antipodal", || {
        let opt = optimize_level(1, &settings)?;
        let spec = PotentialSpec::default();
        let mut worst = 0.0f64;
        for circle in 1..=2 {
            let c = opt.geometry.circumference(circle).to_f64();
            let d = opt.geometry.free(circle)[0];
            let e = opt.circles[circle - 1].energy;
            worst = worst
                .max((d - c / 2.0).abs())
                .max((e - level1_energy_closed_form(circle, d, &spec)).abs());
        }
        Ok((worst < 1e-6, format!("max deviation {worst:e}")))
    });
    for l in 1..=3u32 {
        rec.check(
            [
                "level-1 combinatorics",
                "level-2 combinatorics",
                "level-3 combinatorics",
            ][l as usize - 1],
            || {
                let opt = optimize_level(l, &settings)?;
                let cfg = lift(l, &opt.geometry, 3000)?;
                let mut spread = 0;
                let mut pass = true;
                let mut gap = (0.0, 0.0);
                for m in 1..=l {
                    let rep = combinatorics_certificate(&cfg, m)?;
                    spread = spread.max(rep.a.spread()).max(rep.b.spread());
                    pass &= rep.pass;
                    gap = (rep.max_gap, rep.gap_bound);
                }
                Ok((
                    pass,
                    format!(
                        "sheet levels 1..={l}: max spread {spread}, max gap {:.4} <= {:.4}",
                        gap.0, gap.1
                    ),
                ))
            },
        );
    }
}
