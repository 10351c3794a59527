//! Test-side oracles and fixtures shared by the integration tests.
//!
//! Every oracle here is written from the textbook definition and shares no
//! code path with the library: sums of squares are literal triple sums, OLS
//! coefficients are cell means, and distribution tails are integrated
//! numerically from the densities.

#![allow(dead_code)]

use chrono::NaiveDate;
use flowcast_core::{Direction, PeriodCount, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

/// Relative agreement between two-way ANOVA and the triple-sum oracle.
pub const ANOVA_REL_TOL: f64 = 1e-9;
/// Agreement between OLS coefficients and closed-form cell means.
pub const OLS_COEF_TOL: f64 = 1e-9;
/// Residual orthogonality, relative to ‖y‖.
pub const ORTHOGONALITY_REL_TOL: f64 = 1e-6;
/// Tail probability versus numerical quadrature, absolute.
pub const TAIL_ABS_TOL: f64 = 1e-4;
/// Quadrature target accuracy; far below `TAIL_ABS_TOL`.
const QUADRATURE_EPS: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Reference figures for the Mon-Thu outbound regression
// ---------------------------------------------------------------------------

/// Mon-Thu outbound period means (intercept + coefficient, period 8 = intercept).
pub const MON_THU_MEANS: [f64; 8] = [
    2486.266667,
    1537.5,
    1199.0625,
    1298.8125,
    1646.75,
    2999.5625,
    1240.125,
    522.6875,
];

/// Reference Mon-Thu coefficients for periods 1..7.
pub const MON_THU_COEFFICIENTS: [f64; 7] = [
    1963.579167,
    1014.8125,
    676.375,
    776.125,
    1124.0625,
    2476.875,
    717.4375,
];

/// Reference four-formula parameter sets: (label, days, intercept, coefficients).
pub fn reference_formulas() -> Vec<(&'static str, Vec<Weekday>, f64, [f64; 7])> {
    use Weekday::*;
    vec![
        (
            "Mon-Thu",
            vec![Mon, Tue, Wed, Thu],
            522.69,
            [1963.58, 1014.81, 676.38, 776.13, 1124.06, 2476.88, 717.44],
        ),
        (
            "Fri",
            vec![Fri],
            641.5,
            [1711.83, 826.0, 591.0, 697.75, 949.0, 2660.25, 905.5],
        ),
        (
            "Sat",
            vec![Sat],
            616.0,
            [609.67, 692.5, 714.5, 825.75, 707.75, 869.25, 482.75],
        ),
        (
            "Sun",
            vec![Sun],
            653.75,
            [208.92, 528.75, 578.75, 694.5, 747.0, 821.75, 585.5],
        ),
    ]
}

/// Period means per weekday: Mon-Thu from the reference regression, the
/// other days from their reference formulas.
pub fn regime_means(day: Weekday) -> [f64; 8] {
    match day {
        Weekday::Mon | Weekday::Tue | Weekday::Wed | Weekday::Thu => MON_THU_MEANS,
        other => {
            let (_, _, intercept, coefs) = reference_formulas()
                .into_iter()
                .find(|(_, days, _, _)| days == &vec![other])
                .unwrap();
            let mut m = [intercept; 8];
            for (p, c) in coefs.iter().enumerate() {
                m[p] += c;
            }
            m
        }
    }
}

// ---------------------------------------------------------------------------
// Calendar helpers
// ---------------------------------------------------------------------------

/// 2014-07-07, a Monday.
pub fn monday() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 7, 7).unwrap()
}

pub fn day(offset: i64) -> NaiveDate {
    monday() + chrono::Duration::days(offset)
}

pub fn count(date: NaiveDate, period: usize, value: f64) -> PeriodCount {
    PeriodCount::observed(date, period, Direction::Outbound, "FUTIAN", value, "afc")
}

/// Zero-sum deviation pattern over four weeks; every rotation sums to zero.
const ROTATION: [f64; 4] = [3.0, -1.0, -2.0, 0.0];

/// Deterministic four-week outbound history for `days`. Each (day, period)
/// cell averages exactly the regime mean and the deviations cancel within
/// every day, so day means inside a regime are identical.
pub fn deterministic_history(days: &[Weekday], scale: f64) -> Vec<PeriodCount> {
    let mut out = Vec::new();
    for week in 0..4i64 {
        for &d in days {
            let date = day(7 * week + d.index() as i64);
            let means = regime_means(d);
            for p in 1..=8usize {
                let dev = ROTATION[(week as usize + d.index() + p) % 4];
                out.push(count(date, p, means[p - 1] + scale * dev));
            }
        }
    }
    out
}

/// Four random weeks, all seven days. Every (week, period) gets a shock shared
/// by all days plus independent noise per count: `sigma_week` and
/// `sigma_day` are their standard deviations.
pub fn random_history(seed: u64, sigma_week: f64, sigma_day: f64) -> Vec<PeriodCount> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let week_noise = Normal::new(0.0, sigma_week).unwrap();
    let day_noise = Normal::new(0.0, sigma_day).unwrap();
    let mut out = Vec::new();
    for week in 0..4i64 {
        let shocks: Vec<f64> = (0..8).map(|_| week_noise.sample(&mut rng)).collect();
        for d in Weekday::ALL {
            let date = day(7 * week + d.index() as i64);
            let means = regime_means(d);
            for p in 1..=8usize {
                let v = means[p - 1] + shocks[p - 1] + day_noise.sample(&mut rng);
                out.push(count(date, p, v));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// ANOVA oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BruteAnova {
    pub ss: [f64; 5],
    pub df: [f64; 5],
    pub ms: [f64; 4],
    pub f: [f64; 3],
}

/// Definitional two-way ANOVA over `y[i][j][k]`, every sum taken over all
/// individual observations.
#[allow(clippy::needless_range_loop)]
pub fn brute_anova(y: &[Vec<Vec<f64>>]) -> BruteAnova {
    let a = y.len();
    let b = y[0].len();
    let r = y[0][0].len();
    let n = (a * b * r) as f64;
    let grand: f64 = y.iter().flatten().flatten().sum::<f64>() / n;
    let row_mean = |i: usize| y[i].iter().flatten().sum::<f64>() / (b * r) as f64;
    let col_mean = |j: usize| (0..a).flat_map(|i| y[i][j].iter()).sum::<f64>() / (a * r) as f64;
    let cell_mean = |i: usize, j: usize| y[i][j].iter().sum::<f64>() / r as f64;

    let (mut ss_a, mut ss_b, mut ss_ab, mut ss_e, mut ss_t) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..a {
        for j in 0..b {
            for k in 0..r {
                let v = y[i][j][k];
                ss_a += (row_mean(i) - grand).powi(2);
                ss_b += (col_mean(j) - grand).powi(2);
                ss_ab += (cell_mean(i, j) - row_mean(i) - col_mean(j) + grand).powi(2);
                ss_e += (v - cell_mean(i, j)).powi(2);
                ss_t += (v - grand).powi(2);
            }
        }
    }
    let df = [
        (a - 1) as f64,
        (b - 1) as f64,
        ((a - 1) * (b - 1)) as f64,
        (a * b * (r - 1)) as f64,
        n - 1.0,
    ];
    let ms = [ss_a / df[0], ss_b / df[1], ss_ab / df[2], ss_e / df[3]];
    BruteAnova {
        ss: [ss_a, ss_b, ss_ab, ss_e, ss_t],
        df,
        ms,
        f: [ms[0] / ms[3], ms[1] / ms[3], ms[2] / ms[3]],
    }
}

pub fn random_layout(rng: &mut impl Rng, a: usize, b: usize, r: usize) -> Vec<Vec<Vec<f64>>> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let level = rng.random_range(-500.0..5000.0);
    let spread = rng.random_range(0.5..200.0);
    (0..a)
        .map(|i| {
            (0..b)
                .map(|j| {
                    let cell = level + 3.0 * i as f64 + 10.0 * j as f64;
                    (0..r).map(|_| cell + spread * noise.sample(rng)).collect()
                })
                .collect()
        })
        .collect()
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300)
}

// ---------------------------------------------------------------------------
// OLS oracle
// ---------------------------------------------------------------------------

/// Mean response per 1-based period.
pub fn cell_means(values: &[f64], periods: &[usize], period_count: usize) -> Vec<f64> {
    let mut sum = vec![0.0; period_count];
    let mut n = vec![0usize; period_count];
    for (&v, &p) in values.iter().zip(periods) {
        sum[p - 1] += v;
        n[p - 1] += 1;
    }
    sum.iter().zip(&n).map(|(s, &k)| s / k as f64).collect()
}

/// Balanced design: `reps` observations of each period, in shuffled order.
pub fn random_design(
    rng: &mut impl Rng,
    period_count: usize,
    reps: usize,
) -> (Vec<f64>, Vec<usize>) {
    let noise = Normal::new(0.0, rng.random_range(1.0..300.0)).unwrap();
    let levels: Vec<f64> = (0..period_count)
        .map(|_| rng.random_range(0.0..4000.0))
        .collect();
    let mut rows: Vec<(usize, f64)> = (1..=period_count)
        .flat_map(|p| std::iter::repeat_n(p, reps))
        .map(|p| (p, levels[p - 1] + noise.sample(rng)))
        .collect();
    for i in (1..rows.len()).rev() {
        let j = rng.random_range(0..=i);
        rows.swap(i, j);
    }
    (
        rows.iter().map(|r| r.1).collect(),
        rows.iter().map(|r| r.0).collect(),
    )
}

// ---------------------------------------------------------------------------
// Tail-probability oracle
// ---------------------------------------------------------------------------

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // split first so narrow peaks are not missed by the initial estimate
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, fa, fm, fb);
            adaptive(
                &f,
                lo,
                hi,
                fa,
                fm,
                fb,
                whole,
                QUADRATURE_EPS / pieces as f64,
                40,
            )
        })
        .sum()
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Student-t density with `df` degrees of freedom.
pub fn t_density(x: f64, df: f64) -> f64 {
    let ln_norm = -0.5 * df.ln() - ln_beta_fn(0.5, 0.5 * df);
    (ln_norm - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln()).exp()
}

/// `P(|T| > t)` as one minus the integral of the density over `[-t, t]`.
pub fn t_tail_oracle(t: f64, df: f64) -> f64 {
    1.0 - 2.0 * integrate(|x| t_density(x, df), 0.0, t.abs())
}

/// F density in the variable `w = √s`, i.e. `2w · f(w²)`; smooth at zero
/// even for one numerator degree of freedom.
fn f_density_sqrt(w: f64, d1: f64, d2: f64) -> f64 {
    if w == 0.0 {
        return if d1 == 1.0 {
            2.0 * (0.5 * d1 * (d1 / d2).ln() - ln_beta_fn(0.5 * d1, 0.5 * d2)).exp()
        } else {
            0.0
        };
    }
    let s = w * w;
    let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * s.ln()
        - 0.5 * (d1 + d2) * (1.0 + d1 * s / d2).ln()
        - ln_beta_fn(0.5 * d1, 0.5 * d2);
    2.0 * w * ln.exp()
}

/// `P(F > f)` as one minus the integral of the density over `[0, f]`.
pub fn f_tail_oracle(f: f64, d1: f64, d2: f64) -> f64 {
    1.0 - integrate(|w| f_density_sqrt(w, d1, d2), 0.0, f.sqrt())
}

/// (statistic, numerator df, denominator df) for the F tail check.
pub const F_POINTS: [(f64, f64, f64); 13] = [
    (0.05, 3.0, 20.0),
    (0.3, 2.0, 10.0),
    (0.8, 1.0, 5.0),
    (1.0, 5.0, 30.0),
    (1.2, 24.0, 200.0),
    (2.0, 4.0, 40.0),
    (2.5, 10.0, 10.0),
    (3.0, 6.0, 96.0),
    (8.0, 2.0, 50.0),
    (20.0, 1.0, 30.0),
    (5.5, 8.0, 60.0),
    (6.0, 7.0, 119.0),
    (11.5, 3.0, 96.0),
];

/// (statistic, df) for the two-sided t tail check.
pub const T_POINTS: [(f64, f64); 12] = [
    (0.02, 5.0),
    (0.5, 3.0),
    (2.1, 1.0),
    (1.0, 10.0),
    (1.5, 20.0),
    (2.0, 30.0),
    (3.5, 4.0),
    (2.5, 119.0),
    (3.0, 8.0),
    (4.0, 15.0),
    (5.0, 25.0),
    (5.1, 119.0),
];
