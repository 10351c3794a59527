use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::linalg::{invert, solve};
use super::special::{f_tail, t_tail_two_sided};
use super::StatsError;

/// Maps each observation to its period (1-based). The reference period is
/// absorbed into the intercept; every other period gets one 0/1 column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DummyDesign {
    period_of: Vec<usize>,
    period_count: usize,
    reference_period: usize,
    per_period: Vec<usize>,
}

impl DummyDesign {
    /// Design with the last period as reference.
    pub fn new(period_of: Vec<usize>, period_count: usize) -> Result<Self, StatsError> {
        Self::with_reference(period_of, period_count, period_count)
    }

    pub fn with_reference(
        period_of: Vec<usize>,
        period_count: usize,
        reference_period: usize,
    ) -> Result<Self, StatsError> {
        if period_count < 2 {
            return Err(StatsError::InvalidArgument(
                "dummy design needs at least 2 periods",
            ));
        }
        if !(1..=period_count).contains(&reference_period) {
            return Err(StatsError::PeriodOutOfRange {
                index: reference_period,
                period_count,
            });
        }
        let mut per_period = alloc::vec![0usize; period_count];
        for &p in &period_of {
            if !(1..=period_count).contains(&p) {
                return Err(StatsError::PeriodOutOfRange {
                    index: p,
                    period_count,
                });
            }
            per_period[p - 1] += 1;
        }
        if let Some(p) = per_period.iter().position(|&c| c == 0) {
            return Err(StatsError::RankDeficient(p + 1));
        }
        Ok(DummyDesign {
            period_of,
            period_count,
            reference_period,
            per_period,
        })
    }

    pub fn n(&self) -> usize {
        self.period_of.len()
    }

    pub fn period_count(&self) -> usize {
        self.period_count
    }

    pub fn reference_period(&self) -> usize {
        self.reference_period
    }

    pub fn period_of(&self) -> &[usize] {
        &self.period_of
    }

    /// Periods that own a dummy column, in column order.
    pub fn dummy_periods(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.period_count).filter(move |&p| p != self.reference_period)
    }

    /// Column (1-based, 0 is the intercept) of the dummy for period `p`.
    fn column(&self, p: usize) -> Option<usize> {
        match p.cmp(&self.reference_period) {
            core::cmp::Ordering::Less => Some(p),
            core::cmp::Ordering::Equal => None,
            core::cmp::Ordering::Greater => Some(p - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CoefStat {
    pub standard_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

/// Goodness-of-fit figures and the regression ANOVA. `degenerate` is set
/// when the response is constant or the fit is exact, where R² or F lose
/// their usual meaning.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RegressionSummary {
    pub n: usize,
    pub parameters: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub multiple_r: f64,
    pub residual_se: f64,
    pub ss_regression: f64,
    pub ss_residual: f64,
    pub ss_total: f64,
    pub df_regression: usize,
    pub df_residual: usize,
    pub ms_regression: f64,
    pub ms_residual: f64,
    pub f_stat: f64,
    pub f_significance: f64,
    pub degenerate: bool,
}

/// `1 − (1 − r2)(n − 1)/(n − parameters)`, `parameters` counting the intercept.
pub fn adjusted_r2(r2: f64, n: usize, parameters: usize) -> f64 {
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - parameters as f64)
}

impl RegressionSummary {
    /// Diagnostics from the regression and residual sums of squares of a
    /// model with `parameters` coefficients (intercept included) fitted to
    /// `n` observations.
    pub fn from_sums(
        ss_regression: f64,
        ss_residual: f64,
        n: usize,
        parameters: usize,
    ) -> Result<Self, StatsError> {
        Self::with_zero(ss_regression, ss_residual, n, parameters, 0.0)
    }

    fn with_zero(
        ss_regression: f64,
        ss_residual: f64,
        n: usize,
        parameters: usize,
        zero: f64,
    ) -> Result<Self, StatsError> {
        if parameters < 2 || n <= parameters {
            return Err(StatsError::TooFewObservations { n, parameters });
        }
        if !(ss_regression >= 0.0 && ss_residual >= 0.0) {
            return Err(StatsError::InvalidArgument(
                "sums of squares must be non-negative",
            ));
        }
        let df_regression = parameters - 1;
        let df_residual = n - parameters;
        let ss_total = ss_regression + ss_residual;
        let ms_regression = ss_regression / df_regression as f64;
        let ms_residual = ss_residual / df_residual as f64;
        let constant = ss_total <= zero;
        let exact = ss_residual <= zero;

        let r2 = if constant {
            0.0
        } else {
            ss_regression / ss_total
        };
        let (f_stat, f_significance) = if constant {
            (0.0, 1.0)
        } else if exact {
            (f64::INFINITY, 0.0)
        } else {
            let f = ms_regression / ms_residual;
            (f, f_tail(f, df_regression as f64, df_residual as f64)?)
        };
        Ok(RegressionSummary {
            n,
            parameters,
            r2,
            adj_r2: adjusted_r2(r2, n, parameters),
            multiple_r: libm::sqrt(r2),
            residual_se: libm::sqrt(ms_residual),
            ss_regression,
            ss_residual,
            ss_total,
            df_regression,
            df_residual,
            ms_regression,
            ms_residual,
            f_stat,
            f_significance,
            degenerate: constant || exact,
        })
    }
}

/// Least-squares fit of `y = intercept + Σ coefficient_p · [period = p]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OlsFit {
    pub intercept: f64,
    /// One entry per non-reference period, in ascending period order.
    pub coefficients: Vec<f64>,
    pub period_count: usize,
    pub reference_period: usize,
    pub intercept_stat: CoefStat,
    pub coef_stats: Vec<CoefStat>,
    pub summary: RegressionSummary,
}

impl OlsFit {
    /// Fitted value for period `p` (1-based).
    pub fn fitted(&self, p: usize) -> Option<f64> {
        if !(1..=self.period_count).contains(&p) {
            return None;
        }
        Some(match p.cmp(&self.reference_period) {
            core::cmp::Ordering::Less => self.intercept + self.coefficients[p - 1],
            core::cmp::Ordering::Equal => self.intercept,
            core::cmp::Ordering::Greater => self.intercept + self.coefficients[p - 2],
        })
    }
}

fn coef_stat(coef: f64, se: f64, df: usize) -> Result<CoefStat, StatsError> {
    let (t_stat, p_value) = if se > 0.0 {
        let t = coef / se;
        (t, t_tail_two_sided(t, df as f64)?)
    } else if coef == 0.0 {
        (0.0, 1.0)
    } else {
        (libm::copysign(f64::INFINITY, coef), 0.0)
    };
    Ok(CoefStat {
        standard_error: se,
        t_stat,
        p_value,
    })
}

/// Solves the normal equations `XᵀX β = Xᵀy` of the dummy design by
/// Gaussian elimination and derives the usual regression diagnostics.
pub fn ols_dummy_fit(values: &[f64], design: &DummyDesign) -> Result<OlsFit, StatsError> {
    let n = design.n();
    let k = design.period_count;
    if values.len() != n {
        return Err(StatsError::LengthMismatch {
            values: values.len(),
            rows: n,
        });
    }
    if n <= k {
        return Err(StatsError::TooFewObservations { n, parameters: k });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }

    let mut xtx = alloc::vec![0.0; k * k];
    let mut xty = alloc::vec![0.0; k];
    xtx[0] = n as f64;
    for (&p, &y) in design.period_of.iter().zip(values) {
        xty[0] += y;
        if let Some(c) = design.column(p) {
            xty[c] += y;
        }
    }
    for p in design.dummy_periods() {
        let c = design.column(p).unwrap();
        let count = design.per_period[p - 1] as f64;
        xtx[c] = count;
        xtx[c * k] = count;
        xtx[c * k + c] = count;
    }

    let beta = solve(&xtx, &xty)?;
    let inverse = invert(&xtx, k)?;

    let y_mean = super::mean(values);
    let (mut ss_res, mut ss_reg, mut raw) = (0.0, 0.0, 0.0);
    for (&p, &y) in design.period_of.iter().zip(values) {
        let fitted = beta[0] + design.column(p).map_or(0.0, |c| beta[c]);
        ss_res += (y - fitted) * (y - fitted);
        ss_reg += (fitted - y_mean) * (fitted - y_mean);
        raw += y * y;
    }
    let summary = RegressionSummary::with_zero(ss_reg, ss_res, n, k, 1e-20 * raw)?;

    let se = |c: usize| summary.residual_se * libm::sqrt(inverse[c * k + c].max(0.0));
    let df = summary.df_residual;
    let intercept_stat = coef_stat(beta[0], se(0), df)?;
    let coef_stats = (1..k)
        .map(|c| coef_stat(beta[c], se(c), df))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        period_count: k,
        reference_period: design.reference_period,
        intercept_stat,
        coef_stats,
        summary,
    })
}
