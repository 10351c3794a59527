use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::special::f_tail;
use super::StatsError;

/// Balanced `a × b × r` layout: factor A levels (weekdays), factor B levels
/// (periods), `r` replicates per cell. `values[(i * b + j) * r + k]` is
/// replicate `k` of cell `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialSample {
    levels_a: usize,
    levels_b: usize,
    replicates: usize,
    values: Vec<f64>,
}

impl FactorialSample {
    pub fn new(
        levels_a: usize,
        levels_b: usize,
        replicates: usize,
        values: Vec<f64>,
    ) -> Result<Self, StatsError> {
        if levels_a < 2 || levels_b < 2 || replicates < 2 {
            return Err(StatsError::TooSmallDesign {
                a: levels_a,
                b: levels_b,
                r: replicates,
            });
        }
        let expected = levels_a * levels_b * replicates;
        if values.len() != expected {
            return Err(StatsError::Unbalanced {
                expected,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
        Ok(FactorialSample {
            levels_a,
            levels_b,
            replicates,
            values,
        })
    }

    /// Builds a sample from per-cell replicate lists, indexed `cells[i][j]`.
    pub fn from_cells(cells: &[Vec<Vec<f64>>]) -> Result<Self, StatsError> {
        let a = cells.len();
        let b = cells.first().map_or(0, Vec::len);
        let r = cells
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len);
        let balanced = cells
            .iter()
            .all(|row| row.len() == b && row.iter().all(|cell| cell.len() == r));
        if !balanced {
            return Err(StatsError::Unbalanced {
                expected: a * b * r,
                actual: cells.iter().flatten().map(Vec::len).sum(),
            });
        }
        let values = cells.iter().flatten().flatten().copied().collect();
        FactorialSample::new(a, b, r, values)
    }

    pub fn levels_a(&self) -> usize {
        self.levels_a
    }

    pub fn levels_b(&self) -> usize {
        self.levels_b
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.levels_b + j) * self.replicates + k]
    }

    fn cell(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.levels_b + j) * self.replicates;
        &self.values[start..start + self.replicates]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnovaRow {
    pub ss: f64,
    pub df: usize,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

/// Two-factor ANOVA table with interaction. `degenerate` is set when the
/// error mean square is zero, in which case factor F values are `+∞`
/// (p = 0) or absent when the factor's own mean square is zero as well.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnovaTable {
    pub factor_a: AnovaRow,
    pub factor_b: AnovaRow,
    pub interaction: AnovaRow,
    pub error: AnovaRow,
    pub total: AnovaRow,
    pub degenerate: bool,
}

impl AnovaTable {
    pub fn rows(&self) -> [(&'static str, &AnovaRow); 5] {
        [
            ("factor_a", &self.factor_a),
            ("factor_b", &self.factor_b),
            ("interaction", &self.interaction),
            ("error", &self.error),
            ("total", &self.total),
        ]
    }
}

pub fn two_way_anova(sample: &FactorialSample) -> Result<AnovaTable, StatsError> {
    let (a, b, r) = (sample.levels_a, sample.levels_b, sample.replicates);
    let n = (a * b * r) as f64;
    let grand = sample.values.iter().sum::<f64>() / n;

    let mut cell_means = alloc::vec![0.0; a * b];
    for i in 0..a {
        for j in 0..b {
            cell_means[i * b + j] = super::mean(sample.cell(i, j));
        }
    }
    let a_means: Vec<f64> = (0..a)
        .map(|i| cell_means[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let b_means: Vec<f64> = (0..b)
        .map(|j| (0..a).map(|i| cell_means[i * b + j]).sum::<f64>() / a as f64)
        .collect();

    let sq = |x: f64| x * x;
    let ss_a = (b * r) as f64 * a_means.iter().map(|m| sq(m - grand)).sum::<f64>();
    let ss_b = (a * r) as f64 * b_means.iter().map(|m| sq(m - grand)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    for i in 0..a {
        for j in 0..b {
            let m = cell_means[i * b + j];
            ss_ab += sq(m - a_means[i] - b_means[j] + grand);
            ss_e += sample.cell(i, j).iter().map(|y| sq(y - m)).sum::<f64>();
        }
    }
    ss_ab *= r as f64;
    let ss_t: f64 = sample.values.iter().map(|y| sq(y - grand)).sum();

    let df_a = a - 1;
    let df_b = b - 1;
    let df_ab = df_a * df_b;
    let df_e = a * b * (r - 1);
    let ms_e = ss_e / df_e as f64;

    // rounding noise in a sum of squares is O(eps² · Σy²)
    let raw_scale: f64 = sample.values.iter().map(|y| y * y).sum();
    let zero = 1e-20 * raw_scale.max(f64::MIN_POSITIVE);
    let degenerate = ss_e <= zero;

    let factor = |ss: f64, df: usize| -> Result<AnovaRow, StatsError> {
        let ms = ss / df as f64;
        let (f, p) = if degenerate {
            if ss <= zero {
                (None, None)
            } else {
                (Some(f64::INFINITY), Some(0.0))
            }
        } else {
            let f = ms / ms_e;
            (Some(f), Some(f_tail(f, df as f64, df_e as f64)?))
        };
        Ok(AnovaRow {
            ss,
            df,
            ms: Some(ms),
            f,
            p,
        })
    };

    Ok(AnovaTable {
        factor_a: factor(ss_a, df_a)?,
        factor_b: factor(ss_b, df_b)?,
        interaction: factor(ss_ab, df_ab)?,
        error: AnovaRow {
            ss: ss_e,
            df: df_e,
            ms: Some(ms_e),
            f: None,
            p: None,
        },
        total: AnovaRow {
            ss: ss_t,
            df: a * b * r - 1,
            ms: None,
            f: None,
            p: None,
        },
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_unreplicated_or_ragged_designs() {
        assert!(matches!(
            FactorialSample::new(2, 2, 1, vec![0.0; 4]),
            Err(StatsError::TooSmallDesign { .. })
        ));
        assert!(matches!(
            FactorialSample::new(2, 2, 2, vec![0.0; 7]),
            Err(StatsError::Unbalanced {
                expected: 8,
                actual: 7
            })
        ));
        let ragged = vec![
            vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            vec![vec![1.0, 2.0], vec![1.0]],
        ];
        assert!(matches!(
            FactorialSample::from_cells(&ragged),
            Err(StatsError::Unbalanced { .. })
        ));
        assert!(matches!(
            FactorialSample::new(2, 2, 2, vec![0.0, 1.0, f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Err(StatsError::NonFinite(2))
        ));
    }

    #[test]
    fn constant_sample_is_flagged_degenerate() {
        let s = FactorialSample::new(2, 2, 2, vec![5.0; 8]).unwrap();
        let t = two_way_anova(&s).unwrap();
        assert!(t.degenerate);
        for (_, row) in t.rows() {
            assert_eq!(row.ss, 0.0);
            assert!(row.p.is_none());
        }
    }

    #[test]
    fn zero_error_with_real_effect_gives_infinite_f() {
        // cells differ along B, replicates identical
        let s = FactorialSample::new(2, 2, 2, vec![0.0, 0.0, 10.0, 10.0, 0.0, 0.0, 10.0, 10.0])
            .unwrap();
        let t = two_way_anova(&s).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.factor_b.f, Some(f64::INFINITY));
        assert_eq!(t.factor_b.p, Some(0.0));
        assert_eq!(t.factor_a.f, None);
    }

    #[test]
    fn small_fixture_matches_hand_sums() {
        // B means 0 and 10, replicates ±1: cells (i, j) = {m-1, m+1}
        let v = vec![-1.0, 1.0, 9.0, 11.0, -1.0, 1.0, 9.0, 11.0];
        let t = two_way_anova(&FactorialSample::new(2, 2, 2, v).unwrap()).unwrap();
        // grand mean 5: SS_B = 2·2·(25 + 25) = 200, SS_E = 8·1 = 8
        assert!((t.factor_b.ss - 200.0).abs() < 1e-12);
        assert!(t.factor_a.ss.abs() < 1e-12);
        assert!(t.interaction.ss.abs() < 1e-12);
        assert!((t.error.ss - 8.0).abs() < 1e-12);
        assert!((t.total.ss - 208.0).abs() < 1e-12);
        assert_eq!((t.error.df, t.total.df), (4, 7));
        assert!((t.factor_b.f.unwrap() - 100.0).abs() < 1e-10);
        assert!(t.factor_b.p.unwrap() < 1e-3);
        assert!(!t.degenerate);
    }
}
