//! Spearman rank correlations with Fisher-z confidence bounds, and
//! correlogram matrices across test datasets or across metrics.

use serde::{Deserialize, Serialize};

use crate::design::OutcomeTable;
use crate::error::{Error, Result};
use crate::metrics::ResponseSpec;
use crate::stats::normal_quantile;

/// Average ranks (1-based, ties get the mean rank of their group).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::stat("correlation undefined for a constant series"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average-ranked values.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::stat("spearman needs at least 3 observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::input("correlation inputs must be finite"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Fisher-z confidence interval for a correlation estimate:
/// `tanh(atanh(rho) +- z / sqrt(n - 3))`.
///
/// Returns the degenerate interval `[rho, rho]` when `|rho| = 1`.
pub fn spearman_ci(rho: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::stat(format!(
            "confidence bounds need n >= 4, got {n}"
        )));
    }
    if level <= 0.0 || level >= 1.0 {
        return Err(Error::input(format!("confidence level {level} out of (0,1)")));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::input(format!("rho {rho} out of [-1,1]")));
    }
    if rho.abs() == 1.0 {
        return Ok((rho, rho));
    }
    let z = normal_quantile(0.5 + level / 2.0);
    let half = z / ((n - 3) as f64).sqrt();
    let center = rho.atanh();
    Ok(((center - half).tanh(), (center + half).tanh()))
}

/// A single pairwise correlation with its 95% bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub rho: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    /// The confidence interval excludes zero.
    pub significant: bool,
}

impl CorrelationEstimate {
    fn from_series(x: &[f64], y: &[f64]) -> Result<Self> {
        let rho = spearman(x, y)?;
        let (ci_low, ci_high) = spearman_ci(rho, x.len(), 0.95)?;
        Ok(CorrelationEstimate {
            rho,
            ci_low,
            ci_high,
            n: x.len(),
            significant: ci_low > 0.0 || ci_high < 0.0,
        })
    }

    fn unit(n: usize) -> Self {
        CorrelationEstimate {
            rho: 1.0,
            ci_low: 1.0,
            ci_high: 1.0,
            n,
            significant: true,
        }
    }
}

/// Paired raw values for one axis pair, for external scatter plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPair {
    pub i: usize,
    pub j: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// A symmetric matrix of correlation estimates over datasets or metrics,
/// with the paired values behind each estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlogram {
    pub axis: Vec<String>,
    /// Row-major `axis.len() x axis.len()` matrix; diagonal rho is 1.
    pub matrix: Vec<Vec<CorrelationEstimate>>,
    /// One entry per unordered pair `i < j`.
    pub scatter: Vec<ScatterPair>,
}

impl Correlogram {
    fn from_series(axis: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        let k = axis.len();
        let n = series.first().map_or(0, Vec::len);
        let mut matrix = vec![vec![CorrelationEstimate::unit(n); k]; k];
        let mut scatter = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in i + 1..k {
                let est = CorrelationEstimate::from_series(&series[i], &series[j])?;
                matrix[i][j] = est;
                matrix[j][i] = est;
                scatter.push(ScatterPair {
                    i,
                    j,
                    x: series[i].clone(),
                    y: series[j].clone(),
                });
            }
        }
        Ok(Correlogram {
            axis,
            matrix,
            scatter,
        })
    }

    pub fn estimate(&self, i: usize, j: usize) -> &CorrelationEstimate {
        &self.matrix[i][j]
    }
}

/// Correlogram across the levels of the dataset factor: for every dataset
/// pair, the responses of identical design-factor treatments are paired and
/// rank-correlated.
pub fn correlogram_by_dataset(table: &OutcomeTable, spec: &ResponseSpec) -> Result<Correlogram> {
    table.require_valid()?;
    let design = table.design();
    let ds = table.dataset_factor_index();
    let dataset_levels = design.factors()[ds].levels.clone();
    if dataset_levels.len() < 2 {
        return Err(Error::design("dataset correlogram needs >= 2 dataset levels"));
    }
    let index = table.index();

    // One series per dataset, aligned on the shared design-factor treatments:
    // iterate the full enumeration and bucket by dataset level. Enumeration
    // order restricted to one dataset level is the same for all levels, so
    // positions pair up across series.
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); dataset_levels.len()];
    for t in design.treatments() {
        let row = &table.rows()[index[t]];
        let value = spec.response(&row.metrics)?;
        series[t.level(ds)].push(value);
    }
    Correlogram::from_series(dataset_levels, series)
}

/// Correlogram across metrics, restricted to one dataset level: for every
/// metric pair, values over that dataset's treatments are rank-correlated.
pub fn correlogram_by_metric(
    table: &OutcomeTable,
    dataset_level: &str,
    metric_names: &[String],
) -> Result<Correlogram> {
    table.require_valid()?;
    let design = table.design();
    let ds = table.dataset_factor_index();
    let level = design.factors()[ds]
        .level_index(dataset_level)
        .ok_or_else(|| {
            Error::design(format!(
                "unknown dataset level '{dataset_level}' for factor '{}'",
                table.dataset_factor()
            ))
        })?;
    if metric_names.len() < 2 {
        return Err(Error::input("metric correlogram needs >= 2 metrics"));
    }
    let index = table.index();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); metric_names.len()];
    for t in design.treatments() {
        if t.level(ds) != level {
            continue;
        }
        let row = &table.rows()[index[t]];
        for (k, name) in metric_names.iter().enumerate() {
            let v = row
                .metrics
                .get(name)
                .ok_or_else(|| Error::input(format!("metric '{name}' missing from table")))?;
            series[k].push(*v);
        }
    }
    Correlogram::from_series(metric_names.to_vec(), series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{Design, Factor, OutcomeRow, OutcomeTable, Treatment};
    use crate::metrics::Transform;
    use std::collections::BTreeMap;

    #[test]
    fn spearman_monotone_and_hand_value() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[2.0, 4.0, 6.0, 9.0]).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[9.0, 6.0, 4.0, 2.0]).unwrap(), -1.0);
        // d^2 formula: 1 - 6*6 / (3*8) = -0.5.
        let rho = spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert!((rho - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn spearman_rejects_degenerate_inputs() {
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let x = [0.3, 0.9, 0.1, 0.5, 0.4, 0.8];
        let y = [2.0, 1.0, 5.0, 4.0, 3.0, 0.5];
        let y2: Vec<f64> = y.iter().map(|v| (v * 3.0).exp()).collect();
        let a = spearman(&x, &y).unwrap();
        let b = spearman(&x, &y2).unwrap();
        assert!((a - b).abs() < 1e-12);
        // Symmetry.
        assert!((a - spearman(&y, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ci_hand_values() {
        let (lo, hi) = spearman_ci(0.0, 103, 0.95).unwrap();
        assert!((hi - (1.959_963_984_540_054_f64 / 10.0).tanh()).abs() < 1e-12);
        assert!((hi - 0.1935).abs() < 1e-3);
        assert!((lo + hi).abs() < 1e-12, "symmetric about 0");

        let (lo, hi) = spearman_ci(0.9, 28, 0.95).unwrap();
        assert!((lo - 0.793).abs() < 1e-3, "lo {lo}");
        assert!((hi - 0.953).abs() < 1e-3, "hi {hi}");

        assert_eq!(spearman_ci(1.0, 10, 0.95).unwrap(), (1.0, 1.0));
        assert!(spearman_ci(0.5, 3, 0.95).is_err());
    }

    #[test]
    fn ci_width_shrinks_with_n() {
        let mut widths = Vec::new();
        for n in [5usize, 10, 30, 100, 1000] {
            let (lo, hi) = spearman_ci(0.4, n, 0.95).unwrap();
            widths.push(hi - lo);
        }
        for w in widths.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    fn table_with_datasets(per_dataset: &[Vec<f64>]) -> OutcomeTable {
        let n = per_dataset[0].len();
        assert!(n.is_power_of_two());
        let k = n.trailing_zeros() as usize;
        let mut factors: Vec<Factor> = (0..k)
            .map(|i| {
                Factor::new(
                    ((b'a' + i as u8) as char).to_string(),
                    format!("F{i}"),
                    &["lo", "hi"],
                )
                .unwrap()
            })
            .collect();
        let labels: Vec<String> = (0..per_dataset.len()).map(|i| format!("d{i}")).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        factors.push(Factor::new("j", "Dataset", &refs).unwrap());
        let design = Design::full_factorial(factors).unwrap();
        let ds = design.factor_index("j").unwrap();
        let rows = design
            .treatments()
            .iter()
            .map(|t| {
                // Index of the design-factor combination: strip the dataset axis.
                let combo = t
                    .levels()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != ds)
                    .fold(0usize, |acc, (_, &l)| acc * 2 + l);
                OutcomeRow {
                    treatment: t.clone(),
                    metrics: BTreeMap::from([(
                        "auc".to_string(),
                        per_dataset[t.level(ds)][combo],
                    )]),
                }
            })
            .collect();
        OutcomeTable::new(design, "j", rows).unwrap()
    }

    #[test]
    fn dataset_correlogram_identical_and_monotone() {
        let base: Vec<f64> = (0..8).map(|i| 0.1 + 0.09 * i as f64).collect();
        let monotone: Vec<f64> = base.iter().map(|v| v * v).collect();
        let table = table_with_datasets(&[base.clone(), base.clone(), monotone]);
        let spec = ResponseSpec::new(&["auc"], Transform::Identity);
        let cg = correlogram_by_dataset(&table, &spec).unwrap();
        assert_eq!(cg.axis.len(), 3);
        for i in 0..3 {
            assert_eq!(cg.matrix[i][i].rho, 1.0);
            for j in 0..3 {
                assert_eq!(cg.matrix[i][j].rho, cg.matrix[j][i].rho);
                if i != j {
                    assert_eq!(cg.matrix[i][j].rho, 1.0, "monotone or identical copies");
                }
            }
        }
        assert_eq!(cg.scatter.len(), 3);
        assert_eq!(cg.scatter[0].x.len(), 8);
    }

    #[test]
    fn metric_correlogram_duplicate_and_negation() {
        let design = Design::full_factorial(vec![
            Factor::new("a", "A", &["lo", "hi"]).unwrap(),
            Factor::new("b", "B", &["lo", "hi"]).unwrap(),
            Factor::new("j", "Dataset", &["d0", "d1"]).unwrap(),
        ])
        .unwrap();
        let rows = design
            .treatments()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let v = 0.1 + 0.08 * (i as f64);
                OutcomeRow {
                    treatment: t.clone(),
                    metrics: BTreeMap::from([
                        ("m".to_string(), v),
                        ("m_copy".to_string(), v),
                        ("m_neg".to_string(), 1.0 - v),
                    ]),
                }
            })
            .collect();
        let table = OutcomeTable::new(design, "j", rows).unwrap();
        let names: Vec<String> = ["m", "m_copy", "m_neg"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cg = correlogram_by_metric(&table, "d0", &names).unwrap();
        assert_eq!(cg.estimate(0, 1).rho, 1.0);
        assert_eq!(cg.estimate(0, 2).rho, -1.0);
        assert!(correlogram_by_metric(&table, "nope", &names).is_err());
    }

    #[test]
    fn metric_correlogram_pair_count() {
        // 8 metrics -> 28 unordered off-diagonal pairs.
        let design = Design::full_factorial(vec![
            Factor::new("a", "A", &["lo", "hi"]).unwrap(),
            Factor::new("b", "B", &["lo", "hi"]).unwrap(),
            Factor::new("j", "Dataset", &["d0", "d1"]).unwrap(),
        ])
        .unwrap();
        let rows = design
            .treatments()
            .iter()
            .enumerate()
            .map(|(i, t)| OutcomeRow {
                treatment: t.clone(),
                metrics: (0..8)
                    .map(|m| (format!("m{m}"), 0.05 + 0.03 * ((i * (m + 2)) % 29) as f64))
                    .collect(),
            })
            .collect();
        let table = OutcomeTable::new(design, "j", rows).unwrap();
        let names: Vec<String> = (0..8).map(|m| format!("m{m}")).collect();
        let cg = correlogram_by_metric(&table, "d1", &names).unwrap();
        assert_eq!(cg.scatter.len(), 28);
    }
}
