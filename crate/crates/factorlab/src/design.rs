//! Factor catalogs, full factorial enumeration, and outcome tables.
//!
//! A [`Factor`] is a named design variable with at least two discrete levels.
//! A [`Design`] is an ordered factor list together with the enumeration of
//! every level combination (one [`Treatment`] per combination). An
//! [`OutcomeTable`] attaches measured metric values to each treatment and is
//! the input to the ANOVA, correlation, and sequential-simulation engines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A categorical design variable: a short symbol, a human-readable name, and
/// an ordered list of at least two distinct level labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub symbol: String,
    pub name: String,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new(
        symbol: impl Into<String>,
        name: impl Into<String>,
        levels: &[&str],
    ) -> Result<Self> {
        let factor = Factor {
            symbol: symbol.into(),
            name: name.into(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        };
        factor.check()?;
        Ok(factor)
    }

    fn check(&self) -> Result<()> {
        if self.symbol.is_empty() {
            return Err(Error::design("factor symbol must be non-empty"));
        }
        if self.levels.len() < 2 {
            return Err(Error::design(format!(
                "factor '{}' has {} level(s); at least 2 required",
                self.symbol,
                self.levels.len()
            )));
        }
        let distinct: BTreeSet<&str> = self.levels.iter().map(String::as_str).collect();
        if distinct.len() != self.levels.len() {
            return Err(Error::design(format!(
                "factor '{}' has duplicate level labels",
                self.symbol
            )));
        }
        Ok(())
    }

    /// Index of a level label within this factor.
    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }
}

/// One cell of a factorial design: a level index for every design factor, in
/// design factor order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Treatment {
    levels: Vec<usize>,
}

impl Treatment {
    pub fn new(levels: Vec<usize>) -> Self {
        Treatment { levels }
    }

    /// Level index assigned to the factor at design position `factor_idx`.
    pub fn level(&self, factor_idx: usize) -> usize {
        self.levels[factor_idx]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// A copy with the level of one factor replaced.
    pub fn with_level(&self, factor_idx: usize, level: usize) -> Treatment {
        let mut levels = self.levels.clone();
        levels[factor_idx] = level;
        Treatment { levels }
    }
}

/// An ordered factor list plus the full enumeration of its treatments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    factors: Vec<Factor>,
    treatments: Vec<Treatment>,
}

impl Design {
    /// Builds the full factorial design over `factors`: every level
    /// combination, enumerated in lexicographic order of level indices with
    /// the last factor varying fastest.
    pub fn full_factorial(factors: Vec<Factor>) -> Result<Design> {
        if factors.is_empty() {
            return Err(Error::design("a design needs at least one factor"));
        }
        let mut seen = BTreeSet::new();
        for f in &factors {
            f.check()?;
            if !seen.insert(f.symbol.clone()) {
                return Err(Error::design(format!(
                    "duplicate factor symbol '{}'",
                    f.symbol
                )));
            }
        }
        let count: usize = factors.iter().map(|f| f.levels.len()).product();
        let mut treatments = Vec::with_capacity(count);
        let mut current = vec![0usize; factors.len()];
        loop {
            treatments.push(Treatment::new(current.clone()));
            // Increment the mixed-radix counter, last factor fastest.
            let mut pos = factors.len();
            loop {
                if pos == 0 {
                    return Ok(Design {
                        factors,
                        treatments,
                    });
                }
                pos -= 1;
                current[pos] += 1;
                if current[pos] < factors[pos].levels.len() {
                    break;
                }
                current[pos] = 0;
            }
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn treatments(&self) -> &[Treatment] {
        &self.treatments
    }

    /// Position of a factor symbol in the design order.
    pub fn factor_index(&self, symbol: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.symbol == symbol)
    }

    pub fn factor(&self, symbol: &str) -> Result<&Factor> {
        self.factor_index(symbol)
            .map(|i| &self.factors[i])
            .ok_or_else(|| Error::design(format!("unknown factor symbol '{symbol}'")))
    }

    /// Checks that a treatment assigns exactly one in-range level per factor.
    pub fn check_treatment(&self, t: &Treatment) -> Result<()> {
        if t.levels().len() != self.factors.len() {
            return Err(Error::design(format!(
                "treatment assigns {} factors, design has {}",
                t.levels().len(),
                self.factors.len()
            )));
        }
        for (i, (&level, factor)) in t.levels().iter().zip(&self.factors).enumerate() {
            if level >= factor.levels.len() {
                return Err(Error::design(format!(
                    "treatment level index {level} out of range for factor '{}' (position {i})",
                    factor.symbol
                )));
            }
        }
        Ok(())
    }

    /// Canonical key `sym=level;sym=level;...` in design factor order.
    pub fn encode_treatment(&self, t: &Treatment) -> Result<String> {
        self.check_treatment(t)?;
        let parts: Vec<String> = self
            .factors
            .iter()
            .zip(t.levels())
            .map(|(f, &l)| format!("{}={}", f.symbol, f.levels[l]))
            .collect();
        Ok(parts.join(";"))
    }

    /// Inverse of [`Design::encode_treatment`]. The key must name every design
    /// factor exactly once with a known level label; order is irrelevant.
    pub fn decode_treatment(&self, key: &str) -> Result<Treatment> {
        let mut levels: Vec<Option<usize>> = vec![None; self.factors.len()];
        for part in key.split(';').filter(|p| !p.is_empty()) {
            let (sym, label) = part
                .split_once('=')
                .ok_or_else(|| Error::design(format!("malformed assignment '{part}'")))?;
            let idx = self
                .factor_index(sym)
                .ok_or_else(|| Error::design(format!("unknown factor symbol '{sym}'")))?;
            let level = self.factors[idx]
                .level_index(label)
                .ok_or_else(|| Error::design(format!("unknown level '{label}' for '{sym}'")))?;
            if levels[idx].replace(level).is_some() {
                return Err(Error::design(format!("factor '{sym}' assigned twice")));
            }
        }
        let levels: Vec<usize> = levels
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| Error::design(format!(
                "factor '{}' missing from key",
                self.factors[i].symbol
            ))))
            .collect::<Result<_>>()?;
        Ok(Treatment::new(levels))
    }

    /// A design restricted to the given factor positions, treatments re-enumerated.
    pub fn subdesign(&self, factor_indices: &[usize]) -> Result<Design> {
        let factors: Vec<Factor> = factor_indices
            .iter()
            .map(|&i| self.factors[i].clone())
            .collect();
        Design::full_factorial(factors)
    }
}

/// One measured row: a treatment and its metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub treatment: Treatment,
    pub metrics: BTreeMap<String, f64>,
}

/// Measured metric values for (ideally) every treatment of a design, with one
/// factor designated as the test dataset.
///
/// The table tolerates invalid states (missing rows, duplicates, range
/// violations) so that [`OutcomeTable::validate`] can report them; the
/// analysis engines require a clean validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeTable {
    design: Design,
    dataset_factor: String,
    rows: Vec<OutcomeRow>,
}

impl OutcomeTable {
    pub fn new(design: Design, dataset_factor: &str, rows: Vec<OutcomeRow>) -> Result<Self> {
        design.factor(dataset_factor)?;
        Ok(OutcomeTable {
            design,
            dataset_factor: dataset_factor.to_string(),
            rows,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    /// Symbol of the factor designated as the test dataset.
    pub fn dataset_factor(&self) -> &str {
        &self.dataset_factor
    }

    /// Design position of the dataset factor.
    pub fn dataset_factor_index(&self) -> usize {
        self.design
            .factor_index(&self.dataset_factor)
            .expect("dataset factor checked at construction")
    }

    /// Design positions of the non-dataset factors, in design order.
    pub fn design_factor_indices(&self) -> Vec<usize> {
        let ds = self.dataset_factor_index();
        (0..self.design.factors().len())
            .filter(|&i| i != ds)
            .collect()
    }

    pub fn rows(&self) -> &[OutcomeRow] {
        &self.rows
    }

    /// Metric-name set of the first row, the reference set for validation.
    pub fn metric_names(&self) -> Vec<String> {
        self.rows
            .first()
            .map(|r| r.metrics.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Checks the table against its design: one row per treatment, consistent
    /// metric sets, all values finite and inside `[0, 1]`.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let reference: BTreeSet<String> = self
            .rows
            .first()
            .map(|r| r.metrics.keys().cloned().collect())
            .unwrap_or_default();

        let mut counts: BTreeMap<&Treatment, usize> = BTreeMap::new();
        for row in &self.rows {
            let key = self
                .design
                .encode_treatment(&row.treatment)
                .unwrap_or_else(|_| format!("{:?}", row.treatment));
            if self.design.check_treatment(&row.treatment).is_err() {
                report.unknown_treatments.push(key.clone());
                continue;
            }
            *counts.entry(&row.treatment).or_insert(0) += 1;
            let set: BTreeSet<String> = row.metrics.keys().cloned().collect();
            if set != reference {
                report.inconsistent_metrics.push(key.clone());
            }
            for (metric, &value) in &row.metrics {
                if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                    report
                        .out_of_range
                        .push(format!("{key}: {metric}={value}"));
                }
            }
        }
        for (t, n) in &counts {
            if *n > 1 {
                let key = self.design.encode_treatment(t).unwrap();
                report.duplicates.push(format!("{key} (x{n})"));
            }
        }
        for t in self.design.treatments() {
            if !counts.contains_key(t) {
                report.missing.push(self.design.encode_treatment(t).unwrap());
            }
        }
        report
    }

    /// Validates and returns a design-consistency error when the table is not
    /// a complete, balanced, in-range single-replicate table.
    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::design(report.to_string()))
        }
    }

    /// Map from treatment to row index; requires a valid table.
    pub fn index(&self) -> BTreeMap<&Treatment, usize> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (&r.treatment, i))
            .collect()
    }
}

/// Outcome-table validation findings; empty in all categories means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Treatments of the design with no row.
    pub missing: Vec<String>,
    /// Treatments with more than one row (replicates are rejected).
    pub duplicates: Vec<String>,
    /// Rows whose treatment does not fit the design.
    pub unknown_treatments: Vec<String>,
    /// `key: metric=value` entries outside `[0, 1]` or non-finite.
    pub out_of_range: Vec<String>,
    /// Rows whose metric-name set differs from the first row's.
    pub inconsistent_metrics: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.missing.is_empty()
            && self.duplicates.is_empty()
            && self.unknown_treatments.is_empty()
            && self.out_of_range.is_empty()
            && self.inconsistent_metrics.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "table valid");
        }
        let mut parts = Vec::new();
        let clip = |v: &[String]| {
            let shown: Vec<&str> = v.iter().take(5).map(String::as_str).collect();
            let suffix = if v.len() > 5 { ", ..." } else { "" };
            format!("{}{}", shown.join(", "), suffix)
        };
        if !self.missing.is_empty() {
            parts.push(format!(
                "{} missing treatment(s): {}",
                self.missing.len(),
                clip(&self.missing)
            ));
        }
        if !self.duplicates.is_empty() {
            parts.push(format!(
                "{} duplicated treatment(s): {}",
                self.duplicates.len(),
                clip(&self.duplicates)
            ));
        }
        if !self.unknown_treatments.is_empty() {
            parts.push(format!(
                "{} row(s) outside the design: {}",
                self.unknown_treatments.len(),
                clip(&self.unknown_treatments)
            ));
        }
        if !self.out_of_range.is_empty() {
            parts.push(format!(
                "{} out-of-range value(s): {}",
                self.out_of_range.len(),
                clip(&self.out_of_range)
            ));
        }
        if !self.inconsistent_metrics.is_empty() {
            parts.push(format!(
                "{} row(s) with inconsistent metric sets: {}",
                self.inconsistent_metrics.len(),
                clip(&self.inconsistent_metrics)
            ));
        }
        write!(f, "{}", parts.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level(symbol: &str) -> Factor {
        Factor::new(symbol, symbol.to_uppercase(), &["lo", "hi"]).unwrap()
    }

    #[test]
    fn full_factorial_cardinality() {
        let d = Design::full_factorial(vec![two_level("a"), two_level("b"), two_level("c")])
            .unwrap();
        assert_eq!(d.treatments().len(), 8);
    }

    #[test]
    fn paper_shaped_designs() {
        let mut factors: Vec<Factor> = ('a'..='i')
            .map(|c| two_level(&c.to_string()))
            .collect();
        factors.push(
            Factor::new("j", "Test dataset", &["d1", "d2", "d3", "d4", "d5"]).unwrap(),
        );
        let d = Design::full_factorial(factors.clone()).unwrap();
        assert_eq!(d.treatments().len(), 2560);

        factors.remove(5); // drop one two-level factor -> 2^8 x 5
        let d = Design::full_factorial(factors).unwrap();
        assert_eq!(d.treatments().len(), 1280);
    }

    #[test]
    fn enumeration_order_last_factor_fastest() {
        let d = Design::full_factorial(vec![
            two_level("a"),
            Factor::new("b", "B", &["x", "y", "z"]).unwrap(),
        ])
        .unwrap();
        let order: Vec<Vec<usize>> = d.treatments().iter().map(|t| t.levels().to_vec()).collect();
        assert_eq!(
            order,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
    }

    #[test]
    fn rejects_bad_factors() {
        assert!(Factor::new("a", "A", &["only"]).is_err());
        assert!(Factor::new("a", "A", &["x", "x"]).is_err());
        let dup = Design::full_factorial(vec![two_level("a"), two_level("a")]);
        assert!(dup.is_err());
        assert!(Design::full_factorial(vec![]).is_err());
    }

    #[test]
    fn encode_decode_example() {
        let d = Design::full_factorial(vec![
            Factor::new("a", "Model", &["resnet", "inception"]).unwrap(),
            Factor::new("b", "Train dataset", &["challenge", "full"]).unwrap(),
        ])
        .unwrap();
        let t = Treatment::new(vec![0, 1]);
        assert_eq!(d.encode_treatment(&t).unwrap(), "a=resnet;b=full");
        assert_eq!(d.decode_treatment("a=resnet;b=full").unwrap(), t);
        assert_eq!(d.decode_treatment("b=full;a=resnet").unwrap(), t);
        assert!(d.decode_treatment("z=foo").is_err());
        assert!(d.decode_treatment("a=resnet").is_err());
        assert!(d.decode_treatment("a=resnet;a=inception;b=full").is_err());
    }

    #[test]
    fn encode_decode_round_trip_everywhere() {
        let d = Design::full_factorial(vec![
            two_level("a"),
            Factor::new("b", "B", &["x", "y", "z"]).unwrap(),
            two_level("c"),
        ])
        .unwrap();
        for t in d.treatments() {
            let key = d.encode_treatment(t).unwrap();
            assert_eq!(&d.decode_treatment(&key).unwrap(), t);
        }
    }

    fn small_table() -> OutcomeTable {
        let d = Design::full_factorial(vec![two_level("a"), two_level("j")]).unwrap();
        let rows = d
            .treatments()
            .iter()
            .map(|t| OutcomeRow {
                treatment: t.clone(),
                metrics: BTreeMap::from([("auc".to_string(), 0.8)]),
            })
            .collect();
        OutcomeTable::new(d, "j", rows).unwrap()
    }

    #[test]
    fn validate_complete_table() {
        let table = small_table();
        let report = table.validate();
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn validate_flags_missing_row() {
        let mut table = small_table();
        let removed = table.rows.remove(1);
        let report = table.validate();
        assert!(!report.is_valid());
        let key = table.design.encode_treatment(&removed.treatment).unwrap();
        assert_eq!(report.missing, vec![key]);
    }

    #[test]
    fn validate_flags_duplicate_and_range() {
        let mut table = small_table();
        let mut dup = table.rows[0].clone();
        dup.metrics.insert("auc".to_string(), 1.3);
        table.rows.push(dup);
        let report = table.validate();
        assert_eq!(report.duplicates.len(), 1);
        assert_eq!(report.out_of_range.len(), 1);
        assert!(report.out_of_range[0].contains("auc=1.3"));
    }

    #[test]
    fn validate_flags_inconsistent_metrics() {
        let mut table = small_table();
        table.rows[2].metrics.insert("ap".to_string(), 0.5);
        let report = table.validate();
        assert_eq!(report.inconsistent_metrics.len(), 1);
    }
}
