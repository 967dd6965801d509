//! Balanced multi-way fixed-effects ANOVA over an outcome table.
//!
//! For a balanced full factorial with one observation per cell, each effect
//! term's sum of squares comes from inclusion-exclusion over marginal cell
//! means, the residual pools every interaction above the configured order,
//! and the F statistic tests each term against that residual. Each row also
//! carries eta-squared effect sizes: the absolute fraction of total variance
//! and the relative fraction that ignores the residual and every term
//! involving the test-dataset factor.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{Design, OutcomeTable};
use crate::error::{Error, Result};
use crate::metrics::ResponseSpec;
use crate::stats::inc_beta;

/// A main effect or interaction: a non-empty set of factor symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EffectTerm {
    symbols: Vec<String>,
}

impl EffectTerm {
    pub fn new(symbols: &[&str]) -> Self {
        EffectTerm {
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Number of factors in the term (1 = main effect).
    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Colon-joined symbols, e.g. `a:b:d`.
    pub fn label(&self) -> String {
        self.symbols.join(":")
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols.iter().any(|s| s == symbol)
    }

    /// Distinct design positions of the term's factors, sorted.
    pub fn resolve(&self, design: &Design) -> Result<Vec<usize>> {
        if self.symbols.is_empty() {
            return Err(Error::design("effect term must name at least one factor"));
        }
        let mut idx = Vec::with_capacity(self.symbols.len());
        for s in &self.symbols {
            let i = design
                .factor_index(s)
                .ok_or_else(|| Error::design(format!("unknown factor symbol '{s}'")))?;
            idx.push(i);
        }
        let distinct: BTreeSet<usize> = idx.iter().copied().collect();
        if distinct.len() != idx.len() {
            return Err(Error::design(format!(
                "effect term '{}' repeats a factor",
                self.label()
            )));
        }
        idx.sort_unstable();
        Ok(idx)
    }
}

/// All non-empty factor subsets of size at most `max_order`, ordered by
/// (order, factor sequence in design order).
pub fn enumerate_terms(design: &Design, max_order: usize) -> Result<Vec<EffectTerm>> {
    let k = design.factors().len();
    if max_order < 1 || max_order > k {
        return Err(Error::input(format!(
            "max interaction order {max_order} out of range 1..={k}"
        )));
    }
    let mut terms = Vec::new();
    for order in 1..=max_order {
        let mut combo: Vec<usize> = (0..order).collect();
        'combos: loop {
            let symbols: Vec<&str> = combo
                .iter()
                .map(|&i| design.factors()[i].symbol.as_str())
                .collect();
            terms.push(EffectTerm::new(&symbols));
            // Next k-combination in lexicographic order.
            let mut i = order;
            loop {
                if i == 0 {
                    break 'combos;
                }
                i -= 1;
                if combo[i] < k - (order - i) {
                    combo[i] += 1;
                    for j in i + 1..order {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
    Ok(terms)
}

/// Measured responses aligned with `design.treatments()` order.
fn response_vector(table: &OutcomeTable, spec: &ResponseSpec, transformed: bool) -> Result<Vec<f64>> {
    let index = table.index();
    let mut out = Vec::with_capacity(table.design().treatments().len());
    for t in table.design().treatments() {
        let row_idx = *index
            .get(t)
            .ok_or_else(|| Error::design("incomplete table"))?;
        let metrics = &table.rows()[row_idx].metrics;
        let v = if transformed {
            spec.response(metrics)?
        } else {
            spec.aggregate(metrics)?
        };
        out.push(v);
    }
    Ok(out)
}

/// Per-combination means of `responses` over the given factor positions.
/// Returns (sums collapsed to means, combination count).
fn marginal_means(
    design: &Design,
    responses: &[f64],
    positions: &[usize],
) -> (Vec<f64>, usize) {
    let combos: usize = positions
        .iter()
        .map(|&p| design.factors()[p].levels.len())
        .product::<usize>()
        .max(1);
    let mut sums = vec![0.0; combos];
    for (t, &y) in design.treatments().iter().zip(responses) {
        let mut idx = 0;
        for &p in positions {
            idx = idx * design.factors()[p].levels.len() + t.level(p);
        }
        sums[idx] += y;
    }
    let per_combo = responses.len() / combos;
    for s in &mut sums {
        *s /= per_combo as f64;
    }
    (sums, combos)
}

/// Sum of squares and degrees of freedom for one term, from a pre-computed
/// response vector in design enumeration order.
fn term_ss_from_responses(
    term: &EffectTerm,
    design: &Design,
    responses: &[f64],
) -> Result<(f64, usize)> {
    let positions = term.resolve(design)?;
    let level_counts: Vec<usize> = positions
        .iter()
        .map(|&p| design.factors()[p].levels.len())
        .collect();
    let n = responses.len();
    let term_combos: usize = level_counts.iter().product();
    let replicates = n / term_combos;

    // Marginal means for every subset of the term's factors (bit i of the
    // mask selects positions[i]); the empty subset is the grand mean.
    let subset_count = 1usize << positions.len();
    let mut subset_means = Vec::with_capacity(subset_count);
    for mask in 0..subset_count {
        let sub: Vec<usize> = positions
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        subset_means.push(marginal_means(design, responses, &sub).0);
    }

    // effect(c) = sum over subsets S of (-1)^(|T|-|S|) * mean(response | c on S).
    let mut ss = 0.0;
    let mut combo = vec![0usize; positions.len()];
    for _ in 0..term_combos {
        let mut effect = 0.0;
        for (mask, means) in subset_means.iter().enumerate() {
            let mut idx = 0;
            for (i, &c) in combo.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    idx = idx * level_counts[i] + c;
                }
            }
            let sign = if (positions.len() - (mask.count_ones() as usize)) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            effect += sign * means[idx];
        }
        ss += effect * effect;
        // Advance the mixed-radix counter, last factor fastest.
        for i in (0..combo.len()).rev() {
            combo[i] += 1;
            if combo[i] < level_counts[i] {
                break;
            }
            combo[i] = 0;
        }
    }
    ss *= replicates as f64;

    let df: usize = level_counts.iter().map(|&l| l - 1).product();
    Ok((ss, df))
}

/// Sum of squares and degrees of freedom for one effect term of a balanced,
/// complete outcome table.
pub fn term_ss(
    term: &EffectTerm,
    table: &OutcomeTable,
    spec: &ResponseSpec,
) -> Result<(f64, usize)> {
    table.require_valid()?;
    let responses = response_vector(table, spec, true)?;
    term_ss_from_responses(term, table.design(), &responses)
}

/// Upper tail of the F distribution: `P(F(df1, df2) > f)`, via the
/// regularized incomplete beta function, absolute error below 1e-8.
pub fn f_pvalue(f: f64, df1: usize, df2: usize) -> Result<f64> {
    if !f.is_finite() || f < 0.0 {
        return Err(Error::stat(format!("F statistic must be finite and >= 0, got {f}")));
    }
    if df1 < 1 || df2 < 1 {
        return Err(Error::stat("F degrees of freedom must be >= 1"));
    }
    let (d1, d2) = (df1 as f64, df2 as f64);
    Ok(inc_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0))
}

/// Best and worst level combinations of a term, with their mean responses on
/// the untransformed (metric) scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestWorst {
    /// Slash-joined level labels in term factor order, e.g. `inception/full`.
    pub best_combo: String,
    pub best_mean: f64,
    pub worst_combo: String,
    pub worst_mean: f64,
}

fn best_worst(
    term: &EffectTerm,
    design: &Design,
    raw_responses: &[f64],
) -> Result<BestWorst> {
    let positions = term.resolve(design)?;
    let (means, _) = marginal_means(design, raw_responses, &positions);
    let level_counts: Vec<usize> = positions
        .iter()
        .map(|&p| design.factors()[p].levels.len())
        .collect();
    let label = |mut idx: usize| -> String {
        let mut levels = vec![0usize; positions.len()];
        for i in (0..positions.len()).rev() {
            levels[i] = idx % level_counts[i];
            idx /= level_counts[i];
        }
        positions
            .iter()
            .zip(&levels)
            .map(|(&p, &l)| design.factors()[p].levels[l].clone())
            .collect::<Vec<_>>()
            .join("/")
    };
    // Ties keep the first combination in enumeration order.
    let (mut best, mut worst) = (0usize, 0usize);
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
        if m < means[worst] {
            worst = i;
        }
    }
    Ok(BestWorst {
        best_combo: label(best),
        best_mean: means[best],
        worst_combo: label(worst),
        worst_mean: means[worst],
    })
}

/// One line of the ANOVA table; `term` is `None` for the residual row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub term: Option<EffectTerm>,
    /// `a:b` style label, or `residual`.
    pub label: String,
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
    /// Absent for the residual row and when the residual mean square is zero.
    pub f: Option<f64>,
    pub p: Option<f64>,
    /// Fraction of the total sum of squares.
    pub eta_abs: f64,
    /// Fraction of the design-choice sum of squares; absent for the residual
    /// and for terms involving the dataset factor.
    pub eta_rel: Option<f64>,
    /// Absent for the residual row.
    pub best_worst: Option<BestWorst>,
}

/// The complete ANOVA decomposition of an outcome table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub ss_total: f64,
    pub response: ResponseSpec,
    pub max_order: usize,
    pub n_observations: usize,
}

impl AnovaTable {
    pub fn residual(&self) -> &AnovaRow {
        self.rows.last().expect("table always has a residual row")
    }

    pub fn row(&self, label: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Runs the balanced multi-way ANOVA: every term up to `max_order` plus a
/// residual row pooling all higher-order interactions.
pub fn run_anova(
    table: &OutcomeTable,
    spec: &ResponseSpec,
    max_order: usize,
) -> Result<AnovaTable> {
    table.require_valid()?;
    let design = table.design();
    let terms = enumerate_terms(design, max_order)?;
    let responses = response_vector(table, spec, true)?;
    let raw_responses = response_vector(table, spec, false)?;
    let n = responses.len();

    let term_df_total: usize = terms
        .iter()
        .map(|t| {
            t.resolve(design).map(|pos| {
                pos.iter()
                    .map(|&p| design.factors()[p].levels.len() - 1)
                    .product::<usize>()
            })
        })
        .sum::<Result<usize>>()?;
    if term_df_total + 1 >= n {
        return Err(Error::stat(format!(
            "saturated model: {} term df leave no residual df in {} observations",
            term_df_total, n
        )));
    }
    let residual_df = n - 1 - term_df_total;

    let grand = responses.iter().sum::<f64>() / n as f64;
    let ss_total: f64 = responses.iter().map(|y| (y - grand) * (y - grand)).sum();

    let computed: Vec<(f64, usize, BestWorst)> = terms
        .par_iter()
        .map(|term| {
            let (ss, df) = term_ss_from_responses(term, design, &responses)?;
            let bw = best_worst(term, design, &raw_responses)?;
            Ok((ss, df, bw))
        })
        .collect::<Result<_>>()?;

    let ss_terms: f64 = computed.iter().map(|(ss, _, _)| ss).sum();
    let ss_residual = (ss_total - ss_terms).max(0.0);
    let ms_residual = ss_residual / residual_df as f64;

    let dataset = table.dataset_factor();
    let ss_dataset_terms: f64 = terms
        .iter()
        .zip(&computed)
        .filter(|(t, _)| t.contains(dataset))
        .map(|(_, (ss, _, _))| ss)
        .sum();
    // Denominator of the relative explanation: total variance minus the
    // residual and every term involving the dataset factor.
    let ss_choices = ss_total - ss_residual - ss_dataset_terms;

    let eta_abs = |ss: f64| if ss_total > 0.0 { ss / ss_total } else { 0.0 };

    let mut rows = Vec::with_capacity(terms.len() + 1);
    for (term, (ss, df, bw)) in terms.into_iter().zip(computed) {
        let ms = ss / df as f64;
        let (f, p) = if ms_residual > 0.0 {
            let f = ms / ms_residual;
            (Some(f), Some(f_pvalue(f, df, residual_df)?))
        } else {
            (None, None)
        };
        let eta_rel = if term.contains(dataset) || ss_choices <= 0.0 {
            None
        } else {
            Some(ss / ss_choices)
        };
        rows.push(AnovaRow {
            label: term.label(),
            term: Some(term),
            df,
            ss,
            ms,
            f,
            p,
            eta_abs: eta_abs(ss),
            eta_rel,
            best_worst: Some(bw),
        });
    }
    rows.push(AnovaRow {
        term: None,
        label: "residual".to_string(),
        df: residual_df,
        ss: ss_residual,
        ms: ms_residual,
        f: None,
        p: None,
        eta_abs: eta_abs(ss_residual),
        eta_rel: None,
        best_worst: None,
    });

    Ok(AnovaTable {
        rows,
        ss_total,
        response: spec.clone(),
        max_order,
        n_observations: n,
    })
}
