//! Probability pooling strategies and incremental ensemble curves.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ResponseSpec;
use crate::rng::stream_rng;
use crate::simulate::matrix::PredictionMatrix;

/// How per-model probability vectors are combined componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Componentwise mean.
    Average,
    /// Componentwise maximum.
    Max,
    /// Componentwise value most distant from 0.5; ties keep the value from
    /// the lowest-index model.
    Extremal,
}

impl std::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Pooling::Average),
            "max" => Ok(Pooling::Max),
            "extremal" => Ok(Pooling::Extremal),
            other => Err(Error::input(format!(
                "unknown pooling '{other}' (expected average|max|extremal)"
            ))),
        }
    }
}

impl std::fmt::Display for Pooling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pooling::Average => write!(f, "average"),
            Pooling::Max => write!(f, "max"),
            Pooling::Extremal => write!(f, "extremal"),
        }
    }
}

/// Divides by the component sum; an all-zero vector becomes uniform.
fn renormalize(mut v: Vec<f64>) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if sum == 0.0 {
        let k = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / k);
    } else {
        v.iter_mut().for_each(|x| *x /= sum);
    }
    v
}

/// Pools probability vectors componentwise and renormalizes to sum one.
pub fn pool(vectors: &[&[f64]], pooling: Pooling) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::input("cannot pool an empty vector list"))?;
    let k = first.len();
    if vectors.iter().any(|v| v.len() != k) {
        return Err(Error::input("pooled vectors differ in dimension"));
    }
    let raw: Vec<f64> = match pooling {
        Pooling::Average => (0..k)
            .map(|c| vectors.iter().map(|v| v[c]).sum::<f64>() / vectors.len() as f64)
            .collect(),
        Pooling::Max => (0..k)
            .map(|c| vectors.iter().map(|v| v[c]).fold(f64::MIN, f64::max))
            .collect(),
        Pooling::Extremal => (0..k)
            .map(|c| {
                let mut chosen = vectors[0][c];
                for v in &vectors[1..] {
                    if (v[c] - 0.5).abs() > (chosen - 0.5).abs() {
                        chosen = v[c];
                    }
                }
                chosen
            })
            .collect(),
    };
    Ok(renormalize(raw))
}

/// Which models form an ensemble and how their vectors are pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model_ids: Vec<String>,
    pub pooling: Pooling,
}

impl EnsembleSpec {
    pub fn new(model_ids: &[&str], pooling: Pooling) -> Self {
        EnsembleSpec {
            model_ids: model_ids.iter().map(|s| s.to_string()).collect(),
            pooling,
        }
    }
}

/// Pooled per-instance probability vectors of an ensemble on one dataset.
pub fn ensemble_predict(
    matrix: &PredictionMatrix,
    spec: &EnsembleSpec,
    dataset: &str,
) -> Result<Vec<Vec<f64>>> {
    if spec.model_ids.is_empty() {
        return Err(Error::input("ensemble needs at least one model"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for id in &spec.model_ids {
        if !seen.insert(id) {
            return Err(Error::input(format!("model '{id}' listed twice")));
        }
    }
    let models: Vec<usize> = spec
        .model_ids
        .iter()
        .map(|id| matrix.model_index(id))
        .collect::<Result<_>>()?;
    let d = matrix.dataset_index(dataset)?;
    (0..matrix.instances(d).len())
        .map(|i| {
            let vectors: Vec<&[f64]> = models.iter().map(|&m| matrix.prob(m, d, i)).collect();
            pool(&vectors, spec.pooling)
        })
        .collect()
}

/// How candidate models are ordered before incremental ensembling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelOrdering {
    /// Descending single-model response on a selection dataset; ties break by
    /// model id.
    BestFirst { selection_dataset: String },
    /// Seeded shuffle.
    Random { seed: u64 },
}

/// One point of an ensemble curve: the first `size` models pooled together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    /// Id of the model added at this size.
    pub model_id: String,
    /// Response on the measurement dataset.
    pub response: f64,
    /// One-vs-all AUC per response class on the measurement dataset.
    pub class_metrics: BTreeMap<String, f64>,
}

/// Orders candidates by the given rule; returns model indices.
pub fn ordered_models(
    matrix: &PredictionMatrix,
    candidates: &[usize],
    ordering: &ModelOrdering,
    response: &ResponseSpec,
) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::input("no candidate models"));
    }
    match ordering {
        ModelOrdering::BestFirst { selection_dataset } => {
            let d = matrix.dataset_index(selection_dataset)?;
            let mut scored: Vec<(usize, f64)> = candidates
                .iter()
                .map(|&m| Ok((m, matrix.model_response(m, d, response)?)))
                .collect::<Result<_>>()?;
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap()
                    .then_with(|| matrix.models()[a.0].id.cmp(&matrix.models()[b.0].id))
            });
            Ok(scored.into_iter().map(|(m, _)| m).collect())
        }
        ModelOrdering::Random { seed } => {
            let mut order = candidates.to_vec();
            order.shuffle(&mut stream_rng(*seed, 0));
            Ok(order)
        }
    }
}

/// Incremental ensemble responses for an already-ordered model list:
/// entry `k` is the response of the first `k + 1` models pooled together,
/// measured on `measure_dataset`.
pub fn ensemble_curve_ordered(
    matrix: &PredictionMatrix,
    ordered: &[usize],
    pooling: Pooling,
    measure_dataset: &str,
    response: &ResponseSpec,
) -> Result<Vec<CurvePoint>> {
    if ordered.is_empty() {
        return Err(Error::input("no candidate models"));
    }
    let d = matrix.dataset_index(measure_dataset)?;
    let n_instances = matrix.instances(d).len();
    let k = matrix.classes().len();

    // Running pooled state per instance; each strategy folds associatively,
    // so prefix ensembles come from one pass over the model list.
    let mut state: Vec<Vec<f64>> = match pooling {
        Pooling::Average => vec![vec![0.0; k]; n_instances],
        Pooling::Max => vec![vec![f64::MIN; k]; n_instances],
        Pooling::Extremal => vec![vec![0.5; k]; n_instances],
    };

    let mut curve = Vec::with_capacity(ordered.len());
    for (step, &m) in ordered.iter().enumerate() {
        let size = step + 1;
        for (i, acc) in state.iter_mut().enumerate() {
            let v = matrix.prob(m, d, i);
            match pooling {
                Pooling::Average => acc.iter_mut().zip(v).for_each(|(a, &x)| *a += x),
                Pooling::Max => acc.iter_mut().zip(v).for_each(|(a, &x)| *a = a.max(x)),
                Pooling::Extremal => acc.iter_mut().zip(v).for_each(|(a, &x)| {
                    if (x - 0.5).abs() > (*a - 0.5).abs() {
                        *a = x;
                    }
                }),
            }
        }
        let pooled: Vec<Vec<f64>> = state
            .iter()
            .map(|acc| {
                let raw: Vec<f64> = match pooling {
                    Pooling::Average => acc.iter().map(|&s| s / size as f64).collect(),
                    _ => acc.clone(),
                };
                renormalize(raw)
            })
            .collect();
        let class_metrics = matrix.class_aucs(d, &pooled, &response.metrics)?;
        curve.push(CurvePoint {
            size,
            model_id: matrix.models()[m].id.clone(),
            response: response.response(&class_metrics)?,
            class_metrics,
        });
    }
    Ok(curve)
}

/// Orders the candidates and computes the incremental ensemble curve.
pub fn ensemble_curve(
    matrix: &PredictionMatrix,
    candidates: &[usize],
    ordering: &ModelOrdering,
    pooling: Pooling,
    measure_dataset: &str,
    response: &ResponseSpec,
) -> Result<Vec<CurvePoint>> {
    let ordered = ordered_models(matrix, candidates, ordering, response)?;
    ensemble_curve_ordered(matrix, &ordered, pooling, measure_dataset, response)
}
