//! Per-instance class-probability predictions of a model population, and the
//! one-vs-all AUC responses computed from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{roc_auc, ResponseSpec};

/// One prediction record: a model's probability vector for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub model_id: String,
    pub dataset: String,
    pub instance_id: String,
    pub label: String,
    pub probs: Vec<f64>,
}

/// A model id plus the factor assignment parsed from it, when the id has the
/// canonical `sym=level;sym=level` key form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub id: String,
    /// Factor symbol to level label; empty when the id is not a treatment key.
    pub assignment: BTreeMap<String, String>,
}

impl ModelInfo {
    fn from_id(id: &str) -> Self {
        let mut assignment = BTreeMap::new();
        for part in id.split(';') {
            match part.split_once('=') {
                Some((k, v)) if !k.is_empty() && !v.is_empty() => {
                    assignment.insert(k.to_string(), v.to_string());
                }
                _ => {
                    return ModelInfo {
                        id: id.to_string(),
                        assignment: BTreeMap::new(),
                    }
                }
            }
        }
        ModelInfo {
            id: id.to_string(),
            assignment,
        }
    }
}

/// A labelled test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    /// Class index into the matrix's class list.
    pub label: usize,
}

/// Complete per-(model, dataset, instance) probability vectors over K classes.
///
/// Construction checks completeness, label consistency across models, and
/// that every vector is a probability vector (non-negative, sums to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    classes: Vec<String>,
    models: Vec<ModelInfo>,
    datasets: Vec<String>,
    /// Instances per dataset, aligned with `datasets`.
    instances: Vec<Vec<Instance>>,
    /// `probs[model][dataset]` is instance-major, class-minor, flat.
    probs: Vec<Vec<Vec<f64>>>,
}

const SUM_TOLERANCE: f64 = 1e-9;

impl PredictionMatrix {
    /// Assembles a matrix from records in any order. Models, datasets, and
    /// instances keep first-appearance order.
    pub fn from_rows(classes: Vec<String>, rows: &[PredictionRow]) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::input("prediction matrix needs at least 2 classes"));
        }
        if rows.is_empty() {
            return Err(Error::input("no prediction rows"));
        }
        let class_index = |label: &str| -> Result<usize> {
            classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::design(format!("unknown class label '{label}'")))
        };

        let mut models: Vec<ModelInfo> = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        let mut instances: Vec<Vec<Instance>> = Vec::new();
        let mut model_idx: BTreeMap<&str, usize> = BTreeMap::new();
        let mut dataset_idx: BTreeMap<&str, usize> = BTreeMap::new();
        let mut instance_idx: Vec<BTreeMap<&str, usize>> = Vec::new();

        for row in rows {
            if !model_idx.contains_key(row.model_id.as_str()) {
                model_idx.insert(&row.model_id, models.len());
                models.push(ModelInfo::from_id(&row.model_id));
            }
            let d = *dataset_idx.entry(&row.dataset).or_insert_with(|| {
                datasets.push(row.dataset.clone());
                instances.push(Vec::new());
                instance_idx.push(BTreeMap::new());
                datasets.len() - 1
            });
            if let Some(&i) = instance_idx[d].get(row.instance_id.as_str()) {
                let known = instances[d][i].label;
                if classes[known] != row.label {
                    return Err(Error::design(format!(
                        "instance '{}' of dataset '{}' labelled both '{}' and '{}'",
                        row.instance_id, row.dataset, classes[known], row.label
                    )));
                }
            } else {
                instance_idx[d].insert(&row.instance_id, instances[d].len());
                instances[d].push(Instance {
                    id: row.instance_id.clone(),
                    label: class_index(&row.label)?,
                });
            }
        }

        let k = classes.len();
        let mut probs: Vec<Vec<Vec<f64>>> = (0..models.len())
            .map(|_| {
                instances
                    .iter()
                    .map(|ins| vec![f64::NAN; ins.len() * k])
                    .collect()
            })
            .collect();

        for row in rows {
            if row.probs.len() != k {
                return Err(Error::input(format!(
                    "row for instance '{}' carries {} probabilities, expected {k}",
                    row.instance_id,
                    row.probs.len()
                )));
            }
            let sum: f64 = row.probs.iter().sum();
            if row.probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite())
                || (sum - 1.0).abs() > SUM_TOLERANCE
            {
                return Err(Error::input(format!(
                    "row for instance '{}' is not a probability vector (sum {sum})",
                    row.instance_id
                )));
            }
            let m = model_idx[row.model_id.as_str()];
            let d = dataset_idx[row.dataset.as_str()];
            let i = instance_idx[d][row.instance_id.as_str()];
            let slot = &mut probs[m][d][i * k..(i + 1) * k];
            if !slot[0].is_nan() {
                return Err(Error::design(format!(
                    "duplicate prediction for (model '{}', dataset '{}', instance '{}')",
                    row.model_id, row.dataset, row.instance_id
                )));
            }
            slot.copy_from_slice(&row.probs);
        }

        for (m, per_dataset) in probs.iter().enumerate() {
            for (d, flat) in per_dataset.iter().enumerate() {
                if let Some(i) = flat.chunks(k).position(|c| c[0].is_nan()) {
                    return Err(Error::design(format!(
                        "missing prediction for (model '{}', dataset '{}', instance '{}')",
                        models[m].id, datasets[d], instances[d][i].id
                    )));
                }
            }
        }

        Ok(PredictionMatrix {
            classes,
            models,
            datasets,
            instances,
            probs,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn models(&self) -> &[ModelInfo] {
        &self.models
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn dataset_index(&self, id: &str) -> Result<usize> {
        self.datasets
            .iter()
            .position(|d| d == id)
            .ok_or_else(|| Error::input(format!("unknown dataset '{id}'")))
    }

    pub fn model_index(&self, id: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::input(format!("unknown model '{id}'")))
    }

    pub fn instances(&self, dataset: usize) -> &[Instance] {
        &self.instances[dataset]
    }

    /// Probability vector of `model` for one instance of `dataset`.
    pub fn prob(&self, model: usize, dataset: usize, instance: usize) -> &[f64] {
        let k = self.classes.len();
        &self.probs[model][dataset][instance * k..(instance + 1) * k]
    }

    /// Model indices that survive a list of `factor=level` exclusions: a
    /// model is dropped when its parsed assignment matches any excluded pair.
    /// Models without an assignment for the factor are kept.
    pub fn filter_models(&self, exclusions: &[(String, String)]) -> Vec<usize> {
        (0..self.models.len())
            .filter(|&m| {
                !exclusions.iter().any(|(factor, level)| {
                    self.models[m].assignment.get(factor) == Some(level)
                })
            })
            .collect()
    }

    /// All model indices in matrix order.
    pub fn all_models(&self) -> Vec<usize> {
        (0..self.models.len()).collect()
    }

    /// One-vs-all AUC per requested class for arbitrary per-instance
    /// probability vectors on `dataset`.
    pub fn class_aucs(
        &self,
        dataset: usize,
        predictions: &[Vec<f64>],
        class_names: &[String],
    ) -> Result<BTreeMap<String, f64>> {
        let instances = &self.instances[dataset];
        if predictions.len() != instances.len() {
            return Err(Error::input(format!(
                "{} prediction vectors for {} instances",
                predictions.len(),
                instances.len()
            )));
        }
        let mut out = BTreeMap::new();
        for name in class_names {
            let class = self
                .classes
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::input(format!("unknown class '{name}'")))?;
            let scores: Vec<f64> = predictions.iter().map(|p| p[class]).collect();
            let labels: Vec<bool> = instances.iter().map(|i| i.label == class).collect();
            out.insert(name.clone(), roc_auc(&scores, &labels)?);
        }
        Ok(out)
    }

    /// Measured response of a single model on `dataset`: the response spec's
    /// transform of the mean one-vs-all AUC over its named classes.
    pub fn model_response(
        &self,
        model: usize,
        dataset: usize,
        response: &ResponseSpec,
    ) -> Result<f64> {
        let preds: Vec<Vec<f64>> = (0..self.instances[dataset].len())
            .map(|i| self.prob(model, dataset, i).to_vec())
            .collect();
        let aucs = self.class_aucs(dataset, &preds, &response.metrics)?;
        response.response(&aucs)
    }
}
