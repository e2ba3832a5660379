//! Logistic fill/no-fill classifier over one-hot string features.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::nn::sigmoid;
use crate::rng::seeded;

pub const FNF_FORMAT: &str = "evcomp-fnf";
pub const FNF_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnfParams {
    pub l2: f64,
    pub epochs: usize,
    /// Initial rate; epoch `e` uses `learning_rate / (1 + e)`.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FnfParams {
    fn default() -> Self {
        FnfParams {
            l2: 1e-3,
            epochs: 50,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillNoFillModel {
    pub format: String,
    pub version: u32,
    pub features: BTreeMap<String, usize>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

impl FillNoFillModel {
    fn active(&self, features: &[String]) -> Vec<usize> {
        let set: BTreeSet<usize> = features.iter().filter_map(|f| self.features.get(f).copied()).collect();
        set.into_iter().collect()
    }

    fn logit(&self, active: &[usize]) -> f64 {
        self.bias + active.iter().map(|&j| self.weights[j]).sum::<f64>()
    }

    /// Probability that the role has a filler; unseen features are ignored.
    pub fn probability(&self, features: &[String]) -> f64 {
        sigmoid(self.logit(&self.active(features)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn load(path: &Path) -> Result<FillNoFillModel> {
        let model: FillNoFillModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if model.format != FNF_FORMAT {
            return Err(Error::format(1, "format", format!("expected {FNF_FORMAT}, found {:?}", model.format)));
        }
        if model.version != FNF_VERSION {
            return Err(Error::Version {
                found: model.version,
                expected: FNF_VERSION,
            });
        }
        if model.weights.len() != model.features.len() {
            return Err(Error::format(1, "weights", "weight count differs from dictionary size"));
        }
        Ok(model)
    }
}

/// SGD on the L2-regularized log loss; the bias is not regularized.
pub fn train_fillnofill(examples: &[(Vec<String>, bool)], params: &FnfParams) -> Result<FillNoFillModel> {
    let positives = examples.iter().filter(|e| e.1).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::Contract(format!(
            "fill/no-fill training needs both classes ({positives} of {} examples are fills)",
            examples.len()
        )));
    }
    if !(params.learning_rate > 0.0) || params.l2 < 0.0 || params.epochs == 0 {
        return Err(Error::Config("fill/no-fill needs learning_rate > 0, l2 >= 0, epochs >= 1".into()));
    }
    let names: BTreeSet<&String> = examples.iter().flat_map(|e| &e.0).collect();
    let mut model = FillNoFillModel {
        format: FNF_FORMAT.into(),
        version: FNF_VERSION,
        features: names.into_iter().enumerate().map(|(i, n)| (n.clone(), i)).collect(),
        weights: Vec::new(),
        bias: 0.0,
        l2: params.l2,
    };
    model.weights = vec![0.0; model.features.len()];
    let encoded: Vec<(Vec<usize>, f64)> = examples
        .iter()
        .map(|(f, y)| (model.active(f), if *y { 1.0 } else { 0.0 }))
        .collect();
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut rng = seeded(params.seed);
    for epoch in 0..params.epochs {
        let lr = params.learning_rate / (1.0 + epoch as f64);
        order.shuffle(&mut rng);
        for &k in &order {
            let (active, y) = &encoded[k];
            let g = sigmoid(model.logit(active)) - y;
            model.bias -= lr * g;
            for &j in active {
                model.weights[j] -= lr * (g + params.l2 * model.weights[j]);
            }
        }
    }
    if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numeric("fill/no-fill weights diverged".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(f: &[&str], y: bool) -> (Vec<String>, bool) {
        (f.iter().map(|s| s.to_string()).collect(), y)
    }

    #[test]
    fn separable_data_is_learned() {
        let mut data = Vec::new();
        for i in 0..40 {
            data.push(ex(&["a", &format!("n{}", i % 5)], true));
            data.push(ex(&["b", &format!("n{}", i % 5)], false));
        }
        let m = train_fillnofill(&data, &FnfParams::default()).unwrap();
        let acc = data.iter().filter(|(f, y)| (m.probability(f) >= 0.5) == *y).count() as f64 / data.len() as f64;
        assert!(acc >= 0.95, "{acc}");
        assert_eq!(m.probability(&["a".into(), "unseen".into()]), m.probability(&["a".into()]));
    }

    #[test]
    fn identical_features_give_the_prior() {
        let data: Vec<_> = (0..100).map(|i| ex(&["same"], i % 10 < 3)).collect();
        let m = train_fillnofill(&data, &FnfParams::default()).unwrap();
        assert!((m.probability(&["same".into()]) - 0.3).abs() <= 0.02);
    }

    #[test]
    fn single_class_is_rejected_and_training_is_deterministic() {
        assert!(train_fillnofill(&[ex(&["x"], true)], &FnfParams::default()).is_err());
        let data = vec![ex(&["x"], true), ex(&["y"], false), ex(&["x", "y"], true)];
        let p = FnfParams { seed: 9, ..FnfParams::default() };
        assert_eq!(train_fillnofill(&data, &p).unwrap(), train_fillnofill(&data, &p).unwrap());
    }

    #[test]
    fn save_load_round_trip() {
        let data = vec![ex(&["x"], true), ex(&["y"], false)];
        let m = train_fillnofill(&data, &FnfParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fnf.json");
        m.save(&path).unwrap();
        assert_eq!(FillNoFillModel::load(&path).unwrap(), m);
    }
}
