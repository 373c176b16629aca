use serde::{Deserialize, Serialize};

use crate::dataset::LabelVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[i][j]`: samples of true class `i` predicted as `j`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(predicted: &[usize], truth: &LabelVector) -> Result<Evaluation> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let c = truth.num_classes();
    let mut confusion = vec![vec![0; c]; c];
    let mut correct = 0;
    for (index, (&p, &t)) in predicted.iter().zip(truth.labels()).enumerate() {
        if p >= c {
            return Err(Error::LabelOutOfRange {
                index,
                label: p as i64,
                num_classes: c,
            });
        }
        confusion[t][p] += 1;
        correct += usize::from(p == t);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / predicted.len() as f64,
        correct,
        total: predicted.len(),
        confusion,
    })
}
