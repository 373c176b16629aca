use std::path::Path;

use pillar_gp::dataset::{load_labels, parse_labels, LabelVector};
use pillar_gp::poe::{evaluate, Evaluation};

use super::write_json;
use crate::error::{CliError, CliResult};

/// Predicted labels from either a label CSV or a posterior CSV (header
/// starting with `point`), where each row's label is its most probable
/// class, lowest index on ties.
fn read_predictions(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if !first.trim_start().starts_with("point") {
        return Ok(parse_labels(&text, path, None)?.labels().to_vec());
    }
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| CliError::Runtime(format!("{} line {}: {m}", path.display(), i + 1));
        let probs: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("unparseable probability"))?;
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite()) {
            return Err(bad("row has no finite probabilities"));
        }
        labels.push((0..probs.len()).fold(0, |b, k| if probs[k] > probs[b] { k } else { b }));
    }
    Ok(labels)
}

pub fn run(predictions: &Path, labels: &Path, num_classes: Option<usize>, out: &Path) -> CliResult<Evaluation> {
    let predicted = read_predictions(predictions)?;
    let truth = load_labels(labels, num_classes)?;
    let truth = match num_classes {
        Some(_) => truth,
        None => {
            let c = predicted.iter().map(|p| p + 1).max().unwrap_or(0).max(truth.num_classes());
            LabelVector::new(truth.labels().to_vec(), c)?
        }
    };
    let e = evaluate(&predicted, &truth)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_json(&out.join("confusion.json"), &e)?;
    println!("accuracy {:.4}", e.accuracy);
    Ok(e)
}
