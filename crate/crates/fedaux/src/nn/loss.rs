//! Softmax cross-entropy in the max-subtraction (log-sum-exp) form.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Mean cross-entropy over a batch of logits `[batch, classes]` against
/// integer labels, plus the gradient w.r.t. the logits.
///
/// The gradient is `(softmax(logits) - onehot(labels)) / batch`, so a step
/// against it descends the batch-mean loss.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let shape = logits.shape();
    if shape.len() != 2 {
        return Err(Error::internal(format!(
            "logits must be [batch, classes], got {:?}",
            shape
        )));
    }
    let (batch, classes) = (shape[0], shape[1]);
    if classes < 2 {
        return Err(Error::config("cross-entropy needs at least 2 classes"));
    }
    if labels.len() != batch {
        return Err(Error::internal(format!(
            "{} labels for a batch of {}",
            labels.len(),
            batch
        )));
    }
    let lv = logits.values();
    let mut dlogits = vec![0.0; lv.len()];
    let mut total = 0.0;
    let inv_batch = 1.0 / batch as f64;
    for (row, label) in labels.iter().enumerate() {
        if *label >= classes {
            return Err(Error::data(format!(
                "row {}: label {} out of range for {} classes",
                row, label, classes
            )));
        }
        let r = &lv[row * classes..(row + 1) * classes];
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum_exp = 0.0;
        for v in r {
            sum_exp += (v - max).exp();
        }
        let log_z = max + sum_exp.ln();
        total += log_z - r[*label];
        let d = &mut dlogits[row * classes..(row + 1) * classes];
        for (k, v) in r.iter().enumerate() {
            d[k] = ((v - max).exp() / sum_exp) * inv_batch;
        }
        d[*label] -= inv_batch;
    }
    Ok((
        total * inv_batch,
        Tensor::new(vec![batch, classes], dlogits),
    ))
}

/// Row-wise softmax probabilities, stable form. Used for evaluation.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let shape = logits.shape();
    let (batch, classes) = (shape[0], shape[1]);
    let lv = logits.values();
    let mut out = vec![0.0; lv.len()];
    for row in 0..batch {
        let r = &lv[row * classes..(row + 1) * classes];
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (k, v) in r.iter().enumerate() {
            let e = (v - max).exp();
            out[row * classes + k] = e;
            sum += e;
        }
        for v in &mut out[row * classes..(row + 1) * classes] {
            *v /= sum;
        }
    }
    Tensor::new(vec![batch, classes], out)
}

/// Index of the row maximum; ties break to the lowest index.
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    let shape = logits.shape();
    let (batch, classes) = (shape[0], shape[1]);
    let lv = logits.values();
    (0..batch)
        .map(|row| {
            let r = &lv[row * classes..(row + 1) * classes];
            let mut best = 0;
            for k in 1..classes {
                if r[k] > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
