//! Training-objective evaluation (no optimization).

use std::collections::HashMap;

use crate::corpus::OverlapGraph;
use crate::error::{Error, Result};

/// InfoNCE for one positive against `negatives`, in f64 with the max score
/// subtracted before exponentiation.
pub fn info_nce_loss(positive: f64, negatives: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(format!("temperature must be positive, got {tau}")));
    }
    if negatives.is_empty() {
        return Err(Error::InvalidInput("InfoNCE needs at least one negative".into()));
    }
    if !positive.is_finite() || negatives.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericInput("InfoNCE scores".into()));
    }
    let max = negatives.iter().copied().fold(positive, f64::max);
    if positive >= max {
        // ln(1 + x) keeps precision when the positive dominates
        return Ok(negatives.iter().map(|&s| ((s - positive) / tau).exp()).sum::<f64>().ln_1p());
    }
    let denom: f64 = std::iter::once(positive)
        .chain(negatives.iter().copied())
        .map(|s| ((s - max) / tau).exp())
        .sum();
    Ok(denom.ln() - (positive - max) / tau)
}

/// Temporal-consistency loss value and per-segment gradients.
#[derive(Debug, Clone)]
pub struct TemporalLoss {
    pub value: f64,
    /// One entry per input vector; isolated segments get zeros.
    pub grad: HashMap<String, Vec<f64>>,
}

/// `lambda * sum_edges w_ij * ||z_i - z_j||^2` with `w_ij = iou_ij / sum(iou)`.
pub fn temporal_loss(fused: &HashMap<String, Vec<f32>>, graph: &OverlapGraph, lambda: f64) -> Result<f64> {
    Ok(temporal_loss_with_grad(fused, graph, lambda)?.value)
}

pub fn temporal_loss_with_grad(
    fused: &HashMap<String, Vec<f32>>,
    graph: &OverlapGraph,
    lambda: f64,
) -> Result<TemporalLoss> {
    let mut grad: HashMap<String, Vec<f64>> = fused.iter().map(|(id, z)| (id.clone(), vec![0.0; z.len()])).collect();
    if graph.edge_count() == 0 {
        return Ok(TemporalLoss { value: 0.0, grad });
    }
    let ids = graph.ids();
    let lookup = |i: usize| {
        fused
            .get(&ids[i])
            .ok_or_else(|| Error::Integrity { kind: "fused vector", ids: vec![ids[i].clone()] })
    };
    let total: f64 = graph.edges().iter().map(|e| e.2).sum();
    let mut value = 0.0;
    for &(i, j, iou) in graph.edges() {
        let (zi, zj) = (lookup(i)?, lookup(j)?);
        if zi.len() != zj.len() {
            return Err(Error::shape(ids[j].clone(), zi.len(), zj.len()));
        }
        let w = iou / total;
        let diff: Vec<f64> = zi.iter().zip(zj).map(|(a, b)| *a as f64 - *b as f64).collect();
        value += w * diff.iter().map(|d| d * d).sum::<f64>();
        let gi = grad.get_mut(&ids[i]).expect("looked up above");
        for (g, d) in gi.iter_mut().zip(&diff) {
            *g += 2.0 * lambda * w * d;
        }
        let gj = grad.get_mut(&ids[j]).expect("looked up above");
        for (g, d) in gj.iter_mut().zip(&diff) {
            *g -= 2.0 * lambda * w * d;
        }
    }
    Ok(TemporalLoss { value: lambda * value, grad })
}
