//! Platt scaling, Brier score and 10-bin reliability regression.

use crate::error::{Error, Result};

pub const RELIABILITY_BINS: usize = 10;
const NEWTON_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;

/// `p = sigmoid(a * s + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattModel {
    pub a: f64,
    pub b: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn log_loss(a: f64, b: f64, s: &[f64], y: &[bool]) -> f64 {
    s.iter()
        .zip(y)
        .map(|(&s, &y)| {
            let z = a * s + b;
            if y { softplus(-z) } else { softplus(z) }
        })
        .sum::<f64>()
        / s.len() as f64
}

impl PlattModel {
    /// Damped Newton on mean log-loss, starting from `(0, logit(base rate))`.
    pub fn fit(scores: &[f64], labels: &[bool]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::InvalidInput(format!("{} scores vs {} labels", scores.len(), labels.len())));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NumericInput("calibration scores".into()));
        }
        let pos = labels.iter().filter(|&&y| y).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::Fit("labels contain a single class".into()));
        }
        let range = |want: bool| {
            scores.iter().zip(labels).filter(|(_, &y)| y == want).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&s, _)| {
                (lo.min(s), hi.max(s))
            })
        };
        let (pos_lo, pos_hi) = range(true);
        let (neg_lo, neg_hi) = range(false);
        if neg_hi < pos_lo || pos_hi < neg_lo {
            return Err(Error::Fit("classes are perfectly separable; the MLE does not exist".into()));
        }
        let n = scores.len() as f64;
        let rate = pos as f64 / n;
        let (mut a, mut b) = (0.0, (rate / (1.0 - rate)).ln());
        let mut loss = log_loss(a, b, scores, labels);
        for _ in 0..NEWTON_MAX_ITER {
            let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&s, &y) in scores.iter().zip(labels) {
                let p = sigmoid(a * s + b);
                let r = p - if y { 1.0 } else { 0.0 };
                let w = p * (1.0 - p);
                ga += r * s;
                gb += r;
                haa += w * s * s;
                hab += w * s;
                hbb += w;
            }
            let (ga, gb, haa, hab, hbb) = (ga / n, gb / n, haa / n, hab / n, hbb / n);
            let det = haa * hbb - hab * hab;
            // also rejects NaN
            if det.is_nan() || det <= 0.0 {
                return Err(Error::Fit("singular Hessian; scores may be constant".into()));
            }
            let da = (hbb * ga - hab * gb) / det;
            let db = (haa * gb - hab * ga) / det;
            let mut step = 1.0;
            loop {
                let (na, nb) = (a - step * da, b - step * db);
                let nl = log_loss(na, nb, scores, labels);
                if nl <= loss || step < 1e-10 {
                    a = na;
                    b = nb;
                    loss = nl;
                    break;
                }
                step *= 0.5;
            }
            if (step * da).abs().max((step * db).abs()) < NEWTON_TOL {
                return Ok(PlattModel { a, b });
            }
        }
        Err(Error::Fit(format!("no convergence in {NEWTON_MAX_ITER} iterations (separable data?)")))
    }

    pub fn predict(&self, s: f64) -> f64 {
        sigmoid(self.a * s + self.b)
    }
}

/// Mean squared error of probabilities against binary outcomes.
pub fn brier_score(probs: &[f64], labels: &[bool]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| (p - if y { 1.0 } else { 0.0 }).powi(2))
        .sum::<f64>()
        / probs.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_predicted: f64,
    pub observed_rate: f64,
}

/// Equal-width bins over `[0, 1]`; `p = 1` falls in the last bin.
pub fn reliability_bins(probs: &[f64], labels: &[bool]) -> Vec<ReliabilityBin> {
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); RELIABILITY_BINS];
    for (&p, &y) in probs.iter().zip(labels) {
        let i = ((p * RELIABILITY_BINS as f64).floor() as usize).min(RELIABILITY_BINS - 1);
        sums[i].0 += 1;
        sums[i].1 += p;
        sums[i].2 += if y { 1.0 } else { 0.0 };
    }
    sums.into_iter()
        .enumerate()
        .map(|(i, (count, sp, sy))| ReliabilityBin {
            lo: i as f64 / RELIABILITY_BINS as f64,
            hi: (i + 1) as f64 / RELIABILITY_BINS as f64,
            count,
            mean_predicted: if count > 0 { sp / count as f64 } else { f64::NAN },
            observed_rate: if count > 0 { sy / count as f64 } else { f64::NAN },
        })
        .collect()
}

/// Unweighted least squares of observed rate on mean prediction over
/// non-empty bins. `None` with fewer than two distinct bin means.
pub fn reliability_line(bins: &[ReliabilityBin]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = bins.iter().filter(|b| b.count > 0).map(|b| (b.mean_predicted, b.observed_rate)).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub model: PlattModel,
    pub brier: f64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub bins: Vec<ReliabilityBin>,
}

/// Fits on the dev split and reports calibration on the test split.
pub fn calibrate(dev: (&[f64], &[bool]), test: (&[f64], &[bool])) -> Result<CalibrationReport> {
    let model = PlattModel::fit(dev.0, dev.1)?;
    if test.0.len() != test.1.len() || test.0.is_empty() {
        return Err(Error::InvalidInput("test split must be non-empty with one label per score".into()));
    }
    let probs: Vec<f64> = test.0.iter().map(|&s| model.predict(s)).collect();
    let bins = reliability_bins(&probs, test.1);
    let line = reliability_line(&bins);
    Ok(CalibrationReport {
        model,
        brier: brier_score(&probs, test.1),
        slope: line.map(|l| l.0),
        intercept: line.map(|l| l.1),
        bins,
    })
}
