use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Cohen's kappa, `(p_o - p_e) / (1 - p_e)`. When chance agreement is
/// total (both raters constant on the same label) the result is 1.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("rater lists differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("no ratings".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut marg: BTreeMap<&T, (f64, f64)> = BTreeMap::new();
    for x in a {
        marg.entry(x).or_default().0 += 1.0;
    }
    for y in b {
        marg.entry(y).or_default().1 += 1.0;
    }
    let po = agree / n;
    let pe: f64 = marg.values().map(|(ca, cb)| (ca / n) * (cb / n)).sum();
    if pe == 1.0 {
        return Ok(1.0);
    }
    Ok((po - pe) / (1.0 - pe))
}
