use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Supported,
    Unsupported,
    Contradicted,
}

impl Label {
    pub fn is_supported(self) -> bool {
        self == Label::Supported
    }
}

/// One line of `labels.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub item_id: String,
    pub proposition: String,
    pub rater_a: Label,
    pub rater_b: Label,
    pub adjudicated: Label,
}

/// Mean over items of the fraction of adjudicated propositions that are
/// unsupported or contradicted.
pub fn hallucination_rate(labels: &[LabelRecord]) -> Option<f64> {
    let mut per_item: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for l in labels {
        let e = per_item.entry(l.item_id.as_str()).or_default();
        e.0 += usize::from(!l.adjudicated.is_supported());
        e.1 += 1;
    }
    if per_item.is_empty() {
        return None;
    }
    Some(per_item.values().map(|&(bad, n)| bad as f64 / n as f64).sum::<f64>() / per_item.len() as f64)
}
