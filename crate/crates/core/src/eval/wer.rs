/// Splits queries into four equal-frequency bins by WER.
///
/// Queries are stably ordered by `(wer, query_id)`; bin sizes are `n / 4`
/// with the remainder going to the last bins.
pub fn wer_bins(queries: &[(String, f64)]) -> [Vec<String>; 4] {
    let mut sorted: Vec<&(String, f64)> = queries.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let n = sorted.len();
    let (base, rem) = (n / 4, n % 4);
    let mut bins: [Vec<String>; 4] = Default::default();
    let mut it = sorted.into_iter();
    for (i, bin) in bins.iter_mut().enumerate() {
        let size = base + usize::from(i >= 4 - rem);
        bin.extend(it.by_ref().take(size).map(|q| q.0.clone()));
    }
    bins
}
