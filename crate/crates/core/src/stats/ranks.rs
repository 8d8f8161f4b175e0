/// Ranks starting at 1 with ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    doubled_midranks(values).into_iter().map(|r| r as f64 / 2.0).collect()
}

/// Twice the midranks, which are always integers.
pub(crate) fn doubled_midranks(values: &[f64]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0i64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1 ..= j share rank (i + 1 + j) / 2.
        let doubled = (i + 1 + j) as i64;
        for &k in &order[i..j] {
            ranks[k] = doubled;
        }
        i = j;
    }
    ranks
}

/// Sizes of each group of tied values.
pub(crate) fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        groups.push(j - i);
        i = j;
    }
    groups
}
