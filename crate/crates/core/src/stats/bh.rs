/// Benjamini–Hochberg step-up adjusted p-values, in input order.
///
/// With `p_(1) <= .. <= p_(m)`, `adj_(i) = min_{j >= i} m p_(j) / j`,
/// capped at 1.
pub fn bh_adjust(pvalues: &[f64]) -> Vec<f64> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(m as f64 * pvalues[i] / (rank + 1) as f64);
        adjusted[i] = running;
    }
    adjusted
}
