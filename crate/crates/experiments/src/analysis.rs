//! Post-processing of sweep rows.

use crate::run::ResultRow;

/// Points where two factor curves cross, interpolated linearly in
/// `(log2 x, log2 factor)`. `a` and `b` are `(x, factor)` pairs on the same x grid.
pub fn crossings(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<f64> {
    let d: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .map(|(&(x, fa), &(_, fb))| (x.log2(), fa.log2() - fb.log2()))
        .collect();
    let mut out = Vec::new();
    for w in d.windows(2) {
        let ((x0, d0), (x1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            out.push(x0.exp2());
        } else if d0 * d1 < 0.0 {
            out.push((x0 + (x1 - x0) * d0 / (d0 - d1)).exp2());
        }
    }
    if let Some(&(x, dl)) = d.last() {
        if dl == 0.0 && d.len() > 1 {
            out.push(x.exp2());
        }
    }
    out
}

/// `(sweep value, factor)` for rows of one problem and method, in row order.
/// Rows without a factor are skipped.
pub fn curve(rows: &[ResultRow], problem: u8, method: &str, x: &str) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.problem == problem && r.method == method)
        .filter_map(|r| Some((r.value(x)?, r.factor?)))
        .collect()
}
