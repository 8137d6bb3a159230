//! Brute-force grid scans with local refinement.
//!
//! These are deliberately naive: dense sampling plus ternary refinement,
//! independent of the path-space optimizer. They back hypothesis checks on
//! pointwise potentials and serve as low-dimensional reference minimizers in
//! the test suites.

/// Minimum of a scalar function on `[lo, hi]` by dense grid scan followed by
/// ternary refinement around the best sample. Returns `(argmin, min)`.
/// Sample points where `f` returns `None` are skipped; returns `None` when
/// every sample failed.
pub fn brute_minimize_1d<F>(f: F, lo: f64, hi: f64, grid: usize) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
{
    assert!(grid >= 2 && hi > lo);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..grid {
        let x = lo + i as f64 * step;
        if let Some(v) = f(x) {
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((x, v));
            }
        }
    }
    let (bx, _) = best?;
    let (mut a, mut b) = ((bx - step).max(lo), (bx + step).min(hi));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        match (f(m1), f(m2)) {
            (Some(v1), Some(v2)) => {
                if v1 < v2 {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            _ => break,
        }
    }
    let x = 0.5 * (a + b);
    f(x).map(|v| {
        let (bx, bv) = best.unwrap();
        if v <= bv {
            (x, v)
        } else {
            (bx, bv)
        }
    })
}

/// All local minima of `f` on `[lo, hi]` found by grid comparison and
/// refined by ternary search. Minima closer than `merge_tol` are merged.
pub fn brute_local_minima_1d<F>(
    f: F,
    lo: f64,
    hi: f64,
    grid: usize,
    merge_tol: f64,
) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> Option<f64>,
{
    assert!(grid >= 3 && hi > lo);
    let step = (hi - lo) / (grid - 1) as f64;
    let values: Vec<Option<f64>> = (0..grid).map(|i| f(lo + i as f64 * step)).collect();
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 1..grid - 1 {
        let (Some(vm), Some(v), Some(vp)) = (values[i - 1], values[i], values[i + 1]) else {
            continue;
        };
        if v <= vm && v <= vp {
            let (mut a, mut b) = (lo + (i - 1) as f64 * step, lo + (i + 1) as f64 * step);
            for _ in 0..200 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                match (f(m1), f(m2)) {
                    (Some(v1), Some(v2)) => {
                        if v1 < v2 {
                            b = m2;
                        } else {
                            a = m1;
                        }
                    }
                    _ => break,
                }
            }
            let x = 0.5 * (a + b);
            if let Some(v) = f(x) {
                match minima.iter_mut().find(|(mx, _)| (*mx - x).abs() <= merge_tol) {
                    Some(entry) => {
                        if v < entry.1 {
                            *entry = (x, v);
                        }
                    }
                    None => minima.push((x, v)),
                }
            }
        }
    }
    minima.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    minima
}

/// Global minima of `f` on `[lo, hi]`: the local minima whose value lies
/// within `value_tol` of the least one.
pub fn brute_global_minima_1d<F>(
    f: F,
    lo: f64,
    hi: f64,
    grid: usize,
    merge_tol: f64,
    value_tol: f64,
) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> Option<f64> + Copy,
{
    let local = brute_local_minima_1d(f, lo, hi, grid, merge_tol);
    let Some(best) = local
        .iter()
        .map(|&(_, v)| v)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    else {
        return Vec::new();
    };
    local
        .into_iter()
        .filter(|&(_, v)| v <= best + value_tol)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let (x, v) = brute_minimize_1d(|x| Some((x - 2.0) * (x - 2.0) + 1.0), -5.0, 5.0, 1001)
            .unwrap();
        assert!((x - 2.0).abs() < 1e-9);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_well_has_two_global_minima() {
        let f = |x: f64| Some((x * x - 1.0) * (x * x - 1.0));
        let minima = brute_global_minima_1d(f, -3.0, 3.0, 10_001, 1e-6, 1e-9);
        assert_eq!(minima.len(), 2);
        assert!((minima[0].0 + 1.0).abs() < 1e-6);
        assert!((minima[1].0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn skips_failed_samples() {
        let f = |x: f64| if x < 0.0 { None } else { Some((x - 1.0).powi(2)) };
        let (x, _) = brute_minimize_1d(f, -2.0, 3.0, 501).unwrap();
        assert!((x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tilted_well_root() {
        // the stationarity equation 4x^3 = sin x has its positive root near 0.49
        let w = |x: f64| Some(x.powi(4) + x.cos());
        let (x, _) = brute_minimize_1d(w, 0.1, 1.5, 100_001).unwrap();
        assert!((4.0 * x.powi(3) - x.sin()).abs() < 1e-6, "x = {x}");
        assert!((x - 0.49).abs() < 5e-3);
    }
}
