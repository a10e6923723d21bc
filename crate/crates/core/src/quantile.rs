//! Empirical quantiles.
//!
//! One rule is used everywhere (ensemble bounds, bootstrap bounds, median
//! coverage): linear interpolation between order statistics at plotting
//! position `h = (n - 1) p + 1` (Hyndman–Fan type 7).

/// Type-7 quantile of an ascending slice. Panics on an empty slice.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Sorts a copy of `values` and returns the type-7 quantile.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_quantile(&v, p)
}

/// Median; for even lengths the mean of the two central order statistics.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_interpolates_between_order_statistics() {
        let v = [0.267949, 2.0, 3.732051];
        // h - 1 = 2 * 0.025 = 0.05
        let lo = sorted_quantile(&v, 0.025);
        assert!((lo - (0.267949 + 0.05 * (2.0 - 0.267949))).abs() < 1e-12);
        assert_eq!(sorted_quantile(&v, 0.0), 0.267949);
        assert_eq!(sorted_quantile(&v, 1.0), 3.732051);
    }

    #[test]
    fn even_median_is_mean_of_central_pair() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[0.9, 0.95, 1.0]), 0.95);
    }

    #[test]
    fn single_value() {
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }
}
