//! Richardson extrapolation for sequences `E(h) = E* + C h^p + ...`.

/// Limit estimate from a coarse and a fine value, `ratio = h_coarse / h_fine`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let f = ratio.powf(order);
    fine + (fine - coarse) / (f - 1.0)
}

/// Observed order from three levels with a constant refinement ratio.
/// `None` when the differences change sign or vanish.
pub fn observed_order(coarse: f64, mid: f64, fine: f64, ratio: f64) -> Option<f64> {
    let d1 = coarse - mid;
    let d2 = mid - fine;
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    Some((d1 / d2).ln() / ratio.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_pure_power_law() {
        let e = |h: f64| 3.0 + 0.7 * h * h;
        let lim = richardson(e(0.2), e(0.1), 2.0, 2.0);
        assert!((lim - 3.0).abs() < 1e-14);
        let p = observed_order(e(0.4), e(0.2), e(0.1), 2.0).unwrap();
        assert!((p - 2.0).abs() < 1e-10);

        let g = |h: f64| 1.0 - 2.0 * h.powf(4.0 / 3.0);
        let p = observed_order(g(0.4), g(0.2), g(0.1), 2.0).unwrap();
        assert!((p - 4.0 / 3.0).abs() < 1e-10);
        assert!((richardson(g(0.2), g(0.1), 2.0, p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oscillating_sequence_has_no_order() {
        assert!(observed_order(1.0, 2.0, 1.5, 2.0).is_none());
        assert!(observed_order(1.0, 1.0, 1.0, 2.0).is_none());
    }
}
