//! Frequency thresholds separating the regimes of the two series.

/// Slowly diverging factor `M_n = max(1, ln n)`.
pub fn default_m_n(n: u64) -> f64 {
    (n as f64).ln().max(1.0)
}

/// `(J_n, L_n)`: `L_n = min{L : L^{(2 beta + d)/d} >= 2n}` and
/// `J_n = max(1, round((n / M_n)^{d/(2 beta + d)}))`.
pub fn thresholds(n: u64, beta: f64, d: u32, m_n: f64) -> (usize, usize) {
    let df = d as f64;
    let e = (2.0 * beta + df) / df;
    let target = 2.0 * n as f64;
    let mut l = target.powf(1.0 / e).ceil().max(1.0) as usize;
    while l > 1 && ((l - 1) as f64).powf(e) >= target {
        l -= 1;
    }
    while (l as f64).powf(e) < target {
        l += 1;
    }
    let j = (n as f64 / m_n).powf(df / (2.0 * beta + df)).round().max(1.0) as usize;
    (j, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert, proptest};

    #[test]
    fn enumerated_cases() {
        assert_eq!(thresholds(1, 1.0, 1, 1.0).1, 2);
        assert_eq!(thresholds(4, 1.0, 1, 1.0).1, 2);
        assert_eq!(thresholds(5, 1.0, 1, 1.0).1, 3);
        assert_eq!(thresholds(1000, 1.0, 1, 1.0).0, 10);
        assert_eq!(thresholds(1, 1.0, 1, default_m_n(1)).0, 1);
    }

    proptest! {
        #[test]
        fn defining_property(n in 1u64..10_000_000, beta in 0.6f64..5.0, d in 1u32..4) {
            let beta = beta * d as f64;
            let (_, l) = thresholds(n, beta, d, 1.0);
            let e = (2.0 * beta + d as f64) / d as f64;
            prop_assert!((l as f64).powf(e) >= 2.0 * n as f64);
            prop_assert!(l == 1 || ((l - 1) as f64).powf(e) < 2.0 * n as f64);
        }
    }
}
