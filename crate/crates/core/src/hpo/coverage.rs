//! Expected coverage of a box by `p` random axis-aligned neighbourhoods.

use crate::error::{Error, Result};

/// `1 − exp(−p · ∏ 2kᵢ/Lᵢ)`.
pub fn coverage_upper(p: u64, halfwidths: &[f64], lengths: &[f64]) -> Result<f64> {
    if halfwidths.is_empty() || halfwidths.len() != lengths.len() {
        return Err(Error::InvalidGeometry("need one half-width per dimension".into()));
    }
    let mut volume = 1.0;
    for (&k, &l) in halfwidths.iter().zip(lengths) {
        if !(k > 0.0 && 2.0 * k <= l && l.is_finite()) {
            return Err(Error::InvalidGeometry(format!("need 0 < 2k <= L, got k={k}, L={l}")));
        }
        volume *= 2.0 * k / l;
    }
    Ok(-(-(p as f64) * volume).exp_m1())
}

/// `(b−a−k) − (1−2k)^(p−1) (b−a−3k)` for one dimension.
pub fn coverage_lower(p: u64, k: f64, a: f64, b: f64) -> Result<f64> {
    if !(b > a && k > 0.0 && k < (b - a) / 2.0) {
        return Err(Error::InvalidGeometry(format!("need b > a and 0 < k < (b−a)/2, got k={k}, [{a}, {b}]")));
    }
    if p == 0 {
        return Err(Error::InvalidGeometry("the lower bound needs p >= 1".into()));
    }
    let span = b - a;
    Ok((span - k) - (1.0 - 2.0 * k).powf((p - 1) as f64) * (span - 3.0 * k))
}

/// Smallest `p` with `coverage_upper(p) ≥ target`, given each dimension's
/// covered fraction `2kᵢ/Lᵢ`.
pub fn budget(fractions: &[f64], target: f64) -> Result<u64> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::InvalidGeometry("fractions 2k/L must lie in (0, 1]".into()));
    }
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidParams(format!("target coverage must lie in [0, 1], got {target}")));
    }
    if target == 0.0 {
        return Ok(0);
    }
    if target >= 1.0 {
        return Err(Error::ExactCoverageImpossible);
    }
    let volume: f64 = fractions.iter().product();
    let p = (-(-target).ln_1p() / volume - 1e-9).ceil().max(0.0);
    Ok(p as u64)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn upper_plug_in() {
        assert_abs_diff_eq!(coverage_upper(1, &[0.5], &[1.0]).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(coverage_upper(0, &[0.1], &[1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(coverage_upper(30, &[0.05], &[1.0]).unwrap(), 0.950_212_9, epsilon = 1e-7);
        assert!(coverage_upper(1, &[0.6], &[1.0]).is_err());
        assert!(coverage_upper(1, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn lower_plug_in() {
        assert_abs_diff_eq!(coverage_lower(1, 0.1, 0.0, 1.0).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(coverage_lower(2000, 0.1, 0.0, 1.0).unwrap(), 0.9, epsilon = 1e-12);
        assert!(coverage_lower(1, 0.5, 0.0, 1.0).is_err());
        assert!(coverage_lower(0, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn budgets() {
        assert_eq!(budget(&[0.1], 0.95).unwrap(), 30);
        assert_eq!(budget(&[0.1], 0.0).unwrap(), 0);
        assert!(matches!(budget(&[0.1], 1.0), Err(Error::ExactCoverageImpossible)));
        assert_eq!(budget(&[0.5, 0.5], 1.0 - (-1.0f64).exp()).unwrap(), 4);
    }

    proptest! {
        #[test]
        fn monotone_and_ordered(p in 1u64..200, k in 0.001f64..0.24, grow in 0.0f64..0.2) {
            let up = coverage_upper(p, &[k], &[1.0]).unwrap();
            prop_assert!(coverage_upper(p + 1, &[k], &[1.0]).unwrap() >= up);
            prop_assert!(coverage_upper(p, &[(k + grow).min(0.5)], &[1.0]).unwrap() >= up);
            let lo = coverage_lower(p, k, 0.0, 1.0).unwrap();
            prop_assert!(coverage_lower(p + 1, k, 0.0, 1.0).unwrap() >= lo);
            // at p = 1 the lower bound is 2k while the upper is 1 − e^(−2k)
            prop_assert!(lo <= up + 2.0 * k * k);
        }

        #[test]
        fn budget_reaches_target(f in 0.01f64..1.0, target in 0.01f64..0.999) {
            let p = budget(&[f], target).unwrap();
            prop_assert!(coverage_upper(p, &[f / 2.0], &[1.0]).unwrap() >= target - 1e-9);
            if p > 0 {
                prop_assert!(coverage_upper(p - 1, &[f / 2.0], &[1.0]).unwrap() < target);
            }
        }
    }
}
