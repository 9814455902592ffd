use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("risk level must lie in (0, 1], got {alpha}")))
    }
}

/// Buffer for a route whose proxy variances sum to `total_variance`:
/// `sqrt(2 * total * ln(1/alpha))`.
pub fn buffer_from_total(total_variance: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(total_variance >= 0.0) {
        return Err(Error::domain("proxy variances must be nonnegative"));
    }
    Ok((2.0 * total_variance * (1.0 / alpha).ln()).sqrt())
}

/// Route-level sub-Gaussian buffer in minutes.
pub fn route_buffer(variances: &[f64], alpha: f64) -> Result<f64> {
    if variances.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::domain("proxy variances must be nonnegative"));
    }
    buffer_from_total(variances.iter().sum(), alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChanceCheck {
    pub feasible: bool,
    /// `H - (mu_sum + travel_sum + buffer)`; negative when infeasible.
    pub slack: f64,
}

/// Sufficient condition for `P(route duration <= H) >= 1 - alpha`.
pub fn check_route_chance_feasible(
    mu_sum: f64,
    travel_sum: f64,
    variances: &[f64],
    alpha: f64,
    horizon: f64,
) -> Result<ChanceCheck> {
    let lhs = mu_sum + travel_sum + route_buffer(variances, alpha)?;
    Ok(ChanceCheck {
        feasible: lhs <= horizon,
        slack: horizon - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_value() {
        // sqrt(2 * 13 * ln 20), evaluated independently in double precision
        let b = route_buffer(&[4.0, 9.0], 0.05).unwrap();
        assert!((b - 8.825_476_707_374_156).abs() < 1e-12, "{b}");
    }

    #[test]
    fn degenerate_buffers() {
        assert_eq!(route_buffer(&[4.0, 9.0], 1.0).unwrap(), 0.0);
        assert_eq!(route_buffer(&[], 0.05).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(route_buffer(&[1.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(route_buffer(&[1.0], 1.5), Err(Error::Domain(_))));
        assert!(matches!(route_buffer(&[1.0], -0.1), Err(Error::Domain(_))));
        assert!(matches!(route_buffer(&[-1.0], 0.1), Err(Error::Domain(_))));
        assert!(check_route_chance_feasible(1.0, 1.0, &[1.0], 0.0, 10.0).is_err());
    }

    #[test]
    fn chance_check_examples() {
        let c = check_route_chance_feasible(100.0, 30.0, &[4.0, 9.0], 0.05, 140.0).unwrap();
        assert!(c.feasible);
        assert!((c.slack - 1.174_523_292_625_844).abs() < 1e-12, "{}", c.slack);

        let c = check_route_chance_feasible(100.0, 30.0, &[0.0, 0.0], 0.05, 130.0).unwrap();
        assert!(c.feasible && c.slack == 0.0);
        let c = check_route_chance_feasible(100.0, 30.0, &[0.0], 0.05, 129.0).unwrap();
        assert!(!c.feasible);

        let c = check_route_chance_feasible(1.0, 0.0, &[], 0.05, 0.0).unwrap();
        assert!(!c.feasible);
    }

    proptest! {
        #[test]
        fn buffer_monotonicity(
            vars in prop::collection::vec(0.0f64..400.0, 0..12),
            a1 in 0.001f64..1.0,
            a2 in 0.001f64..1.0,
            idx in 0usize..12,
            bump in 0.0f64..100.0,
        ) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            prop_assert!(route_buffer(&vars, hi).unwrap() <= route_buffer(&vars, lo).unwrap());
            if !vars.is_empty() {
                let mut more = vars.clone();
                let i = idx % vars.len();
                more[i] += bump;
                prop_assert!(route_buffer(&more, lo).unwrap() >= route_buffer(&vars, lo).unwrap());
            }
        }

        #[test]
        fn buffers_combine_by_sum_of_squares(
            r1 in prop::collection::vec(0.0f64..400.0, 0..8),
            r2 in prop::collection::vec(0.0f64..400.0, 0..8),
            alpha in 0.001f64..1.0,
        ) {
            let joined: Vec<f64> = r1.iter().chain(&r2).copied().collect();
            let lhs = route_buffer(&joined, alpha).unwrap().powi(2);
            let rhs = route_buffer(&r1, alpha).unwrap().powi(2) + route_buffer(&r2, alpha).unwrap().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
