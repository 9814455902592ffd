use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Residual;
use crate::error::{Error, Result};
use crate::model::ActivityClass;

/// Split-conformal upper width for miscoverage `level` from ascending
/// `sorted` scores: the `ceil((n+1)(1-level))`-th smallest score, clamped to
/// the largest score when the rank exceeds `n`.
pub fn conformal_quantile(sorted: &[f64], level: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid_input("no calibration scores"));
    }
    if !(0.0..=1.0).contains(&level) {
        return Err(Error::domain(format!(
            "miscoverage level must lie in [0, 1], got {level}"
        )));
    }
    let n = sorted.len();
    // 1e-9 absorbs representation error such as 0.95 * 20 = 19.000000000000004.
    let rank = (((n + 1) as f64) * (1.0 - level) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

/// Calibration scores `y - mu` per class plus a pooled store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalTable {
    pub scores: BTreeMap<ActivityClass, Vec<f64>>,
    pub pooled: Vec<f64>,
    /// Whether classes without calibration scores fall back to the pooled set.
    pub use_fallback: bool,
}

pub fn conformal_calibrate(records: &[Residual]) -> Result<ConformalTable> {
    if records.is_empty() {
        return Err(Error::invalid_input("conformal calibration needs at least one record"));
    }
    let mut scores: BTreeMap<ActivityClass, Vec<f64>> = BTreeMap::new();
    for r in records {
        scores.entry(r.class).or_default().push(r.score());
    }
    for v in scores.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    let mut pooled: Vec<f64> = records.iter().map(Residual::score).collect();
    pooled.sort_by(f64::total_cmp);
    Ok(ConformalTable {
        scores,
        pooled,
        use_fallback: true,
    })
}

impl ConformalTable {
    /// Disables the pooled fallback for uncalibrated classes.
    pub fn strict(mut self) -> Self {
        self.use_fallback = false;
        self
    }

    /// One-sided upper width `U` at miscoverage `level` for `class`.
    pub fn upper_width(&self, class: ActivityClass, level: f64) -> Result<f64> {
        match self.scores.get(&class) {
            Some(s) if !s.is_empty() => conformal_quantile(s, level),
            _ if self.use_fallback => conformal_quantile(&self.pooled, level),
            _ => Err(Error::invalid_input(format!("class {class} has no calibration scores"))),
        }
    }

    /// Widths at each requested level for every calibrated class.
    pub fn width_table(&self, levels: &[f64]) -> Result<Vec<(ActivityClass, f64, f64)>> {
        let mut out = Vec::new();
        for &class in self.scores.keys() {
            for &level in levels {
                out.push((class, level, self.upper_width(class, level)?));
            }
        }
        Ok(out)
    }
}

/// Bonferroni route bound: sum of per-stop widths at level `alpha / |R|`.
pub fn conformal_route_bound(table: &ConformalTable, classes: &[ActivityClass], alpha: f64) -> Result<f64> {
    if classes.is_empty() {
        return Err(Error::invalid_input("conformal route bound needs a nonempty route"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("risk level must lie in (0, 1], got {alpha}")));
    }
    let level = alpha / classes.len() as f64;
    classes.iter().map(|&c| table.upper_width(c, level)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ActivityClass::*;

    fn table(class: ActivityClass, scores: &[f64]) -> ConformalTable {
        let recs: Vec<Residual> = scores.iter().map(|&s| Residual::new(class, 50.0 + s, 50.0)).collect();
        conformal_calibrate(&recs).unwrap()
    }

    #[test]
    fn rank_formula() {
        assert_eq!(conformal_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 3.0);
        assert_eq!(conformal_quantile(&[1.0, 2.0, 3.0, 4.0], 0.0).unwrap(), 4.0);
        assert_eq!(conformal_quantile(&[1.0, 2.0, 3.0, 4.0], 0.001).unwrap(), 4.0);
        // (19+1)*0.95 = 19 exactly -> 19th score
        let s: Vec<f64> = (1..=19).map(f64::from).collect();
        assert_eq!(conformal_quantile(&s, 0.05).unwrap(), 19.0);
        assert_eq!(conformal_quantile(&[5.0; 7], 0.3).unwrap(), 5.0);
    }

    #[test]
    fn table_lookup_and_fallback() {
        let t = table(E, &[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(t.upper_width(E, 0.5).unwrap(), 3.0);
        assert_eq!(t.upper_width(Z, 0.5).unwrap(), 3.0);
        assert!(t.clone().strict().upper_width(Z, 0.5).is_err());
        assert!(conformal_calibrate(&[]).is_err());
        assert_eq!(t.width_table(&[0.5, 0.0]).unwrap(), vec![(E, 0.5, 3.0), (E, 0.0, 4.0)]);
    }

    #[test]
    fn route_bound_uses_bonferroni_level() {
        let scores: Vec<f64> = (1..=199).map(f64::from).collect();
        let t = table(E, &scores);
        // 5 stops, alpha 0.05 -> level 0.01 -> rank ceil(200*0.99) = 198
        let bound = conformal_route_bound(&t, &[E; 5], 0.05).unwrap();
        assert_eq!(bound, 5.0 * 198.0);
        // 1 stop -> level alpha
        assert_eq!(
            conformal_route_bound(&t, &[E], 0.05).unwrap(),
            t.upper_width(E, 0.05).unwrap()
        );
        // two stops, same class -> 2 * U(alpha/2)
        let w = t.upper_width(E, 0.025).unwrap();
        assert_eq!(conformal_route_bound(&t, &[E, E], 0.05).unwrap(), 2.0 * w);
        assert!(conformal_route_bound(&t, &[], 0.05).is_err());
        assert!(conformal_route_bound(&t.clone().strict(), &[Z], 0.05).is_err());
    }

    proptest! {
        #[test]
        fn width_is_nonincreasing_in_level(
            mut scores in prop::collection::vec(-30.0f64..30.0, 1..60),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            scores.sort_by(f64::total_cmp);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(conformal_quantile(&scores, hi).unwrap() <= conformal_quantile(&scores, lo).unwrap());
        }
    }
}
