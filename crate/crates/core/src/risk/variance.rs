use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Residual;
use crate::error::{Error, Result};
use crate::model::ActivityClass;

/// Per-class proxy variances (minutes²) estimated as mean squared residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceTable {
    pub per_class: BTreeMap<ActivityClass, f64>,
    pub counts: BTreeMap<ActivityClass, usize>,
    /// Pooled mean squared residual, used for classes without samples.
    pub fallback: f64,
}

impl VarianceTable {
    /// A table with no per-class entries; every lookup returns `value`.
    pub fn constant(value: f64) -> Self {
        Self {
            per_class: BTreeMap::new(),
            counts: BTreeMap::new(),
            fallback: value,
        }
    }

    pub fn variance(&self, class: ActivityClass) -> f64 {
        match self.counts.get(&class) {
            Some(&n) if n > 0 => self.per_class.get(&class).copied().unwrap_or(self.fallback),
            _ => self.fallback,
        }
    }
}

pub fn estimate_variances(records: &[Residual]) -> Result<VarianceTable> {
    if records.is_empty() {
        return Err(Error::invalid_input("variance estimation needs at least one residual"));
    }
    let mut sums: BTreeMap<ActivityClass, (f64, usize)> = BTreeMap::new();
    let mut pooled = 0.0;
    for r in records {
        let sq = r.score() * r.score();
        let e = sums.entry(r.class).or_insert((0.0, 0));
        e.0 += sq;
        e.1 += 1;
        pooled += sq;
    }
    Ok(VarianceTable {
        per_class: sums.iter().map(|(&c, &(s, n))| (c, s / n as f64)).collect(),
        counts: sums.iter().map(|(&c, &(_, n))| (c, n)).collect(),
        fallback: pooled / records.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivityClass::*;

    #[test]
    fn mean_of_squares_per_class() {
        let recs = [
            Residual::new(E, 10.0, 12.0),
            Residual::new(E, 12.0, 10.0),
            Residual::new(E, 5.0, 5.0),
            Residual::new(Z, 40.0, 37.0),
        ];
        let t = estimate_variances(&recs).unwrap();
        assert!((t.variance(E) - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.variance(Z), 9.0);
        assert_eq!(t.counts[&E], 3);
        assert!((t.fallback - 17.0 / 4.0).abs() < 1e-12);
        // unseen class resolves to the pooled value
        assert_eq!(t.variance(A), t.fallback);
    }

    #[test]
    fn zero_residuals() {
        let recs = [Residual::new(E, 3.0, 3.0), Residual::new(F, 7.0, 7.0)];
        let t = estimate_variances(&recs).unwrap();
        assert_eq!(t.variance(E), 0.0);
        assert_eq!(t.variance(F), 0.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(estimate_variances(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn json_shape() {
        let t = estimate_variances(&[Residual::new(E, 3.0, 1.0)]).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["per_class"]["E"], 4.0);
        assert_eq!(v["fallback"], 4.0);
        let back: VarianceTable = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }
}
