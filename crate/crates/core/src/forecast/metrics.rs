use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point-forecast accuracy on one evaluation set. MAPE is in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsEntry {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub n: usize,
    /// Pairs with `y == 0`, left out of MAPE.
    pub mape_excluded: usize,
}

/// MAE, RMSE and MAPE over `(y, y_hat)` pairs.
pub fn evaluate_metrics(pairs: &[(f64, f64)]) -> Result<MetricsEntry> {
    if pairs.is_empty() {
        return Err(Error::invalid_input("metrics need at least one pair"));
    }
    let n = pairs.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut pct = 0.0;
    let mut pct_n = 0usize;
    for &(y, p) in pairs {
        let e = y - p;
        abs += e.abs();
        sq += e * e;
        if y != 0.0 {
            pct += (e / y).abs();
            pct_n += 1;
        }
    }
    Ok(MetricsEntry {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        mape: if pct_n > 0 { 100.0 * pct / pct_n as f64 } else { 0.0 },
        n: pairs.len(),
        mape_excluded: pairs.len() - pct_n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub set: String,
    pub metrics: MetricsEntry,
}

/// Writes `model,set,mae,rmse,mape` rows.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "set", "mae", "rmse", "mape"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.set.clone(),
            format!("{:.4}", r.metrics.mae),
            format!("{:.4}", r.metrics.rmse),
            format!("{:.2}", r.metrics.mape),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        let m = evaluate_metrics(&[(10.0, 12.0), (20.0, 18.0)]).unwrap();
        assert_eq!((m.mae, m.rmse), (2.0, 2.0));
        assert!((m.mape - 15.0).abs() < 1e-12);
        let m = evaluate_metrics(&[(5.0, 5.0), (7.0, 7.0)]).unwrap();
        assert_eq!((m.mae, m.rmse, m.mape), (0.0, 0.0, 0.0));
        let m = evaluate_metrics(&[(100.0, 90.0)]).unwrap();
        assert_eq!((m.mae, m.rmse), (10.0, 10.0));
        assert!((m.mape - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_labels_are_flagged() {
        let m = evaluate_metrics(&[(0.0, 3.0), (10.0, 11.0)]).unwrap();
        assert_eq!(m.mape_excluded, 1);
        assert!((m.mape - 10.0).abs() < 1e-12);
        assert!(evaluate_metrics(&[]).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = evaluate_metrics(&[(10.0, 12.0), (20.0, 18.0)]).unwrap();
        let rows = vec![MetricsRow {
            model: "standard".into(),
            set: "test".into(),
            metrics: m,
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "model,set,mae,rmse,mape\nstandard,test,2.0000,2.0000,15.00\n"
        );
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in prop::collection::vec((10.0f64..120.0, 0.0f64..150.0), 1..50)) {
            let m = evaluate_metrics(&pairs).unwrap();
            prop_assert!(m.rmse + 1e-12 >= m.mae);
            prop_assert!(m.mae >= 0.0 && m.mape >= 0.0);
        }
    }
}
