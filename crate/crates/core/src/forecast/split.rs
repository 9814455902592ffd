use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Record indices per split; whole calendar days stay together.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DateSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Assigns shuffled dates to train/validation/test so that record counts
/// track `ratios`. Each of the first three shuffled dates seeds one split
/// (test, validation, train); every later date goes to the split furthest
/// below its target.
pub fn split_by_date<T>(
    items: &[T],
    date_of: impl Fn(&T) -> NaiveDate,
    ratios: [f64; 3],
    seed: u64,
) -> Result<DateSplit> {
    if ratios.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid_config("split ratios must be positive"));
    }
    let mut by_date: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        by_date.entry(date_of(it)).or_default().push(i);
    }
    if by_date.len() < 3 {
        return Err(Error::invalid_input(format!(
            "date split needs at least 3 distinct dates, found {}",
            by_date.len()
        )));
    }
    let mut dates: Vec<NaiveDate> = by_date.keys().copied().collect();
    dates.shuffle(&mut seed::rng(seed));

    let total: f64 = ratios.iter().sum();
    let targets: Vec<f64> = ratios.iter().map(|r| r / total * items.len() as f64).collect();
    let mut counts = [0usize; 3];
    let mut assigned: [Vec<NaiveDate>; 3] = Default::default();
    for (k, d) in dates.iter().enumerate() {
        let slot = if k < 3 {
            2 - k
        } else {
            (0..3)
                .max_by(|&a, &b| {
                    let da = targets[a] - counts[a] as f64;
                    let db = targets[b] - counts[b] as f64;
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap_or(0)
        };
        counts[slot] += by_date[d].len();
        assigned[slot].push(*d);
    }
    let collect = |ds: &[NaiveDate]| {
        let mut v: Vec<usize> = ds.iter().flat_map(|d| by_date[d].iter().copied()).collect();
        v.sort_unstable();
        v
    };
    Ok(DateSplit {
        train: collect(&assigned[0]),
        validation: collect(&assigned[1]),
        test: collect(&assigned[2]),
    })
}
