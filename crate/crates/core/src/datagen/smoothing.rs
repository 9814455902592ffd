//! Peak smoothing for duration histograms.
//!
//! Operators often round recorded durations to "round" values, leaving sharp
//! spikes. A bin is a peak when it exceeds `threshold` times the median of
//! its neighbours within `radius`. A `fraction` of the excess over that level
//! is taken off the peak and spread evenly over the neighbours, without
//! pushing any neighbour above its own detection level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub threshold: f64,
    pub radius: usize,
    pub fraction: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            threshold: 2.0,
            radius: 2,
            fraction: 0.5,
        }
    }
}

fn neighbours(len: usize, i: usize, radius: usize) -> impl Iterator<Item = usize> {
    (i.saturating_sub(radius)..=(i + radius).min(len - 1)).filter(move |&j| j != i)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn smooth_peaks(hist: &[f64], params: SmoothingParams) -> Result<Vec<f64>> {
    if hist.is_empty() {
        return Err(Error::invalid_input("histogram is empty"));
    }
    if params.radius == 0 {
        return Err(Error::invalid_input("radius must be at least 1"));
    }
    if hist.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(Error::invalid_input("histogram must be finite and nonnegative"));
    }
    if !(params.threshold >= 1.0) || !(0.0..=1.0).contains(&params.fraction) {
        return Err(Error::invalid_input("threshold must be >= 1 and fraction in [0,1]"));
    }
    let n = hist.len();
    // Detection levels come from the input histogram only.
    let level: Vec<f64> = (0..n)
        .map(|i| params.threshold * median(neighbours(n, i, params.radius).map(|j| hist[j]).collect()))
        .collect();
    let mut out = hist.to_vec();
    for i in 0..n {
        if hist[i] <= level[i] || n == 1 {
            continue;
        }
        let take = params.fraction * (hist[i] - level[i]);
        let nb: Vec<usize> = neighbours(n, i, params.radius).collect();
        let share = take / nb.len() as f64;
        let mut moved = 0.0;
        for &j in &nb {
            let room = if hist[j] > level[j] {
                0.0
            } else {
                (level[j] - out[j]).max(0.0)
            };
            let add = share.min(room);
            out[j] += add;
            moved += add;
        }
        out[i] -= moved;
    }
    Ok(out)
}

/// Counts per bin of width `width` starting at `lo`; values outside are dropped.
pub fn histogram(values: &[f64], lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &v in values {
        let k = ((v - lo) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            h[k as usize] += 1.0;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn flat_is_unchanged() {
        let h = vec![5.0; 20];
        assert_eq!(smooth_peaks(&h, SmoothingParams::default()).unwrap(), h);
    }

    #[test]
    fn single_spike() {
        let mut h = vec![0.0; 30];
        h[15] = 100.0;
        let p = SmoothingParams {
            threshold: 2.0,
            radius: 1,
            fraction: 0.5,
        };
        let out = smooth_peaks(&h, p).unwrap();
        assert_eq!(out[15], 50.0);
        assert_eq!(out[14], 25.0);
        assert_eq!(out[16], 25.0);
        assert_eq!(out.iter().sum::<f64>(), 100.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(smooth_peaks(&[], SmoothingParams::default()).is_err());
        let p = SmoothingParams {
            radius: 0,
            ..Default::default()
        };
        assert!(smooth_peaks(&[1.0], p).is_err());
        assert!(smooth_peaks(&[1.0, -1.0], SmoothingParams::default()).is_err());
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(
            histogram(&[0.0, 0.5, 1.0, 2.9, 3.0, -1.0], 0.0, 1.0, 3),
            vec![2.0, 1.0, 1.0]
        );
    }

    proptest! {
        #[test]
        fn conserves_mass(h in prop::collection::vec(0.0f64..1000.0, 1..80),
                          radius in 1usize..4, fraction in 0.0f64..=1.0, threshold in 1.0f64..4.0) {
            let p = SmoothingParams { threshold, radius, fraction };
            let out = smooth_peaks(&h, p).unwrap();
            let before: f64 = h.iter().sum();
            let after: f64 = out.iter().sum();
            prop_assert!((before - after).abs() <= 1e-9 * before.max(1.0));
            prop_assert!(out.iter().all(|v| *v >= -1e-12));
            let n = h.len();
            for j in 0..n {
                let level = threshold * median(neighbours(n, j, radius).map(|k| h[k]).collect());
                if out[j] > h[j] {
                    prop_assert!(out[j] <= level.max(h[j]) + 1e-9);
                }
            }
        }
    }
}
