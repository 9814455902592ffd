//! Class-conditional duration draws with multiplicative feature effects.
//!
//! A draw is `m(x) * L` where `L` follows the class law and `m(x)` is a
//! product of independent factor effects normalised to `E[m] = 1`, so class
//! means are unchanged by the injected signal. For moment-matched classes the
//! base lognormal is narrowed so that `m * L` keeps the class variance. For
//! the bimodal class the meter class picks the mode and `m(x)` (without the
//! meter factor) scales the short mode only.

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal};

use super::specs::{ActivityClassSpec, DurationShape, METER_CLASS_PROBS};
use crate::seed::Rng;

/// Scheduled-hour distribution over 8..=16.
pub const HOUR_FIRST: u8 = 8;
pub const HOUR_PROBS: [f64; 9] = [0.14, 0.14, 0.13, 0.12, 0.08, 0.10, 0.11, 0.10, 0.08];
pub const ACCESSIBILITY_PROBS: [f64; 3] = [0.6, 0.3, 0.1];
pub const DIFFICULTY_PROBS: [f64; 3] = [0.5, 0.35, 0.15];

const HOUR_LOG_EFFECT: [f64; 9] = [-0.25, -0.20, -0.10, -0.05, 0.0, 0.08, 0.15, 0.22, 0.30];
const METER_LOG_EFFECT: [f64; 4] = [-0.15, 0.05, 0.30, 0.50];
const ACCESS_LOG_EFFECT: [f64; 3] = [0.0, 0.18, 0.40];
const DIFFICULTY_LOG_EFFECT: [f64; 3] = [0.0, 0.08, 0.20];

/// The attributes that move durations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DrawContext {
    pub hour: u8,
    pub meter_class: u8,
    pub accessibility: u8,
    pub reading_difficulty: u8,
}

pub fn draw_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

impl DrawContext {
    pub fn random(rng: &mut Rng) -> Self {
        Self {
            hour: HOUR_FIRST + draw_categorical(&HOUR_PROBS, rng) as u8,
            meter_class: draw_categorical(&METER_CLASS_PROBS, rng) as u8,
            accessibility: draw_categorical(&ACCESSIBILITY_PROBS, rng) as u8,
            reading_difficulty: draw_categorical(&DIFFICULTY_PROBS, rng) as u8,
        }
    }
}

/// Normalised multiplicative effect of one factor.
#[derive(Clone, Debug)]
struct Factor {
    mult: Vec<f64>,
    second_moment: f64,
}

impl Factor {
    fn new(probs: &[f64], log_effect: &[f64], signal: f64) -> Self {
        let raw: Vec<f64> = log_effect.iter().map(|e| (signal * e).exp()).collect();
        let z: f64 = probs.iter().zip(&raw).map(|(p, r)| p * r).sum();
        let mult: Vec<f64> = raw.iter().map(|r| r / z).collect();
        let second_moment = probs.iter().zip(&mult).map(|(p, m)| p * m * m).sum();
        Self { mult, second_moment }
    }

    fn at(&self, level: usize) -> f64 {
        self.mult[level.min(self.mult.len() - 1)]
    }
}

#[derive(Clone, Debug)]
enum Base {
    Single(LogNormal<f64>),
    Bimodal {
        short: LogNormal<f64>,
        long: LogNormal<f64>,
        long_prob_by_meter: Vec<f64>,
    },
}

/// Precomputed sampler for one class.
#[derive(Clone, Debug)]
pub struct DurationSampler {
    base: Base,
    hour: Factor,
    meter: Option<Factor>,
    access: Factor,
    difficulty: Factor,
    min: f64,
    max: f64,
}

fn lognormal(median: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(median.ln(), sigma).expect("positive median and finite sigma")
}

impl DurationSampler {
    /// `signal` scales every log-effect; 0 makes durations independent of
    /// the attributes.
    pub fn new(spec: &ActivityClassSpec, signal: f64) -> Self {
        let hour = Factor::new(&HOUR_PROBS, &HOUR_LOG_EFFECT, signal);
        let access = Factor::new(&ACCESSIBILITY_PROBS, &ACCESS_LOG_EFFECT, signal);
        let difficulty = Factor::new(&DIFFICULTY_PROBS, &DIFFICULTY_LOG_EFFECT, signal);
        match &spec.shape {
            DurationShape::MomentMatched => {
                let meter = Factor::new(&METER_CLASS_PROBS, &METER_LOG_EFFECT, signal);
                let em2 = hour.second_moment * meter.second_moment * access.second_moment * difficulty.second_moment;
                let cv2 = (spec.std / spec.mean).powi(2);
                let base_cv2 = ((1.0 + cv2) / em2 - 1.0).max(1e-4);
                let sigma2 = (1.0 + base_cv2).ln();
                let mu = spec.mean.ln() - 0.5 * sigma2;
                Self {
                    base: Base::Single(LogNormal::new(mu, sigma2.sqrt()).expect("finite params")),
                    hour,
                    meter: Some(meter),
                    access,
                    difficulty,
                    min: spec.min,
                    max: spec.max,
                }
            }
            DurationShape::Bimodal {
                short,
                long,
                long_prob_by_meter,
            } => Self {
                base: Base::Bimodal {
                    short: lognormal(short.median, short.sigma),
                    long: lognormal(long.median, long.sigma),
                    long_prob_by_meter: long_prob_by_meter.clone(),
                },
                hour,
                meter: None,
                access,
                difficulty,
                min: spec.min,
                max: spec.max,
            },
        }
    }

    pub fn sample(&self, ctx: &DrawContext, rng: &mut Rng) -> f64 {
        let hour_idx = ctx.hour.saturating_sub(HOUR_FIRST) as usize;
        let m = self.hour.at(hour_idx)
            * self.access.at(ctx.accessibility as usize)
            * self.difficulty.at(ctx.reading_difficulty as usize);
        let value = match &self.base {
            Base::Single(d) => {
                let meter = self.meter.as_ref().map_or(1.0, |f| f.at(ctx.meter_class as usize));
                d.sample(rng) * m * meter
            }
            Base::Bimodal {
                short,
                long,
                long_prob_by_meter,
            } => {
                let idx = (ctx.meter_class as usize).min(long_prob_by_meter.len() - 1);
                if rng.random::<f64>() < long_prob_by_meter[idx] {
                    long.sample(rng)
                } else {
                    short.sample(rng) * m
                }
            }
        };
        value.clamp(self.min, self.max)
    }

    /// Draw with attributes sampled from the generator's marginals.
    pub fn sample_marginal(&self, rng: &mut Rng) -> f64 {
        let ctx = DrawContext::random(rng);
        self.sample(&ctx, rng)
    }
}

/// One marginal draw from a class spec at full signal strength.
pub fn sample_duration(spec: &ActivityClassSpec, rng: &mut Rng) -> f64 {
    DurationSampler::new(spec, 1.0).sample_marginal(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::specs::{default_class_specs, spec_for};
    use crate::model::ActivityClass;
    use crate::seed;

    fn mean_of(spec: &ActivityClassSpec, n: usize, seed: u64) -> f64 {
        let s = DurationSampler::new(spec, 1.0);
        let mut rng = seed::rng(seed);
        (0..n).map(|_| s.sample_marginal(&mut rng)).sum::<f64>() / n as f64
    }

    #[test]
    fn factors_have_unit_mean() {
        let f = Factor::new(&HOUR_PROBS, &HOUR_LOG_EFFECT, 1.0);
        let m: f64 = HOUR_PROBS.iter().zip(&f.mult).map(|(p, m)| p * m).sum();
        assert!((m - 1.0).abs() < 1e-12);
        assert!(f.second_moment > 1.0);
        let flat = Factor::new(&HOUR_PROBS, &HOUR_LOG_EFFECT, 0.0);
        assert!(flat.mult.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn class_f_mean_and_bounds() {
        let specs = default_class_specs();
        let f = spec_for(&specs, ActivityClass::F).unwrap();
        let mean = mean_of(f, 100_000, 11);
        assert!((mean / 19.01 - 1.0).abs() < 0.05, "mean {mean}");
        let mut rng = seed::rng(5);
        for s in &specs {
            for _ in 0..2000 {
                let d = sample_duration(s, &mut rng);
                assert!((s.min..=s.max).contains(&d));
                assert!((10.0..=119.0).contains(&d));
            }
        }
    }

    #[test]
    fn class_z_has_long_mode_peak() {
        let specs = default_class_specs();
        let z = spec_for(&specs, ActivityClass::Z).unwrap();
        let s = DurationSampler::new(z, 1.0);
        let mut rng = seed::rng(3);
        let mut bins = [0usize; 12];
        for _ in 0..100_000 {
            let d = s.sample_marginal(&mut rng);
            bins[((d - 5.0) / 10.0) as usize] += 1;
        }
        // bin 5 is [55, 65)
        assert!(bins[5] > bins[4] && bins[5] > bins[6], "{bins:?}");
    }

    #[test]
    fn hour_effect_is_visible() {
        let specs = default_class_specs();
        let e = spec_for(&specs, ActivityClass::E).unwrap();
        let s = DurationSampler::new(e, 1.0);
        let mut rng = seed::rng(9);
        let mut at = |hour| {
            let ctx = DrawContext {
                hour,
                meter_class: 0,
                accessibility: 0,
                reading_difficulty: 0,
            };
            (0..20_000).map(|_| s.sample(&ctx, &mut rng)).sum::<f64>() / 20_000.0
        };
        let (early, late) = (at(8), at(16));
        assert!(late > early * 1.2, "{early} vs {late}");
    }
}
