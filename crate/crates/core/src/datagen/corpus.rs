//! Seeded intervention corpora and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sampling::{draw_categorical, DrawContext, DurationSampler};
use super::specs::{validate_specs, ActivityClassSpec};
use crate::error::{Error, Result};
use crate::forecast::{Attributes, TrainingRecord};
use crate::model::ActivityClass;
use crate::{par, seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub per_day_mean: f64,
    pub per_day_spread: f64,
    /// Side of the square service area, km.
    pub map_extent_km: f64,
    pub n_municipalities: u32,
    /// Probability that each geographic numeric is missing.
    pub missing_geo_rate: f64,
    /// Scale of the attribute effects on durations (0 = pure class noise).
    pub signal_strength: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_days: 21,
            start_date: NaiveDate::from_ymd_opt(2024, 3, 4).expect("valid date"),
            per_day_mean: 60.0,
            per_day_spread: 10.0,
            map_extent_km: 30.0,
            n_municipalities: 40,
            missing_geo_rate: 0.02,
            signal_strength: 1.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 || self.n_municipalities == 0 {
            return Err(Error::invalid_config("n_days and n_municipalities must be positive"));
        }
        if !(self.per_day_mean >= 1.0 && self.per_day_spread >= 0.0) {
            return Err(Error::invalid_config(
                "per-day volume must have mean >= 1 and spread >= 0",
            ));
        }
        if !(self.map_extent_km > 0.0) {
            return Err(Error::invalid_config("map extent must be positive"));
        }
        if !(0.0..=1.0).contains(&self.missing_geo_rate) || !(self.signal_strength >= 0.0) {
            return Err(Error::invalid_config(
                "missing_geo_rate must be in [0,1], signal_strength >= 0",
            ));
        }
        Ok(())
    }

    pub fn day(&self, index: usize) -> NaiveDate {
        self.start_date + Days::new(index as u64)
    }
}

/// Fixed geography: a municipality's profile is a pure function of its id.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Municipality {
    pub id: u32,
    /// Centre in the unit square; scale by the map extent.
    pub unit_x: f64,
    pub unit_y: f64,
    pub altitude: f64,
    pub population: f64,
    pub surface_area: f64,
    pub urbanization: u8,
    pub altimetric_zone: u8,
}

const GEOGRAPHY_SEED: u64 = 0x6765_6f67;

impl Municipality {
    pub fn from_id(id: u32) -> Self {
        let mut rng = seed::rng(seed::derive(GEOGRAPHY_SEED, u64::from(id)));
        let unit_x = rng.random::<f64>();
        let unit_y = rng.random::<f64>();
        let altitude = 1500.0 * rng.random::<f64>().powi(2);
        let population = (6.0 + 2.0 * rng.random::<f64>() * 2.0).exp().round();
        let surface_area = 5.0 + 195.0 * rng.random::<f64>();
        let density = population / surface_area;
        let urbanization = if density > 300.0 {
            0
        } else if density > 50.0 {
            1
        } else {
            2
        };
        let altimetric_zone = if altitude < 300.0 {
            0
        } else if altitude < 700.0 {
            1
        } else {
            2
        };
        Self {
            id,
            unit_x,
            unit_y,
            altitude,
            population,
            surface_area,
            urbanization,
            altimetric_zone,
        }
    }
}

/// Generates the whole corpus, ordered by day. Each day draws from its own
/// derived seed, so days are generated in parallel.
pub fn generate_corpus(config: &GeneratorConfig, specs: &[ActivityClassSpec]) -> Result<Vec<TrainingRecord>> {
    config.validate()?;
    validate_specs(specs)?;
    let samplers: Vec<DurationSampler> = specs
        .iter()
        .map(|s| DurationSampler::new(s, config.signal_strength))
        .collect();
    let weights: Vec<f64> = specs.iter().map(|s| s.mix_weight).collect();
    let base = seed::stream(config.seed, "gen");
    let days = par::map_range(config.n_days, |d| {
        let mut rng = seed::rng(seed::derive(base, d as u64));
        generate_day(config, specs, &samplers, &weights, config.day(d), &mut rng)
    });
    Ok(days.into_iter().flatten().collect())
}

fn generate_day(
    config: &GeneratorConfig,
    specs: &[ActivityClassSpec],
    samplers: &[DurationSampler],
    weights: &[f64],
    date: NaiveDate,
    rng: &mut seed::Rng,
) -> Vec<TrainingRecord> {
    let volume = Normal::new(config.per_day_mean, config.per_day_spread)
        .expect("validated spread")
        .sample(rng)
        .round()
        .max(1.0) as usize;
    let geo = |v: f64, rng: &mut seed::Rng| (rng.random::<f64>() >= config.missing_geo_rate).then_some(v);
    (0..volume)
        .map(|_| {
            let k = draw_categorical(weights, rng);
            let ctx = DrawContext::random(rng);
            let muni = Municipality::from_id(rng.random_range(1..=config.n_municipalities));
            let attributes = Attributes {
                date,
                hour: ctx.hour,
                municipality: muni.id,
                altitude: geo(muni.altitude, rng),
                population: geo(muni.population, rng),
                surface_area: geo(muni.surface_area, rng),
                urbanization: muni.urbanization,
                altimetric_zone: muni.altimetric_zone,
                meter_class: ctx.meter_class,
                accessibility: ctx.accessibility,
                reading_difficulty: ctx.reading_difficulty,
                protocol: rng.random_range(0..4),
                client_source: rng.random_range(0..5),
            };
            TrainingRecord {
                class: specs[k].class,
                duration: samplers[k].sample(&ctx, rng),
                attributes,
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusRow {
    date: NaiveDate,
    class: ActivityClass,
    hour: u8,
    dow: u32,
    month: u32,
    municipality: u32,
    altitude: Option<f64>,
    population: Option<f64>,
    surface_area: Option<f64>,
    urbanization: u8,
    altimetric_zone: u8,
    meter_class: u8,
    accessibility: u8,
    reading_difficulty: u8,
    protocol: u8,
    client_source: u8,
    duration: f64,
}

pub fn write_corpus<W: Write>(writer: W, records: &[TrainingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        let a = &r.attributes;
        w.serialize(CorpusRow {
            date: a.date,
            class: r.class,
            hour: a.hour,
            dow: a.day_of_week(),
            month: a.month(),
            municipality: a.municipality,
            altitude: a.altitude,
            population: a.population,
            surface_area: a.surface_area,
            urbanization: a.urbanization,
            altimetric_zone: a.altimetric_zone,
            meter_class: a.meter_class,
            accessibility: a.accessibility,
            reading_difficulty: a.reading_difficulty,
            protocol: a.protocol,
            client_source: a.client_source,
            duration: r.duration,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus<R: Read>(reader: R) -> Result<Vec<TrainingRecord>> {
    let mut rd = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (line, row) in rd.deserialize::<CorpusRow>().enumerate() {
        let row = row?;
        if row.dow != row.date.weekday().num_days_from_monday() || row.month != row.date.month() {
            return Err(Error::invalid_input(format!(
                "corpus row {}: dow/month disagree with date {}",
                line + 1,
                row.date
            )));
        }
        if !(row.duration.is_finite() && row.duration >= 0.0) {
            return Err(Error::invalid_input(format!(
                "corpus row {}: invalid duration",
                line + 1
            )));
        }
        out.push(TrainingRecord {
            class: row.class,
            duration: row.duration,
            attributes: Attributes {
                date: row.date,
                hour: row.hour,
                municipality: row.municipality,
                altitude: row.altitude,
                population: row.population,
                surface_area: row.surface_area,
                urbanization: row.urbanization,
                altimetric_zone: row.altimetric_zone,
                meter_class: row.meter_class,
                accessibility: row.accessibility,
                reading_difficulty: row.reading_difficulty,
                protocol: row.protocol,
                client_source: row.client_source,
            },
        });
    }
    Ok(out)
}

pub fn write_corpus_csv(path: &Path, records: &[TrainingRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_corpus(std::io::BufWriter::new(file), records)
}

pub fn read_corpus_csv(path: &Path) -> Result<Vec<TrainingRecord>> {
    read_corpus(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::datagen::specs::default_class_specs;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n_days: 5,
            per_day_mean: 200.0,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn reproducible_and_round_trips() {
        let specs = default_class_specs();
        let a = generate_corpus(&small(4), &specs).unwrap();
        let b = generate_corpus(&small(4), &specs).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_corpus(&small(5), &specs).unwrap());
        let mut buf = Vec::new();
        write_corpus(&mut buf, &a).unwrap();
        let back = read_corpus(buf.as_slice()).unwrap();
        assert_eq!(back, a);
        let dates: Vec<_> = a.iter().map(|r| r.date()).collect();
        assert!(dates.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sequential_path_matches() {
        let specs = default_class_specs();
        let a = generate_corpus(&small(8), &specs).unwrap();
        par::set_sequential(true);
        let b = generate_corpus(&small(8), &specs).unwrap();
        par::set_sequential(false);
        assert_eq!(a, b);
    }

    #[test]
    fn class_frequencies_track_mix_weights() {
        let specs = default_class_specs();
        let cfg = GeneratorConfig {
            n_days: 20,
            per_day_mean: 1000.0,
            seed: 2,
            ..Default::default()
        };
        let corpus = generate_corpus(&cfg, &specs).unwrap();
        let n = corpus.len() as f64;
        let mut counts = BTreeMap::new();
        for r in &corpus {
            *counts.entry(r.class).or_insert(0usize) += 1;
        }
        for s in &specs {
            let p = s.mix_weight;
            let se = (p * (1.0 - p) / n).sqrt();
            let observed = *counts.get(&s.class).unwrap_or(&0) as f64 / n;
            assert!(
                (observed - p).abs() <= 3.0 * se + 1e-12,
                "{}: {observed} vs {p}",
                s.class
            );
        }
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let csv = "date,class,hour,dow,month,municipality,altitude,population,surface_area,urbanization,\
altimetric_zone,meter_class,accessibility,reading_difficulty,protocol,client_source,duration\n\
2024-03-04,E,9,3,3,1,,,,0,0,0,0,0,0,0,20.5\n";
        assert!(read_corpus(csv.as_bytes()).is_err());
        let fixed = csv.replace(",9,3,3,", ",9,0,3,");
        let rows = read_corpus(fixed.as_bytes()).unwrap();
        assert_eq!(rows[0].attributes.altitude, None);
        assert_eq!(rows[0].class, ActivityClass::E);
    }

    #[test]
    fn geography_is_fixed() {
        assert_eq!(Municipality::from_id(3), Municipality::from_id(3));
        let m = Municipality::from_id(12);
        assert!((0.0..1.0).contains(&m.unit_x) && m.urbanization <= 2 && m.altimetric_zone <= 2);
    }
}
