//! Window-by-window reference for threshold exceedances and a random
//! series generator.
#![allow(dead_code)]

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::Rng;

use shallowgen::airquality::{MeasurementSeries, Period, Sample, ThresholdSpec};
use shallowgen::ir::Number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expected {
    pub exceeded: bool,
    pub times: usize,
    pub windows: usize,
}

/// Enumerates every window of the right length inside the period; a window
/// counts when each gap equals the sampling interval, and qualifies when its
/// mean is strictly above the amount.
pub fn brute_force(
    series: &MeasurementSeries,
    hours: i64,
    amount: f64,
    period: &Period,
) -> Option<Expected> {
    let all = &series.samples;
    let interval = all
        .windows(2)
        .map(|w| (w[1].time - w[0].time).num_seconds())
        .min()?;
    let k = (hours * 3600 / interval) as usize;
    let lo = period.start.and_hms_opt(0, 0, 0).unwrap();
    let hi = period.end.and_hms_opt(0, 0, 0).unwrap();
    let inside: Vec<&Sample> = all.iter().filter(|s| s.time >= lo && s.time < hi).collect();
    let mut flags = Vec::new();
    let mut windows = 0;
    for i in 0..inside.len() {
        if i + k > inside.len() {
            break;
        }
        let w = &inside[i..i + k];
        let contiguous = (1..k).all(|j| (w[j].time - w[j - 1].time).num_seconds() == interval);
        if contiguous {
            windows += 1;
            let mut sum = 0.0;
            for s in w {
                sum += s.value;
            }
            flags.push(sum / k as f64 > amount);
        } else {
            flags.push(false);
        }
    }
    if windows == 0 {
        return None;
    }
    let mut times = 0;
    for (i, &f) in flags.iter().enumerate() {
        if f && (i == 0 || !flags[i - 1]) {
            times += 1;
        }
    }
    Some(Expected {
        exceeded: times > 0,
        times,
        windows,
    })
}

pub fn threshold(hours: i64, amount: f64) -> ThresholdSpec {
    ThresholdSpec {
        country: "DE".into(),
        law_name: "TEST".into(),
        threshold_type: "VORWARNSTUFE".into(),
        pollutant: "SO2".into(),
        amount: Number::Decimal(amount),
        unit: "MKG-M3".into(),
        hours,
    }
}

pub fn series(samples: Vec<Sample>) -> MeasurementSeries {
    MeasurementSeries {
        station: "S".into(),
        pollutant: "SO2".into(),
        unit: "MKG-M3".into(),
        samples,
    }
}

pub fn at(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(y, m, d)
        .unwrap()
        .and_hms_opt(h, 0, 0)
        .unwrap()
}

/// A series of up to `max_len` samples with occasional gaps, values drifting
/// around `amount`, and a threshold duration that is a whole number of
/// sampling intervals.
pub fn random_case<R: Rng>(rng: &mut R, max_len: usize) -> (MeasurementSeries, i64, f64, Period) {
    let interval = [900i64, 1800, 3600][rng.gen_range(0..3)];
    let hours = rng.gen_range(1..=8);
    let amount = rng.gen_range(50.0..150.0);
    let n = rng.gen_range(0..=max_len);
    let mut t = at(1996, 1, 1, 0) + Duration::seconds(interval * rng.gen_range(0..48));
    let mut level: f64 = amount;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        level = (level + rng.gen_range(-15.0..15.0)).clamp(0.0, 2.0 * amount);
        samples.push(Sample {
            time: t,
            value: (level * 10.0).round() / 10.0,
        });
        let skip = if rng.gen_bool(0.01) {
            rng.gen_range(2..10)
        } else {
            1
        };
        t += Duration::seconds(interval * skip);
    }
    let first = NaiveDate::from_ymd_opt(1996, 1, 1).unwrap() + Duration::days(rng.gen_range(0..20));
    let last = first + Duration::days(rng.gen_range(0..200));
    (
        series(samples),
        hours,
        amount,
        Period::range(first, last).unwrap(),
    )
}
