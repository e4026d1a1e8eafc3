use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};

use super::data::{MeasurementSeries, Sample, ThresholdSpec};
use super::AirQualityError;
use crate::ir::{FeatureStructure, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Season {
    /// Nov 1 to Mar 31 of the following year.
    Winter,
    /// Apr 1 to Oct 31.
    Summer,
}

impl Season {
    pub fn symbol(self) -> &'static str {
        match self {
            Season::Winter => "WINTER",
            Season::Summer => "SUMMER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodKind {
    Season(Season, i32),
    Year(i32),
    Range,
}

/// Half-open interval of days `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub kind: PeriodKind,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

fn ymd(y: i32, m: u32, d: u32) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(y, m, d)
}

impl Period {
    pub fn season(season: Season, year: i32) -> Option<Period> {
        let (start, end) = match season {
            Season::Winter => (ymd(year, 11, 1)?, ymd(year + 1, 4, 1)?),
            Season::Summer => (ymd(year, 4, 1)?, ymd(year, 11, 1)?),
        };
        Some(Period {
            kind: PeriodKind::Season(season, year),
            start,
            end,
        })
    }

    pub fn year(year: i32) -> Option<Period> {
        Some(Period {
            kind: PeriodKind::Year(year),
            start: ymd(year, 1, 1)?,
            end: ymd(year + 1, 1, 1)?,
        })
    }

    /// Both days inclusive.
    pub fn range(first: NaiveDate, last: NaiveDate) -> Option<Period> {
        (first <= last).then(|| Period {
            kind: PeriodKind::Range,
            start: first,
            end: last + Duration::days(1),
        })
    }

    /// Accepts `winter 1996`, `summer 1990`, `year 1995`, `1995` and
    /// `1996-11-01..1997-03-31`.
    pub fn parse(text: &str) -> Option<Period> {
        let text = text.trim();
        if let Some((a, b)) = text.split_once("..") {
            let d = |s: &str| NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok();
            return Period::range(d(a)?, d(b)?);
        }
        let words: Vec<&str> = text.split_whitespace().collect();
        let year = |s: &str| s.parse::<i32>().ok().filter(|y| (1000..=9998).contains(y));
        match words.as_slice() {
            [y] => Period::year(year(y)?),
            [kind, y] => match kind.to_ascii_lowercase().as_str() {
                "winter" => Period::season(Season::Winter, year(y)?),
                "summer" => Period::season(Season::Summer, year(y)?),
                "year" => Period::year(year(y)?),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn last_day(&self) -> NaiveDate {
        self.end - Duration::days(1)
    }

    pub fn contains(&self, t: NaiveDateTime) -> bool {
        t >= self.start.and_hms_opt(0, 0, 0).expect("midnight")
            && t < self.end.and_hms_opt(0, 0, 0).expect("midnight")
    }

    /// Record carried through text organization before restructuring.
    pub fn record(&self) -> FeatureStructure {
        let mut fs = FeatureStructure::new();
        fs = match self.kind {
            PeriodKind::Season(s, y) => fs
                .with("KIND", Value::sym("SEASON"))
                .with("SEASON", Value::sym(s.symbol()))
                .with("YEAR", Value::int(y as i64)),
            PeriodKind::Year(y) => fs
                .with("KIND", Value::sym("YEAR"))
                .with("YEAR", Value::int(y as i64)),
            PeriodKind::Range => fs.with("KIND", Value::sym("RANGE")),
        };
        fs.with(
            "START",
            Value::Text(self.start.format("%Y-%m-%d").to_string()),
        )
        .with(
            "LAST",
            Value::Text(self.last_day().format("%Y-%m-%d").to_string()),
        )
    }

    /// Inverse of [`Period::record`].
    pub fn from_record(v: &Value) -> Option<Period> {
        let fs = v.as_struct()?;
        let day = |slot: &str| NaiveDate::parse_from_str(fs.get(slot)?.as_text()?, "%Y-%m-%d").ok();
        let (start, last) = (day("START")?, day("LAST")?);
        let year = || fs.get("YEAR")?.as_number().map(|n| n.as_f64() as i32);
        let kind = match fs.get("KIND")?.as_symbol()?.as_str() {
            "SEASON" => {
                let season = match fs.get("SEASON")?.as_symbol()?.as_str() {
                    "WINTER" => Season::Winter,
                    "SUMMER" => Season::Summer,
                    _ => return None,
                };
                PeriodKind::Season(season, year()?)
            }
            "YEAR" => PeriodKind::Year(year()?),
            "RANGE" => PeriodKind::Range,
            _ => return None,
        };
        let p = Period::range(start, last)?;
        Some(Period { kind, ..p })
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PeriodKind::Season(s, y) => write!(f, "{} {y}", s.symbol().to_ascii_lowercase()),
            PeriodKind::Year(y) => write!(f, "year {y}"),
            PeriodKind::Range => write!(f, "{}..{}", self.start, self.last_day()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    Average,
    Maximum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatValue {
    pub value: f64,
    pub unit: String,
    pub samples: usize,
}

fn in_period<'a>(series: &'a MeasurementSeries, period: &Period) -> &'a [Sample] {
    let from = series
        .samples
        .partition_point(|s| s.time < period.start.and_hms_opt(0, 0, 0).expect("midnight"));
    let to = series
        .samples
        .partition_point(|s| s.time < period.end.and_hms_opt(0, 0, 0).expect("midnight"));
    &series.samples[from..to]
}

/// Mean or maximum over the samples inside the period; `None` when no
/// sample falls inside.
pub fn aggregate_stat(
    series: &MeasurementSeries,
    period: &Period,
    kind: StatKind,
) -> Option<StatValue> {
    let samples = in_period(series, period);
    if samples.is_empty() {
        return None;
    }
    let value = match kind {
        StatKind::Average => samples.iter().map(|s| s.value).sum::<f64>() / samples.len() as f64,
        StatKind::Maximum => samples
            .iter()
            .map(|s| s.value)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Some(StatValue {
        value,
        unit: series.unit.clone(),
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExceedanceResult {
    pub exceeded: bool,
    /// Number of maximal runs of qualifying windows.
    pub times: usize,
    /// Number of complete windows evaluated.
    pub windows: usize,
}

impl ExceedanceResult {
    pub fn status(&self) -> &'static str {
        if self.exceeded {
            "YES"
        } else {
            "NO"
        }
    }
}

/// Sliding-mean exceedances over the period.
///
/// A window holds `hours * 3600 / interval` consecutive samples spanning
/// exactly that duration; windows across gaps in the series are not
/// evaluated and end a run. A window qualifies when its mean is strictly
/// above the threshold amount. `None` when no complete window lies inside
/// the period.
pub fn exceedances(
    series: &MeasurementSeries,
    threshold: &ThresholdSpec,
    period: &Period,
) -> Result<Option<ExceedanceResult>, AirQualityError> {
    if series.unit != threshold.unit {
        return Err(AirQualityError::UnitMismatch {
            series: series.unit.clone(),
            threshold: threshold.unit.clone(),
        });
    }
    let samples = in_period(series, period);
    let span = threshold.hours * 3600;
    let Some(interval) = series.interval_secs() else {
        return Ok(None);
    };
    if span < interval || span % interval != 0 {
        return Err(AirQualityError::Duration {
            hours: threshold.hours,
            interval_secs: interval,
        });
    }
    let k = (span / interval) as usize;
    let amount = threshold.amount.as_f64();
    let expected = Duration::seconds(interval * (k as i64 - 1));
    let (mut windows, mut times, mut in_run) = (0, 0, false);
    for w in samples.windows(k) {
        let qualifies = if w[k - 1].time - w[0].time == expected {
            windows += 1;
            w.iter().map(|s| s.value).sum::<f64>() / k as f64 > amount
        } else {
            false
        };
        if qualifies && !in_run {
            times += 1;
        }
        in_run = qualifies;
    }
    Ok((windows > 0).then_some(ExceedanceResult {
        exceeded: times > 0,
        times,
        windows,
    }))
}

/// Calendar year of the last day of a winter period, used in `1996/97`.
pub fn winter_end_year(start_year: i32) -> i32 {
    Period::season(Season::Winter, start_year).map_or(start_year + 1, |p| p.last_day().year())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Number;

    fn hourly(values: &[f64]) -> MeasurementSeries {
        let t0 = ymd(1996, 11, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        MeasurementSeries {
            station: "VK".into(),
            pollutant: "SO2".into(),
            unit: "MKG-M3".into(),
            samples: values
                .iter()
                .enumerate()
                .map(|(i, v)| Sample {
                    time: t0 + Duration::hours(i as i64),
                    value: *v,
                })
                .collect(),
        }
    }

    fn threshold(amount: i64, hours: i64) -> ThresholdSpec {
        ThresholdSpec {
            country: "DE".into(),
            law_name: "SMOGVERORDNUNG".into(),
            threshold_type: "VORWARNSTUFE".into(),
            pollutant: "SO2".into(),
            amount: Number::Int(amount),
            unit: "MKG-M3".into(),
            hours,
        }
    }

    #[test]
    fn winter_spans_the_year_boundary() {
        let p = Period::parse("winter 1996").unwrap();
        assert_eq!(p.start, ymd(1996, 11, 1).unwrap());
        assert_eq!(p.last_day(), ymd(1997, 3, 31).unwrap());
        assert_eq!(Period::from_record(&Value::Struct(p.record())), Some(p));
        let r = Period::parse("1996-01-01..1996-01-31").unwrap();
        assert_eq!(Period::from_record(&Value::Struct(r.record())), Some(r));
        assert_eq!(Period::parse("1995"), Period::year(1995));
        assert!(Period::parse("autumn 1996").is_none());
        assert!(Period::parse("1997-01-01..1996-01-01").is_none());
        assert_eq!(winter_end_year(1996), 1997);
    }

    #[test]
    fn stats() {
        let s = hourly(&[10.0, 20.0, 30.0]);
        let p = Period::parse("winter 1996").unwrap();
        assert_eq!(
            aggregate_stat(&s, &p, StatKind::Average).unwrap().value,
            20.0
        );
        assert_eq!(
            aggregate_stat(&s, &p, StatKind::Maximum).unwrap().value,
            30.0
        );
        assert!(aggregate_stat(
            &s,
            &Period::parse("summer 1990").unwrap(),
            StatKind::Average
        )
        .is_none());
    }

    #[test]
    fn two_runs() {
        let mut v = vec![650.0; 3];
        v.extend(vec![100.0; 10]);
        v.extend(vec![650.0; 3]);
        let r = exceedances(
            &hourly(&v),
            &threshold(600, 3),
            &Period::parse("winter 1996").unwrap(),
        )
        .unwrap()
        .unwrap();
        assert_eq!((r.exceeded, r.times), (true, 2));
    }

    #[test]
    fn boundary_is_strict() {
        let r = exceedances(
            &hourly(&[600.0; 24]),
            &threshold(600, 3),
            &Period::parse("winter 1996").unwrap(),
        )
        .unwrap()
        .unwrap();
        assert_eq!((r.exceeded, r.times, r.windows), (false, 0, 22));
    }

    #[test]
    fn unit_and_duration_errors() {
        let p = Period::parse("winter 1996").unwrap();
        let mut t = threshold(600, 3);
        t.unit = "PPB".into();
        assert!(matches!(
            exceedances(&hourly(&[1.0, 2.0]), &t, &p),
            Err(AirQualityError::UnitMismatch { .. })
        ));
        let mut s = hourly(&[1.0, 2.0]);
        s.samples[1].time = s.samples[0].time + Duration::hours(2);
        assert!(matches!(
            exceedances(&s, &threshold(600, 1), &p),
            Err(AirQualityError::Duration { .. })
        ));
        assert_eq!(
            exceedances(&hourly(&[1.0]), &threshold(600, 1), &p).unwrap(),
            None
        );
    }
}
