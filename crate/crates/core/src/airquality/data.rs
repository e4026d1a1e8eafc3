use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde_json::{Map, Value as Json};

use super::AirQualityError;
use crate::ir::Number;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: NaiveDateTime,
    pub value: f64,
}

/// Samples of one pollutant at one station, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    pub station: String,
    pub pollutant: String,
    pub unit: String,
    pub samples: Vec<Sample>,
}

impl MeasurementSeries {
    /// Smallest gap between consecutive samples, in seconds.
    pub fn interval_secs(&self) -> Option<i64> {
        self.samples
            .windows(2)
            .map(|w| (w[1].time - w[0].time).num_seconds())
            .min()
    }
}

pub type SeriesKey = (String, String);

const HEADER: [&str; 5] = ["timestamp", "station", "pollutant", "value", "unit"];

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|t| t.naive_utc())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok())
}

/// Reads measurement CSV text into series keyed by (station, pollutant).
pub fn parse_measurements(
    text: &str,
) -> Result<BTreeMap<SeriesKey, MeasurementSeries>, AirQualityError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out: BTreeMap<SeriesKey, MeasurementSeries> = BTreeMap::new();
    let mut header_seen = false;
    for record in reader.records() {
        let record = record.map_err(|e| AirQualityError::Row {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            if record.iter().ne(HEADER.iter().copied()) {
                return Err(AirQualityError::Row {
                    line,
                    message: format!("expected header {}", HEADER.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        let row_err = |message: String| AirQualityError::Row { line, message };
        if record.len() != HEADER.len() {
            return Err(row_err(format!(
                "expected {} fields, found {}",
                HEADER.len(),
                record.len()
            )));
        }
        let time = parse_time(&record[0])
            .ok_or_else(|| row_err(format!("bad timestamp {:?}", &record[0])))?;
        let value: f64 = record[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| row_err(format!("bad value {:?}", &record[3])))?;
        let (station, pollutant, unit) = (&record[1], &record[2], &record[4]);
        if station.is_empty() || pollutant.is_empty() || unit.is_empty() {
            return Err(row_err("empty station, pollutant or unit".into()));
        }
        let series = out
            .entry((station.to_string(), pollutant.to_string()))
            .or_insert_with(|| MeasurementSeries {
                station: station.to_string(),
                pollutant: pollutant.to_string(),
                unit: unit.to_string(),
                samples: Vec::new(),
            });
        if series.unit != unit {
            return Err(AirQualityError::MixedUnits {
                line,
                station: station.to_string(),
                pollutant: pollutant.to_string(),
                expected: series.unit.clone(),
                found: unit.to_string(),
            });
        }
        if series.samples.last().is_some_and(|s| s.time >= time) {
            return Err(AirQualityError::NonMonotonic {
                line,
                station: station.to_string(),
                pollutant: pollutant.to_string(),
            });
        }
        series.samples.push(Sample { time, value });
    }
    Ok(out)
}

pub fn load_measurements(
    path: &Path,
) -> Result<BTreeMap<SeriesKey, MeasurementSeries>, AirQualityError> {
    let text = std::fs::read_to_string(path).map_err(|e| AirQualityError::io(path, e))?;
    parse_measurements(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pollutant {
    pub id: String,
    /// IR symbol, e.g. SULFUR-DIOXIDE.
    pub symbol: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub country: String,
    pub law_name: String,
    pub threshold_type: String,
    pub pollutant: String,
    pub amount: Number,
    pub unit: String,
    pub hours: i64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub stations: BTreeMap<String, Station>,
    pub pollutants: BTreeMap<String, Pollutant>,
    pub thresholds: Vec<ThresholdSpec>,
    /// key -> language tag -> text
    pub canned: BTreeMap<String, BTreeMap<String, String>>,
}

impl Metadata {
    pub fn threshold(&self, country: &str, pollutant_id: &str) -> Option<&ThresholdSpec> {
        self.thresholds
            .iter()
            .find(|t| t.country.eq_ignore_ascii_case(country) && t.pollutant == pollutant_id)
    }

    pub fn pollutant_by_symbol(&self, symbol: &str) -> Option<&Pollutant> {
        self.pollutants
            .values()
            .find(|p| p.symbol.eq_ignore_ascii_case(symbol))
    }

    pub fn canned_text(&self, key: &str, language: &str) -> Option<&str> {
        self.canned.get(key)?.get(language).map(String::as_str)
    }
}

struct Walker;

impl Walker {
    fn err(path: &str, message: impl Into<String>) -> AirQualityError {
        AirQualityError::Metadata {
            path: path.to_string(),
            message: message.into(),
        }
    }

    fn object<'a>(v: &'a Json, path: &str) -> Result<&'a Map<String, Json>, AirQualityError> {
        v.as_object()
            .ok_or_else(|| Self::err(path, "expected an object"))
    }

    fn field<'a>(
        obj: &'a Map<String, Json>,
        path: &str,
        key: &str,
    ) -> Result<&'a Json, AirQualityError> {
        obj.get(key)
            .ok_or_else(|| Self::err(&format!("{path}.{key}"), "missing"))
    }

    fn string(obj: &Map<String, Json>, path: &str, key: &str) -> Result<String, AirQualityError> {
        Self::field(obj, path, key)?
            .as_str()
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .ok_or_else(|| Self::err(&format!("{path}.{key}"), "expected a non-empty string"))
    }
}

/// Parses the metadata document. Error paths are dotted, e.g.
/// `pollutants.SO2.unit`.
pub fn parse_metadata(text: &str) -> Result<Metadata, AirQualityError> {
    let root: Json = serde_json::from_str(text).map_err(|e| Walker::err("$", e.to_string()))?;
    let root = Walker::object(&root, "$")?;
    for key in root.keys() {
        if !["stations", "pollutants", "legislations", "canned"].contains(&key.as_str()) {
            return Err(Walker::err(key, "unknown section"));
        }
    }
    let mut md = Metadata::default();
    for (id, v) in Walker::object(Walker::field(root, "$", "stations")?, "stations")? {
        let path = format!("stations.{id}");
        let obj = Walker::object(v, &path)?;
        md.stations.insert(
            id.clone(),
            Station {
                id: id.clone(),
                name: Walker::string(obj, &path, "name")?,
            },
        );
    }
    for (id, v) in Walker::object(Walker::field(root, "$", "pollutants")?, "pollutants")? {
        let path = format!("pollutants.{id}");
        let obj = Walker::object(v, &path)?;
        md.pollutants.insert(
            id.clone(),
            Pollutant {
                id: id.clone(),
                symbol: Walker::string(obj, &path, "symbol")?,
                unit: Walker::string(obj, &path, "unit")?,
            },
        );
    }
    for (country, laws) in
        Walker::object(Walker::field(root, "$", "legislations")?, "legislations")?
    {
        let cpath = format!("legislations.{country}");
        for (law, list) in Walker::object(laws, &cpath)? {
            let lpath = format!("{cpath}.{law}");
            let list = list
                .as_array()
                .ok_or_else(|| Walker::err(&lpath, "expected an array"))?;
            for (i, t) in list.iter().enumerate() {
                let path = format!("{lpath}[{i}]");
                let obj = Walker::object(t, &path)?;
                let pollutant = Walker::string(obj, &path, "pollutant")?;
                let known = md.pollutants.get(&pollutant).ok_or_else(|| {
                    Walker::err(
                        &format!("{path}.pollutant"),
                        format!("unknown pollutant {pollutant}"),
                    )
                })?;
                let unit = Walker::string(obj, &path, "unit")?;
                if unit != known.unit {
                    return Err(Walker::err(
                        &format!("{path}.unit"),
                        format!("{unit} differs from the pollutant unit {}", known.unit),
                    ));
                }
                let amount_json = Walker::field(obj, &path, "amount")?;
                let amount = match (amount_json.as_i64(), amount_json.as_f64()) {
                    (Some(i), _) if i > 0 => Number::Int(i),
                    (None, Some(f)) if f > 0.0 => Number::Decimal(f),
                    _ => {
                        return Err(Walker::err(
                            &format!("{path}.amount"),
                            "expected a positive number",
                        ))
                    }
                };
                let hours = Walker::field(obj, &path, "hours")?
                    .as_i64()
                    .filter(|h| *h >= 1)
                    .ok_or_else(|| {
                        Walker::err(
                            &format!("{path}.hours"),
                            "expected a whole number of hours >= 1",
                        )
                    })?;
                md.thresholds.push(ThresholdSpec {
                    country: country.clone(),
                    law_name: law.clone(),
                    threshold_type: Walker::string(obj, &path, "type")?,
                    pollutant,
                    amount,
                    unit,
                    hours,
                });
            }
        }
    }
    if let Some(canned) = root.get("canned") {
        for (key, langs) in Walker::object(canned, "canned")? {
            let path = format!("canned.{key}");
            let mut texts = BTreeMap::new();
            for (lang, text) in Walker::object(langs, &path)? {
                let text = text
                    .as_str()
                    .ok_or_else(|| Walker::err(&format!("{path}.{lang}"), "expected a string"))?;
                texts.insert(lang.clone(), text.to_string());
            }
            md.canned.insert(key.clone(), texts);
        }
    }
    Ok(md)
}

pub fn load_metadata(path: &Path) -> Result<Metadata, AirQualityError> {
    let text = std::fs::read_to_string(path).map_err(|e| AirQualityError::io(path, e))?;
    parse_metadata(&text)
}
