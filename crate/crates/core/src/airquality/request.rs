use std::fmt;

use super::stats::Period;
use super::AirQualityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportType {
    Average,
    Maximum,
    ThresholdExceeding,
}

impl ReportType {
    pub fn symbol(self) -> &'static str {
        match self {
            ReportType::Average => "AVERAGE",
            ReportType::Maximum => "MAXIMUM",
            ReportType::ThresholdExceeding => "THRESHOLD-EXCEEDING",
        }
    }

    fn parse(s: &str) -> Option<ReportType> {
        match s.to_ascii_uppercase().as_str() {
            "AVERAGE" => Some(ReportType::Average),
            "MAXIMUM" => Some(ReportType::Maximum),
            "THRESHOLD-EXCEEDING" => Some(ReportType::ThresholdExceeding),
            _ => None,
        }
    }
}

impl fmt::Display for ReportType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRequest {
    pub report: ReportType,
    /// Language tag: FR, DE or EN.
    pub language: String,
    /// Country whose legislation applies.
    pub legislation: Option<String>,
    pub station: String,
    pub pollutant: String,
    pub period: Period,
    pub compare: Option<Period>,
    pub confirm: bool,
    pub describe_station: bool,
    pub describe_pollutant: bool,
}

const KEYS: [&str; 10] = [
    "report",
    "lang",
    "legislation",
    "station",
    "pollutant",
    "period",
    "compare",
    "confirm",
    "describe-station",
    "describe-pollutant",
];

fn flag(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "yes" | "on" | "true" => Some(true),
        "no" | "off" | "false" => Some(false),
        _ => None,
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_request(text: &str) -> Result<ReportRequest, AirQualityError> {
    let mut values: Vec<(&str, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| AirQualityError::Request { line, message };
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, found {content:?}")))?;
        let k = k.trim().to_ascii_lowercase();
        let key = KEYS
            .iter()
            .find(|known| **known == k)
            .ok_or_else(|| err(format!("unknown key {k}")))?;
        if values.iter().any(|(seen, _, _)| seen == key) {
            return Err(err(format!("repeated key {k}")));
        }
        values.push((key, v.trim().to_string(), line));
    }
    let get = |key: &str| {
        values
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    };
    let required = |key: &str| {
        get(key).ok_or_else(|| AirQualityError::Request {
            line: 0,
            message: format!("missing key {key}"),
        })
    };
    let at = |line: usize, message: String| AirQualityError::Request { line, message };

    let (r, l) = required("report")?;
    let report = ReportType::parse(r).ok_or_else(|| at(l, format!("unknown report type {r}")))?;
    let (lang, l) = required("lang")?;
    let language = lang.to_ascii_uppercase();
    if !["FR", "DE", "EN"].contains(&language.as_str()) {
        return Err(at(l, format!("unknown language {lang}")));
    }
    let period_at = |key: &str| -> Result<Option<Period>, AirQualityError> {
        match get(key) {
            None => Ok(None),
            Some((v, l)) => Period::parse(v)
                .map(Some)
                .ok_or_else(|| at(l, format!("unparseable period {v:?}"))),
        }
    };
    let (p, _) = required("period")?;
    let period = period_at("period")?.ok_or_else(|| at(0, format!("unparseable period {p:?}")))?;
    let compare = period_at("compare")?;
    let flag_at = |key: &str| -> Result<bool, AirQualityError> {
        match get(key) {
            None => Ok(false),
            Some((v, l)) => {
                flag(v).ok_or_else(|| at(l, format!("{key} expects yes or no, found {v}")))
            }
        }
    };
    let req = ReportRequest {
        report,
        language,
        legislation: get("legislation").map(|(v, _)| v.to_ascii_uppercase()),
        station: required("station")?.0.to_string(),
        pollutant: required("pollutant")?.0.to_string(),
        period,
        compare,
        confirm: flag_at("confirm")?,
        describe_station: flag_at("describe-station")?,
        describe_pollutant: flag_at("describe-pollutant")?,
    };
    check_compatibility(&req)?;
    Ok(req)
}

/// Compatibility table:
///
/// | report              | legislation | compare         |
/// |---------------------|-------------|-----------------|
/// | AVERAGE, MAXIMUM    | forbidden   | optional        |
/// | THRESHOLD-EXCEEDING | required    | optional        |
///
/// A comparison period must differ from the main period.
pub fn check_compatibility(req: &ReportRequest) -> Result<(), AirQualityError> {
    let incompatible = |a: String, b: String| {
        Err(AirQualityError::Incompatible {
            first: a,
            second: b,
        })
    };
    match (req.report, &req.legislation) {
        (ReportType::ThresholdExceeding, None) => {
            return incompatible("report THRESHOLD-EXCEEDING".into(), "no legislation".into())
        }
        (ReportType::Average | ReportType::Maximum, Some(l)) => {
            return incompatible(format!("report {}", req.report), format!("legislation {l}"))
        }
        _ => {}
    }
    if req.compare.as_ref() == Some(&req.period) {
        return incompatible(
            format!("period {}", req.period),
            format!("compare {}", req.period),
        );
    }
    Ok(())
}
