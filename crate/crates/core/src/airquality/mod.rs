//! Air-quality data layer: measurement series, metadata, statistics,
//! threshold exceedances and the request format of the report generator.

mod data;
mod request;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::ir::{FeatureStructure, Symbol, Value};
use crate::textorg::{AssertionData, DataSource, ReportContext, ThresholdInfo};
use crate::tgl::language_name;

pub use data::{
    load_measurements, load_metadata, parse_measurements, parse_metadata, MeasurementSeries,
    Metadata, Pollutant, Sample, SeriesKey, Station, ThresholdSpec,
};
pub use request::{check_compatibility, parse_request, ReportRequest, ReportType};
pub use stats::{
    aggregate_stat, exceedances, winter_end_year, ExceedanceResult, Period, PeriodKind, Season,
    StatKind, StatValue,
};

#[derive(Debug, Error)]
pub enum AirQualityError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("line {line}: timestamp of {station}/{pollutant} does not increase")]
    NonMonotonic {
        line: usize,
        station: String,
        pollutant: String,
    },
    #[error("line {line}: unit {found} of {station}/{pollutant} differs from {expected}")]
    MixedUnits {
        line: usize,
        station: String,
        pollutant: String,
        expected: String,
        found: String,
    },
    #[error("metadata {path}: {message}")]
    Metadata { path: String, message: String },
    #[error("request line {line}: {message}")]
    Request { line: usize, message: String },
    #[error("incompatible request: {first} with {second}")]
    Incompatible { first: String, second: String },
    #[error("series unit {series} differs from threshold unit {threshold}")]
    UnitMismatch { series: String, threshold: String },
    #[error("exposure of {hours} h is not a whole number of {interval_secs} s samples")]
    Duration { hours: i64, interval_secs: i64 },
    #[error("unknown {what} {name}")]
    Unknown { what: &'static str, name: String },
}

impl AirQualityError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AirQualityError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Immutable measurement and metadata store behind report generation.
#[derive(Debug, Clone, PartialEq)]
pub struct TemsisData {
    pub series: BTreeMap<SeriesKey, MeasurementSeries>,
    pub metadata: Metadata,
}

pub fn build_datasource(
    series: BTreeMap<SeriesKey, MeasurementSeries>,
    metadata: Metadata,
) -> TemsisData {
    TemsisData { series, metadata }
}

/// Loads `measurements.csv` and `metadata.json` from a data directory.
pub fn load_data_dir(dir: &Path) -> Result<TemsisData, AirQualityError> {
    Ok(build_datasource(
        load_measurements(&dir.join("measurements.csv"))?,
        load_metadata(&dir.join("metadata.json"))?,
    ))
}

fn binding_str<'a>(ctx: &'a ReportContext, name: &str) -> Result<&'a str, String> {
    match ctx.binding(name) {
        Some(Value::Symbol(s)) => Ok(s.as_str()),
        Some(Value::Text(t)) => Ok(t),
        _ => Err(format!("binding {name} is unset")),
    }
}

fn result(fs: FeatureStructure) -> AssertionData {
    AssertionData::Record(FeatureStructure::new().with("RESULT", Value::Struct(fs)))
}

impl TemsisData {
    pub fn series_for(&self, station: &str, pollutant: &str) -> Option<&MeasurementSeries> {
        self.series
            .get(&(station.to_string(), pollutant.to_string()))
    }

    /// Bindings and flags for the organizer. Checks that every referenced
    /// station, pollutant and threshold exists.
    pub fn report_context(&self, req: &ReportRequest) -> Result<ReportContext, AirQualityError> {
        let unknown = |what, name: &str| AirQualityError::Unknown {
            what,
            name: name.to_string(),
        };
        let station = self
            .metadata
            .stations
            .get(&req.station)
            .ok_or_else(|| unknown("station", &req.station))?;
        let pollutant = self
            .metadata
            .pollutants
            .get(&req.pollutant)
            .ok_or_else(|| unknown("pollutant", &req.pollutant))?;
        let mut bindings = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            bindings.insert(Symbol::new(k), v);
        };
        put("STATION", Value::sym(&station.id));
        put("SITE", Value::text(&station.name));
        put("POLLUTANT", Value::sym(&pollutant.symbol));
        put("POLLUTANT-ID", Value::sym(&pollutant.id));
        put("PERIOD", Value::Struct(req.period.record()));
        if let Some(c) = &req.compare {
            put("COMPARE", Value::Struct(c.record()));
        }
        if let Some(country) = &req.legislation {
            if self.metadata.threshold(country, &pollutant.id).is_none() {
                return Err(unknown("threshold", &format!("{country}/{}", pollutant.id)));
            }
            put("LEGISLATION", Value::sym(country));
        }
        let mut flags = BTreeSet::new();
        for (on, f) in [
            (req.confirm, "CONFIRM"),
            (req.describe_station, "DESCRIBE-STATION"),
            (req.describe_pollutant, "DESCRIBE-POLLUTANT"),
        ] {
            if on {
                flags.insert(Symbol::new(f));
            }
        }
        Ok(ReportContext {
            report_type: Symbol::new(req.report.symbol()),
            language: language_name(&Symbol::new(&req.language)),
            bindings,
            flags,
            diagrams: 0,
        })
    }
}

impl DataSource for TemsisData {
    fn assertion_data(
        &self,
        assertion: &Symbol,
        ctx: &ReportContext,
        period: &Value,
    ) -> Result<AssertionData, String> {
        let kind = match assertion.as_str() {
            "AVERAGE" => Some(StatKind::Average),
            "MAXIMUM" => Some(StatKind::Maximum),
            "THRESHOLD-EXCEEDING" => None,
            _ => return Ok(AssertionData::Nothing),
        };
        let period = Period::from_record(period).ok_or("statement has no usable period")?;
        let station = binding_str(ctx, "STATION")?;
        let pollutant = binding_str(ctx, "POLLUTANT-ID")?;
        let Some(series) = self.series_for(station, pollutant) else {
            return Ok(AssertionData::NoData);
        };
        match kind {
            Some(kind) => Ok(match aggregate_stat(series, &period, kind) {
                None => AssertionData::NoData,
                Some(s) => result(
                    FeatureStructure::new()
                        .with("MEASURED", Value::decimal((s.value * 10.0).round() / 10.0))
                        .with("SAMPLES", Value::int(s.samples as i64)),
                ),
            }),
            None => {
                let country = binding_str(ctx, "LEGISLATION")?;
                let threshold = self
                    .metadata
                    .threshold(country, pollutant)
                    .ok_or_else(|| format!("no {country} threshold for {pollutant}"))?;
                Ok(
                    match exceedances(series, threshold, &period).map_err(|e| e.to_string())? {
                        None => AssertionData::NoData,
                        Some(r) => result(
                            FeatureStructure::new()
                                .with(
                                    "EXCEEDS",
                                    Value::Struct(
                                        FeatureStructure::new()
                                            .with("STATUS", Value::sym(r.status()))
                                            .with("TIMES", Value::int(r.times as i64)),
                                    ),
                                )
                                .with("WINDOWS", Value::int(r.windows as i64)),
                        ),
                    },
                )
            }
        }
    }

    fn pollutant_unit(&self, pollutant: &Symbol) -> Option<Symbol> {
        self.metadata
            .pollutant_by_symbol(pollutant.as_str())
            .map(|p| Symbol::new(&p.unit))
    }

    fn threshold(&self, legislation: &Symbol, pollutant: &Symbol) -> Option<ThresholdInfo> {
        let p = self.metadata.pollutant_by_symbol(pollutant.as_str())?;
        let t = self.metadata.threshold(legislation.as_str(), &p.id)?;
        Some(ThresholdInfo {
            law_name: Symbol::new(&t.law_name),
            threshold_type: Symbol::new(&t.threshold_type),
            amount: t.amount,
            unit: Symbol::new(&t.unit),
            hours: t.hours,
        })
    }

    fn canned(&self, key: &str, language: &Symbol) -> Option<String> {
        self.metadata
            .canned_text(key, language.as_str())
            .map(str::to_string)
    }
}
