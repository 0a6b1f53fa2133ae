//! Hourly windspeed tables indexed by (timestamp, altitude), their CSV form,
//! and a synthetic trace generator.
//!
//! CSV schema: header `timestamp,altitude_m,windspeed_ms`, ISO-8601
//! timestamps, one row per (hour, altitude). Rows of one timestamp form a
//! block; blocks appear in strictly increasing time order.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const WIND_HEADER: [&str; 3] = ["timestamp", "altitude_m", "windspeed_ms"];
const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Clone, Debug, PartialEq)]
pub struct WindTable {
    altitudes: Vec<f64>,
    timestamps: Vec<NaiveDateTime>,
    /// `speeds[t][a]` in m/s.
    speeds: Vec<Vec<f64>>,
}

impl WindTable {
    pub fn new(
        altitudes: Vec<f64>,
        timestamps: Vec<NaiveDateTime>,
        speeds: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if altitudes.is_empty() || timestamps.is_empty() {
            return Err(Error::input("wind table is empty"));
        }
        if altitudes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input("altitudes must be strictly increasing"));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("timestamps must be strictly increasing"));
        }
        if speeds.len() != timestamps.len() || speeds.iter().any(|r| r.len() != altitudes.len()) {
            return Err(Error::input("windspeed matrix does not match the axes"));
        }
        if speeds.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::input("windspeeds must be finite and non-negative"));
        }
        Ok(Self {
            altitudes,
            timestamps,
            speeds,
        })
    }

    pub fn altitudes(&self) -> &[f64] {
        &self.altitudes
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn n_times(&self) -> usize {
        self.timestamps.len()
    }

    /// Windspeeds at every altitude for timestamp index `t`.
    pub fn speeds_at(&self, t: usize) -> &[f64] {
        &self.speeds[t]
    }

    pub fn speed(&self, t: usize, altitude: usize) -> f64 {
        self.speeds[t][altitude]
    }

    /// Hour of day of timestamp index `t`.
    pub fn hour(&self, t: usize) -> f64 {
        self.timestamps[t].hour() as f64
    }

    /// First `n` timestamps.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.n_times()).max(1);
        Self {
            altitudes: self.altitudes.clone(),
            timestamps: self.timestamps[..n].to_vec(),
            speeds: self.speeds[..n].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(WIND_HEADER)?;
        for (t, ts) in self.timestamps.iter().enumerate() {
            for (a, alt) in self.altitudes.iter().enumerate() {
                w.write_record([
                    ts.format(TIME_FORMAT).to_string(),
                    alt.to_string(),
                    self.speeds[t][a].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc());
    }
    for fmt in [TIME_FORMAT, "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    None
}

/// Reads a wind CSV. The altitude set is taken from the first timestamp
/// block unless `altitudes` is given; every block must cover it exactly.
pub fn read_wind_csv<R: Read>(input: R, altitudes: Option<&[f64]>) -> Result<WindTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != WIND_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", WIND_HEADER.join(",")),
        });
    }
    let mut rows: Vec<(usize, NaiveDateTime, f64, f64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bad = |message: String| Error::Parse { line, message };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| bad(format!("bad timestamp {:?}", &rec[0])))?;
        let alt: f64 = rec[1]
            .parse()
            .map_err(|_| bad(format!("bad altitude {:?}", &rec[1])))?;
        let v: f64 = rec[2]
            .parse()
            .map_err(|_| bad(format!("bad windspeed {:?}", &rec[2])))?;
        if !alt.is_finite() {
            return Err(bad(format!("bad altitude {alt}")));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(bad(format!("windspeed must be finite and non-negative, got {v}")));
        }
        rows.push((line, ts, alt, v));
    }
    if rows.is_empty() {
        return Err(Error::input("wind file has no data rows"));
    }

    let first = rows[0].1;
    let mut alts: Vec<f64> = match altitudes {
        Some(a) => a.to_vec(),
        None => rows.iter().take_while(|r| r.1 == first).map(|r| r.2).collect(),
    };
    alts.sort_by(f64::total_cmp);
    if alts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::input("duplicate altitude in the altitude set"));
    }

    let mut timestamps = Vec::new();
    let mut speeds: Vec<Vec<f64>> = Vec::new();
    let mut k = 0;
    while k < rows.len() {
        let (line0, ts, _, _) = rows[k];
        if let Some(&last) = timestamps.last() {
            if ts <= last {
                return Err(Error::Parse {
                    line: line0,
                    message: format!("timestamp {ts} does not increase"),
                });
            }
        }
        let mut block = vec![f64::NAN; alts.len()];
        while k < rows.len() && rows[k].1 == ts {
            let (line, _, alt, v) = rows[k];
            let a = alts
                .iter()
                .position(|&x| x == alt)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unknown altitude {alt}"),
                })?;
            if !block[a].is_nan() {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate altitude {alt} at {ts}"),
                });
            }
            block[a] = v;
            k += 1;
        }
        if let Some(a) = block.iter().position(|v| v.is_nan()) {
            return Err(Error::Parse {
                line: line0,
                message: format!("timestamp {ts} lacks altitude {}", alts[a]),
            });
        }
        timestamps.push(ts);
        speeds.push(block);
    }
    WindTable::new(alts, timestamps, speeds)
}

pub fn ingest_wind_csv(path: impl AsRef<Path>) -> Result<WindTable> {
    read_wind_csv(std::fs::File::open(path)?, None)
}

/// Synthetic hourly wind: a logarithmic mean profile `a·ln(x/z₀)`, a diurnal
/// oscillation whose amplitude grows with altitude, and AR(1) noise that is
/// correlated across altitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindGenerator {
    pub n_altitudes: usize,
    pub min_altitude: f64,
    pub max_altitude: f64,
    pub hours: usize,
    pub start: NaiveDate,
    /// Profile slope `a` in m/s.
    pub slope: f64,
    /// Roughness length `z₀` in metres.
    pub roughness: f64,
    /// Diurnal amplitude at the top altitude, m/s.
    pub diurnal_amplitude: f64,
    /// Hour of the diurnal peak.
    pub peak_hour: f64,
    /// Hour-to-hour AR(1) coefficient.
    pub persistence: f64,
    /// Stationary standard deviation of the AR(1) noise, m/s.
    pub noise_sd: f64,
    /// Share of the noise common to all altitudes.
    pub shared_noise: f64,
}

impl Default for WindGenerator {
    fn default() -> Self {
        Self {
            n_altitudes: 25,
            min_altitude: 10.0,
            max_altitude: 1600.0,
            hours: 960,
            start: NaiveDate::from_ymd_opt(2016, 7, 1).expect("valid date"),
            slope: 1.5,
            roughness: 0.1,
            diurnal_amplitude: 3.5,
            peak_hour: 3.0,
            persistence: 0.9,
            noise_sd: 1.0,
            shared_noise: 0.7,
        }
    }
}

impl WindGenerator {
    pub fn validate(&self) -> Result<()> {
        if self.n_altitudes < 2 || self.hours == 0 {
            return Err(Error::parameter("need at least 2 altitudes and 1 hour"));
        }
        if !(self.min_altitude > self.roughness && self.max_altitude > self.min_altitude) {
            return Err(Error::parameter("altitudes must exceed the roughness length and increase"));
        }
        if !(0.0..1.0).contains(&self.persistence) || !(0.0..=1.0).contains(&self.shared_noise) {
            return Err(Error::parameter("persistence must lie in [0,1) and shared_noise in [0,1]"));
        }
        if !(self.noise_sd >= 0.0) || !(self.roughness > 0.0) {
            return Err(Error::parameter("invalid noise or roughness"));
        }
        Ok(())
    }

    pub fn altitudes(&self) -> Vec<f64> {
        let n = self.n_altitudes;
        (0..n)
            .map(|i| self.min_altitude + (self.max_altitude - self.min_altitude) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn generate(&self, seed: u64) -> Result<WindTable> {
        self.validate()?;
        let mut rng = rng::stream(seed, Stream::Wind);
        let alts = self.altitudes();
        let top = (self.max_altitude / self.min_altitude).ln();
        let innov = (1.0 - self.persistence * self.persistence).sqrt() * self.noise_sd;
        let (ws, wl) = (self.shared_noise.sqrt(), (1.0 - self.shared_noise).sqrt());
        let mut ar = vec![0.0; alts.len()];
        let mut first = true;
        let start = self.start.and_hms_opt(0, 0, 0).expect("valid time");
        let mut timestamps = Vec::with_capacity(self.hours);
        let mut speeds = Vec::with_capacity(self.hours);
        for h in 0..self.hours {
            let ts = start + Duration::hours(h as i64);
            let hour = ts.hour() as f64;
            let phase = (2.0 * std::f64::consts::PI * (hour - self.peak_hour) / 24.0).cos();
            let common: f64 = rng.sample(StandardNormal);
            let row: Vec<f64> = alts
                .iter()
                .enumerate()
                .map(|(a, &x)| {
                    let local: f64 = rng.sample(StandardNormal);
                    let shock = ws * common + wl * local;
                    ar[a] = if first {
                        self.noise_sd * shock
                    } else {
                        self.persistence * ar[a] + innov * shock
                    };
                    let mean = self.slope * (x / self.roughness).ln();
                    let amp = self.diurnal_amplitude * (x / self.min_altitude).ln() / top;
                    (mean + amp * phase + ar[a]).max(0.0)
                })
                .collect();
            first = false;
            timestamps.push(ts);
            speeds.push(row);
        }
        WindTable::new(alts, timestamps, speeds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_rejected() {
        let e = read_wind_csv("timestamp,altitude_m,windspeed_ms\n".as_bytes(), None).unwrap_err();
        assert!(e.to_string().contains("no data"));
    }

    #[test]
    fn two_rows_round_trip() {
        let s = "timestamp,altitude_m,windspeed_ms\n2016-07-01T00:00:00,10,3.25\n2016-07-01T01:00:00,10,4.5\n";
        let t = read_wind_csv(s.as_bytes(), None).unwrap();
        assert_eq!(t.n_times(), 2);
        assert_eq!(t.speed(0, 0), 3.25);
        assert_eq!(t.speed(1, 0), 4.5);
        assert_eq!(t.hour(1), 1.0);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), s);
    }

    #[test]
    fn negative_speed_names_line() {
        let s = "timestamp,altitude_m,windspeed_ms\n2016-07-01T00:00:00,10,3\n2016-07-01T00:00:00,20,-1\n";
        match read_wind_csv(s.as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let h = "timestamp,altitude_m,windspeed_ms\n";
        let back = format!("{h}2016-07-01T01:00:00,10,3\n2016-07-01T00:00:00,10,3\n");
        assert!(matches!(read_wind_csv(back.as_bytes(), None), Err(Error::Parse { line: 3, .. })));
        let unknown = format!("{h}2016-07-01T00:00:00,10,3\n2016-07-01T01:00:00,30,3\n");
        assert!(matches!(read_wind_csv(unknown.as_bytes(), None), Err(Error::Parse { line: 3, .. })));
        let garbled = format!("{h}2016-07-01T00:00:00,ten,3\n");
        assert!(matches!(read_wind_csv(garbled.as_bytes(), None), Err(Error::Parse { line: 2, .. })));
        assert!(read_wind_csv("a,b,c\n".as_bytes(), None).is_err());
    }

    #[test]
    fn generator_is_deterministic_and_shaped() {
        let g = WindGenerator {
            hours: 48,
            ..WindGenerator::default()
        };
        let a = g.generate(4).unwrap();
        assert_eq!(a, g.generate(4).unwrap());
        assert_ne!(a, g.generate(5).unwrap());
        assert_eq!(a.altitudes().len(), 25);
        assert_eq!(a.altitudes()[0], 10.0);
        assert_eq!(a.altitudes()[24], 1600.0);
        assert_eq!(a.timestamps()[0].to_string(), "2016-07-01 00:00:00");
        // mean profile increases with altitude
        let mean = |k: usize| (0..48).map(|t| a.speed(t, k)).sum::<f64>() / 48.0;
        assert!(mean(24) > mean(0) + 3.0);
    }
}
