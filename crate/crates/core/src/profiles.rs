//! Load, write, validate and synthesise hourly (or finer) building profiles.
//!
//! CSV layout, header mandatory:
//!
//! ```text
//! timestamp,cooling_kw,electric_nonflex_kw,oat_c
//! 2023-01-01T00:00:00,0,412.5,4.1
//! ```
//!
//! Timestamps are ISO-8601 local clock without timezone.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const COLUMNS: [&str; 4] = ["timestamp", "cooling_kw", "electric_nonflex_kw", "oat_c"];

const TIME_FORMATS: [&str; 3] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"];

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("profile is empty")]
    Empty,
    #[error("profile invalid: {0}")]
    Invalid(String),
}

fn row_err(row: usize, msg: impl Into<String>) -> ProfileError {
    ProfileError::Row { row, msg: msg.into() }
}

/// Uniformly spaced cooling, non-flexible electric and outdoor-air series.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSet {
    pub timestamps: Vec<NaiveDateTime>,
    pub cooling_kw: Vec<f64>,
    pub electric_nonflex_kw: Vec<f64>,
    pub oat_c: Vec<f64>,
    /// Step length, hours.
    pub dt: f64,
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

impl ProfileSet {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// The single gate every profile passes before the engine sees it.
    /// Row numbers in errors are 1-based data rows.
    pub fn validate(&self) -> Result<(), ProfileError> {
        let n = self.timestamps.len();
        if n == 0 {
            return Err(ProfileError::Empty);
        }
        if [self.cooling_kw.len(), self.electric_nonflex_kw.len(), self.oat_c.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(ProfileError::Invalid("columns have different lengths".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ProfileError::Invalid(format!("step length {} h", self.dt)));
        }
        let step = Duration::milliseconds((self.dt * 3.6e6).round() as i64);
        for i in 0..n {
            if i > 0 {
                let gap = self.timestamps[i] - self.timestamps[i - 1];
                if gap == Duration::zero() {
                    return Err(row_err(i + 1, format!("duplicate timestamp {}", self.timestamps[i])));
                }
                if gap != step {
                    return Err(row_err(
                        i + 1,
                        format!("gap of {} min after {} (expected {} min)", gap.num_minutes(), self.timestamps[i - 1], step.num_minutes()),
                    ));
                }
            }
            for (name, v) in [("cooling_kw", self.cooling_kw[i]), ("electric_nonflex_kw", self.electric_nonflex_kw[i])] {
                if !v.is_finite() {
                    return Err(row_err(i + 1, format!("{name} is not finite")));
                }
                if v < 0.0 {
                    return Err(row_err(i + 1, format!("negative {name} {v}")));
                }
            }
            if !self.oat_c[i].is_finite() {
                return Err(row_err(i + 1, "oat_c is not finite"));
            }
        }
        Ok(())
    }

    /// Steps `[start, start + len)` as a new set.
    pub fn slice(&self, start: usize, len: usize) -> ProfileSet {
        let r = start..start + len;
        ProfileSet {
            timestamps: self.timestamps[r.clone()].to_vec(),
            cooling_kw: self.cooling_kw[r.clone()].to_vec(),
            electric_nonflex_kw: self.electric_nonflex_kw[r.clone()].to_vec(),
            oat_c: self.oat_c[r].to_vec(),
            dt: self.dt,
        }
    }

    /// Steps whose timestamps fall in `[from, from + days)`.
    pub fn window(&self, from: NaiveDateTime, days: u32) -> Result<ProfileSet, ProfileError> {
        let to = from + Duration::days(days as i64);
        let start = self.timestamps.partition_point(|t| *t < from);
        let end = self.timestamps.partition_point(|t| *t < to);
        if end <= start {
            return Err(ProfileError::Invalid(format!("no data between {from} and {to}")));
        }
        Ok(self.slice(start, end - start))
    }

    pub fn scaled(&self, factor: f64) -> ProfileSet {
        let mut out = self.clone();
        out.cooling_kw.iter_mut().for_each(|v| *v *= factor);
        out.electric_nonflex_kw.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn peak_cooling(&self) -> f64 {
        self.cooling_kw.iter().copied().fold(0.0, f64::max)
    }

    pub fn peak_electric(&self) -> f64 {
        self.electric_nonflex_kw.iter().copied().fold(0.0, f64::max)
    }
}

pub fn read_profiles(reader: impl Read) -> Result<ProfileSet, ProfileError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let idx: Vec<usize> = match COLUMNS.iter().map(|c| col(c)).collect::<Option<Vec<_>>>() {
        Some(idx) if header.len() == COLUMNS.len() => idx,
        _ => {
            return Err(ProfileError::Header {
                expected: COLUMNS.iter().map(|s| s.to_string()).collect(),
                found: header,
            })
        }
    };
    let mut set = ProfileSet {
        timestamps: Vec::new(),
        cooling_kw: Vec::new(),
        electric_nonflex_kw: Vec::new(),
        oat_c: Vec::new(),
        dt: 0.0,
    };
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| row_err(row, e.to_string()))?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let ts = parse_timestamp(field(0)).ok_or_else(|| row_err(row, format!("bad timestamp {:?}", field(0))))?;
        let num = |k: usize| -> Result<f64, ProfileError> {
            field(k)
                .parse::<f64>()
                .map_err(|_| row_err(row, format!("bad {} value {:?}", COLUMNS[k], field(k))))
        };
        set.timestamps.push(ts);
        set.cooling_kw.push(num(1)?);
        set.electric_nonflex_kw.push(num(2)?);
        set.oat_c.push(num(3)?);
    }
    if set.timestamps.is_empty() {
        return Err(ProfileError::Empty);
    }
    set.dt = if set.timestamps.len() > 1 {
        let d = set.timestamps[1] - set.timestamps[0];
        d.num_milliseconds() as f64 / 3.6e6
    } else {
        1.0
    };
    if set.dt <= 0.0 && set.timestamps.len() > 1 {
        return Err(row_err(2, "timestamps must increase"));
    }
    set.validate()?;
    Ok(set)
}

pub fn load_profiles(path: &Path) -> Result<ProfileSet, ProfileError> {
    read_profiles(std::fs::File::open(path)?)
}

/// Writes the CSV layout. Values use Rust's shortest round-trip formatting,
/// so reading the file back reproduces every bit.
pub fn write_profiles(set: &ProfileSet, writer: impl Write) -> Result<(), ProfileError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    for i in 0..set.len() {
        w.write_record([
            set.timestamps[i].format("%Y-%m-%dT%H:%M:%S").to_string(),
            set.cooling_kw[i].to_string(),
            set.electric_nonflex_kw[i].to_string(),
            set.oat_c[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_profiles(set: &ProfileSet, path: &Path) -> Result<(), ProfileError> {
    write_profiles(set, std::fs::File::create(path)?)
}

/// Outdoor-air climate shape for the synthetic generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Climate {
    /// Annual mean outdoor air, °C.
    pub mean_c: f64,
    /// Half the summer-winter swing of daily means, K.
    pub seasonal_amplitude: f64,
    /// Half the day-night swing, K.
    pub diurnal_amplitude: f64,
    /// Std-dev of the day-to-day weather anomaly, K.
    pub weather_noise: f64,
}

impl Climate {
    pub fn mild() -> Self {
        Self { mean_c: 16.0, seasonal_amplitude: 4.0, diurnal_amplitude: 5.0, weather_noise: 1.5 }
    }

    pub fn cold_winter() -> Self {
        Self { mean_c: 11.0, seasonal_amplitude: 13.0, diurnal_amplitude: 4.5, weather_noise: 3.0 }
    }

    pub fn hot_summer() -> Self {
        Self { mean_c: 21.0, seasonal_amplitude: 9.0, diurnal_amplitude: 6.0, weather_noise: 2.0 }
    }
}

/// Parameters of [`synth_profiles`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTemplate {
    pub peak_cooling_kw: f64,
    /// Peak of the non-flexible electric load (lighting, plugs, fans).
    pub peak_electric_kw: f64,
    pub climate: Climate,
    #[serde(default = "default_year")]
    pub year: i32,
    /// Day of the year the series starts on, 1-based.
    #[serde(default = "default_start_day")]
    pub start_day: u32,
    #[serde(default = "default_days")]
    pub days: u32,
    /// Steps per hour.
    #[serde(default = "default_steps_per_hour")]
    pub steps_per_hour: u32,
}

fn default_year() -> i32 {
    2023
}

fn default_start_day() -> u32 {
    1
}

fn default_days() -> u32 {
    365
}

fn default_steps_per_hour() -> u32 {
    1
}

impl SynthTemplate {
    pub fn new(peak_cooling_kw: f64, peak_electric_kw: f64, climate: Climate) -> Self {
        Self {
            peak_cooling_kw,
            peak_electric_kw,
            climate,
            year: default_year(),
            start_day: default_start_day(),
            days: default_days(),
            steps_per_hour: default_steps_per_hour(),
        }
    }
}

fn occupied(ts: &NaiveDateTime) -> f64 {
    let h = ts.hour() as f64 + ts.minute() as f64 / 60.0;
    let weekend = matches!(ts.weekday(), Weekday::Sat | Weekday::Sun);
    // Smooth ramp 6-8 h up, 18-20 h down.
    let ramp = ((h - 6.0) / 2.0).clamp(0.0, 1.0) * ((20.0 - h) / 2.0).clamp(0.0, 1.0);
    if weekend {
        0.25 * ramp
    } else {
        ramp
    }
}

/// Deterministic office-like profiles.
///
/// Outdoor air is a seasonal cosine (coldest mid-January) plus a diurnal sine
/// peaking mid-afternoon plus an AR(1) day-to-day anomaly. Cooling follows
/// outdoor air above 12 °C plus occupancy-driven internal gains; non-flexible
/// electric load is a base plus an occupancy term. Both series are scaled so
/// their maxima equal the template peaks exactly.
pub fn synth_profiles(seed: u64, template: &SynthTemplate) -> Result<ProfileSet, ProfileError> {
    if !(template.peak_cooling_kw >= 0.0 && template.peak_electric_kw > 0.0) {
        return Err(ProfileError::Invalid("template peaks must be positive".into()));
    }
    if template.steps_per_hour == 0 || template.days == 0 {
        return Err(ProfileError::Invalid("template needs at least one day and one step per hour".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = &template.climate;
    let start = NaiveDate::from_yo_opt(template.year, template.start_day)
        .ok_or_else(|| ProfileError::Invalid(format!("day {} of year {}", template.start_day, template.year)))?
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let per_day = 24 * template.steps_per_hour as usize;
    let n = per_day * template.days as usize;
    let dt = 1.0 / template.steps_per_hour as f64;

    let mut anomaly = 0.0;
    let mut timestamps = Vec::with_capacity(n);
    let mut oat = Vec::with_capacity(n);
    let mut cooling = Vec::with_capacity(n);
    let mut electric = Vec::with_capacity(n);
    for i in 0..n {
        let ts = start + Duration::milliseconds((i as f64 * dt * 3.6e6).round() as i64);
        if i % per_day == 0 {
            let shock: f64 = rng.gen_range(-1.0..1.0) * c.weather_noise * 3f64.sqrt();
            anomaly = 0.7 * anomaly + (1.0 - 0.49f64).sqrt() * shock;
        }
        let doy = ts.ordinal0() as f64 + ts.hour() as f64 / 24.0;
        let hour = ts.hour() as f64 + ts.minute() as f64 / 60.0;
        let t = c.mean_c - c.seasonal_amplitude * (2.0 * PI * (doy - 15.0) / 365.0).cos()
            + c.diurnal_amplitude * (2.0 * PI * (hour - 9.0) / 24.0).sin()
            + anomaly;
        let occ = occupied(&ts);
        let jitter = 1.0 + 0.03 * rng.gen_range(-1.0..1.0);
        let q = ((t - 12.0).max(0.0) * (0.4 + 0.6 * occ) + 6.0 * occ * (t > 8.0) as u8 as f64) * jitter;
        let e = (0.35 + 0.65 * occ) * (1.0 + 0.02 * rng.gen_range(-1.0..1.0));
        timestamps.push(ts);
        oat.push(t);
        cooling.push(q.max(0.0));
        electric.push(e);
    }
    let scale = |v: &mut Vec<f64>, peak: f64| {
        let m = v.iter().copied().fold(0.0, f64::max);
        if m > 0.0 {
            // x / m is exactly 1 at the maximum, so the peak lands on target.
            v.iter_mut().for_each(|x| *x = *x / m * peak);
        }
    };
    scale(&mut cooling, template.peak_cooling_kw);
    scale(&mut electric, template.peak_electric_kw);
    let set = ProfileSet {
        timestamps,
        cooling_kw: cooling,
        electric_nonflex_kw: electric,
        oat_c: oat,
        dt,
    };
    set.validate()?;
    Ok(set)
}
