//! Synthetic usage telemetry: a yearly cumulative-mileage fleet and a
//! minute-wise day of semiconductor temperature and mileage.
//!
//! Each device draws from its own ChaCha8 stream (`seed`, stream = device
//! index), so output does not depend on generation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdcore::CoordinateLabel;
use crate::smoothing::RawSeries;

/// Simulated devices with their group membership.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub device_ids: Vec<String>,
    pub groups: Vec<String>,
    /// `series[i][j]`: device `i`, coordinate `j`.
    pub series: Vec<Vec<RawSeries>>,
    /// Trips (day) or jump days (fleet) per device.
    pub events: Vec<usize>,
    pub domain_end: f64,
    pub labels: Vec<CoordinateLabel>,
}

impl SimulatedData {
    pub fn len(&self) -> usize {
        self.device_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.device_ids.is_empty()
    }

    pub fn indices_of(&self, group: &str) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.groups[i] == group).collect()
    }
}

fn device_rng(seed: u64, device: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(device as u64);
    rng
}

fn device_id(i: usize) -> String {
    format!("dev{i:04}")
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::Config(format!("normal({mean}, {sd}): {e}")))
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

/// Daily distance of a privately owned vehicle group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivateGroup {
    pub count: usize,
    /// km per day.
    pub daily_mean: f64,
    pub daily_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub short: PrivateGroup,
    pub average: PrivateGroup,
    pub long: PrivateGroup,
    pub carsharing_count: usize,
    pub carsharing_daily_mean: f64,
    pub carsharing_daily_sd: f64,
    pub carsharing_jump_probability: f64,
    pub days: usize,
    /// Spread of the per-device log scale factor on the daily mean.
    pub device_log_sd: f64,
    pub jump_probability: f64,
    /// Log-normal jump size, median km and log sd.
    pub jump_median: f64,
    pub jump_log_sd: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            short: PrivateGroup { count: 50, daily_mean: 15.0, daily_sd: 8.0 },
            average: PrivateGroup { count: 90, daily_mean: 40.0, daily_sd: 15.0 },
            long: PrivateGroup { count: 40, daily_mean: 90.0, daily_sd: 30.0 },
            carsharing_count: 20,
            carsharing_daily_mean: 250.0,
            carsharing_daily_sd: 40.0,
            carsharing_jump_probability: 0.002,
            days: 365,
            device_log_sd: 0.15,
            jump_probability: 0.02,
            jump_median: 300.0,
            jump_log_sd: 0.5,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

impl FleetConfig {
    pub fn total(&self) -> usize {
        self.short.count + self.average.count + self.long.count + self.carsharing_count
    }

    pub fn validate(&self) -> Result<()> {
        if self.days < 2 {
            return Err(Error::Config(format!("days must be at least 2, got {}", self.days)));
        }
        if self.total() < 4 {
            return Err(Error::Config(format!("a fleet needs at least 4 devices, got {}", self.total())));
        }
        for g in [&self.short, &self.average, &self.long] {
            nonneg("daily mean", g.daily_mean)?;
            nonneg("daily sd", g.daily_sd)?;
        }
        for (name, v) in [
            ("carsharing daily sd", self.carsharing_daily_sd),
            ("device log sd", self.device_log_sd),
            ("jump log sd", self.jump_log_sd),
            ("noise sd", self.noise_sd),
        ] {
            nonneg(name, v)?;
        }
        if !(self.carsharing_daily_mean > 0.0 && self.carsharing_daily_mean.is_finite()) {
            return Err(Error::Config("carsharing daily mean must be positive".into()));
        }
        if !(self.jump_median > 0.0 && self.jump_median.is_finite()) {
            return Err(Error::Config("jump median must be positive".into()));
        }
        for p in [self.jump_probability, self.carsharing_jump_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn group_of(&self, i: usize) -> (&'static str, Option<PrivateGroup>) {
        let mut bound = 0;
        for (name, g) in [("short", self.short), ("average", self.average), ("long", self.long)] {
            bound += g.count;
            if i < bound {
                return (name, Some(g));
            }
        }
        ("carsharing", None)
    }
}

/// One cumulative-mileage series per device, sampled at the end of each day
/// (`t = 24·d` hours, `d = 1..=days`).
pub fn gen_mileage_fleet(config: &FleetConfig) -> Result<SimulatedData> {
    config.validate()?;
    let times: Vec<f64> = (1..=config.days).map(|d| 24.0 * d as f64).collect();
    let jump = LogNormal::new(config.jump_median.ln(), config.jump_log_sd)
        .map_err(|e| Error::Config(format!("jump size: {e}")))?;
    let noise = normal(0.0, config.noise_sd)?;
    let heterogeneity = normal(0.0, config.device_log_sd)?;
    let cs_shape = (config.carsharing_daily_mean / config.carsharing_daily_sd).powi(2);
    let cs_scale = config.carsharing_daily_sd.powi(2) / config.carsharing_daily_mean;
    let carsharing = if config.carsharing_daily_sd > 0.0 {
        Some(Gamma::new(cs_shape, cs_scale).map_err(|e| Error::Config(format!("carsharing: {e}")))?)
    } else {
        None
    };

    let devices: Vec<Result<(String, Vec<RawSeries>, usize)>> = (0..config.total())
        .into_par_iter()
        .map(|i| {
            let mut rng = device_rng(config.seed, i);
            let (group, private) = config.group_of(i);
            let factor = heterogeneity.sample(&mut rng).exp();
            let (daily, jump_p) = match private {
                Some(g) => (Some(normal(g.daily_mean * factor, g.daily_sd * factor)?), config.jump_probability),
                None => (None, config.carsharing_jump_probability),
            };
            let mut total = 0.0;
            let mut jumps = 0;
            let mut values = Vec::with_capacity(times.len());
            for _ in 0..config.days {
                let today = match (&daily, &carsharing) {
                    (Some(d), _) => d.sample(&mut rng).max(0.0),
                    (None, Some(g)) => factor * g.sample(&mut rng),
                    (None, None) => factor * config.carsharing_daily_mean,
                };
                total += today;
                if rng.gen_bool(jump_p) {
                    total += jump.sample(&mut rng);
                    jumps += 1;
                }
                values.push(total + noise.sample(&mut rng));
            }
            let id = device_id(i);
            let series = RawSeries::new(id.clone(), 0, times.clone(), values)?;
            Ok((group.to_string(), vec![series], jumps))
        })
        .collect();
    collect(devices, 24.0 * config.days as f64, vec![CoordinateLabel {
        name: "mileage".into(),
        unit: Some("km".into()),
    }])
}

fn collect(
    devices: Vec<Result<(String, Vec<RawSeries>, usize)>>,
    domain_end: f64,
    labels: Vec<CoordinateLabel>,
) -> Result<SimulatedData> {
    let mut out = SimulatedData {
        device_ids: Vec::with_capacity(devices.len()),
        groups: Vec::with_capacity(devices.len()),
        series: Vec::with_capacity(devices.len()),
        events: Vec::with_capacity(devices.len()),
        domain_end,
        labels,
    };
    for (i, d) in devices.into_iter().enumerate() {
        let (group, series, events) = d?;
        out.device_ids.push(device_id(i));
        out.groups.push(group);
        out.series.push(series);
        out.events.push(events);
    }
    Ok(out)
}

/// Trip pattern of a device group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripSchedule {
    pub min_trips: usize,
    /// Poisson mean of the trips beyond `min_trips`.
    pub extra_trips_mean: f64,
    /// Trip length range in minutes.
    pub duration_min: usize,
    pub duration_max: usize,
    /// Trips start within `[window_start, window_end)`, minutes of the day.
    pub window_start: usize,
    pub window_end: usize,
    /// km/h.
    pub speed_mean: f64,
    pub speed_sd: f64,
}

impl TripSchedule {
    fn validate(&self, minutes: usize) -> Result<()> {
        nonneg("extra trips mean", self.extra_trips_mean)?;
        nonneg("speed mean", self.speed_mean)?;
        nonneg("speed sd", self.speed_sd)?;
        if self.duration_min == 0 || self.duration_max < self.duration_min {
            return Err(Error::Config("trip duration range is empty".into()));
        }
        if self.window_end <= self.window_start || self.window_end > minutes {
            return Err(Error::Config("trip start window is empty or exceeds the day".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DayConfig {
    pub n_regular: usize,
    pub n_cold: usize,
    pub n_carsharing: usize,
    pub minutes: usize,
    pub ambient_regular: f64,
    pub ambient_cold: f64,
    pub ambient_carsharing: f64,
    pub max_temperature: f64,
    /// First-order lag time constants, minutes.
    pub tau_rise: f64,
    pub tau_decay: f64,
    /// Used by the regular and the cold group.
    pub regular_trips: TripSchedule,
    pub carsharing_trips: TripSchedule,
    pub temperature_noise_sd: f64,
    pub mileage_noise_sd: f64,
    pub seed: u64,
}

impl Default for DayConfig {
    fn default() -> Self {
        Self {
            n_regular: 96,
            n_cold: 2,
            n_carsharing: 2,
            minutes: 1440,
            ambient_regular: 20.0,
            ambient_cold: -30.0,
            ambient_carsharing: 20.0,
            max_temperature: 90.0,
            tau_rise: 10.0,
            tau_decay: 20.0,
            regular_trips: TripSchedule {
                min_trips: 1,
                extra_trips_mean: 1.5,
                duration_min: 15,
                duration_max: 60,
                window_start: 6 * 60,
                window_end: 22 * 60,
                speed_mean: 50.0,
                speed_sd: 15.0,
            },
            carsharing_trips: TripSchedule {
                min_trips: 20,
                extra_trips_mean: 10.0,
                duration_min: 5,
                duration_max: 15,
                window_start: 0,
                window_end: 24 * 60,
                speed_mean: 30.0,
                speed_sd: 8.0,
            },
            temperature_noise_sd: 0.5,
            mileage_noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl DayConfig {
    pub fn total(&self) -> usize {
        self.n_regular + self.n_cold + self.n_carsharing
    }

    pub fn validate(&self) -> Result<()> {
        if self.minutes < 2 {
            return Err(Error::Config(format!("minutes must be at least 2, got {}", self.minutes)));
        }
        if self.total() < 4 {
            return Err(Error::Config(format!("a day sample needs at least 4 devices, got {}", self.total())));
        }
        if !(self.tau_rise > 0.0 && self.tau_decay > 0.0) {
            return Err(Error::Config("time constants must be positive".into()));
        }
        let ambient = [self.ambient_regular, self.ambient_cold, self.ambient_carsharing];
        if ambient.iter().any(|a| !a.is_finite() || *a >= self.max_temperature) {
            return Err(Error::Config(
                "maximum temperature must exceed every ambient temperature".into(),
            ));
        }
        nonneg("temperature noise sd", self.temperature_noise_sd)?;
        nonneg("mileage noise sd", self.mileage_noise_sd)?;
        self.regular_trips.validate(self.minutes)?;
        self.carsharing_trips.validate(self.minutes)
    }

    fn group_of(&self, i: usize) -> (&'static str, f64, &TripSchedule) {
        if i < self.n_regular {
            ("regular", self.ambient_regular, &self.regular_trips)
        } else if i < self.n_regular + self.n_cold {
            ("cold", self.ambient_cold, &self.regular_trips)
        } else {
            ("carsharing", self.ambient_carsharing, &self.carsharing_trips)
        }
    }
}

/// Per-minute on/off state and speed (km/h) from a trip schedule.
fn schedule_day(rng: &mut ChaCha8Rng, s: &TripSchedule, minutes: usize) -> Result<(Vec<f64>, usize)> {
    let extra = if s.extra_trips_mean > 0.0 {
        Poisson::new(s.extra_trips_mean)
            .map_err(|e| Error::Config(format!("trip count: {e}")))?
            .sample(rng) as usize
    } else {
        0
    };
    let trips = s.min_trips + extra;
    let speed = normal(s.speed_mean, s.speed_sd)?;
    let mut on = vec![0.0; minutes];
    for _ in 0..trips {
        let start = rng.gen_range(s.window_start..s.window_end);
        let length = rng.gen_range(s.duration_min..=s.duration_max);
        let v = speed.sample(rng).max(5.0);
        for slot in on.iter_mut().skip(start).take(length) {
            *slot = v;
        }
    }
    Ok((on, trips))
}

/// Two coordinates per device, temperature (°C) and cumulative mileage (km),
/// sampled each minute at `t = m/60` hours.
pub fn gen_temperature_day(config: &DayConfig) -> Result<SimulatedData> {
    config.validate()?;
    let minutes = config.minutes;
    let times: Vec<f64> = (0..minutes).map(|m| m as f64 / 60.0).collect();
    let temp_noise = normal(0.0, config.temperature_noise_sd)?;
    let mile_noise = normal(0.0, config.mileage_noise_sd)?;
    let rise = 1.0 - (-1.0 / config.tau_rise).exp();
    let decay = 1.0 - (-1.0 / config.tau_decay).exp();

    let devices: Vec<Result<(String, Vec<RawSeries>, usize)>> = (0..config.total())
        .into_par_iter()
        .map(|i| {
            let mut rng = device_rng(config.seed, i);
            let (group, ambient, schedule) = config.group_of(i);
            let (speed, trips) = schedule_day(&mut rng, schedule, minutes)?;
            let mut temperature = Vec::with_capacity(minutes);
            let mut mileage = Vec::with_capacity(minutes);
            let (mut theta, mut km) = (ambient, 0.0);
            for v in speed {
                temperature.push(theta + temp_noise.sample(&mut rng));
                mileage.push(km + mile_noise.sample(&mut rng));
                if v > 0.0 {
                    theta += (config.max_temperature - theta) * rise;
                    km += v / 60.0;
                } else {
                    theta += (ambient - theta) * decay;
                }
            }
            let id = device_id(i);
            Ok((
                group.to_string(),
                vec![
                    RawSeries::new(id.clone(), 0, times.clone(), temperature)?,
                    RawSeries::new(id, 1, times.clone(), mileage)?,
                ],
                trips,
            ))
        })
        .collect();
    collect(
        devices,
        minutes as f64 / 60.0,
        vec![
            CoordinateLabel { name: "temperature".into(), unit: Some("degC".into()) },
            CoordinateLabel { name: "mileage".into(), unit: Some("km".into()) },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_fleet(seed: u64, noise_sd: f64) -> FleetConfig {
        FleetConfig {
            short: PrivateGroup { count: 3, ..FleetConfig::default().short },
            average: PrivateGroup { count: 3, ..FleetConfig::default().average },
            long: PrivateGroup { count: 3, ..FleetConfig::default().long },
            carsharing_count: 3,
            days: 60,
            noise_sd,
            seed,
            ..FleetConfig::default()
        }
    }

    #[test]
    fn fleet_is_deterministic_and_cumulative() {
        let a = gen_mileage_fleet(&small_fleet(5, 1.0)).unwrap();
        assert_eq!(a, gen_mileage_fleet(&small_fleet(5, 1.0)).unwrap());
        assert_ne!(a, gen_mileage_fleet(&small_fleet(6, 1.0)).unwrap());
        assert_eq!(a.len(), 12);
        assert_eq!(a.domain_end, 24.0 * 60.0);
        let clean = gen_mileage_fleet(&small_fleet(5, 0.0)).unwrap();
        for s in clean.series.iter().flatten() {
            assert!(s.values().windows(2).all(|w| w[1] >= w[0]));
        }
        assert_eq!(clean.indices_of("carsharing"), vec![9, 10, 11]);
    }

    #[test]
    fn fleet_group_ordering() {
        for seed in 0..10 {
            let data = gen_mileage_fleet(&FleetConfig { seed, ..FleetConfig::default() }).unwrap();
            let mean_final = |g: &str| {
                let idx = data.indices_of(g);
                idx.iter().map(|&i| *data.series[i][0].values().last().unwrap()).sum::<f64>() / idx.len() as f64
            };
            let (s, a, l, c) = (mean_final("short"), mean_final("average"), mean_final("long"), mean_final("carsharing"));
            assert!(c > l && l > a && a > s, "seed {seed}: {s} {a} {l} {c}");
        }
    }

    #[test]
    fn day_without_trips_stays_ambient() {
        let idle = TripSchedule { min_trips: 0, extra_trips_mean: 0.0, ..DayConfig::default().regular_trips };
        let cfg = DayConfig {
            n_regular: 2,
            n_cold: 1,
            n_carsharing: 1,
            regular_trips: idle,
            carsharing_trips: idle,
            temperature_noise_sd: 0.0,
            mileage_noise_sd: 0.0,
            ..DayConfig::default()
        };
        let d = gen_temperature_day(&cfg).unwrap();
        assert!(d.series[0][0].values().iter().all(|&v| v == 20.0));
        assert!(d.series[2][0].values().iter().all(|&v| v == -30.0));
        assert!(d.series.iter().all(|s| s[1].values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn thermal_lag_is_monotone_within_phases() {
        let cfg = DayConfig { temperature_noise_sd: 0.0, mileage_noise_sd: 0.0, seed: 3, ..DayConfig::default() };
        let d = gen_temperature_day(&cfg).unwrap();
        for (i, s) in d.series.iter().enumerate() {
            let temp = s[0].values();
            let km = s[1].values();
            let ambient = cfg.group_of(i).1;
            for m in 1..temp.len() {
                assert!(temp[m] <= cfg.max_temperature && temp[m] >= ambient);
                let on = km[m] > km[m - 1];
                if on {
                    assert!(temp[m] >= temp[m - 1]);
                } else {
                    assert!(temp[m] <= temp[m - 1]);
                }
            }
            if d.groups[i] == "cold" {
                let first_trip = km.iter().position(|&k| k > 0.0).unwrap_or(km.len());
                assert!(temp[..first_trip].iter().all(|&t| t <= cfg.ambient_regular));
            }
        }
    }

    #[test]
    fn carsharing_takes_more_trips() {
        let (mut cs, mut reg) = (0.0, 0.0);
        for seed in 0..10 {
            let d = gen_temperature_day(&DayConfig { seed, ..DayConfig::default() }).unwrap();
            let mean = |g: &str| {
                let idx = d.indices_of(g);
                idx.iter().map(|&i| d.events[i] as f64).sum::<f64>() / idx.len() as f64
            };
            cs += mean("carsharing");
            reg += mean("regular");
        }
        assert!(cs >= 2.0 * reg, "{cs} vs {reg}");
    }

    #[test]
    fn day_shape_and_validation() {
        let d = gen_temperature_day(&DayConfig::default()).unwrap();
        assert_eq!(d.len(), 100);
        assert!(d.series.iter().all(|s| s.len() == 2 && s[0].len() == 1440));
        assert_eq!(d.domain_end, 24.0);
        assert!(gen_temperature_day(&DayConfig { max_temperature: 10.0, ..DayConfig::default() }).is_err());
        assert!(gen_temperature_day(&DayConfig { tau_rise: 0.0, ..DayConfig::default() }).is_err());
        assert!(gen_mileage_fleet(&FleetConfig { days: 1, ..FleetConfig::default() }).is_err());
    }
}
