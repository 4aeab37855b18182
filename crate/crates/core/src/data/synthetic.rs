use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::cmapss::{EngineSeries, N_SENSORS, N_SETTINGS};
use super::RawDataset;
use crate::error::{Error, Result};

pub const MIN_LIFETIME: usize = 150;
pub const MAX_LIFETIME: usize = 300;

/// Sensors that never move, mirroring the flat channels of real fleets.
const FLAT_SENSORS: [usize; 4] = [0, 4, 9, 15];

struct SensorProfile {
    base: f64,
    drift: f64,
    power: f64,
    noise: f64,
}

/// Deterministic degradation fleet: `n_engines` run-to-failure training
/// engines and `n_engines` truncated test engines. Each sensor follows
/// `base + drift · (t/T)^p + noise` over an engine lifetime `T`.
pub fn synth_generate(n_engines: usize, seed: u64) -> Result<RawDataset> {
    if n_engines == 0 {
        return Err(Error::Empty { op: "synth_generate" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<SensorProfile> = (0..N_SENSORS)
        .map(|j| {
            let base = rng.random_range(10.0..100.0);
            if FLAT_SENSORS.contains(&j) {
                return SensorProfile { base, drift: 0.0, power: 1.0, noise: 0.0 };
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let drift = sign * base * rng.random_range(0.05..0.15);
            SensorProfile {
                base,
                drift,
                power: rng.random_range(0.6..1.6),
                noise: drift.abs() * rng.random_range(0.02..0.08),
            }
        })
        .collect();
    let settings_noise = Normal::new(0.0, 0.002).expect("valid sd");

    let engine = |unit_id: u32, lifetime: usize, observed: usize, rng: &mut ChaCha8Rng| {
        let offsets: Vec<f64> = profiles
            .iter()
            .map(|p| Normal::new(0.0, 0.05 * p.drift.abs()).expect("valid sd").sample(rng))
            .collect();
        let mut e = EngineSeries {
            unit_id,
            settings: Vec::with_capacity(observed),
            sensors: Vec::with_capacity(observed),
        };
        for t in 1..=observed {
            let mut settings = [0.0; N_SETTINGS];
            for s in &mut settings {
                *s = settings_noise.sample(rng);
            }
            let frac = t as f64 / lifetime as f64;
            let mut sensors = [0.0; N_SENSORS];
            for (j, p) in profiles.iter().enumerate() {
                let noise = Normal::new(0.0, p.noise).expect("valid sd").sample(rng);
                sensors[j] = p.base + offsets[j] + p.drift * frac.powf(p.power) + noise;
            }
            e.settings.push(settings);
            e.sensors.push(sensors);
        }
        e
    };

    let mut train = Vec::with_capacity(n_engines);
    for u in 0..n_engines {
        let life = rng.random_range(MIN_LIFETIME..=MAX_LIFETIME);
        train.push(engine(u as u32 + 1, life, life, &mut rng));
    }
    let mut test = Vec::with_capacity(n_engines);
    let mut test_rul = Vec::with_capacity(n_engines);
    for u in 0..n_engines {
        let life = rng.random_range(MIN_LIFETIME..=MAX_LIFETIME);
        let cut = rng.random_range((life * 3 / 10).max(31)..life);
        test.push(engine(u as u32 + 1, life, cut, &mut rng));
        test_rul.push((life - cut) as u32);
    }
    Ok(RawDataset { train, test, test_rul })
}
