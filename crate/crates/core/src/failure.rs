//! Failure simulation for a sealed, never-serviced module.
//!
//! System lifetimes are independent draws from the configured lifetime law,
//! generated by inverse transform from one uniform per system. The closed-form
//! expectation [`expected_capacity`] is the oracle the Monte Carlo path is
//! checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{capacity_fraction, ModuleSpec};
use crate::scalar::Real;

/// 365.25 days.
pub const HOURS_PER_YEAR: f64 = 8_766.0;

/// Recorded in report metadata so a run can be reproduced elsewhere.
pub const RNG_IDENTITY: &str =
    "ChaCha8 (rand_chacha 0.3): seed_from_u64(seed), set_stream(splitmix64-mixed key)";

/// Converts an annual failure probability to an exponential rate `-ln(1 - p)`.
pub fn failure_rate<T: Real>(annual_failure_prob: T) -> Result<T> {
    if annual_failure_prob.is_nan() || annual_failure_prob < T::zero() || annual_failure_prob >= T::one() {
        return Err(Error::domain(format!(
            "annual failure probability must lie in [0, 1), got {annual_failure_prob:?}"
        )));
    }
    Ok(-(T::one() - annual_failure_prob).ln())
}

/// Expected surviving fraction after `t` years: `(1 - p)^t`.
pub fn expected_capacity<T: Real>(annual_failure_prob: T, t: T) -> Result<T> {
    failure_rate(annual_failure_prob)?;
    if t.is_nan() || t < T::zero() {
        return Err(Error::domain(format!("time must be >= 0, got {t:?}")));
    }
    Ok((T::one() - annual_failure_prob).powf(t))
}

/// A named, reproducible random stream.
///
/// The pair `(seed, stream)` selects a ChaCha8 keystream; identical pairs give
/// identical sequences on every platform. Sub-streams for individual modules
/// or sites are derived with [`RngStream::derive`], which mixes a key path
/// into the stream id, so the draws a component sees never depend on the order
/// in which other components consumed theirs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn derive(&self, key: &[u64]) -> RngStream {
        let mut h = splitmix64(self.stream ^ 0x6a09_e667_f3bc_c908);
        for &k in key {
            h = splitmix64(h ^ k);
        }
        RngStream {
            seed: self.seed,
            stream: h,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on (0, 1]; never zero so `-ln(u)` stays finite.
pub(crate) fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Standard exponential variate by inverse transform.
pub(crate) fn unit_exponential(rng: &mut ChaCha8Rng) -> f64 {
    -libm::log(open_uniform(rng))
}

/// Distribution of a single system's time to permanent failure.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum LifetimeLaw {
    /// Memoryless; `P(T <= 1) = p`.
    #[default]
    Exponential,
    /// Weibull with the given shape, scaled so that `P(T <= 1) = p` still holds.
    Weibull { shape: f64 },
}

impl LifetimeLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LifetimeLaw::Exponential => Ok(()),
            LifetimeLaw::Weibull { shape } if shape > 0.0 && shape.is_finite() => Ok(()),
            LifetimeLaw::Weibull { .. } => Err(Error::invalid("failure_law.shape", "must be > 0")),
        }
    }

    /// Lifetime in years from a standard exponential draw `e = -ln(u)`.
    ///
    /// Monotone: for fixed `e`, a larger `rate` never gives a longer lifetime.
    pub fn lifetime(&self, rate: f64, e: f64) -> f64 {
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        match *self {
            LifetimeLaw::Exponential => e / rate,
            LifetimeLaw::Weibull { shape } => libm::pow(e / rate, 1.0 / shape),
        }
    }
}

/// Draws `count` independent lifetimes, one uniform per system in order.
pub fn sample_lifetimes(
    count: u32,
    annual_failure_prob: f64,
    law: LifetimeLaw,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    let rate = failure_rate(annual_failure_prob)?;
    let mut rng = stream.rng();
    Ok((0..count)
        .map(|_| law.lifetime(rate, unit_exponential(&mut rng)))
        .collect())
}

/// Right-continuous, non-increasing step function of capacity over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityTrajectory {
    horizon: f64,
    /// `(time, capacity)` breakpoints; the first is always `(0, 1)`.
    points: Vec<(f64, f64)>,
}

impl CapacityTrajectory {
    pub fn new(horizon: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(Error::domain("trajectory horizon must be >= 0"));
        }
        match points.first() {
            Some(&(t, c)) if t == 0.0 && c == 1.0 => {}
            _ => return Err(Error::domain("trajectory must start at (0, 1.0)")),
        }
        for w in points.windows(2) {
            let ((t0, c0), (t1, c1)) = (w[0], w[1]);
            if t1 <= t0 {
                return Err(Error::domain("breakpoint times must be strictly increasing"));
            }
            if c1 > c0 || !(0.0..=1.0).contains(&c1) {
                return Err(Error::domain("capacity must be non-increasing within [0, 1]"));
            }
        }
        if points.last().is_some_and(|&(t, _)| t > horizon) {
            return Err(Error::domain("breakpoint beyond horizon"));
        }
        Ok(CapacityTrajectory { horizon, points })
    }

    pub fn flat(horizon: f64) -> Self {
        CapacityTrajectory {
            horizon,
            points: vec![(0.0, 1.0)],
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn final_capacity(&self) -> f64 {
        self.points.last().map_or(1.0, |p| p.1)
    }
}

/// One service life of a sealed module: every system gets an independent
/// lifetime and capacity drops by `1/n` at each death before `horizon`.
pub fn simulate_module(
    spec: &ModuleSpec<f64>,
    law: LifetimeLaw,
    horizon: f64,
    stream: &RngStream,
) -> Result<CapacityTrajectory> {
    if !(horizon >= 0.0) {
        return Err(Error::domain(format!("horizon must be >= 0, got {horizon}")));
    }
    if horizon > spec.service_life {
        return Err(Error::domain(format!(
            "horizon {horizon} exceeds one service life of {} years",
            spec.service_life
        )));
    }
    let mut deaths: Vec<f64> = sample_lifetimes(
        spec.system_count,
        spec.system.annual_failure_prob,
        law,
        stream,
    )?
    .into_iter()
    .filter(|&t| t < horizon)
    .collect();
    deaths.sort_by(f64::total_cmp);

    let n = spec.system_count;
    let mut points = Vec::with_capacity(deaths.len() + 1);
    points.push((0.0, 1.0));
    for (i, &t) in deaths.iter().enumerate() {
        let cap = capacity_fraction::<f64>(n, i as u32 + 1)?;
        match points.last_mut() {
            // Simultaneous deaths collapse into one breakpoint.
            Some(last) if last.0 == t => last.1 = cap,
            _ => points.push((t, cap)),
        }
    }
    Ok(CapacityTrajectory { horizon, points })
}

/// Capacity at `t`, taking the value of the last breakpoint at or before `t`.
pub fn capacity_at(trajectory: &CapacityTrajectory, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= trajectory.horizon) {
        return Err(Error::domain(format!(
            "t = {t} outside trajectory domain [0, {}]",
            trajectory.horizon
        )));
    }
    let idx = trajectory.points.partition_point(|&(bt, _)| bt <= t);
    Ok(trajectory.points[idx - 1].1)
}

/// `design_capacity * integral of capacity over [0, horizon]`, in system-hours.
pub fn delivered_capacity_hours(trajectory: &CapacityTrajectory, design_capacity: u32) -> f64 {
    let pts = &trajectory.points;
    let mut years = 0.0;
    for (i, &(t, c)) in pts.iter().enumerate() {
        let end = pts.get(i + 1).map_or(trajectory.horizon, |p| p.0);
        years += c * (end - t);
    }
    f64::from(design_capacity) * years * HOURS_PER_YEAR
}
