//! Disturbance and reference generators for the experiment presets.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsmc::ReferencePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    None,
    LowFreq,
    HighFreq,
    Random,
}

/// Sum of sinusoids plus optional Gaussian noise, all in newtons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// Hz, one per amplitude.
    #[serde(default)]
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self {
            kind: DisturbanceKind::None,
            amplitudes: vec![],
            frequencies: vec![],
            noise_std: 0.0,
            rng_seed: 0,
        }
    }

    /// Slow swell: `−50 sin(2π·0.3 t)`.
    pub fn low_freq() -> Self {
        Self {
            kind: DisturbanceKind::LowFreq,
            amplitudes: vec![-50.0],
            frequencies: vec![0.3],
            ..Self::none()
        }
    }

    /// Wind waves: `50 sin(2π·8 t)`.
    pub fn high_freq() -> Self {
        Self {
            kind: DisturbanceKind::HighFreq,
            amplitudes: vec![50.0],
            frequencies: vec![8.0],
            ..Self::none()
        }
    }

    /// `20 sin(2π·0.3 t) + 20 sin(2π·5 t) + N(0, 20)`.
    pub fn random() -> Self {
        Self {
            kind: DisturbanceKind::Random,
            amplitudes: vec![20.0, 20.0],
            frequencies: vec![0.3, 5.0],
            noise_std: 20.0,
            rng_seed: 0,
        }
    }

    /// Weaker variant from the running text: `2 sin + 2 sin + N(0, 5)`.
    pub fn random_mild() -> Self {
        Self {
            amplitudes: vec![2.0, 2.0],
            noise_std: 5.0,
            ..Self::random()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitudes.len() != self.frequencies.len() {
            return Err(Error::invalid(
                "frequencies",
                "need exactly one frequency per amplitude",
            ));
        }
        if self.frequencies.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::invalid("frequencies", "must be > 0"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std", "must be >= 0"));
        }
        Ok(())
    }

    /// Sinusoidal part only.
    pub fn deterministic_force(&self, t: f64) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.frequencies)
            .map(|(a, f)| a * (2.0 * PI * f * t).sin())
            .sum()
    }

    /// Noise sample held over controller period `period`. Each period reads
    /// its own ChaCha stream, so the value depends only on `(seed, period)`.
    pub fn noise(&self, period: u64) -> f64 {
        if self.noise_std == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(period);
        Normal::new(0.0, self.noise_std)
            .expect("noise_std validated non-negative")
            .sample(&mut rng)
    }
}

/// Total disturbance force at time `t`, inside controller period `period`.
pub fn disturbance_force(spec: &DisturbanceSpec, t: f64, period: u64) -> f64 {
    match spec.kind {
        DisturbanceKind::None => 0.0,
        _ => spec.deterministic_force(t) + spec.noise(period),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetWindow {
    pub start: f64,
    pub end: f64,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Quintic rise from rest at 0 to `target`, then constant.
    SmoothStep { target: f64, rise_time: f64 },
    /// Piecewise-constant targets joined by quintic blends at each window start.
    MultiTarget {
        targets: Vec<TargetWindow>,
        rise_time: f64,
    },
}

/// Quintic blend with zero end velocities and accelerations: `(s, ds/dτ)`.
fn quintic(tau: f64) -> (f64, f64) {
    let t = tau.clamp(0.0, 1.0);
    let t2 = t * t;
    let t3 = t2 * t;
    (
        t3 * (10.0 - 15.0 * t + 6.0 * t2),
        30.0 * t2 * (1.0 - 2.0 * t + t2),
    )
}

impl ReferenceSpec {
    pub fn smooth_step() -> Self {
        ReferenceSpec::SmoothStep {
            target: 1.2,
            rise_time: 2.0,
        }
    }

    pub fn multi_target() -> Self {
        ReferenceSpec::MultiTarget {
            targets: vec![
                TargetWindow {
                    start: 0.0,
                    end: 10.0,
                    position: 1.0,
                },
                TargetWindow {
                    start: 10.0,
                    end: 20.0,
                    position: 2.0,
                },
                TargetWindow {
                    start: 20.0,
                    end: 30.0,
                    position: 3.0,
                },
            ],
            rise_time: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReferenceSpec::SmoothStep { target, rise_time } => {
                if !target.is_finite() {
                    return Err(Error::invalid("target", "must be finite"));
                }
                if !(*rise_time > 0.0) {
                    return Err(Error::invalid("rise_time", "must be > 0"));
                }
            }
            ReferenceSpec::MultiTarget { targets, rise_time } => {
                if targets.is_empty() {
                    return Err(Error::invalid("targets", "need at least one window"));
                }
                if !(*rise_time > 0.0) {
                    return Err(Error::invalid("rise_time", "must be > 0"));
                }
                if targets[0].start != 0.0 {
                    return Err(Error::invalid("targets", "first window must start at 0"));
                }
                for (i, w) in targets.iter().enumerate() {
                    if !w.position.is_finite() {
                        return Err(Error::invalid("targets", "positions must be finite"));
                    }
                    if !(w.end - w.start >= *rise_time) {
                        return Err(Error::invalid(
                            "targets",
                            format!("window {i} is shorter than the rise time"),
                        ));
                    }
                    if i > 0 && targets[i - 1].end != w.start {
                        return Err(Error::invalid(
                            "targets",
                            format!("window {i} does not start where window {} ends", i - 1),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rise_time(&self) -> f64 {
        match self {
            ReferenceSpec::SmoothStep { rise_time, .. }
            | ReferenceSpec::MultiTarget { rise_time, .. } => *rise_time,
        }
    }

    /// Instant at which the first blend reaches its target.
    pub fn first_rise_end(&self) -> f64 {
        self.rise_time()
    }

    pub fn final_target(&self) -> f64 {
        match self {
            ReferenceSpec::SmoothStep { target, .. } => *target,
            ReferenceSpec::MultiTarget { targets, .. } => {
                targets.last().map_or(0.0, |w| w.position)
            }
        }
    }

    /// End of the last window, if the reference has one.
    pub fn horizon(&self) -> Option<f64> {
        match self {
            ReferenceSpec::SmoothStep { .. } => None,
            ReferenceSpec::MultiTarget { targets, .. } => targets.last().map(|w| w.end),
        }
    }

    /// Desired position and velocity at `t`, starting from rest at 0.
    pub fn reference(&self, t: f64) -> Result<ReferencePoint> {
        let t = t.max(0.0);
        match self {
            ReferenceSpec::SmoothStep { target, rise_time } => {
                let (s, ds) = quintic(t / rise_time);
                Ok(ReferencePoint {
                    x_d: target * s,
                    x_d_dot: target * ds / rise_time,
                })
            }
            ReferenceSpec::MultiTarget { targets, rise_time } => {
                let end = targets.last().map_or(0.0, |w| w.end);
                if t > end {
                    return Err(Error::TimeOutOfRange { t, end });
                }
                let idx = targets
                    .iter()
                    .rposition(|w| w.start <= t)
                    .unwrap_or(0);
                let from = if idx == 0 { 0.0 } else { targets[idx - 1].position };
                let to = targets[idx].position;
                let (s, ds) = quintic((t - targets[idx].start) / rise_time);
                Ok(ReferencePoint {
                    x_d: from + (to - from) * s,
                    x_d_dot: (to - from) * ds / rise_time,
                })
            }
        }
    }

    /// Like [`reference`](Self::reference), but holds the final target past
    /// the last window.
    pub fn reference_clamped(&self, t: f64) -> ReferencePoint {
        match self.reference(t) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{e}; holding the final target");
                ReferencePoint {
                    x_d: self.final_target(),
                    x_d_dot: 0.0,
                }
            }
        }
    }
}

/// Named experiment condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub disturbance: DisturbanceSpec,
    pub reference: ReferenceSpec,
}

impl Scenario {
    /// Episode length: the reference's last window end, else `default`.
    pub fn horizon(&self, default: f64) -> f64 {
        self.reference.horizon().unwrap_or(default)
    }
}

/// Disturbance definitions the presets draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSet {
    pub low: DisturbanceSpec,
    pub high: DisturbanceSpec,
    pub random: DisturbanceSpec,
    pub random_mild: DisturbanceSpec,
}

impl Default for DisturbanceSet {
    fn default() -> Self {
        Self {
            low: DisturbanceSpec::low_freq(),
            high: DisturbanceSpec::high_freq(),
            random: DisturbanceSpec::random(),
            random_mild: DisturbanceSpec::random_mild(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSet {
    pub step: ReferenceSpec,
    pub switching: ReferenceSpec,
}

impl Default for ReferenceSet {
    fn default() -> Self {
        Self {
            step: ReferenceSpec::smooth_step(),
            switching: ReferenceSpec::multi_target(),
        }
    }
}

pub const PRESET_NAMES: [&str; 9] = [
    "none",
    "low",
    "high",
    "random",
    "random-mild",
    "switch-low",
    "switch-high",
    "switch-random",
    "switch-random-mild",
];

/// Resolves a preset name; the seed feeds the random disturbance.
pub fn preset(
    name: &str,
    disturbances: &DisturbanceSet,
    references: &ReferenceSet,
    seed: u64,
) -> Option<Scenario> {
    let (switching, base) = match name.strip_prefix("switch-") {
        Some(rest) => (true, rest),
        None => (false, name),
    };
    let disturbance = match base {
        "none" if !switching => DisturbanceSpec::none(),
        "low" => disturbances.low.clone(),
        "high" => disturbances.high.clone(),
        "random" => disturbances.random.clone(),
        "random-mild" => disturbances.random_mild.clone(),
        _ => return None,
    };
    let reference = if switching {
        references.switching.clone()
    } else {
        references.step.clone()
    };
    Some(Scenario {
        name: name.to_string(),
        disturbance: disturbance.with_seed(seed),
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_freq_values() {
        let d = DisturbanceSpec::low_freq();
        assert_eq!(disturbance_force(&d, 0.0, 0), 0.0);
        let quarter = 1.0 / (4.0 * 0.3);
        assert!((disturbance_force(&d, quarter, 8) + 50.0).abs() < 1e-12);
    }

    #[test]
    fn high_freq_values() {
        let d = DisturbanceSpec::high_freq();
        assert!((disturbance_force(&d, 1.0 / 32.0, 0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn none_is_zero() {
        let d = DisturbanceSpec::none();
        assert_eq!(disturbance_force(&d, 3.3, 33), 0.0);
    }

    #[test]
    fn random_is_reproducible_and_decomposes() {
        let d = DisturbanceSpec::random().with_seed(11);
        let low = DisturbanceSpec {
            amplitudes: vec![20.0],
            frequencies: vec![0.3],
            ..DisturbanceSpec::low_freq()
        };
        let mid = DisturbanceSpec {
            amplitudes: vec![20.0],
            frequencies: vec![5.0],
            ..DisturbanceSpec::low_freq()
        };
        for k in 0..50u64 {
            let t = k as f64 * 0.1 + 0.013;
            assert_eq!(
                disturbance_force(&d, t, k).to_bits(),
                disturbance_force(&d, t, k).to_bits()
            );
            assert_eq!(
                d.deterministic_force(t),
                low.deterministic_force(t) + mid.deterministic_force(t)
            );
            assert!(d.deterministic_force(t).abs() <= 40.0);
        }
        let other = DisturbanceSpec::random().with_seed(12);
        assert_ne!(d.noise(3), other.noise(3));
        assert_ne!(d.noise(3), d.noise(4));
    }

    #[test]
    fn noise_statistics_are_plausible() {
        let d = DisturbanceSpec::random().with_seed(5);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|k| d.noise(k)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.5, "{mean}");
        assert!((var.sqrt() - 20.0).abs() < 0.5, "{}", var.sqrt());
    }

    #[test]
    fn step_reference() {
        let r = ReferenceSpec::smooth_step();
        assert_eq!(r.reference(0.0).unwrap(), ReferencePoint::default());
        for t in [2.0, 2.5, 20.0] {
            let p = r.reference(t).unwrap();
            assert!((p.x_d - 1.2).abs() < 1e-15);
            assert_eq!(p.x_d_dot, 0.0);
        }
        let mid = r.reference(1.0).unwrap();
        assert!((mid.x_d - 0.6).abs() < 1e-12);
    }

    #[test]
    fn switching_reference() {
        let r = ReferenceSpec::multi_target();
        r.validate().unwrap();
        let p = r.reference(15.0).unwrap();
        assert_eq!((p.x_d, p.x_d_dot), (2.0, 0.0));
        let p = r.reference(9.5).unwrap();
        assert_eq!(p.x_d, 1.0);
        let p = r.reference(30.0).unwrap();
        assert_eq!(p.x_d, 3.0);
        assert!(matches!(
            r.reference(30.5),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert_eq!(r.reference_clamped(31.0).x_d, 3.0);
        assert_eq!(r.horizon(), Some(30.0));
    }

    #[test]
    fn reference_is_continuous() {
        for r in [ReferenceSpec::smooth_step(), ReferenceSpec::multi_target()] {
            let h = 1e-7;
            let mut t = 0.0;
            while t < 29.9 {
                let a = r.reference(t).unwrap();
                let b = r.reference(t + h).unwrap();
                assert!((a.x_d - b.x_d).abs() < 1e-5, "x_d jump at {t}");
                assert!((a.x_d_dot - b.x_d_dot).abs() < 1e-5, "x_d_dot jump at {t}");
                t += 0.01;
            }
            for boundary in [10.0, 20.0] {
                if let ReferenceSpec::MultiTarget { .. } = r {
                    assert_eq!(r.reference(boundary).unwrap().x_d_dot, 0.0);
                }
            }
        }
    }

    #[test]
    fn invalid_windows_rejected() {
        let r = ReferenceSpec::MultiTarget {
            targets: vec![
                TargetWindow {
                    start: 0.0,
                    end: 10.0,
                    position: 1.0,
                },
                TargetWindow {
                    start: 11.0,
                    end: 20.0,
                    position: 2.0,
                },
            ],
            rise_time: 2.0,
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn presets_resolve() {
        let d = DisturbanceSet::default();
        let r = ReferenceSet::default();
        for name in PRESET_NAMES {
            let s = preset(name, &d, &r, 3).unwrap();
            assert_eq!(s.name, name);
        }
        assert!(preset("switch-none", &d, &r, 0).is_none());
        assert!(preset("storm", &d, &r, 0).is_none());
        let s = preset("switch-high", &d, &r, 0).unwrap();
        assert_eq!(s.horizon(20.0), 30.0);
        assert_eq!(preset("high", &d, &r, 0).unwrap().horizon(20.0), 20.0);
    }
}
