use std::f64::consts::PI;
use std::str::FromStr;

use numsqueeze::fock::{default_cutoff, MAX_CUTOFF};
use numsqueeze::tw::{TwConfig, DEFAULT_RABI_FREQUENCY};
use numsqueeze::two_mode::{InitialEnsemble, SequenceSpec};
use numsqueeze::{KerrParams, SpeciesParams, TrapParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::spool::SpoolFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    TwoMode,
    Mixture,
    FockVerify,
    Tw,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::TwoMode => "two-mode",
            Engine::Mixture => "mixture",
            Engine::FockVerify => "fock-verify",
            Engine::Tw => "tw",
        }
    }

    pub fn is_exact(self) -> bool {
        self != Engine::Tw
    }
}

impl FromStr for Engine {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        [Engine::TwoMode, Engine::Mixture, Engine::FockVerify, Engine::Tw]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown engine `{s}`")))
    }
}

/// Evenly spaced sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Whether `stop` is the last point; `false` gives a half-open range.
    #[serde(default = "yes")]
    pub endpoint: bool,
}

fn yes() -> bool {
    true
}

impl Axis {
    pub fn single(x: f64) -> Self {
        Axis {
            start: x,
            stop: x,
            count: 1,
            endpoint: true,
        }
    }

    pub fn closed(start: f64, stop: f64, count: usize) -> Self {
        Axis {
            start,
            stop,
            count,
            endpoint: true,
        }
    }

    /// `[0, 2π)` in `count` steps.
    pub fn full_turn(count: usize) -> Self {
        Axis {
            start: 0.0,
            stop: 2.0 * PI,
            count,
            endpoint: false,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let intervals = if self.endpoint { self.count - 1 } else { self.count };
        let step = (self.stop - self.start) / intervals as f64;
        (0..self.count).map(|i| self.start + i as f64 * step).collect()
    }

    fn validate(&self, name: &str) -> CliResult<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::config(format!("{name}: start and stop must be finite")));
        }
        if self.count == 0 {
            return Err(CliError::config(format!("{name}: count must be at least 1")));
        }
        if self.count > 1 && self.stop <= self.start {
            return Err(CliError::config(format!("{name}: stop must exceed start when count > 1")));
        }
        Ok(())
    }
}

/// `start:stop:count`, with an optional `:open` suffix for a half-open range.
impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::config(format!("axis `{s}` is not start:stop:count[:open]"));
        let parts: Vec<&str> = s.split(':').collect();
        let endpoint = match parts.len() {
            3 => true,
            4 if parts[3] == "open" => false,
            _ => return Err(bad()),
        };
        Ok(Axis {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            stop: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
            endpoint,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldUnits {
    /// Hold times in seconds.
    #[default]
    Seconds,
    /// Hold times given as `χ₁₁·t_hold`, converted with the engine's `χ₁₁`.
    Chi11,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub t_hold: Axis,
    #[serde(default)]
    pub t_hold_units: HoldUnits,
    pub phi: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulses {
    pub theta1: f64,
    pub theta2: f64,
    /// rad/s; pulse durations follow as `θ/Ω₀`.
    #[serde(default = "default_rabi")]
    pub rabi_frequency: f64,
}

fn default_rabi() -> f64 {
    DEFAULT_RABI_FREQUENCY
}

/// Spatial model settings of the TW engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwSettings {
    pub species: SpeciesParams,
    pub trap: TrapParams,
    pub points: usize,
    /// Axial oscillator lengths.
    pub box_length: f64,
    /// s
    pub dt: f64,
    #[serde(default = "one")]
    pub coupling_scale: f64,
    /// Per-trajectory occupations are written to a spool file when set.
    #[serde(default)]
    pub spool: Option<SpoolFormat>,
}

fn one() -> f64 {
    1.0
}

impl TwSettings {
    pub fn model_config(&self, initial: InitialEnsemble) -> TwConfig {
        TwConfig {
            species: self.species,
            trap: self.trap,
            initial,
            points: self.points,
            box_length: self.box_length,
            dt: self.dt,
            coupling_scale: self.coupling_scale,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    /// Where the numbers come from, one note per entry.
    #[serde(default)]
    pub provenance: Vec<String>,
}

pub const DEFAULT_N_TRAJ: u64 = 1000;

fn default_n_traj() -> u64 {
    DEFAULT_N_TRAJ
}

/// One run: an engine over a `(t_hold, φ)` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Engine,
    #[serde(default)]
    pub metadata: Metadata,
    /// Required by the exact engines; the TW engine derives it from its mode.
    #[serde(default)]
    pub kerr: Option<KerrParams>,
    pub pulses: Pulses,
    pub initial: InitialEnsemble,
    pub sweep: Sweep,
    #[serde(default)]
    pub tw: Option<TwSettings>,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    #[serde(default)]
    pub seed: u64,
    /// Fock engine only; defaults to `N₀ + 10√N₀ + 20`.
    #[serde(default)]
    pub fock_cutoff: Option<usize>,
}

impl RunConfig {
    /// Parses, validates and resolves defaults.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        config.resolved()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    /// Validated copy with every default filled in.
    pub fn resolved(&self) -> CliResult<Self> {
        let mut c = self.clone();
        if c.engine == Engine::FockVerify && c.fock_cutoff.is_none() {
            c.fock_cutoff = Some(default_cutoff(c.initial.n0_mean));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        let cfg = |e: numsqueeze::Error| CliError::config(e.to_string());
        self.initial.validate().map_err(cfg)?;
        SequenceSpec::new(self.pulses.theta1, self.pulses.theta2, 0.0, 0.0).map_err(cfg)?;
        if !(self.pulses.rabi_frequency.is_finite() && self.pulses.rabi_frequency > 0.0) {
            return Err(CliError::config("rabi_frequency must be positive"));
        }
        self.sweep.t_hold.validate("sweep.t_hold")?;
        self.sweep.phi.validate("sweep.phi")?;
        if self.sweep.t_hold.start < 0.0 {
            return Err(CliError::config("sweep.t_hold: hold times must be non-negative"));
        }
        let exact = self.engine.is_exact();
        match (exact, &self.kerr, &self.tw) {
            (true, None, _) => {
                return Err(CliError::config(format!("engine {} needs `kerr`", self.engine.name())))
            }
            (true, Some(k), tw) => {
                k.validate().map_err(cfg)?;
                if tw.is_some() {
                    return Err(CliError::config("`tw` settings only apply to the tw engine"));
                }
                if self.sweep.t_hold_units == HoldUnits::Chi11 && !(k.chi11 > 0.0) {
                    return Err(CliError::config("chi11 hold units need chi11 > 0"));
                }
            }
            (false, Some(_), _) => {
                return Err(CliError::config("the tw engine derives `kerr` from its mode; remove it"))
            }
            (false, None, None) => return Err(CliError::config("engine tw needs `tw` settings")),
            (false, None, Some(tw)) => {
                tw.model_config(self.initial).validate().map_err(cfg)?;
                if self.n_traj < 2 {
                    return Err(CliError::config("n_traj must be at least 2"));
                }
            }
        }
        let poissonian = self.initial.fano == 1.0;
        match self.engine {
            Engine::TwoMode | Engine::FockVerify if !poissonian => {
                return Err(CliError::config(format!(
                    "engine {} needs fano = 1; use the mixture engine",
                    self.engine.name()
                )))
            }
            Engine::FockVerify => {
                let cutoff = self.fock_cutoff.unwrap_or_else(|| default_cutoff(self.initial.n0_mean));
                if cutoff == 0 || cutoff > MAX_CUTOFF {
                    return Err(CliError::config(format!("fock_cutoff must lie in 1..={MAX_CUTOFF}")));
                }
            }
            _ => {}
        }
        if self.fock_cutoff.is_some() && self.engine != Engine::FockVerify {
            return Err(CliError::config("fock_cutoff only applies to the fock-verify engine"));
        }
        Ok(())
    }
}

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn() -> RunConfig,
}

impl Preset {
    pub fn config(&self) -> RunConfig {
        (self.build)()
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2",
        summary: "exact v(N2) map over t_hold in [0, 20 ms] and phi, sodium at N0 = 1e7",
        build: fig2,
    },
    Preset {
        name: "degenerate",
        summary: "fig2 with all Kerr constants equal; no shearing, v = 1",
        build: degenerate,
    },
    Preset {
        name: "fig2-noise150",
        summary: "fig2 with number variance 150 times the Poissonian value (Fano factor 150)",
        build: fig2_noise150,
    },
    Preset {
        name: "fig2-noise5pct",
        summary: "fig2 with 5% shot-to-shot number fluctuations (Fano factor 25000)",
        build: fig2_noise5pct,
    },
    Preset {
        name: "fig3c-noise5pct",
        summary: "exact mixture at N0 = 1e7 with 5% number fluctuations, weak first pulse (theta1 = 0.05), t_hold = 16 ms",
        build: fig3c_noise5pct,
    },
    Preset {
        name: "fig3a",
        summary: "TW vs two-mode, weak first pulse (theta1 = 0.05) in a tight trap at N0 = 1e4",
        build: fig3a,
    },
    Preset {
        name: "fig3a-noise5pct",
        summary: "fig3a with 5% number fluctuations",
        build: fig3a_noise5pct,
    },
    Preset {
        name: "fig3b",
        summary: "TW vs two-mode, stronger pulse (theta1 = 0.3) and interactions at N0 = 1e4",
        build: fig3b,
    },
];

pub fn preset(name: &str) -> CliResult<RunConfig> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(Preset::config)
        .ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            CliError::config(format!("unknown preset `{name}`; available: {}", names.join(", ")))
        })
}

fn notes(lines: &[&str]) -> Vec<String> {
    lines.iter().map(|s| s.to_string()).collect()
}

fn fig2() -> RunConfig {
    RunConfig {
        engine: Engine::TwoMode,
        metadata: Metadata {
            name: "fig2".into(),
            provenance: notes(&[
                "chi11 = chi12 = 0.018 rad/s, chi22 = 0.019 rad/s: sodium (a11 = a12 = 2.8 nm, a22 = 3.0 nm), 500 Hz spherical trap, N0 = 1e7",
                "theta1 = 0.3 transfers about 8% of the atoms; theta2 = 0.025",
                "coherent input (fano = 1); t_hold in [0, 20 ms], phi in [0, 2 pi)",
            ]),
        },
        kerr: Some(KerrParams::sodium_500hz()),
        pulses: Pulses {
            theta1: 0.3,
            theta2: 0.025,
            rabi_frequency: DEFAULT_RABI_FREQUENCY,
        },
        initial: InitialEnsemble::poissonian(1e7),
        sweep: Sweep {
            t_hold: Axis::closed(0.0, 0.02, 201),
            t_hold_units: HoldUnits::Seconds,
            phi: Axis::full_turn(201),
        },
        tw: None,
        n_traj: DEFAULT_N_TRAJ,
        seed: 0,
        fock_cutoff: None,
    }
}

fn degenerate() -> RunConfig {
    let mut c = fig2();
    c.metadata = Metadata {
        name: "degenerate".into(),
        provenance: notes(&["all three Kerr constants set to 0.018 rad/s: no phase shearing, so v = 1 everywhere"]),
    };
    c.kerr = Some(KerrParams::degenerate(0.018));
    c
}

fn with_fano(mut c: RunConfig, name: &str, fano: f64, note: &str) -> RunConfig {
    c.engine = Engine::Mixture;
    c.initial.fano = fano;
    c.metadata.name = name.into();
    c.metadata.provenance.push(note.into());
    c
}

fn fig2_noise150() -> RunConfig {
    with_fano(
        fig2(),
        "fig2-noise150",
        150.0,
        "number variance 150 times the Poissonian N0 (0.39% relative fluctuation at N0 = 1e7): fano = 150",
    )
}

fn fig2_noise5pct() -> RunConfig {
    with_fano(
        fig2(),
        "fig2-noise5pct",
        0.05 * 0.05 * 1e7,
        "5% shot-to-shot number fluctuations at N0 = 1e7: fano = 0.05^2 N0",
    )
}

fn fig3c_noise5pct() -> RunConfig {
    let mut c = with_fano(
        fig2(),
        "fig3c-noise5pct",
        0.05 * 0.05 * 1e7,
        "5% shot-to-shot number fluctuations at N0 = 1e7: fano = 0.05^2 N0",
    );
    c.metadata.provenance = notes(&[
        "chi11 = chi12 = 0.018 rad/s, chi22 = 0.019 rad/s: sodium, 500 Hz spherical trap, N0 = 1e7",
        "theta1 = 0.05 and theta2 = 0.025 (1 us and 0.5 us at 5e4 rad/s); t_hold = 16 ms; phi in [0, 2 pi)",
        "5% shot-to-shot number fluctuations at N0 = 1e7: fano = 0.05^2 N0",
    ]);
    c.pulses.theta1 = 0.05;
    c.sweep.t_hold = Axis::single(0.016);
    c.sweep.phi = Axis::full_turn(2001);
    c
}

fn fig3a() -> RunConfig {
    RunConfig {
        engine: Engine::Tw,
        metadata: Metadata {
            name: "fig3a".into(),
            provenance: notes(&[
                "theta1 = 0.05 (0.25% transfer, 1 us at 5e4 rad/s), theta2 = 0.025",
                "desk scale: N0 = 1e4 instead of 1e7; sodium in a 500 Hz trap with couplings scaled by 1/120 so that the interaction energy stays well below the trap quantum",
                "hold time fixed by chi11 t_hold = 0.015 with chi11 from the simulated ground state",
            ]),
        },
        kerr: None,
        pulses: Pulses {
            theta1: 0.05,
            theta2: 0.025,
            rabi_frequency: DEFAULT_RABI_FREQUENCY,
        },
        initial: InitialEnsemble::poissonian(1e4),
        sweep: Sweep {
            t_hold: Axis::single(0.015),
            t_hold_units: HoldUnits::Chi11,
            phi: Axis::full_turn(16),
        },
        tw: Some(TwSettings {
            species: SpeciesParams::sodium(),
            trap: TrapParams::spherical(500.0),
            points: 32,
            box_length: 16.0,
            dt: 4e-5,
            coupling_scale: 1.0 / 120.0,
            spool: None,
        }),
        n_traj: 10_000,
        seed: 1,
        fock_cutoff: None,
    }
}

fn fig3a_noise5pct() -> RunConfig {
    let mut c = fig3a();
    c.metadata.name = "fig3a-noise5pct".into();
    c.metadata
        .provenance
        .push("5% shot-to-shot number fluctuations at N0 = 1e4: fano = 0.05^2 N0 = 25".into());
    c.initial.fano = 25.0;
    c
}

fn fig3b() -> RunConfig {
    RunConfig {
        engine: Engine::Tw,
        metadata: Metadata {
            name: "fig3b".into(),
            provenance: notes(&[
                "theta1 = 0.3 (about 9% transfer, 6 us at 5e4 rad/s), theta2 = 0.025",
                "desk scale: N0 = 1e4, sodium in a 500 Hz trap with couplings scaled by 4 (Thomas-Fermi regime)",
                "hold time fixed by chi11 t_hold = 0.08 with chi11 from the simulated ground state",
            ]),
        },
        kerr: None,
        pulses: Pulses {
            theta1: 0.3,
            theta2: 0.025,
            rabi_frequency: DEFAULT_RABI_FREQUENCY,
        },
        initial: InitialEnsemble::poissonian(1e4),
        sweep: Sweep {
            t_hold: Axis::single(0.08),
            t_hold_units: HoldUnits::Chi11,
            phi: Axis::full_turn(16),
        },
        tw: Some(TwSettings {
            species: SpeciesParams::sodium(),
            trap: TrapParams::spherical(500.0),
            points: 64,
            box_length: 20.0,
            dt: 8e-6,
            coupling_scale: 4.0,
            spool: None,
        }),
        n_traj: 2000,
        seed: 1,
        fock_cutoff: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values() {
        assert_eq!(Axis::closed(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Axis::single(2.0).values(), vec![2.0]);
        let phi = Axis::full_turn(4).values();
        assert_eq!(phi.len(), 4);
        assert!((phi[3] - 1.5 * PI).abs() < 1e-15);
        let a: Axis = "0:0.02:201".parse().unwrap();
        assert_eq!(a, Axis::closed(0.0, 0.02, 201));
        let b: Axis = "0:6.283185307179586:8:open".parse().unwrap();
        assert!(!b.endpoint);
        assert!("0:1".parse::<Axis>().is_err());
        assert!("0:1:x".parse::<Axis>().is_err());
        assert!("0:1:3:half".parse::<Axis>().is_err());
    }

    #[test]
    fn presets_are_valid_and_round_trip() {
        for p in PRESETS {
            let c = p.config().resolved().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(c.metadata.name, p.name);
            let again = RunConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(again, c, "{}", p.name);
        }
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut v = serde_json::to_value(fig2()).unwrap();
        v["pulses"]["area"] = serde_json::json!(1.0);
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("area"), "{err}");
        v = serde_json::to_value(fig2()).unwrap();
        v["colour"] = serde_json::json!("red");
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn fills_defaults() {
        let text = r#"{
            "engine": "fock-verify",
            "kerr": {"chi11": 1.0, "chi22": 1.1, "chi12": 1.0},
            "pulses": {"theta1": 0.3, "theta2": 0.2},
            "initial": {"n0_mean": 16.0, "fano": 1.0},
            "sweep": {"t_hold": {"start": 0.0, "stop": 1.0, "count": 3},
                      "phi": {"start": 0.0, "stop": 6.0, "count": 4, "endpoint": false}}
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.fock_cutoff, Some(default_cutoff(16.0)));
        assert_eq!(c.n_traj, DEFAULT_N_TRAJ);
        assert_eq!(c.pulses.rabi_frequency, DEFAULT_RABI_FREQUENCY);
        assert_eq!(c.sweep.t_hold_units, HoldUnits::Seconds);
    }

    #[test]
    fn engine_requirements() {
        let mut c = fig2();
        c.kerr = None;
        assert!(c.validate().is_err());
        let mut c = fig2();
        c.initial.fano = 2.0;
        assert!(c.validate().is_err());
        c.engine = Engine::Mixture;
        assert!(c.validate().is_ok());
        let mut c = fig3a();
        c.kerr = Some(KerrParams::sodium_500hz());
        assert!(c.validate().is_err());
        let mut c = fig3a();
        c.tw.as_mut().unwrap().dt = 1e-3;
        assert!(c.validate().is_err());
        let mut c = fig2();
        c.pulses.theta1 = 2.0;
        assert!(c.validate().is_err());
        let mut c = fig2();
        c.sweep.phi.count = 0;
        assert!(c.validate().is_err());
    }
}
