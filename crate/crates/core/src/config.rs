//! Simulation configuration (TOML).
//!
//! All keys carry their unit in the name (`_ghz`, `_deg`, `_m`, `_ns`, `_s`).
//! Degrees and GHz are converted to radians and Hz here and nowhere else.
//! Unknown keys and every out-of-range value are reported together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::absorption::{
    load_lines, load_partition, water_vapor_mixing_ratio, AbsorptionModel, MediumProfile, DESK_LINES_CSV,
    DESK_PARTITION_CSV,
};
use crate::arrays::{AntennaPattern, SectorGain};
use crate::channel::{BeamTarget, ChannelOptions, FrequencyGrid, Scenario, WaveModel};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Vec3};
use crate::multipath::SvParameters;
use crate::num::wavelength;
use crate::timevariant::{DopplerModel, DopplerSpectrum};

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 2022;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Tiv,
    Tv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MediumModel {
    Exact,
    Approx1,
    Approx2,
    Constant { k_per_m: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumConfig {
    pub model: MediumModel,
    pub temperature_k: f64,
    pub pressure_atm: f64,
    /// Volume mixing ratios; H2O drives the approximations.
    pub mixing_ratio: BTreeMap<String, f64>,
    pub lines: Option<PathBuf>,
    pub partition: Option<PathBuf>,
    pub cutoff_hz: f64,
}

impl MediumConfig {
    /// Builds the absorption model, loading line data from disk if configured.
    pub fn absorption_model(&self) -> Result<AbsorptionModel<f64>> {
        let h2o = self.mixing_ratio.get("H2O").copied().unwrap_or(0.0);
        Ok(match self.model {
            MediumModel::Approx1 => AbsorptionModel::Approx1 { mu: h2o },
            MediumModel::Approx2 => AbsorptionModel::Approx2 { mu: h2o },
            MediumModel::Constant { k_per_m } => AbsorptionModel::Constant { k: k_per_m },
            MediumModel::Exact => {
                let lines = match &self.lines {
                    Some(p) => load_lines(p)?,
                    None => crate::absorption::parse_lines(DESK_LINES_CSV, Path::new("<desk lines>"))?,
                };
                let partition = match &self.partition {
                    Some(p) => load_partition(p)?,
                    None => crate::absorption::parse_partition(DESK_PARTITION_CSV, Path::new("<desk partition>"))?,
                };
                let profile = MediumProfile {
                    temperature_k: self.temperature_k,
                    pressure_atm: self.pressure_atm,
                    mixing_ratio: self.mixing_ratio.clone(),
                    lines,
                    partition,
                    cutoff_hz: self.cutoff_hz,
                };
                profile.validate()?;
                AbsorptionModel::Exact(Box::new(profile))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisalignmentConfig {
    pub sigma_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionsConfig {
    pub channel: ChannelOptions<f64>,
    pub misalignment: Option<MisalignmentConfig>,
    /// Maximum beamformer phase error, radians.
    pub phase_error: Option<f64>,
    pub doppler: DopplerModel<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityConfig {
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub scenario: Scenario,
    pub beam_target: BeamTarget,
}

impl CapacityConfig {
    /// Transmit-to-noise power ratio.
    pub fn snr(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - self.noise_dbm) / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub realizations: usize,
    /// Delay-tap spacing, s.
    pub sample_interval: f64,
    pub taps: usize,
    pub delay_domain: bool,
    /// Subcarrier used for the delay-domain tensor.
    pub delay_reference: usize,
    pub time_samples: usize,
    pub time_step: f64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
}

impl AbsorbConfig {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = ((self.stop_hz - self.start_hz) / self.step_hz + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start_hz + i as f64 * self.step_hz).collect()
    }
}

/// Fully validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub domain: Domain,
    pub grid: FrequencyGrid<f64>,
    pub tx: ArrayGeometry<f64>,
    pub rx: ArrayGeometry<f64>,
    pub medium: MediumConfig,
    pub multipath: SvParameters<f64>,
    pub options: OptionsConfig,
    pub capacity: CapacityConfig,
    pub run: RunConfig,
    pub absorb: AbsorbConfig,
    /// The TOML text this config came from.
    pub source: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawConfig {
    scenario: Option<String>,
    domain: Option<String>,
    grid: RawGrid,
    tx: RawArray,
    rx: RawArray,
    medium: RawMedium,
    multipath: RawMultipath,
    options: RawOptions,
    capacity: RawCapacity,
    run: RawRun,
    absorb: RawAbsorb,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawGrid {
    center_ghz: Option<f64>,
    bandwidth_ghz: Option<f64>,
    subcarriers: Option<i64>,
    subbands: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawArray {
    sa_rows: Option<i64>,
    sa_cols: Option<i64>,
    ae_rows: Option<i64>,
    ae_cols: Option<i64>,
    sa_spacing_m: Option<[f64; 2]>,
    ae_spacing_m: Option<[f64; 2]>,
    center_m: Option<[f64; 3]>,
    rotation_deg: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawMedium {
    model: Option<String>,
    temperature_k: Option<f64>,
    pressure_atm: Option<f64>,
    relative_humidity: Option<f64>,
    mixing_ratio: Option<BTreeMap<String, f64>>,
    lines: Option<PathBuf>,
    partition: Option<PathBuf>,
    cutoff_ghz: Option<f64>,
    k_per_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawMultipath {
    cluster_rate_per_ns: Option<f64>,
    ray_rate_per_ns: Option<f64>,
    cluster_decay_ns: Option<f64>,
    ray_decay_ns: Option<f64>,
    horizon_ns: Option<f64>,
    gmm_weights: Option<[f64; 2]>,
    gmm_sigma_deg: Option<[f64; 2]>,
    truncation_deg: Option<f64>,
    rayleigh: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawOptions {
    beam_split: Option<bool>,
    wave_model: Option<String>,
    carrier_phase: Option<bool>,
    beam_target: Option<String>,
    gamma: Option<f64>,
    antenna: RawAntenna,
    misalignment: RawMisalignment,
    phase_error: RawPhaseError,
    doppler: RawDoppler,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawAntenna {
    pattern: Option<String>,
    gain_dbi: Option<f64>,
    hpbw_deg: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawMisalignment {
    enabled: Option<bool>,
    sigma_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawPhaseError {
    enabled: Option<bool>,
    delta_max_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawDoppler {
    model: Option<String>,
    velocity_mps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawCapacity {
    tx_power_dbm: Option<f64>,
    noise_dbm: Option<f64>,
    scenario: Option<String>,
    beam_target: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawRun {
    seed: Option<u64>,
    realizations: Option<i64>,
    sample_interval_s: Option<f64>,
    taps: Option<i64>,
    delay_domain: Option<bool>,
    delay_reference: Option<i64>,
    time_samples: Option<i64>,
    time_step_s: Option<f64>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawAbsorb {
    start_ghz: Option<f64>,
    stop_ghz: Option<f64>,
    step_ghz: Option<f64>,
}

fn pick<T: Copy>(
    v: Option<String>,
    key: &str,
    default: T,
    table: &[(&str, T)],
    errs: &mut Vec<String>,
) -> T {
    let Some(s) = v else { return default };
    match table.iter().find(|(n, _)| n.eq_ignore_ascii_case(&s)) {
        Some((_, x)) => *x,
        None => {
            let names: Vec<_> = table.iter().map(|(n, _)| *n).collect();
            errs.push(format!("{key}: unknown value {s:?} (expected one of {})", names.join(", ")));
            default
        }
    }
}

fn count(v: Option<i64>, key: &str, default: usize, min: usize, errs: &mut Vec<String>) -> usize {
    match v {
        None => default,
        Some(n) if n >= min as i64 => n as usize,
        Some(n) => {
            errs.push(format!("{key} = {n} must be >= {min}"));
            default.max(min)
        }
    }
}

fn positive(v: f64, key: &str, errs: &mut Vec<String>) -> f64 {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{key} = {v} must be > 0"));
    }
    v
}

fn array(raw: RawArray, prefix: &str, lambda_c: f64, center: [f64; 3], rotation: [f64; 3], errs: &mut Vec<String>) -> ArrayGeometry<f64> {
    let ae_rows = count(raw.ae_rows, &format!("{prefix}.ae_rows"), 8, 1, errs);
    let ae_cols = count(raw.ae_cols, &format!("{prefix}.ae_cols"), 8, 1, errs);
    let ae_spacing = raw.ae_spacing_m.unwrap_or([lambda_c / 2.0; 2]);
    let g = ArrayGeometry {
        sa_rows: count(raw.sa_rows, &format!("{prefix}.sa_rows"), 1, 1, errs),
        sa_cols: count(raw.sa_cols, &format!("{prefix}.sa_cols"), 1, 1, errs),
        ae_rows,
        ae_cols,
        // Contiguous SAs unless set.
        sa_spacing: raw
            .sa_spacing_m
            .unwrap_or([ae_spacing[0] * ae_rows as f64, ae_spacing[1] * ae_cols as f64]),
        ae_spacing,
        center: {
            let c = raw.center_m.unwrap_or(center);
            Vec3::new(c[0], c[1], c[2])
        },
        rotation: raw.rotation_deg.unwrap_or(rotation).map(f64::to_radians),
    };
    g.collect_violations(&format!("{prefix}."), errs);
    g
}

/// Parses and validates a config from TOML text. Relative data paths are
/// resolved against `base_dir`.
pub fn parse_config_str(text: &str, origin: &Path, base_dir: &Path) -> Result<SimulationConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    let mut errs = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(de, |path| errs.push(format!("unknown key `{path}`")))
        .map_err(|e| Error::parse(origin, e.to_string()))?;

    let scenario = pick(
        raw.scenario,
        "scenario",
        Scenario::Both,
        &[("los", Scenario::Los), ("nlos", Scenario::Nlos), ("both", Scenario::Both)],
        &mut errs,
    );
    let domain = pick(raw.domain, "domain", Domain::Tiv, &[("tiv", Domain::Tiv), ("tv", Domain::Tv)], &mut errs);

    let g = raw.grid;
    let grid = FrequencyGrid {
        center: g.center_ghz.unwrap_or(300.0) * 1e9,
        bandwidth: g.bandwidth_ghz.unwrap_or(10.0) * 1e9,
        subcarriers: count(g.subcarriers, "grid.subcarriers", 64, 1, &mut errs),
        subbands: count(g.subbands, "grid.subbands", 1, 1, &mut errs),
    };
    grid.collect_violations(&mut errs);
    let lambda_c = if grid.center > 0.0 { wavelength(grid.center) } else { 1e-3 };

    let tx = array(raw.tx, "tx", lambda_c, [0.0; 3], [0.0; 3], &mut errs);
    let rx = array(raw.rx, "rx", lambda_c, [1.0, 0.0, 0.0], [180.0, 0.0, 0.0], &mut errs);

    let m = raw.medium;
    let temperature_k = positive(m.temperature_k.unwrap_or(296.0), "medium.temperature_k", &mut errs);
    let pressure_atm = positive(m.pressure_atm.unwrap_or(1.0), "medium.pressure_atm", &mut errs);
    let mixing_ratio = match (m.relative_humidity, m.mixing_ratio) {
        (Some(_), Some(_)) => {
            errs.push("medium.relative_humidity and medium.mixing_ratio are mutually exclusive".into());
            BTreeMap::new()
        }
        (_, Some(map)) => {
            for (gas, x) in &map {
                if !(0.0..=1.0).contains(x) {
                    errs.push(format!("medium.mixing_ratio.{gas} = {x} must lie in [0, 1]"));
                }
            }
            map
        }
        (rh, None) => {
            let rh = rh.unwrap_or(50.0);
            if !(0.0..=100.0).contains(&rh) {
                errs.push(format!("medium.relative_humidity = {rh} must lie in [0, 100] percent"));
            }
            BTreeMap::from([("H2O".to_string(), water_vapor_mixing_ratio(rh, temperature_k, pressure_atm))])
        }
    };
    let model_name = m.model.clone().unwrap_or_else(|| "exact".into());
    let model = match model_name.to_ascii_lowercase().as_str() {
        "exact" => MediumModel::Exact,
        "approx1" => MediumModel::Approx1,
        "approx2" => MediumModel::Approx2,
        "constant" => match m.k_per_m {
            Some(k) if k >= 0.0 => MediumModel::Constant { k_per_m: k },
            Some(k) => {
                errs.push(format!("medium.k_per_m = {k} must be >= 0"));
                MediumModel::Constant { k_per_m: 0.0 }
            }
            None => {
                errs.push("medium.k_per_m is required with model = \"constant\"".into());
                MediumModel::Constant { k_per_m: 0.0 }
            }
        },
        other => {
            errs.push(format!(
                "medium.model: unknown value {other:?} (expected one of exact, approx1, approx2, constant)"
            ));
            MediumModel::Exact
        }
    };
    if m.k_per_m.is_some() && !matches!(model, MediumModel::Constant { .. }) {
        errs.push("medium.k_per_m only applies to model = \"constant\"".into());
    }
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
    let medium = MediumConfig {
        model,
        temperature_k,
        pressure_atm,
        mixing_ratio,
        lines: m.lines.map(resolve),
        partition: m.partition.map(resolve),
        cutoff_hz: positive(m.cutoff_ghz.unwrap_or(750.0), "medium.cutoff_ghz", &mut errs) * 1e9,
    };

    let mp = raw.multipath;
    let d = SvParameters::<f64>::default();
    let multipath = SvParameters {
        cluster_rate: mp.cluster_rate_per_ns.map_or(d.cluster_rate, |v| v * 1e9),
        ray_rate: mp.ray_rate_per_ns.map_or(d.ray_rate, |v| v * 1e9),
        cluster_decay: mp.cluster_decay_ns.map_or(d.cluster_decay, |v| v * 1e-9),
        ray_decay: mp.ray_decay_ns.map_or(d.ray_decay, |v| v * 1e-9),
        horizon: mp.horizon_ns.map_or(d.horizon, |v| v * 1e-9),
        gmm_weights: mp.gmm_weights.unwrap_or(d.gmm_weights),
        gmm_sigma: mp.gmm_sigma_deg.map_or(d.gmm_sigma, |v| v.map(f64::to_radians)),
        truncation: mp.truncation_deg.map_or(d.truncation, f64::to_radians),
        rayleigh: mp.rayleigh.unwrap_or(false),
    };
    multipath.collect_violations(&mut errs);

    let o = raw.options;
    let wave = pick(
        o.wave_model,
        "options.wave_model",
        WaveModel::Sp,
        &[("pwm", WaveModel::Pwm), ("sp", WaveModel::Sp), ("swm", WaveModel::Swm)],
        &mut errs,
    );
    let beam_targets = [("los", BeamTarget::Los), ("per_path", BeamTarget::PerPath)];
    let beam_target = pick(o.beam_target, "options.beam_target", BeamTarget::Los, &beam_targets, &mut errs);
    let gamma = positive(o.gamma.unwrap_or(2.0), "options.gamma", &mut errs);
    let antenna = match o.antenna.pattern.as_deref().unwrap_or("isotropic").to_ascii_lowercase().as_str() {
        "isotropic" => AntennaPattern::Isotropic,
        "constant" => match o.antenna.gain_dbi {
            Some(g) => AntennaPattern::from_dbi(g),
            None => {
                errs.push("options.antenna.gain_dbi is required with pattern = \"constant\"".into());
                AntennaPattern::Isotropic
            }
        },
        "sector" => match o.antenna.hpbw_deg {
            Some([a, e]) if a > 0.0 && a <= 360.0 && e > 0.0 && e <= 180.0 => {
                AntennaPattern::Sector(SectorGain::from_hpbw(a.to_radians(), e.to_radians()))
            }
            Some(v) => {
                errs.push(format!("options.antenna.hpbw_deg = {v:?} must lie in (0, 360] x (0, 180]"));
                AntennaPattern::Isotropic
            }
            None => {
                errs.push("options.antenna.hpbw_deg is required with pattern = \"sector\"".into());
                AntennaPattern::Isotropic
            }
        },
        other => {
            errs.push(format!(
                "options.antenna.pattern: unknown value {other:?} (expected one of isotropic, constant, sector)"
            ));
            AntennaPattern::Isotropic
        }
    };
    let misalignment = match (o.misalignment.enabled.unwrap_or(false), o.misalignment.sigma_m) {
        (false, _) => None,
        (true, Some(s)) => Some(MisalignmentConfig {
            sigma_m: positive(s, "options.misalignment.sigma_m", &mut errs),
        }),
        (true, None) => {
            errs.push("options.misalignment.sigma_m is required when misalignment is enabled".into());
            None
        }
    };
    let phase_error = match (o.phase_error.enabled.unwrap_or(false), o.phase_error.delta_max_deg) {
        (false, _) => None,
        (true, Some(dm)) if (0.0..=180.0).contains(&dm) => Some(dm.to_radians()),
        (true, Some(dm)) => {
            errs.push(format!("options.phase_error.delta_max_deg = {dm} must lie in [0, 180]"));
            None
        }
        (true, None) => {
            errs.push("options.phase_error.delta_max_deg is required when phase errors are enabled".into());
            None
        }
    };
    let doppler = DopplerModel {
        spectrum: pick(
            o.doppler.model,
            "options.doppler.model",
            DopplerSpectrum::Jakes,
            &[("jakes", DopplerSpectrum::Jakes), ("flat", DopplerSpectrum::Flat)],
            &mut errs,
        ),
        velocity: o.doppler.velocity_mps.unwrap_or(0.0),
        carrier: grid.center,
    };
    if !doppler.velocity.is_finite() {
        errs.push("options.doppler.velocity_mps must be finite".into());
    }
    let channel = ChannelOptions {
        scenario,
        wave,
        beam_split: o.beam_split.unwrap_or(false),
        carrier_phase: o.carrier_phase.unwrap_or(false),
        gamma,
        tx_antenna: antenna,
        rx_antenna: antenna,
        beam_target,
    };
    if wave == WaveModel::Swm && beam_target == BeamTarget::PerPath && scenario.has_los() {
        errs.push("options.beam_target = \"per_path\" is not available with wave_model = \"swm\"".into());
    }

    let c = raw.capacity;
    let capacity = CapacityConfig {
        tx_power_dbm: c.tx_power_dbm.unwrap_or(3.0),
        noise_dbm: c.noise_dbm.unwrap_or(-75.0),
        scenario: pick(
            c.scenario,
            "capacity.scenario",
            Scenario::Nlos,
            &[("los", Scenario::Los), ("nlos", Scenario::Nlos), ("both", Scenario::Both)],
            &mut errs,
        ),
        beam_target: pick(c.beam_target, "capacity.beam_target", BeamTarget::PerPath, &beam_targets, &mut errs),
    };

    let r = raw.run;
    let sample_interval = match r.sample_interval_s {
        Some(v) => positive(v, "run.sample_interval_s", &mut errs),
        None => 1.0 / grid.bandwidth,
    };
    let (fd, tcoh) = crate::timevariant::doppler_params(doppler.velocity, grid.center);
    let time_step = match r.time_step_s {
        Some(v) => positive(v, "run.time_step_s", &mut errs),
        None if fd > 0.0 => tcoh / 20.0,
        None => 1e-6,
    };
    if fd > 0.0 && time_step >= 0.5 / fd {
        errs.push(format!(
            "run.time_step_s = {time_step:e} undersamples the {fd:.1} Hz maximum Doppler (needs < {:e})",
            0.5 / fd
        ));
    }
    let delay_reference = count(r.delay_reference, "run.delay_reference", grid.subcarriers / 2, 0, &mut errs);
    if delay_reference >= grid.subcarriers.max(1) {
        errs.push(format!(
            "run.delay_reference = {delay_reference} must be below grid.subcarriers = {}",
            grid.subcarriers
        ));
    }
    let run = RunConfig {
        seed: r.seed.unwrap_or(DEFAULT_SEED),
        realizations: count(r.realizations, "run.realizations", 1, 1, &mut errs),
        sample_interval,
        taps: count(r.taps, "run.taps", 256, 1, &mut errs),
        delay_domain: r.delay_domain.unwrap_or(true),
        delay_reference,
        time_samples: count(r.time_samples, "run.time_samples", 64, 1, &mut errs),
        time_step,
        out_dir: r.out_dir.map_or_else(|| base_dir.join("out"), resolve),
    };

    let a = raw.absorb;
    let absorb = AbsorbConfig {
        start_hz: positive(a.start_ghz.unwrap_or(100.0), "absorb.start_ghz", &mut errs) * 1e9,
        stop_hz: positive(a.stop_ghz.unwrap_or(1000.0), "absorb.stop_ghz", &mut errs) * 1e9,
        step_hz: positive(a.step_ghz.unwrap_or(1.0), "absorb.step_ghz", &mut errs) * 1e9,
    };
    if absorb.stop_hz < absorb.start_hz {
        errs.push("absorb.stop_ghz must not be below absorb.start_ghz".into());
    }

    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    Ok(SimulationConfig {
        scenario,
        domain,
        grid,
        tx,
        rx,
        medium,
        multipath,
        options: OptionsConfig {
            channel,
            misalignment,
            phase_error,
            doppler,
        },
        capacity,
        run,
        absorb,
        source: text.to_string(),
    })
}

pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, path, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SimulationConfig> {
        parse_config_str(text, Path::new("test.toml"), Path::new("/tmp"))
    }

    fn violations(text: &str) -> Vec<String> {
        match parse(text) {
            Err(Error::Validation(v)) => v,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn test_minimal_config_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.run.seed, DEFAULT_SEED);
        assert_eq!(c.grid.subcarriers, 64);
        assert_eq!(c.scenario, Scenario::Both);
        assert_eq!(c.medium.model, MediumModel::Exact);
        assert!((c.run.sample_interval - 1e-10).abs() < 1e-22);
        assert!((c.rx.rotation[0] - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(c.capacity.scenario, Scenario::Nlos);
    }

    #[test]
    fn test_zero_subcarriers_named() {
        let v = violations("[grid]\nsubcarriers = 0\n");
        assert!(v.iter().any(|s| s.contains("grid.subcarriers")), "{v:?}");
    }

    #[test]
    fn test_rh_and_mixing_ratio_exclusive() {
        let v = violations("[medium]\nrelative_humidity = 40\n[medium.mixing_ratio]\nH2O = 0.01\n");
        assert!(v.iter().any(|s| s.contains("mutually exclusive")), "{v:?}");
    }

    #[test]
    fn test_all_violations_reported() {
        let v = violations(
            "bogus = 1\n[grid]\nsubcarriers = 0\nsubbands = -1\n[tx]\nae_rows = 0\nwhat = 2\n[options]\nwave_model = \"xyz\"\n",
        );
        for needle in ["unknown key `bogus`", "unknown key `tx.what`", "grid.subcarriers", "grid.subbands", "tx.ae_rows", "wave_model"] {
            assert!(v.iter().any(|s| s.contains(needle)), "{needle} missing from {v:?}");
        }
    }

    #[test]
    fn test_units_converted() {
        let c = parse(
            "[grid]\ncenter_ghz = 500\n[tx]\nrotation_deg = [90, 0, 0]\n[multipath]\ncluster_decay_ns = 2\n[options.phase_error]\nenabled = true\ndelta_max_deg = 10\n",
        )
        .unwrap();
        assert_eq!(c.grid.center, 500e9);
        assert!((c.tx.rotation[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((c.multipath.cluster_decay - 2e-9).abs() < 1e-24);
        assert!((c.options.phase_error.unwrap() - 10f64.to_radians()).abs() < 1e-15);
        // AE spacing defaults to half a wavelength at the center.
        assert!((c.tx.ae_spacing[0] - wavelength(500e9) / 2.0).abs() < 1e-18);
    }

    #[test]
    fn test_relative_paths_and_parse_errors() {
        let c = parse("[medium]\nlines = \"data/l.csv\"\n").unwrap();
        assert_eq!(c.medium.lines.unwrap(), PathBuf::from("/tmp/data/l.csv"));
        assert!(matches!(parse("[grid\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("[grid]\nsubcarriers = \"x\"\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn test_constant_model_and_approx_mu() {
        let c = parse("[medium]\nmodel = \"constant\"\nk_per_m = 0.0033\n").unwrap();
        assert_eq!(c.medium.absorption_model().unwrap(), AbsorptionModel::Constant { k: 0.0033 });
        assert!(!violations("[medium]\nmodel = \"constant\"\n").is_empty());
        let c = parse("[medium]\nmodel = \"approx1\"\n[medium.mixing_ratio]\nH2O = 0.02\n").unwrap();
        assert_eq!(c.medium.absorption_model().unwrap(), AbsorptionModel::Approx1 { mu: 0.02 });
    }

    #[test]
    fn test_doppler_undersampling_rejected() {
        let v = violations("[options.doppler]\nvelocity_mps = 10\n[run]\ntime_step_s = 1e-3\n");
        assert!(v.iter().any(|s| s.contains("undersamples")), "{v:?}");
    }
}
