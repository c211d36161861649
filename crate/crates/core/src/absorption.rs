//! Molecular absorption: line-by-line model, two sub-THz polynomial fits,
//! humidity conversion and the LoS path gain.
//!
//! Line data is ingested from HITRAN-style CSV (wavenumber units) and stored
//! in SI: Hz for centers, widths and shifts; Hz m^2/molecule for intensities.
//! Lower-state energies stay in cm^-1 because they only ever appear next to
//! the second radiation constant.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::num::{c0, consts, lit, wide, Real};

/// Desk-scale water-vapour line set shipped with the crate.
pub const DESK_LINES_CSV: &str = include_str!("../data/h2o_desk_lines.csv");
/// Partition function table matching [`DESK_LINES_CSV`].
pub const DESK_PARTITION_CSV: &str = include_str!("../data/h2o_partition.csv");

/// Wavenumber (cm^-1) to frequency (Hz).
const CM_TO_HZ: f64 = consts::SPEED_OF_LIGHT * 100.0;
/// cm^-1/(molecule cm^-2) to Hz m^2/molecule.
const INTENSITY_TO_SI: f64 = consts::SPEED_OF_LIGHT * 0.01;

/// One spectroscopic transition, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionLine<T> {
    pub gas: String,
    /// Global isotopologue id, as used by the partition table.
    pub isotopologue: u32,
    /// Zero-pressure line center, Hz.
    pub center_hz: T,
    /// Intensity at 296 K, Hz m^2/molecule.
    pub intensity: T,
    /// Air-broadened half-width at 296 K, Hz/atm.
    pub gamma_air: T,
    /// Self-broadened half-width at 296 K, Hz/atm.
    pub gamma_self: T,
    /// Lower-state energy, cm^-1.
    pub e_lower_cm: T,
    /// Temperature exponent of the half-width.
    pub n_temp: T,
    /// Pressure shift, Hz/atm.
    pub shift: T,
}

#[derive(Debug, Deserialize)]
struct LineRow {
    gas: String,
    isotopologue: u32,
    #[serde(rename = "nu0_cm-1")]
    nu0: f64,
    #[serde(rename = "S0_cm-1_per_molec_cm-2")]
    s0: f64,
    #[serde(rename = "gamma_air_cm-1_atm")]
    gamma_air: f64,
    #[serde(rename = "gamma_self_cm-1_atm")]
    gamma_self: f64,
    #[serde(rename = "E_lower_cm-1")]
    e_lower: f64,
    n_temp: f64,
    #[serde(rename = "delta_cm-1_atm")]
    delta: f64,
}

#[derive(Debug, Deserialize)]
struct PartitionRow {
    isotopologue: u32,
    #[serde(rename = "T_K")]
    t: f64,
    #[serde(rename = "Q")]
    q: f64,
}

fn csv_rows<R: Read, D: serde::de::DeserializeOwned>(reader: R, origin: &Path) -> Result<Vec<D>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse(origin, format!("row {}: {e}", i + 2))))
        .collect()
}

/// Parses HITRAN-style line CSV text, converting to SI.
pub fn parse_lines<T: Real>(text: &str, origin: &Path) -> Result<Vec<AbsorptionLine<T>>> {
    let rows: Vec<LineRow> = csv_rows(text.as_bytes(), origin)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        if !(r.nu0 > 0.0 && r.s0 >= 0.0 && r.gamma_air > 0.0 && r.gamma_self > 0.0) {
            return Err(Error::parse(
                origin,
                format!("row {}: need nu0 > 0, S0 >= 0 and positive half-widths", i + 2),
            ));
        }
        out.push(AbsorptionLine {
            gas: r.gas,
            isotopologue: r.isotopologue,
            center_hz: lit(r.nu0 * CM_TO_HZ),
            intensity: lit(r.s0 * INTENSITY_TO_SI),
            gamma_air: lit(r.gamma_air * CM_TO_HZ),
            gamma_self: lit(r.gamma_self * CM_TO_HZ),
            e_lower_cm: lit(r.e_lower),
            n_temp: lit(r.n_temp),
            shift: lit(r.delta * CM_TO_HZ),
        });
    }
    Ok(out)
}

pub fn load_lines<T: Real>(path: &Path) -> Result<Vec<AbsorptionLine<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lines(&text, path)
}

/// Tabulated partition function of one isotopologue.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTable<T> {
    /// Strictly increasing temperatures, K.
    pub temps: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Real> PartitionTable<T> {
    /// Linear interpolation; extrapolation is an error.
    pub fn eval(&self, t: T) -> Result<T> {
        let (lo, hi) = (self.temps[0], self.temps[self.temps.len() - 1]);
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange {
                what: "temperature",
                value: wide(t),
                lo: wide(lo),
                hi: wide(hi),
            });
        }
        let i = self.temps.partition_point(|&x| x <= t).clamp(1, self.temps.len() - 1);
        let (t0, t1) = (self.temps[i - 1], self.temps[i]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.q[i - 1] + w * (self.q[i] - self.q[i - 1]))
    }
}

pub fn parse_partition<T: Real>(text: &str, origin: &Path) -> Result<BTreeMap<u32, PartitionTable<T>>> {
    let rows: Vec<PartitionRow> = csv_rows(text.as_bytes(), origin)?;
    let mut map: BTreeMap<u32, PartitionTable<T>> = BTreeMap::new();
    for r in rows {
        let e = map.entry(r.isotopologue).or_insert(PartitionTable {
            temps: Vec::new(),
            q: Vec::new(),
        });
        if let Some(&last) = e.temps.last() {
            if lit::<T>(r.t) <= last {
                return Err(Error::parse(
                    origin,
                    format!("isotopologue {}: temperatures must strictly increase", r.isotopologue),
                ));
            }
        }
        if !(r.q > 0.0) {
            return Err(Error::parse(origin, "partition values must be positive"));
        }
        e.temps.push(lit(r.t));
        e.q.push(lit(r.q));
    }
    for (iso, t) in &map {
        if t.temps.len() < 2 {
            return Err(Error::parse(
                origin,
                format!("isotopologue {iso}: need at least two temperatures"),
            ));
        }
    }
    Ok(map)
}

pub fn load_partition<T: Real>(path: &Path) -> Result<BTreeMap<u32, PartitionTable<T>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_partition(&text, path)
}

/// Gas mixture and environment for the line-by-line model.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumProfile<T> {
    pub temperature_k: T,
    pub pressure_atm: T,
    /// Volume mixing ratio per gas name; gases absent here do not absorb.
    pub mixing_ratio: BTreeMap<String, T>,
    pub lines: Vec<AbsorptionLine<T>>,
    pub partition: BTreeMap<u32, PartitionTable<T>>,
    /// Lines only contribute within this distance of their center, Hz.
    pub cutoff_hz: T,
}

impl<T: Real> MediumProfile<T> {
    /// Shipped water-vapour profile with the given H2O mixing ratio.
    pub fn desk_h2o(temperature_k: T, pressure_atm: T, h2o: T) -> Self {
        let lines = parse_lines(DESK_LINES_CSV, Path::new("<desk lines>"))
            .expect("shipped line set parses");
        let partition = parse_partition(DESK_PARTITION_CSV, Path::new("<desk partition>"))
            .expect("shipped partition table parses");
        MediumProfile {
            temperature_k,
            pressure_atm,
            mixing_ratio: BTreeMap::from([("H2O".to_string(), h2o)]),
            lines,
            partition,
            cutoff_hz: lit(750e9),
        }
    }

    pub fn xi(&self, gas: &str) -> T {
        self.mixing_ratio.get(gas).copied().unwrap_or_else(T::zero)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.temperature_k > T::zero()) {
            errs.push("medium temperature must be > 0 K".to_string());
        }
        if !(self.pressure_atm > T::zero()) {
            errs.push("medium pressure must be > 0 atm".to_string());
        }
        for (g, &x) in &self.mixing_ratio {
            if !(x >= T::zero() && x <= T::one()) {
                errs.push(format!("mixing ratio of {g} must lie in [0, 1]"));
            }
        }
        if !(self.cutoff_hz > T::zero()) {
            errs.push("line cutoff must be > 0".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Temperature-scaled line intensity, Hz m^2/molecule.
pub fn line_intensity<T: Real>(
    line: &AbsorptionLine<T>,
    partition: &PartitionTable<T>,
    temperature_k: T,
) -> Result<T> {
    let t0: T = lit(consts::REFERENCE_TEMPERATURE);
    let c2: T = lit(consts::SECOND_RADIATION);
    let nu = line.center_hz / lit(CM_TO_HZ);
    let q_ratio = partition.eval(t0)? / partition.eval(temperature_k)?;
    let boltz = (-c2 * line.e_lower_cm * (T::one() / temperature_k - T::one() / t0)).exp();
    let stim = (T::one() - (-c2 * nu / temperature_k).exp()) / (T::one() - (-c2 * nu / t0).exp());
    Ok(line.intensity * q_ratio * boltz * stim)
}

/// Lorentz half-width for gas mixing ratio `xi`, Hz.
pub fn lorentz_halfwidth<T: Real>(line: &AbsorptionLine<T>, temperature_k: T, pressure_atm: T, xi: T) -> T {
    let t0: T = lit(consts::REFERENCE_TEMPERATURE);
    let p0: T = lit(consts::REFERENCE_PRESSURE);
    ((T::one() - xi) * line.gamma_air + xi * line.gamma_self)
        * (pressure_atm / p0)
        * (t0 / temperature_k).powf(line.n_temp)
}

pub fn shifted_line_center<T: Real>(line: &AbsorptionLine<T>, pressure_atm: T) -> T {
    line.center_hz + line.shift * pressure_atm / lit(consts::REFERENCE_PRESSURE)
}

/// Symmetric Lorentz pair `L(f - fc) + L(f + fc)` without the `1/pi`.
pub fn lorentz_pair<T: Real>(f: T, fc: T, half_width: T) -> T {
    let a2 = half_width * half_width;
    half_width / ((f - fc) * (f - fc) + a2) + half_width / ((f + fc) * (f + fc) + a2)
}

struct PreparedLine<T> {
    center: T,
    half_width: T,
    /// n S(T) / (pi tanh(h fc / 2kT)).
    weight: T,
}

fn prepare<T: Real>(profile: &MediumProfile<T>) -> Result<Vec<PreparedLine<T>>> {
    let t = profile.temperature_k;
    let h_over_2kt: T = lit::<T>(consts::PLANCK / (2.0 * consts::BOLTZMANN)) / t;
    let n_total: T = lit::<T>(consts::ATM_PA / consts::BOLTZMANN) * profile.pressure_atm / t;
    let mut out = Vec::new();
    for line in &profile.lines {
        let xi = profile.xi(&line.gas);
        if xi == T::zero() || line.intensity == T::zero() {
            continue;
        }
        let table = profile.partition.get(&line.isotopologue).ok_or_else(|| {
            Error::Validation(vec![format!(
                "no partition table for isotopologue {}",
                line.isotopologue
            )])
        })?;
        let s = line_intensity(line, table, t)?;
        let center = shifted_line_center(line, profile.pressure_atm);
        let half_width = lorentz_halfwidth(line, t, profile.pressure_atm, xi);
        let weight = n_total * xi * s / (T::PI() * (h_over_2kt * center).tanh());
        out.push(PreparedLine {
            center,
            half_width,
            weight,
        });
    }
    Ok(out)
}

/// Line-by-line absorption coefficient K(f) in 1/m.
///
/// Each grid point sums its lines in file order, so the result does not
/// depend on the number of worker threads.
pub fn absorption_exact<T: Real>(freqs: &[T], profile: &MediumProfile<T>) -> Result<Vec<T>> {
    if profile.lines.is_empty() {
        return Err(Error::Validation(vec!["medium has no absorption lines".into()]));
    }
    profile.validate()?;
    let prepared = prepare(profile)?;
    let h_over_2kt: T = lit::<T>(consts::PLANCK / (2.0 * consts::BOLTZMANN)) / profile.temperature_k;
    let cutoff = profile.cutoff_hz;
    Ok(freqs
        .par_iter()
        .map(|&f| {
            let th = (h_over_2kt * f).tanh();
            let mut k = T::zero();
            for l in &prepared {
                if (f - l.center).abs() > cutoff {
                    continue;
                }
                let ratio = f / l.center;
                k = k + l.weight * ratio * ratio * th * lorentz_pair(f, l.center, l.half_width);
            }
            k
        })
        .collect())
}

/// Which polynomial fit to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxVariant {
    /// Two-line fit, valid over 275-400 GHz.
    Approx1,
    /// Six-line fit, valid over 100-450 GHz.
    Approx2,
}

impl ApproxVariant {
    pub fn band_hz(&self) -> (f64, f64) {
        match self {
            ApproxVariant::Approx1 => (275e9, 400e9),
            ApproxVariant::Approx2 => (100e9, 450e9),
        }
    }
}

/// Approximate absorption with a validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxValue<T> {
    pub k: T,
    /// False when `f` lies outside the fit's band.
    pub in_band: bool,
}

fn resonance<T: Real>(num: T, den: T, center_cm: f64, v: T) -> T {
    let dv = v - lit(center_cm);
    num / (den + dv * dv)
}

/// Polynomial-fit absorption coefficient in 1/m for water-vapour ratio `mu`.
pub fn absorption_approx<T: Real>(f_hz: T, variant: ApproxVariant, mu: T) -> ApproxValue<T> {
    let v = f_hz / (lit::<T>(100.0) * c0::<T>());
    let l = |x: f64| lit::<T>(x);
    let k = match variant {
        ApproxVariant::Approx1 => {
            let a = l(0.2205) * mu * (l(0.1303) * mu + l(0.0294));
            let b = (l(0.4093) * mu + l(0.0925)).powi(2);
            let c = l(2.014) * mu * (l(0.1702) * mu + l(0.0303));
            let d = (l(0.537) * mu + l(0.0956)).powi(2);
            let g = l(5.54e-37) * f_hz.powi(3) - l(3.94e-25) * f_hz.powi(2) + l(9.06e-14) * f_hz
                - l(6.36e-3);
            resonance(a, b, 10.835, v) + resonance(c, d, 12.664, v) + g
        }
        ApproxVariant::Approx2 => {
            let dry = T::one() - mu;
            let terms = [
                (
                    l(5.159e-5) * dry * (l(-6.65e-5) * dry + l(0.0159)),
                    (l(-2.09e-4) * dry + l(0.05)).powi(2),
                    3.96,
                ),
                (
                    l(0.1925) * mu * (l(0.1350) * mu + l(0.0318)),
                    (l(0.4241) * mu + l(0.0998)).powi(2),
                    6.11,
                ),
                (
                    l(0.2251) * mu * (l(0.1314) * mu + l(0.0297)),
                    (l(0.4127) * mu + l(0.0932)).powi(2),
                    10.84,
                ),
                (
                    l(2.053) * mu * (l(0.1717) * mu + l(0.0306)),
                    (l(0.5394) * mu + l(0.0961)).powi(2),
                    12.68,
                ),
                (
                    l(0.177) * mu * (l(0.0832) * mu + l(0.0213)),
                    (l(0.2615) * mu + l(0.0668)).powi(2),
                    14.65,
                ),
                (
                    l(2.146) * mu * (l(0.1206) * mu + l(0.0277)),
                    (l(0.3789) * mu + l(0.0871)).powi(2),
                    14.94,
                ),
            ];
            let sum: T = terms.iter().map(|&(a, b, c)| resonance(a, b, c, v)).sum();
            // f^9.42 overflows f32; evaluate the equalizer in f64.
            let fw = wide(f_hz);
            let g = wide(mu) / 0.0157 * (2e-4 + 0.915e-112 * fw.powf(9.42));
            sum + lit(g)
        }
    };
    let (lo, hi) = variant.band_hz();
    let fw = wide(f_hz);
    ApproxValue {
        k: k.max(T::zero()),
        in_band: fw >= lo && fw <= hi,
    }
}

/// Buck saturation vapour pressure over water with enhancement factor, hPa.
pub fn saturation_vapor_pressure_hpa<T: Real>(temperature_k: T, pressure_atm: T) -> T {
    let tc = temperature_k - lit(consts::STP_TEMPERATURE);
    let p_hpa = pressure_atm * lit(1013.25);
    lit::<T>(6.1121)
        * (lit::<T>(1.0007) + lit::<T>(3.46e-6) * p_hpa)
        * (lit::<T>(17.502) * tc / (lit::<T>(240.97) + tc)).exp()
}

/// Water-vapour volume mixing ratio from relative humidity in percent.
pub fn water_vapor_mixing_ratio<T: Real>(rh_percent: T, temperature_k: T, pressure_atm: T) -> T {
    rh_percent / lit(100.0) * saturation_vapor_pressure_hpa(temperature_k, pressure_atm)
        / (pressure_atm * lit(1013.25))
}

/// Amplitude gain of a path: spreading raised to `gamma/2` times absorption.
pub fn los_path_gain<T: Real>(f_hz: T, distance_m: T, k_per_m: T, gamma: T) -> T {
    let spread = c0::<T>() / (lit::<T>(4.0) * T::PI() * f_hz * distance_m);
    spread.powf(gamma / lit(2.0)) * (-k_per_m * distance_m / lit(2.0)).exp()
}

/// How K(f) is obtained for a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum AbsorptionModel<T> {
    Exact(Box<MediumProfile<T>>),
    Approx1 { mu: T },
    Approx2 { mu: T },
    /// Frequency-flat coefficient in 1/m.
    Constant { k: T },
}

/// K(f) over a grid, with the number of points outside an approximation's band.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub k: Vec<T>,
    pub out_of_band: usize,
}

impl<T: Real> AbsorptionModel<T> {
    pub fn spectrum(&self, freqs: &[T]) -> Result<Spectrum<T>> {
        let approx = |v: ApproxVariant, mu: T| {
            let vals: Vec<_> = freqs.iter().map(|&f| absorption_approx(f, v, mu)).collect();
            Spectrum {
                out_of_band: vals.iter().filter(|a| !a.in_band).count(),
                k: vals.into_iter().map(|a| a.k).collect(),
            }
        };
        Ok(match self {
            AbsorptionModel::Exact(p) => Spectrum {
                k: absorption_exact(freqs, p)?,
                out_of_band: 0,
            },
            AbsorptionModel::Approx1 { mu } => approx(ApproxVariant::Approx1, *mu),
            AbsorptionModel::Approx2 { mu } => approx(ApproxVariant::Approx2, *mu),
            AbsorptionModel::Constant { k } => Spectrum {
                k: vec![*k; freqs.len()],
                out_of_band: 0,
            },
        })
    }
}
