//! Time-invariant channel assembly.
//!
//! A [`Link`] bundles both arrays, the frequency grid, the propagation
//! options and the absorption coefficient sampled at every sub-band. From a
//! multipath realization it builds
//!
//! * the per-element frequency-domain channel `[k][rx AE][tx AE]`,
//! * its delay-domain twin `[u][rx AE][tx AE]` (nearest-tap mapping),
//! * the analog-beamformed per-SA channel `[k][rx SA][tx SA]`, either from
//!   the element tensor or directly from equivalent array responses.
//!
//! Element rows and columns are flattened SA-major: `q * Qbar + qbar`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::absorption::{los_path_gain, AbsorptionModel};
use crate::arrays::{
    beamforming_vector, equivalent_array_response, sample_phase_errors, steering_vector, AntennaPattern,
    SteeringContext,
};
use crate::error::{Error, Result};
use crate::geometry::{direction_between, sa_pair_geometry, ArrayGeometry, Direction, PairModel, SaPairGeometry, Vec3};
use crate::multipath::MultipathRealization;
use crate::num::{c0, lit, wavelength, wide, Real};

/// Subcarrier and sub-band layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid<T> {
    pub center: T,
    pub bandwidth: T,
    pub subcarriers: usize,
    pub subbands: usize,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(center: T, bandwidth: T, subcarriers: usize, subbands: usize) -> Result<Self> {
        let g = FrequencyGrid {
            center,
            bandwidth,
            subcarriers,
            subbands,
        };
        let mut v = Vec::new();
        g.collect_violations(&mut v);
        if v.is_empty() {
            Ok(g)
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn collect_violations(&self, out: &mut Vec<String>) {
        if self.subcarriers == 0 {
            out.push("grid.subcarriers must be >= 1".into());
        }
        if self.subbands == 0 {
            out.push("grid.subbands must be >= 1".into());
        }
        if !(self.bandwidth > T::zero()) {
            out.push("grid.bandwidth must be > 0".into());
        }
        if !(self.center > T::zero()) {
            out.push("grid.center must be > 0".into());
        } else if !(self.center - self.bandwidth / lit(2.0) > T::zero()) {
            out.push("grid.bandwidth must be smaller than twice the center frequency".into());
        }
    }

    /// Subcarrier spacing `B / K`, which is also the sub-band width.
    pub fn spacing(&self) -> T {
        self.bandwidth / lit(self.subcarriers as f64)
    }

    pub fn subcarrier(&self, k: usize) -> T {
        self.center + self.spacing() * lit(k as f64 - (self.subcarriers as f64 - 1.0) / 2.0)
    }

    pub fn subcarriers(&self) -> Vec<T> {
        (0..self.subcarriers).map(|k| self.subcarrier(k)).collect()
    }

    /// Center of sub-band `n` inside subcarrier `k`.
    pub fn subband(&self, k: usize, n: usize) -> T {
        let w = self.spacing() / lit(self.subbands as f64);
        self.subcarrier(k) + w * lit(n as f64 - (self.subbands as f64 - 1.0) / 2.0)
    }

    /// All sub-band centers, subcarrier-major.
    pub fn subband_frequencies(&self) -> Vec<T> {
        (0..self.subcarriers)
            .flat_map(|k| (0..self.subbands).map(move |n| (k, n)))
            .map(|(k, n)| self.subband(k, n))
            .collect()
    }

    /// Baseband offset `k B / K` used in the delay exponent.
    pub fn baseband(&self, k: usize) -> T {
        self.spacing() * lit(k as f64)
    }

    pub fn fractional_bandwidth(&self) -> T {
        self.bandwidth / self.center
    }

    /// Subcarrier closest to the center frequency.
    pub fn center_index(&self) -> usize {
        self.subcarriers / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Frequency,
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Rows/columns are antenna elements.
    Element,
    /// Rows/columns are subarrays (effective channel).
    Subarray,
}

/// Complex tensor `[time][bin][rx][tx]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor<T> {
    pub axis: Axis,
    pub level: Level,
    /// 1 for time-invariant tensors.
    pub n_time: usize,
    /// Subcarriers (frequency axis) or taps (delay axis).
    pub n_bins: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    pub grid: FrequencyGrid<T>,
    /// Delay-tap spacing, s.
    pub sample_interval: T,
    /// Time-axis spacing, s; 0 without a time axis.
    pub time_step: T,
    /// Paths dropped because they fell beyond the last tap.
    pub truncated_paths: usize,
    pub data: Vec<Complex<T>>,
}

impl<T: Real> ChannelTensor<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn zeros(
        axis: Axis,
        level: Level,
        n_time: usize,
        n_bins: usize,
        n_rx: usize,
        n_tx: usize,
        grid: FrequencyGrid<T>,
        sample_interval: T,
    ) -> Self {
        ChannelTensor {
            axis,
            level,
            n_time,
            n_bins,
            n_rx,
            n_tx,
            grid,
            sample_interval,
            time_step: T::zero(),
            truncated_paths: 0,
            data: vec![Complex::new(T::zero(), T::zero()); n_time * n_bins * n_rx * n_tx],
        }
    }

    pub fn index(&self, t: usize, b: usize, r: usize, c: usize) -> usize {
        ((t * self.n_bins + b) * self.n_rx + r) * self.n_tx + c
    }

    pub fn get(&self, t: usize, b: usize, r: usize, c: usize) -> Complex<T> {
        self.data[self.index(t, b, r, c)]
    }

    /// The `[rx][tx]` matrix at one time/bin.
    pub fn matrix(&self, t: usize, b: usize) -> &[Complex<T>] {
        let s = self.index(t, b, 0, 0);
        &self.data[s..s + self.n_rx * self.n_tx]
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v = v.scale(s);
        }
    }

    pub fn same_shape(&self, o: &Self) -> bool {
        (self.n_time, self.n_bins, self.n_rx, self.n_tx) == (o.n_time, o.n_bins, o.n_rx, o.n_tx)
    }
}

/// Which propagation legs are included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Los,
    Nlos,
    Both,
}

impl Scenario {
    pub fn has_los(&self) -> bool {
        matches!(self, Scenario::Los | Scenario::Both)
    }
    pub fn has_nlos(&self) -> bool {
        matches!(self, Scenario::Nlos | Scenario::Both)
    }
}

/// Wavefront model across the arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveModel {
    /// Planar at both SA and AE level.
    Pwm,
    /// Spherical between SAs, planar inside each SA.
    Sp,
    /// Spherical between every element pair (LoS only; rays stay planar).
    Swm,
}

impl WaveModel {
    pub fn pair_model(&self) -> PairModel {
        match self {
            WaveModel::Pwm => PairModel::Planar,
            WaveModel::Sp | WaveModel::Swm => PairModel::Spherical,
        }
    }
}

/// What each analog beamformer points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamTarget {
    /// Toward the opposite array (per SA, or shared under the planar model).
    Los,
    /// Every path sees a beamformer matched to its own direction.
    PerPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOptions<T> {
    pub scenario: Scenario,
    pub wave: WaveModel,
    pub beam_split: bool,
    /// Include the carrier in the delay exponent (`f_k` instead of `k B / K`).
    pub carrier_phase: bool,
    /// Path-loss exponent.
    pub gamma: T,
    pub tx_antenna: AntennaPattern<T>,
    pub rx_antenna: AntennaPattern<T>,
    pub beam_target: BeamTarget,
}

impl<T: Real> Default for ChannelOptions<T> {
    fn default() -> Self {
        ChannelOptions {
            scenario: Scenario::Both,
            wave: WaveModel::Sp,
            beam_split: false,
            carrier_phase: false,
            gamma: lit(2.0),
            tx_antenna: AntennaPattern::Isotropic,
            rx_antenna: AntennaPattern::Isotropic,
            beam_target: BeamTarget::Los,
        }
    }
}

/// One propagation path between an SA pair, before array processing.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTerm<T> {
    pub delay: T,
    /// Amplitude, phase and antenna gains per subcarrier.
    pub gain: Vec<Complex<T>>,
    pub aod: Direction<T>,
    pub aoa: Direction<T>,
    /// Ray index in the realization; `None` for the LoS leg.
    pub ray: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairPaths<T> {
    pub qr: usize,
    pub qt: usize,
    pub geometry: SaPairGeometry<T>,
    pub terms: Vec<PathTerm<T>>,
}

/// Path after analog beamforming at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTerm<T> {
    pub delay: T,
    /// `gain * A_r * A_t` per subcarrier.
    pub coeff: Vec<Complex<T>>,
    pub ray: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEffective<T> {
    pub qr: usize,
    pub qt: usize,
    pub distance: T,
    pub terms: Vec<EffectiveTerm<T>>,
}

/// Beamforming directions per SA, in each array's local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamTargets<T> {
    pub tx: Vec<Direction<T>>,
    pub rx: Vec<Direction<T>>,
}

/// Beamformer phase errors in radians, indexed `[sa][k][ae]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseErrors<T> {
    pub tx: Vec<T>,
    pub rx: Vec<T>,
}

/// Everything needed to assemble channels for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct Link<T> {
    pub tx: ArrayGeometry<T>,
    pub rx: ArrayGeometry<T>,
    pub grid: FrequencyGrid<T>,
    pub options: ChannelOptions<T>,
    /// Absorption coefficient at every sub-band, subcarrier-major, 1/m.
    pub absorption: Vec<T>,
    /// Sub-bands that fell outside an approximation's validity band.
    pub out_of_band: usize,
    tx_offsets: Vec<Vec3<T>>,
    rx_offsets: Vec<Vec3<T>>,
}

#[inline]
fn cis<T: Real>(phase: T) -> Complex<T> {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

impl<T: Real> Link<T> {
    pub fn new(
        tx: ArrayGeometry<T>,
        rx: ArrayGeometry<T>,
        grid: FrequencyGrid<T>,
        options: ChannelOptions<T>,
        model: &AbsorptionModel<T>,
    ) -> Result<Self> {
        let mut v = Vec::new();
        tx.collect_violations("tx.", &mut v);
        rx.collect_violations("rx.", &mut v);
        grid.collect_violations(&mut v);
        if !(options.gamma > T::zero()) {
            v.push("options.gamma must be > 0".into());
        }
        if !v.is_empty() {
            return Err(Error::Validation(v));
        }
        let spectrum = model.spectrum(&grid.subband_frequencies())?;
        let tx_offsets = tx.ae_offsets();
        let rx_offsets = rx.ae_offsets();
        let link = Link {
            tx,
            rx,
            grid,
            options,
            absorption: spectrum.k,
            out_of_band: spectrum.out_of_band,
            tx_offsets,
            rx_offsets,
        };
        // Reject coincident SAs up front.
        for qr in 0..link.rx.num_sa() {
            for qt in 0..link.tx.num_sa() {
                link.pair_geometry(qt, qr)?;
            }
        }
        Ok(link)
    }

    pub fn n_tx_sa(&self) -> usize {
        self.tx.num_sa()
    }
    pub fn n_rx_sa(&self) -> usize {
        self.rx.num_sa()
    }

    pub fn pair_geometry(&self, qt: usize, qr: usize) -> Result<SaPairGeometry<T>> {
        sa_pair_geometry(&self.tx, &self.rx, qt, qr, self.options.wave.pair_model())
    }

    /// Distance between the array centers.
    pub fn center_distance(&self) -> T {
        (self.rx.center - self.tx.center).norm()
    }

    /// LoS amplitude at subcarrier `k`, power-averaged over its sub-bands.
    pub fn alpha(&self, k: usize, distance: T) -> T {
        let n = self.grid.subbands;
        let mut p = T::zero();
        for s in 0..n {
            let a = los_path_gain(self.grid.subband(k, s), distance, self.absorption[k * n + s], self.options.gamma);
            p = p + a * a;
        }
        (p / lit(n as f64)).sqrt()
    }

    /// Frequency in the delay exponent of subcarrier `k`.
    pub fn phase_frequency(&self, k: usize) -> T {
        if self.options.carrier_phase {
            self.grid.subcarrier(k)
        } else {
            self.grid.baseband(k)
        }
    }

    fn contexts(&self, offsets: &[Vec3<T>]) -> Vec<SteeringContext<T>> {
        let lambda_c = wavelength(self.grid.center);
        (0..self.grid.subcarriers)
            .map(|k| SteeringContext {
                offsets: offsets.to_vec(),
                lambda_k: wavelength(self.grid.subcarrier(k)),
                lambda_c,
                beam_split: self.options.beam_split,
            })
            .collect()
    }

    pub fn tx_contexts(&self) -> Vec<SteeringContext<T>> {
        self.contexts(&self.tx_offsets)
    }
    pub fn rx_contexts(&self) -> Vec<SteeringContext<T>> {
        self.contexts(&self.rx_offsets)
    }

    /// Paths between Tx SA `qt` and Rx SA `qr`.
    pub fn pair_paths(&self, qt: usize, qr: usize, mp: Option<&MultipathRealization<T>>) -> Result<PairPaths<T>> {
        let geometry = self.pair_geometry(qt, qr)?;
        let kk = self.grid.subcarriers;
        let alphas: Vec<T> = (0..kk).map(|k| self.alpha(k, geometry.distance)).collect();
        let tau_los = geometry.distance / c0::<T>();
        let (ant_t, ant_r) = (&self.options.tx_antenna, &self.options.rx_antenna);
        let mut terms = Vec::new();
        if self.options.scenario.has_los() {
            let g = ant_t.amplitude(&geometry.aod) * ant_r.amplitude(&geometry.aoa);
            terms.push(PathTerm {
                delay: tau_los,
                gain: alphas.iter().map(|&a| Complex::new(a * g, T::zero())).collect(),
                aod: geometry.aod,
                aoa: geometry.aoa,
                ray: None,
            });
        }
        if self.options.scenario.has_nlos() {
            if let Some(mp) = mp {
                for (i, ray) in mp.rays.iter().enumerate() {
                    let g = ant_t.amplitude(&ray.aod) * ant_r.amplitude(&ray.aoa) * ray.amplitude;
                    let ph = cis(ray.phase);
                    terms.push(PathTerm {
                        delay: tau_los + ray.excess_delay,
                        gain: alphas.iter().map(|&a| ph.scale(a * g)).collect(),
                        aod: ray.aod,
                        aoa: ray.aoa,
                        ray: Some(i),
                    });
                }
            }
        }
        Ok(PairPaths {
            qr,
            qt,
            geometry,
            terms,
        })
    }

    /// Paths of every SA pair, Rx-major.
    pub fn all_pair_paths(&self, mp: Option<&MultipathRealization<T>>) -> Result<Vec<PairPaths<T>>> {
        let mut out = Vec::with_capacity(self.n_rx_sa() * self.n_tx_sa());
        for qr in 0..self.n_rx_sa() {
            for qt in 0..self.n_tx_sa() {
                out.push(self.pair_paths(qt, qr, mp)?);
            }
        }
        Ok(out)
    }

    /// Element-pair distances of one SA pair, `[rx ae][tx ae]`.
    fn element_distances(&self, qt: usize, qr: usize) -> Vec<T> {
        let nt = self.tx.num_ae();
        let nr = self.rx.num_ae();
        let pt: Vec<_> = (0..nt).map(|j| self.tx.ae_global(qt, j)).collect();
        let mut d = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            let pr = self.rx.ae_global(qr, i);
            d.extend(pt.iter().map(|p| (pr - *p).norm()));
        }
        d
    }

    /// Adds one SA-pair block of the element channel for subcarrier `k`.
    ///
    /// `extra` multiplies every path coefficient (the carrier offset in the
    /// delay domain); `phase_freq` is the frequency of the delay exponent.
    #[allow(clippy::too_many_arguments)]
    fn add_block(
        &self,
        out: &mut [Complex<T>],
        pair: &PairPaths<T>,
        element_d: Option<&[T]>,
        k: usize,
        ctx_t: &SteeringContext<T>,
        ctx_r: &SteeringContext<T>,
        filter: &dyn Fn(&PathTerm<T>) -> Option<Complex<T>>,
    ) {
        let nt = self.tx.num_ae();
        let nr = self.rx.num_ae();
        let n_tx = self.n_tx_sa() * nt;
        let row0 = pair.qr * nr;
        let col0 = pair.qt * nt;
        for term in &pair.terms {
            let Some(coeff) = filter(term) else { continue };
            if let (Some(d), None) = (element_d, term.ray) {
                // Spherical LoS: exact per-element distance and phase.
                let fk = self.grid.subcarrier(k);
                let a0 = self.alpha(k, pair.geometry.distance);
                let norm = T::one() / lit::<T>((nt * nr) as f64).sqrt();
                let kf = T::TAU() * fk / c0::<T>();
                for i in 0..nr {
                    for j in 0..nt {
                        let dij = d[i * nt + j];
                        let amp = self.alpha(k, dij) / a0 * norm;
                        let v = coeff * cis(-kf * (dij - pair.geometry.distance)).scale(amp);
                        out[(row0 + i) * n_tx + col0 + j] = out[(row0 + i) * n_tx + col0 + j] + v;
                    }
                }
                continue;
            }
            let a_t = steering_vector(ctx_t, &term.aod);
            let a_r = steering_vector(ctx_r, &term.aoa);
            for (i, ar) in a_r.iter().enumerate() {
                let c = coeff * ar;
                let row = &mut out[(row0 + i) * n_tx + col0..(row0 + i) * n_tx + col0 + nt];
                for (o, at) in row.iter_mut().zip(&a_t) {
                    *o = *o + c * at;
                }
            }
        }
    }

    fn element_distance_table(&self, pairs: &[PairPaths<T>]) -> Vec<Option<Vec<T>>> {
        pairs
            .iter()
            .map(|p| {
                (self.options.wave == WaveModel::Swm && self.options.scenario.has_los())
                    .then(|| self.element_distances(p.qt, p.qr))
            })
            .collect()
    }

    /// Per-element frequency-domain channel `[k][rx AE][tx AE]`.
    pub fn channel_tiv_freq(&self, mp: Option<&MultipathRealization<T>>) -> Result<ChannelTensor<T>> {
        let pairs = self.all_pair_paths(mp)?;
        let dists = self.element_distance_table(&pairs);
        let (ctx_t, ctx_r) = (self.tx_contexts(), self.rx_contexts());
        let n_rx = self.n_rx_sa() * self.rx.num_ae();
        let n_tx = self.n_tx_sa() * self.tx.num_ae();
        let mut h = ChannelTensor::zeros(
            Axis::Frequency,
            Level::Element,
            1,
            self.grid.subcarriers,
            n_rx,
            n_tx,
            self.grid,
            T::one() / self.grid.bandwidth,
        );
        h.data.par_chunks_mut(n_rx * n_tx).enumerate().for_each(|(k, block)| {
            let nu = self.phase_frequency(k);
            let filter = |t: &PathTerm<T>| Some(t.gain[k] * cis(-T::TAU() * nu * t.delay));
            for (pair, d) in pairs.iter().zip(&dists) {
                self.add_block(block, pair, d.as_deref(), k, &ctx_t[k], &ctx_r[k], &filter);
            }
        });
        Ok(h)
    }

    /// Per-element delay-domain channel `[u][rx AE][tx AE]` with gains and
    /// steering frozen at subcarrier `k_ref`.
    pub fn channel_tiv_delay(
        &self,
        mp: Option<&MultipathRealization<T>>,
        k_ref: usize,
        sample_interval: T,
        taps: usize,
    ) -> Result<ChannelTensor<T>> {
        if k_ref >= self.grid.subcarriers || taps == 0 || !(sample_interval > T::zero()) {
            return Err(Error::Validation(vec![
                "delay tensor needs k_ref < K, taps >= 1 and a positive sample interval".into(),
            ]));
        }
        let pairs = self.all_pair_paths(mp)?;
        let dists = self.element_distance_table(&pairs);
        let (ctx_t, ctx_r) = (self.tx_contexts(), self.rx_contexts());
        let n_rx = self.n_rx_sa() * self.rx.num_ae();
        let n_tx = self.n_tx_sa() * self.tx.num_ae();
        let mut h = ChannelTensor::zeros(
            Axis::Delay,
            Level::Element,
            1,
            taps,
            n_rx,
            n_tx,
            self.grid,
            sample_interval,
        );
        let offset = self.phase_frequency(k_ref) - self.grid.baseband(k_ref);
        let mut truncated = 0;
        for (pair, d) in pairs.iter().zip(&dists) {
            for term in &pair.terms {
                let u = wide(term.delay / sample_interval).round();
                if u >= taps as f64 {
                    truncated += 1;
                    continue;
                }
                let u = u as usize;
                let single = PairPaths {
                    terms: vec![term.clone()],
                    ..pair.clone()
                };
                let filter = |t: &PathTerm<T>| Some(t.gain[k_ref] * cis(-T::TAU() * offset * t.delay));
                let s = h.index(0, u, 0, 0);
                let block = &mut h.data[s..s + n_rx * n_tx];
                self.add_block(block, &single, d.as_deref(), k_ref, &ctx_t[k_ref], &ctx_r[k_ref], &filter);
            }
        }
        h.truncated_paths = truncated;
        Ok(h)
    }

    /// LoS-pointing beamforming targets.
    pub fn los_targets(&self) -> Result<BeamTargets<T>> {
        let rt = self.tx.rotation_matrix();
        let rr = self.rx.rotation_matrix();
        if self.options.wave == WaveModel::Pwm {
            let (_, t) = direction_between(self.tx.center, self.rx.center, &rt)?;
            let (_, r) = direction_between(self.rx.center, self.tx.center, &rr)?;
            return Ok(BeamTargets {
                tx: vec![t; self.n_tx_sa()],
                rx: vec![r; self.n_rx_sa()],
            });
        }
        let tx = (0..self.n_tx_sa())
            .map(|q| direction_between(self.tx.sa_global(q), self.rx.center, &rt).map(|d| d.1))
            .collect::<Result<_>>()?;
        let rx = (0..self.n_rx_sa())
            .map(|q| direction_between(self.rx.sa_global(q), self.tx.center, &rr).map(|d| d.1))
            .collect::<Result<_>>()?;
        Ok(BeamTargets { tx, rx })
    }

    /// Uniform beamformer phase errors for every SA, subcarrier and element.
    pub fn sample_phase_errors<R: rand::Rng + ?Sized>(&self, delta_max: T, rng: &mut R) -> PhaseErrors<T> {
        let k = self.grid.subcarriers;
        PhaseErrors {
            tx: sample_phase_errors(delta_max, self.n_tx_sa() * k * self.tx.num_ae(), rng),
            rx: sample_phase_errors(delta_max, self.n_rx_sa() * k * self.rx.num_ae(), rng),
        }
    }

    fn error_slice<'a>(&self, errors: Option<&'a [T]>, q: usize, k: usize, n_ae: usize) -> Option<&'a [T]> {
        errors.map(|e| {
            let s = (q * self.grid.subcarriers + k) * n_ae;
            &e[s..s + n_ae]
        })
    }

    /// Effective per-SA channel `w_r^T H w_t` from a per-element tensor.
    pub fn effective_from_tensor(
        &self,
        h: &ChannelTensor<T>,
        targets: &BeamTargets<T>,
        errors: Option<&PhaseErrors<T>>,
    ) -> Result<ChannelTensor<T>> {
        let (nt, nr) = (self.tx.num_ae(), self.rx.num_ae());
        let (qt_n, qr_n) = (self.n_tx_sa(), self.n_rx_sa());
        if h.level != Level::Element || h.n_rx != qr_n * nr || h.n_tx != qt_n * nt {
            return Err(Error::Shape("element tensor does not match the link".into()));
        }
        if h.axis != Axis::Frequency || h.n_bins != self.grid.subcarriers {
            return Err(Error::Shape("effective channel needs the frequency-domain tensor".into()));
        }
        let (ctx_t, ctx_r) = (self.tx_contexts(), self.rx_contexts());
        let mut out = ChannelTensor::zeros(
            Axis::Frequency,
            Level::Subarray,
            h.n_time,
            h.n_bins,
            qr_n,
            qt_n,
            self.grid,
            h.sample_interval,
        );
        out.time_step = h.time_step;
        let n_mat = qr_n * qt_n;
        out.data.par_chunks_mut(n_mat).enumerate().for_each(|(tb, block)| {
            let (t, k) = (tb / h.n_bins, tb % h.n_bins);
            let wt: Vec<Vec<_>> = (0..qt_n)
                .map(|q| {
                    let e = self.error_slice(errors.map(|e| e.tx.as_slice()), q, k, nt);
                    beamforming_vector(&ctx_t[k], &targets.tx[q], e)
                })
                .collect();
            let wr: Vec<Vec<_>> = (0..qr_n)
                .map(|q| {
                    let e = self.error_slice(errors.map(|e| e.rx.as_slice()), q, k, nr);
                    beamforming_vector(&ctx_r[k], &targets.rx[q], e)
                })
                .collect();
            let m = h.matrix(t, k);
            for qr in 0..qr_n {
                for qt in 0..qt_n {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for i in 0..nr {
                        let row = &m[(qr * nr + i) * h.n_tx + qt * nt..(qr * nr + i) * h.n_tx + qt * nt + nt];
                        let inner: Complex<T> = row.iter().zip(&wt[qt]).map(|(x, w)| x * w).sum();
                        acc = acc + wr[qr][i] * inner;
                    }
                    block[qr * qt_n + qt] = acc;
                }
            }
        });
        Ok(out)
    }

    /// Beamformed path coefficients of every SA pair.
    ///
    /// With [`BeamTarget::PerPath`] each path is matched by its own
    /// beamformer and `targets` is ignored.
    pub fn effective_terms(
        &self,
        mp: Option<&MultipathRealization<T>>,
        targets: &BeamTargets<T>,
        errors: Option<&PhaseErrors<T>>,
    ) -> Result<Vec<PairEffective<T>>> {
        if self.options.wave == WaveModel::Swm && self.options.scenario.has_los() {
            return Err(Error::Validation(vec![
                "the direct effective channel assumes planar phases inside each SA; \
                 use wave_model pwm or sp, or the element-tensor route"
                    .into(),
            ]));
        }
        let pairs = self.all_pair_paths(mp)?;
        let (ctx_t, ctx_r) = (self.tx_contexts(), self.rx_contexts());
        let (nt, nr) = (self.tx.num_ae(), self.rx.num_ae());
        let per_path = self.options.beam_target == BeamTarget::PerPath;
        let kk = self.grid.subcarriers;
        let sqrt_q = lit::<T>((nt * nr) as f64).sqrt();
        let out = pairs
            .par_iter()
            .map(|pair| {
                let terms = pair
                    .terms
                    .iter()
                    .map(|term| {
                        let coeff = (0..kk)
                            .map(|k| {
                                let et = self.error_slice(errors.map(|e| e.tx.as_slice()), pair.qt, k, nt);
                                let er = self.error_slice(errors.map(|e| e.rx.as_slice()), pair.qr, k, nr);
                                if per_path && !self.options.beam_split && errors.is_none() {
                                    return term.gain[k].scale(sqrt_q);
                                }
                                let (tt, tr) = if per_path {
                                    (&term.aod, &term.aoa)
                                } else {
                                    (&targets.tx[pair.qt], &targets.rx[pair.qr])
                                };
                                let at = equivalent_array_response(&ctx_t[k], &term.aod, tt, et);
                                let ar = equivalent_array_response(&ctx_r[k], &term.aoa, tr, er);
                                term.gain[k] * at * ar
                            })
                            .collect();
                        EffectiveTerm {
                            delay: term.delay,
                            coeff,
                            ray: term.ray,
                        }
                    })
                    .collect();
                PairEffective {
                    qr: pair.qr,
                    qt: pair.qt,
                    distance: pair.geometry.distance,
                    terms,
                }
            })
            .collect();
        Ok(out)
    }

    /// Effective channel assembled from beamformed path coefficients.
    pub fn effective_from_terms(&self, terms: &[PairEffective<T>]) -> ChannelTensor<T> {
        let (qt_n, qr_n) = (self.n_tx_sa(), self.n_rx_sa());
        let mut out = ChannelTensor::zeros(
            Axis::Frequency,
            Level::Subarray,
            1,
            self.grid.subcarriers,
            qr_n,
            qt_n,
            self.grid,
            T::one() / self.grid.bandwidth,
        );
        for k in 0..self.grid.subcarriers {
            let nu = self.phase_frequency(k);
            for pair in terms {
                let v: Complex<T> = pair
                    .terms
                    .iter()
                    .map(|t| t.coeff[k] * cis(-T::TAU() * nu * t.delay))
                    .sum();
                let i = out.index(0, k, pair.qr, pair.qt);
                out.data[i] = v;
            }
        }
        out
    }

    /// Effective per-SA channel via equivalent array responses.
    pub fn effective_direct(
        &self,
        mp: Option<&MultipathRealization<T>>,
        targets: &BeamTargets<T>,
        errors: Option<&PhaseErrors<T>>,
    ) -> Result<ChannelTensor<T>> {
        Ok(self.effective_from_terms(&self.effective_terms(mp, targets, errors)?))
    }

    /// Effective channel by whichever route the options allow.
    pub fn effective_channel(
        &self,
        mp: Option<&MultipathRealization<T>>,
        errors: Option<&PhaseErrors<T>>,
    ) -> Result<ChannelTensor<T>> {
        let targets = self.los_targets()?;
        if self.options.wave == WaveModel::Swm && self.options.scenario.has_los() {
            if self.options.beam_target == BeamTarget::PerPath {
                return Err(Error::Validation(vec![
                    "beam_target per_path is not available with wave_model swm".into(),
                ]));
            }
            let h = self.channel_tiv_freq(mp)?;
            return self.effective_from_tensor(&h, &targets, errors);
        }
        self.effective_direct(mp, &targets, errors)
    }

    /// Power-delay profile `(delay, power)` of the beamformed paths, summed
    /// over SA pairs at the center subcarrier.
    pub fn power_delay_profile(&self, terms: &[PairEffective<T>]) -> Vec<(T, T)> {
        let k = self.grid.center_index();
        terms
            .iter()
            .flat_map(|p| p.terms.iter().map(move |t| (t.delay, t.coeff[k].norm_sqr())))
            .collect()
    }
}
