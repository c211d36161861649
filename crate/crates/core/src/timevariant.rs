//! Doppler spectra, correlated fading and the time-variant channel.
//!
//! Each NLoS ray is modulated by its own unit-power fading process. The LoS
//! leg does not fade; it follows `d(t) = d0 + v t` along the connecting line
//! (positive `v` means the ends move apart), which changes its amplitude and
//! rotates its phase by `exp(-j 2 pi f_k v t / c)`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::channel::{Axis, ChannelTensor, Level, Link, PhaseErrors};
use crate::error::{Error, Result};
use crate::multipath::MultipathRealization;
use crate::num::{bessel_j0, c0, lit, sinc, wide, Real};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerSpectrum {
    /// Classical U-shaped spectrum, ACF `J0(2 pi f_d dt)`.
    Jakes,
    /// Rectangular spectrum on `[-f_d, f_d]`, ACF `sinc(2 f_d dt)`.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerModel<T> {
    pub spectrum: DopplerSpectrum,
    /// Relative speed, m/s.
    pub velocity: T,
    pub carrier: T,
}

impl<T: Real> DopplerModel<T> {
    pub fn max_doppler(&self) -> T {
        doppler_params(self.velocity, self.carrier).0
    }

    pub fn coherence_time(&self) -> T {
        doppler_params(self.velocity, self.carrier).1
    }

    pub fn acf(&self, dt: T) -> T {
        acf(self.spectrum, self.max_doppler(), dt)
    }
}

/// Maximum Doppler shift `v f_c / c0` and coherence time
/// `sqrt(9 / (16 pi)) / f_d` (infinite when static).
pub fn doppler_params<T: Real>(velocity: T, carrier: T) -> (T, T) {
    let fd = velocity.abs() * carrier / c0::<T>();
    let tcoh = if fd > T::zero() {
        (lit::<T>(9.0) / (lit::<T>(16.0) * T::PI())).sqrt() / fd
    } else {
        T::infinity()
    };
    (fd, tcoh)
}

pub fn acf<T: Real>(spectrum: DopplerSpectrum, fd: T, dt: T) -> T {
    match spectrum {
        DopplerSpectrum::Jakes => bessel_j0(T::TAU() * fd * dt),
        DopplerSpectrum::Flat => sinc(lit::<T>(2.0) * fd * dt),
    }
}

/// Doppler power spectral density in 1/Hz.
///
/// The Jakes density is singular at `|nu| = f_d`; it is only evaluated
/// strictly inside the band and is zero outside.
pub fn psd<T: Real>(spectrum: DopplerSpectrum, fd: T, nu: T) -> Result<T> {
    if !(fd > T::zero()) {
        return Err(Error::OutOfRange {
            what: "max Doppler for psd",
            value: wide(fd),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let x = nu.abs() / fd;
    Ok(match spectrum {
        DopplerSpectrum::Jakes => {
            if x == T::one() {
                return Err(Error::OutOfRange {
                    what: "Jakes psd at the band edge",
                    value: wide(nu),
                    lo: -wide(fd),
                    hi: wide(fd),
                });
            }
            if x > T::one() {
                T::zero()
            } else {
                T::one() / (T::PI() * fd * (T::one() - x * x).sqrt())
            }
        }
        DopplerSpectrum::Flat => {
            if x > T::one() {
                T::zero()
            } else {
                T::one() / (lit::<T>(2.0) * fd)
            }
        }
    })
}

/// `int_{-inf}^{nu} S`, the spectral CDF (finite at the Jakes band edges).
pub fn psd_cdf(spectrum: DopplerSpectrum, fd: f64, nu: f64) -> f64 {
    let x = (nu / fd).clamp(-1.0, 1.0);
    match spectrum {
        DopplerSpectrum::Jakes => 0.5 + x.asin() / std::f64::consts::PI,
        DopplerSpectrum::Flat => 0.5 * (x + 1.0),
    }
}

const MAX_FFT: usize = 1 << 22;

/// Spectral mass of DFT bin `j` of `n` at spacing `dt`, aliases folded in.
pub fn bin_mass(spectrum: DopplerSpectrum, fd: f64, dt: f64, n: usize, j: usize) -> f64 {
    let df = 1.0 / (n as f64 * dt);
    let s = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
    [-1.0, 0.0, 1.0]
        .iter()
        .map(|m| {
            let nu = s * df + m / dt;
            psd_cdf(spectrum, fd, nu + 0.5 * df) - psd_cdf(spectrum, fd, nu - 0.5 * df)
        })
        .sum::<f64>()
        .max(0.0)
}

/// Unit-power complex Gaussian process sampled every `dt`, by spectral
/// shaping: bin `j` carries `CN(0, w_j^2)` where `w_j^2` is the spectral
/// mass of that bin, followed by an inverse DFT.
pub fn generate_fading<T: Real, R: Rng + ?Sized>(
    spectrum: DopplerSpectrum,
    fd: T,
    dt: T,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    let (fd, dt) = (wide(fd), wide(dt));
    if !(dt > 0.0) || n == 0 {
        return Err(Error::Validation(vec!["fading needs dt > 0 and at least one sample".into()]));
    }
    if fd == 0.0 {
        return Ok(vec![Complex::new(T::one(), T::zero()); n]);
    }
    let nyquist = 0.5 / dt;
    if !(fd > 0.0 && fd < nyquist) {
        return Err(Error::OutOfRange {
            what: "max Doppler (Hz) against 1/(2 dt)",
            value: fd,
            lo: 0.0,
            hi: nyquist,
        });
    }
    // Resolve the Doppler band with enough bins that the discrete spectrum's
    // ACF tracks the continuous one; the periodic output is then truncated.
    let nfft = n.max((1024.0 / (fd * dt)).ceil().min(MAX_FFT as f64) as usize).next_power_of_two();
    let mut bins: Vec<Complex<f64>> = (0..nfft)
        .map(|j| {
            let mass = bin_mass(spectrum, fd, dt, nfft, j);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re, im) * (0.5 * mass).sqrt()
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_inverse(nfft).process(&mut bins);
    Ok(bins.into_iter().take(n).map(|v| Complex::new(lit(v.re), lit(v.im))).collect())
}

/// Normalized empirical ACF `E[g(t+lag) g*(t)] / E[|g|^2]`, pooled over
/// processes of equal length.
pub fn empirical_acf<T: Real>(processes: &[Vec<Complex<T>>], lag: usize) -> Result<Complex<T>> {
    let mut num = Complex::new(0.0, 0.0);
    let mut pow = 0.0;
    let mut count = 0usize;
    for g in processes {
        if lag >= g.len() {
            continue;
        }
        for i in 0..g.len() - lag {
            let a = Complex::new(wide(g[i + lag].re), wide(g[i + lag].im));
            let b = Complex::new(wide(g[i].re), wide(g[i].im));
            num += a * b.conj();
            count += 1;
        }
        pow += g.iter().map(|v| wide(v.norm_sqr())).sum::<f64>() / g.len() as f64;
    }
    if count == 0 || pow <= 0.0 {
        return Err(Error::UndefinedStat(format!("no sample pairs at lag {lag}")));
    }
    let num = num / count as f64;
    let pow = pow / processes.len() as f64;
    Ok(Complex::new(lit(num.re / pow), lit(num.im / pow)))
}

/// Time sampling of a time-variant run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvSampling<T> {
    pub time_samples: usize,
    pub time_step: T,
    /// Delay-tap spacing.
    pub sample_interval: T,
    pub taps: usize,
    /// Subcarrier whose gains and steering the delay tensor uses.
    pub k_ref: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvChannel<T> {
    /// `[t][k][rx SA][tx SA]`.
    pub freq: ChannelTensor<T>,
    /// `[t][u][rx SA][tx SA]`.
    pub delay: ChannelTensor<T>,
    /// Fading process of each ray.
    pub fading: Vec<Vec<Complex<T>>>,
}

/// Per-ray fading for one realization, from disjoint streams.
pub fn ray_fading<T: Real>(
    doppler: &DopplerModel<T>,
    sampling: &TvSampling<T>,
    n_rays: usize,
    seed: u64,
    realization: u64,
) -> Result<Vec<Vec<Complex<T>>>> {
    (0..n_rays)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, Purpose::Fading, realization, r as u64);
            generate_fading(
                doppler.spectrum,
                doppler.max_doppler(),
                sampling.time_step,
                sampling.time_samples,
                &mut rng,
            )
        })
        .collect()
}

/// Time-variant effective channel in the time-frequency and time-delay
/// forms.
pub fn channel_tv<T: Real>(
    link: &Link<T>,
    mp: Option<&MultipathRealization<T>>,
    errors: Option<&PhaseErrors<T>>,
    doppler: &DopplerModel<T>,
    sampling: &TvSampling<T>,
    seed: u64,
    realization: u64,
) -> Result<TvChannel<T>> {
    let mut v = Vec::new();
    if sampling.time_samples == 0 {
        v.push("run.time_samples must be >= 1".into());
    }
    if sampling.taps == 0 {
        v.push("run.taps must be >= 1".into());
    }
    if !(sampling.time_step > T::zero()) {
        v.push("run.time_step must be > 0".into());
    }
    if !(sampling.sample_interval > T::zero()) {
        v.push("run.sample_interval must be > 0".into());
    }
    if sampling.k_ref >= link.grid.subcarriers {
        v.push("delay reference subcarrier out of range".into());
    }
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let targets = link.los_targets()?;
    let terms = link.effective_terms(mp, &targets, errors)?;
    let n_rays = mp.map_or(0, |m| m.num_rays());
    let fading = if link.options.scenario.has_nlos() {
        ray_fading(doppler, sampling, n_rays, seed, realization)?
    } else {
        Vec::new()
    };

    let (nt, kk) = (sampling.time_samples, link.grid.subcarriers);
    let (qr_n, qt_n) = (link.n_rx_sa(), link.n_tx_sa());
    let c = c0::<T>();
    let t_at = |i: usize| sampling.time_step * lit(i as f64);
    // LoS factor at (pair distance, k, t).
    let los_factor = |d: T, k: usize, i: usize| {
        let dt = d + doppler.velocity * t_at(i);
        let fk = link.grid.subcarrier(k);
        let (s, co) = (-T::TAU() * fk * doppler.velocity * t_at(i) / c).sin_cos();
        Complex::new(co, s).scale(link.alpha(k, dt) / link.alpha(k, d))
    };
    let factor = |pair_d: T, ray: Option<usize>, k: usize, i: usize| match ray {
        None => los_factor(pair_d, k, i),
        Some(r) => fading[r][i],
    };
    let cis = |x: T| {
        let (s, co) = x.sin_cos();
        Complex::new(co, s)
    };

    let mut freq = ChannelTensor::zeros(
        Axis::Frequency,
        Level::Subarray,
        nt,
        kk,
        qr_n,
        qt_n,
        link.grid,
        sampling.sample_interval,
    );
    freq.time_step = sampling.time_step;
    freq.data.par_chunks_mut(kk * qr_n * qt_n).enumerate().for_each(|(i, slab)| {
        for k in 0..kk {
            let nu = link.phase_frequency(k);
            for pair in &terms {
                let v: Complex<T> = pair
                    .terms
                    .iter()
                    .map(|t| t.coeff[k] * factor(pair.distance, t.ray, k, i) * cis(-T::TAU() * nu * t.delay))
                    .sum();
                slab[(k * qr_n + pair.qr) * qt_n + pair.qt] = v;
            }
        }
    });

    let mut delay = ChannelTensor::zeros(
        Axis::Delay,
        Level::Subarray,
        nt,
        sampling.taps,
        qr_n,
        qt_n,
        link.grid,
        sampling.sample_interval,
    );
    delay.time_step = sampling.time_step;
    let kr = sampling.k_ref;
    let offset = link.phase_frequency(kr) - link.grid.baseband(kr);
    let mut truncated = 0;
    for pair in &terms {
        for t in &pair.terms {
            let u = wide(t.delay / sampling.sample_interval).round();
            if u >= sampling.taps as f64 {
                truncated += 1;
                continue;
            }
            let base = t.coeff[kr] * cis(-T::TAU() * offset * t.delay);
            for i in 0..nt {
                let idx = delay.index(i, u as usize, pair.qr, pair.qt);
                delay.data[idx] = delay.data[idx] + base * factor(pair.distance, t.ray, kr, i);
            }
        }
    }
    delay.truncated_paths = truncated;
    Ok(TvChannel { freq, delay, fading })
}
