//! Channel statistics: delay spread, coherence bandwidth, model error and
//! capacity.

use num_complex::Complex;

use crate::channel::{ChannelTensor, Level, Link};
use crate::error::{Error, Result};
use crate::multipath::SvParameters;
use crate::num::{lit, Real};

/// Power-weighted mean delay of a `(delay, power)` profile.
pub fn mean_excess_delay<T: Real>(pdp: &[(T, T)]) -> Result<T> {
    let p: T = pdp.iter().map(|x| x.1).sum();
    if !(p > T::zero()) {
        return Err(Error::UndefinedStat("power-delay profile has no power".into()));
    }
    Ok(pdp.iter().map(|&(t, w)| t * w).sum::<T>() / p)
}

/// RMS delay spread of a `(delay, power)` profile.
pub fn rms_delay_spread<T: Real>(pdp: &[(T, T)]) -> Result<T> {
    let m = mean_excess_delay(pdp)?;
    let p: T = pdp.iter().map(|x| x.1).sum();
    let v = pdp.iter().map(|&(t, w)| (t - m) * (t - m) * w).sum::<T>() / p;
    Ok(v.max(T::zero()).sqrt())
}

/// 50%-correlation coherence bandwidth `1 / (5 sigma_tau)`.
pub fn coherence_bandwidth<T: Real>(rms_delay_spread: T) -> Result<T> {
    if !(rms_delay_spread > T::zero()) {
        return Err(Error::UndefinedStat("coherence bandwidth needs a positive delay spread".into()));
    }
    Ok(T::one() / (lit::<T>(5.0) * rms_delay_spread))
}

/// Normalized error `||reference - other||_F / ||reference||_F`.
pub fn channel_error<T: Real>(reference: &[Complex<T>], other: &[Complex<T>]) -> Result<T> {
    if reference.len() != other.len() {
        return Err(Error::Shape(format!(
            "channel error between {} and {} entries",
            reference.len(),
            other.len()
        )));
    }
    let den: T = reference.iter().map(|v| v.norm_sqr()).sum();
    if !(den > T::zero()) {
        return Err(Error::UndefinedStat("reference channel is zero".into()));
    }
    let num: T = reference.iter().zip(other).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((num / den).sqrt())
}

/// Matched-filter rate `mean_k B log2(1 + snr ||h[k]||^2)` in bit/s.
///
/// `snr` is transmit power over noise power. With a single Rx SA this is the
/// MISO capacity; with more it is the rate of maximum-ratio transmission
/// toward the stacked Rx SAs.
pub fn capacity<T: Real>(h: &ChannelTensor<T>, snr: T) -> Result<T> {
    if h.level != Level::Subarray {
        return Err(Error::Shape("capacity needs the per-SA effective channel".into()));
    }
    let mut acc = T::zero();
    for t in 0..h.n_time {
        for k in 0..h.n_bins {
            let g: T = h.matrix(t, k).iter().map(|v| v.norm_sqr()).sum();
            acc = acc + (T::one() + snr * g).log2();
        }
    }
    Ok(h.grid.bandwidth * acc / lit((h.n_time * h.n_bins) as f64))
}

/// Jensen bound on the ergodic rate of [`capacity`].
///
/// Uses `E ||h[k]||^2`, which sums the LoS power of every SA pair and the
/// expected NLoS power `sum |alpha_l|^2 / |alpha_LoS|^2` of the cluster model,
/// all at full array gain and the antennas' peak gain.
pub fn capacity_upper_bound<T: Real>(link: &Link<T>, sv: &SvParameters<T>, snr: T) -> Result<T> {
    let q_ae: T = lit((link.tx.num_ae() * link.rx.num_ae()) as f64);
    let ant = link.options.tx_antenna.peak_power_gain() * link.options.rx_antenna.peak_power_gain();
    let mut rel = T::zero();
    if link.options.scenario.has_los() {
        rel = rel + T::one();
    }
    if link.options.scenario.has_nlos() {
        rel = rel + sv.expected_relative_power();
    }
    let kk = link.grid.subcarriers;
    let mut acc = T::zero();
    for k in 0..kk {
        let mut g = T::zero();
        for qr in 0..link.n_rx_sa() {
            for qt in 0..link.n_tx_sa() {
                let a = link.alpha(k, link.pair_geometry(qt, qr)?.distance);
                g = g + a * a;
            }
        }
        acc = acc + (T::one() + snr * g * q_ae * ant * rel).log2();
    }
    Ok(link.grid.bandwidth * acc / lit(kk as f64))
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic<T: Real>(samples: &[T], cdf: impl Fn(T) -> T) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::UndefinedStat("KS statistic of an empty sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n: T = lit(xs.len() as f64);
    let mut d = T::zero();
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = lit::<T>(i as f64) / n;
        let hi = lit::<T>(i as f64 + 1.0) / n;
        d = d.max(f - lo).max(hi - f);
    }
    Ok(d)
}

/// Asymptotic KS p-value with the Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}
