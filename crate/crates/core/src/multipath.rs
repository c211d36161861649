//! Clustered (Saleh-Valenzuela) multipath generation.
//!
//! A realization holds excess delays, relative amplitudes, phases and local
//! departure/arrival angles of every ray. It is anchored to a link only at
//! channel assembly, where each SA pair adds its own LoS delay and scales the
//! relative amplitudes by its LoS gain.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::num::{lit, wide, Real};

/// Statistics of the cluster/ray process (SI units, radians).
#[derive(Debug, Clone, PartialEq)]
pub struct SvParameters<T> {
    /// Cluster arrival rate, 1/s.
    pub cluster_rate: T,
    /// Ray arrival rate, 1/s.
    pub ray_rate: T,
    /// Cluster power decay constant, s.
    pub cluster_decay: T,
    /// Ray power decay constant, s.
    pub ray_decay: T,
    /// Generation horizon for both cluster and intra-cluster arrivals, s.
    pub horizon: T,
    pub gmm_weights: [T; 2],
    /// Component standard deviations of the ray angle offsets, radians.
    pub gmm_sigma: [T; 2],
    /// Ray offsets are redrawn until they fall within this half-width.
    pub truncation: T,
    /// Draw ray magnitudes from a Rayleigh law with the same second moment.
    pub rayleigh: bool,
}

impl<T: Real> Default for SvParameters<T> {
    fn default() -> Self {
        SvParameters {
            cluster_rate: lit(0.13e9),
            ray_rate: lit(0.37e9),
            cluster_decay: lit(3.12e-9),
            ray_decay: lit(0.91e-9),
            horizon: lit(50e-9),
            gmm_weights: [lit(0.6), lit(0.4)],
            gmm_sigma: [lit(2f64.to_radians()), lit(6f64.to_radians())],
            truncation: lit(std::f64::consts::FRAC_PI_8),
            rayleigh: false,
        }
    }
}

impl<T: Real> SvParameters<T> {
    pub fn collect_violations(&self, out: &mut Vec<String>) {
        for (name, v) in [
            ("cluster_rate", self.cluster_rate),
            ("ray_rate", self.ray_rate),
            ("cluster_decay", self.cluster_decay),
            ("ray_decay", self.ray_decay),
            ("horizon", self.horizon),
            ("truncation", self.truncation),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                out.push(format!("multipath.{name} must be > 0"));
            }
        }
        let [w1, w2] = self.gmm_weights;
        if !(w1 >= T::zero() && w2 >= T::zero() && (w1 + w2 - T::one()).abs() < lit(1e-6)) {
            out.push("multipath.gmm_weights must be nonnegative and sum to 1".into());
        }
        if !(self.gmm_sigma[0] >= T::zero() && self.gmm_sigma[1] >= T::zero()) {
            out.push("multipath.gmm_sigma must be >= 0".into());
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        self.collect_violations(&mut v);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Variance of an untruncated ray offset, `w1 s1^2 + w2 s2^2`.
    pub fn offset_variance(&self) -> T {
        self.gmm_weights[0] * self.gmm_sigma[0].powi(2) + self.gmm_weights[1] * self.gmm_sigma[1].powi(2)
    }

    /// Expected `sum |alpha|^2 / |alpha_LoS|^2` over one realization.
    pub fn expected_relative_power(&self) -> T {
        let h = self.horizon;
        self.cluster_rate * self.cluster_decay * (T::one() - (-h / self.cluster_decay).exp())
            * self.ray_rate
            * self.ray_decay
            * (T::one() - (-h / self.ray_decay).exp())
    }
}

/// Poisson arrival times on `[0, horizon)`; the first gap starts at 0.
pub fn sample_arrivals<T: Real, R: Rng + ?Sized>(rate: T, horizon: T, rng: &mut R) -> Vec<T> {
    let exp = Exp::new(wide(rate)).expect("positive rate");
    let h = wide(horizon);
    let mut out = Vec::new();
    let mut t = exp.sample(rng);
    while t < h {
        out.push(lit(t));
        t += exp.sample(rng);
    }
    out
}

/// RMS amplitude relative to the LoS amplitude after the double decay.
pub fn relative_rms_amplitude<T: Real>(cluster_arrival: T, ray_arrival: T, sv: &SvParameters<T>) -> T {
    (-(cluster_arrival / sv.cluster_decay) - ray_arrival / sv.ray_decay)
        .exp()
        .sqrt()
}

/// Complex ray gain with uniform phase; magnitude at its RMS value unless
/// Rayleigh fading is enabled.
pub fn ray_gain<T: Real, R: Rng + ?Sized>(
    alpha_los: T,
    cluster_arrival: T,
    ray_arrival: T,
    sv: &SvParameters<T>,
    rng: &mut R,
) -> Complex<T> {
    let (mag, phase) = draw_ray_magnitude_phase(sv, rng);
    Complex::from_polar(alpha_los * relative_rms_amplitude(cluster_arrival, ray_arrival, sv) * mag, phase)
}

fn draw_ray_magnitude_phase<T: Real, R: Rng + ?Sized>(sv: &SvParameters<T>, rng: &mut R) -> (T, T) {
    let phase: T = lit(std::f64::consts::TAU * rng.random::<f64>());
    let mag = if sv.rayleigh {
        // |alpha|^2 exponential with unit mean.
        let u: f64 = rng.random();
        lit((-(1.0 - u).ln()).sqrt())
    } else {
        T::one()
    };
    (mag, phase)
}

/// One draw from the two-component Gaussian mixture, optionally truncated.
pub fn sample_gmm_offset<T: Real, R: Rng + ?Sized>(sv: &SvParameters<T>, truncate: bool, rng: &mut R) -> T {
    let w1 = wide(sv.gmm_weights[0]);
    let trunc = wide(sv.truncation);
    loop {
        let sigma = if rng.random::<f64>() < w1 {
            wide(sv.gmm_sigma[0])
        } else {
            wide(sv.gmm_sigma[1])
        };
        let x = if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
        } else {
            0.0
        };
        if !truncate || x.abs() <= trunc {
            return lit(x);
        }
    }
}

/// Wraps an azimuth into `(-pi, pi]`.
pub fn wrap_azimuth<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let mut w = a - tau * ((a + T::PI()) / tau).floor();
    if w <= -T::PI() {
        w = w + tau;
    }
    w
}

fn uniform_azimuth<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    lit(std::f64::consts::PI - std::f64::consts::TAU * rng.random::<f64>())
}

fn uniform_elevation<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    // U[-pi/2, pi/2] shifted by pi/2 is U[0, pi].
    lit(std::f64::consts::PI * rng.random::<f64>())
}

/// Cluster-level mean angles at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterAngles<T> {
    pub aod: (T, T),
    pub aoa: (T, T),
}

pub fn sample_cluster_angles<T: Real, R: Rng + ?Sized>(rng: &mut R) -> ClusterAngles<T> {
    ClusterAngles {
        aod: (uniform_azimuth(rng), uniform_elevation(rng)),
        aoa: (uniform_azimuth(rng), uniform_elevation(rng)),
    }
}

/// Ray angle pair (azimuth, elevation) around a cluster mean.
pub fn sample_ray_angles<T: Real, R: Rng + ?Sized>(
    cluster: (T, T),
    sv: &SvParameters<T>,
    rng: &mut R,
) -> Direction<T> {
    let az = wrap_azimuth(cluster.0 + sample_gmm_offset(sv, true, rng));
    let el = (cluster.1 + sample_gmm_offset(sv, true, rng)).max(T::zero()).min(T::PI());
    Direction::from_angles(az, el)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    /// Arrival after the LoS delay, s.
    pub arrival: T,
    pub angles: ClusterAngles<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ray<T> {
    pub cluster: usize,
    /// Arrival within its cluster, s.
    pub intra_delay: T,
    /// `T_c + t`, delay relative to the LoS path, s.
    pub excess_delay: T,
    /// `|alpha| / |alpha_LoS|`.
    pub amplitude: T,
    /// Phase in `[0, 2 pi)`.
    pub phase: T,
    /// Departure direction in the Tx local frame.
    pub aod: Direction<T>,
    /// Arrival direction in the Rx local frame.
    pub aoa: Direction<T>,
}

/// One stochastic multipath draw.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultipathRealization<T> {
    pub clusters: Vec<Cluster<T>>,
    pub rays: Vec<Ray<T>>,
}

impl<T: Real> MultipathRealization<T> {
    /// Clusters in arrival order; each cluster draws its angles and then its rays.
    pub fn generate<R: Rng + ?Sized>(sv: &SvParameters<T>, rng: &mut R) -> Self {
        let mut out = MultipathRealization::default();
        for tc in sample_arrivals(sv.cluster_rate, sv.horizon, rng) {
            let angles = sample_cluster_angles(rng);
            let c = out.clusters.len();
            for t in sample_arrivals(sv.ray_rate, sv.horizon, rng) {
                let (mag, phase) = draw_ray_magnitude_phase(sv, rng);
                let aod = sample_ray_angles(angles.aod, sv, rng);
                let aoa = sample_ray_angles(angles.aoa, sv, rng);
                out.rays.push(Ray {
                    cluster: c,
                    intra_delay: t,
                    excess_delay: tc + t,
                    amplitude: relative_rms_amplitude(tc, t, sv) * mag,
                    phase,
                    aod,
                    aoa,
                });
            }
            out.clusters.push(Cluster { arrival: tc, angles });
        }
        out
    }

    pub fn num_rays(&self) -> usize {
        self.rays.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn test_arrivals_increasing_and_poisson_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let mut total = 0usize;
        for _ in 0..n {
            let a = sample_arrivals(0.13e9_f64, 50e-9, &mut rng);
            assert!(a.windows(2).all(|w| w[0] < w[1]));
            assert!(a.iter().all(|&t| t < 50e-9 && t > 0.0));
            total += a.len();
        }
        let mean = total as f64 / n as f64;
        let sigma = (6.5 / n as f64).sqrt();
        assert!((mean - 6.5).abs() < 3.0 * sigma, "mean {mean}");
        // Ten times the rate gives ten times the count.
        let ten: usize = (0..1000).map(|_| sample_arrivals(1.3e9_f64, 50e-9, &mut rng).len()).sum();
        assert_relative_eq!(ten as f64 / 1000.0, 65.0, max_relative = 0.03);
    }

    #[test]
    fn test_ray_gain_moments() {
        let sv = SvParameters::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = ray_gain(0.5, 0.0, 0.0, &sv, &mut rng);
        assert_relative_eq!(g.norm(), 0.5, max_relative = 1e-12);
        let g = ray_gain(1.0, sv.cluster_decay, 0.0, &sv, &mut rng);
        assert_relative_eq!(g.norm_sqr(), (-1.0f64).exp(), max_relative = 1e-12);
        let n = 100_000;
        let s: Complex<f64> = (0..n).map(|_| ray_gain(1.0, 0.0, 0.0, &sv, &mut rng)).sum();
        assert!(s.norm() / (n as f64) < 4.0 / (n as f64).sqrt());
        let mut ray = sv.clone();
        ray.rayleigh = true;
        let p: f64 = (0..n).map(|_| ray_gain(1.0, 0.0, 0.0, &ray, &mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn test_gmm_variance() {
        let sv = SvParameters::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let x: Vec<f64> = (0..n).map(|_| sample_gmm_offset(&sv, false, &mut rng)).collect();
        let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let target = sv.offset_variance();
        // Var of x^2 for a zero-mean mixture: E x^4 - (E x^2)^2.
        let m4 = 3.0 * (0.6 * sv.gmm_sigma[0].powi(4) + 0.4 * sv.gmm_sigma[1].powi(4));
        let se = ((m4 - target * target) / n as f64).sqrt();
        assert!((var - target).abs() < 3.0 * se, "var {var} vs {target}");
    }

    #[test]
    fn test_degenerate_gmm_gives_cluster_angles() {
        let sv = SvParameters::<f64> {
            gmm_sigma: [0.0, 0.0],
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mp = MultipathRealization::generate(&sv, &mut rng);
        assert!(!mp.rays.is_empty());
        for r in &mp.rays {
            let c = &mp.clusters[r.cluster].angles;
            assert_relative_eq!(r.aod.azimuth, c.aod.0, epsilon = 1e-12);
            assert_relative_eq!(r.aoa.elevation, c.aoa.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn test_generation_deterministic() {
        let sv = SvParameters::<f64>::default();
        let a = MultipathRealization::generate(&sv, &mut ChaCha8Rng::seed_from_u64(9));
        let b = MultipathRealization::generate(&sv, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn test_f32_realization_matches_f64_events() {
        let a = MultipathRealization::generate(&SvParameters::<f64>::default(), &mut ChaCha8Rng::seed_from_u64(11));
        let b = MultipathRealization::generate(&SvParameters::<f32>::default(), &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a.rays.len(), b.rays.len());
        for (x, y) in a.rays.iter().zip(&b.rays) {
            assert!((x.excess_delay - y.excess_delay as f64).abs() < 1e-6 * x.excess_delay);
        }
    }

    proptest! {
        #[test]
        fn prop_ray_angles_in_domain(seed in any::<u64>()) {
            let sv = SvParameters::<f64>::default();
            let mp = MultipathRealization::generate(&sv, &mut ChaCha8Rng::seed_from_u64(seed));
            for r in &mp.rays {
                for d in [r.aod, r.aoa] {
                    prop_assert!(d.elevation >= 0.0 && d.elevation <= std::f64::consts::PI);
                    prop_assert!(d.azimuth > -std::f64::consts::PI - 1e-12 && d.azimuth <= std::f64::consts::PI);
                }
                prop_assert!(r.phase >= 0.0 && r.phase < std::f64::consts::TAU);
                prop_assert!(r.amplitude >= 0.0);
            }
        }

        #[test]
        fn prop_wrap_azimuth(a in -20.0f64..20.0) {
            let w = wrap_azimuth(a);
            prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI + 1e-12);
            prop_assert!(((w - a) / std::f64::consts::TAU).round() * std::f64::consts::TAU - (w - a) < 1e-9);
        }
    }
}
