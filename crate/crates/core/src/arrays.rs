//! Steering and beamforming vectors, equivalent array responses, beam split
//! and antenna patterns.
//!
//! Steering vectors are unit-norm (`1/sqrt(Qbar)` per entry). Beamforming
//! vectors are left unnormalized, so a perfectly aligned SA contributes an
//! amplitude gain of `sqrt(Qbar)` and the aligned link `sqrt(Qbar_t Qbar_r)`.

use num_complex::Complex;
use rand::Rng;

use crate::geometry::{Direction, Vec3};
use crate::num::{lit, Real};

/// Per-subcarrier context for one subarray's phase structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringContext<T> {
    /// AE offsets from the SA center, local frame, meters.
    pub offsets: Vec<Vec3<T>>,
    /// Subcarrier wavelength.
    pub lambda_k: T,
    /// Center wavelength.
    pub lambda_c: T,
    /// Beamformers use `lambda_c` instead of `lambda_k` when set.
    pub beam_split: bool,
}

impl<T: Real> SteeringContext<T> {
    pub fn num_ae(&self) -> usize {
        self.offsets.len()
    }

    /// Wavelength the phase shifters are tuned to.
    pub fn beamformer_lambda(&self) -> T {
        if self.beam_split {
            self.lambda_c
        } else {
            self.lambda_k
        }
    }
}

/// Mutual-coupling premultiplication applied to steering vectors.
pub trait MutualCoupling<T>: Send + Sync {
    fn apply(&self, v: &mut [Complex<T>]);
}

/// No coupling.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCoupling;

impl<T> MutualCoupling<T> for IdentityCoupling {
    fn apply(&self, _v: &mut [Complex<T>]) {}
}

/// Path-length difference `pdot^T t` of one element.
#[inline]
pub fn ae_phase<T: Real>(offset: &Vec3<T>, dir: &Direction<T>) -> T {
    offset.dot(&dir.t)
}

#[inline]
fn cis<T: Real>(phase: T) -> Complex<T> {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

pub fn steering_vector<T: Real>(ctx: &SteeringContext<T>, dir: &Direction<T>) -> Vec<Complex<T>> {
    steering_vector_coupled(ctx, dir, &IdentityCoupling)
}

pub fn steering_vector_coupled<T: Real>(
    ctx: &SteeringContext<T>,
    dir: &Direction<T>,
    coupling: &dyn MutualCoupling<T>,
) -> Vec<Complex<T>> {
    let k = T::TAU() / ctx.lambda_k;
    let norm = T::one() / lit::<T>(ctx.num_ae() as f64).sqrt();
    let mut v: Vec<_> = ctx
        .offsets
        .iter()
        .map(|p| cis(k * ae_phase(p, dir)).scale(norm))
        .collect();
    coupling.apply(&mut v);
    v
}

/// Unnormalized analog beamformer toward `target`, with optional per-AE
/// phase errors in radians.
pub fn beamforming_vector<T: Real>(
    ctx: &SteeringContext<T>,
    target: &Direction<T>,
    errors: Option<&[T]>,
) -> Vec<Complex<T>> {
    let k = T::TAU() / ctx.beamformer_lambda();
    ctx.offsets
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let err = errors.map_or(T::zero(), |e| e[i]);
            cis(-(k * ae_phase(p, target) + err))
        })
        .collect()
}

/// `a(dir)^T w(target)` by direct summation.
pub fn equivalent_array_response<T: Real>(
    ctx: &SteeringContext<T>,
    dir: &Direction<T>,
    target: &Direction<T>,
    errors: Option<&[T]>,
) -> Complex<T> {
    let ks = T::TAU() / ctx.lambda_k;
    let kb = T::TAU() / ctx.beamformer_lambda();
    let mut acc = Complex::new(T::zero(), T::zero());
    for (i, p) in ctx.offsets.iter().enumerate() {
        let err = errors.map_or(T::zero(), |e| e[i]);
        acc = acc + cis(ks * ae_phase(p, dir) - kb * ae_phase(p, target) - err);
    }
    acc.scale(T::one() / lit::<T>(ctx.num_ae() as f64).sqrt())
}

/// `sin(n x) / sin(x)`, with its limit where `sin x` vanishes.
pub fn dirichlet<T: Real>(n: usize, x: T) -> T {
    let nn: T = lit(n as f64);
    let s = x.sin();
    if s.abs() < lit(1e-12) {
        nn * (nn * x).cos() / x.cos()
    } else {
        (nn * x).sin() / s
    }
}

/// Closed-form response of a centered `rows x cols` UPA in the Y-Z plane.
///
/// `lambda_bf` is the beamformer wavelength (`lambda_k` without beam split,
/// `lambda_c` with it). The result is real for a centered array.
pub fn upa_array_response<T: Real>(
    rows: usize,
    cols: usize,
    spacing: [T; 2],
    lambda_k: T,
    lambda_bf: T,
    dir: &Direction<T>,
    target: &Direction<T>,
) -> T {
    let pi = T::PI();
    let om_m = pi * spacing[0] * (dir.t.z() / lambda_k - target.t.z() / lambda_bf);
    let om_n = pi * spacing[1] * (dir.t.y() / lambda_k - target.t.y() / lambda_bf);
    dirichlet(rows, om_m) * dirichlet(cols, om_n) / lit::<T>((rows * cols) as f64).sqrt()
}

/// Spatial direction seen at `f_k` when the array is steered at `f_c`.
pub fn beam_split_direction<T: Real>(psi_at_fc: T, f_k: T, f_c: T) -> T {
    f_k / f_c * psi_at_fc
}

/// Ideal sector antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGain<T> {
    /// Amplitude gain inside the sector, `sqrt(G0)`.
    pub amplitude: T,
    pub hpbw_azimuth: T,
    pub hpbw_elevation: T,
    pub azimuth_bounds: (T, T),
    pub elevation_bounds: (T, T),
}

impl<T: Real> SectorGain<T> {
    /// Sector centered on boresight (`azimuth 0`, `elevation pi/2`).
    pub fn from_hpbw(hpbw_azimuth: T, hpbw_elevation: T) -> Self {
        let half = lit::<T>(0.5);
        let g0 = lit::<T>(4.0) * T::PI() / (hpbw_azimuth * hpbw_elevation);
        SectorGain {
            amplitude: g0.sqrt(),
            hpbw_azimuth,
            hpbw_elevation,
            azimuth_bounds: (-hpbw_azimuth * half, hpbw_azimuth * half),
            elevation_bounds: (
                T::FRAC_PI_2() - hpbw_elevation * half,
                T::FRAC_PI_2() + hpbw_elevation * half,
            ),
        }
    }

    /// Power gain `G0`.
    pub fn g0(&self) -> T {
        self.amplitude * self.amplitude
    }

    pub fn gain(&self, dir: &Direction<T>) -> T {
        let (a0, a1) = self.azimuth_bounds;
        let (e0, e1) = self.elevation_bounds;
        if dir.azimuth >= a0 && dir.azimuth <= a1 && dir.elevation >= e0 && dir.elevation <= e1 {
            self.amplitude
        } else {
            T::zero()
        }
    }
}

/// Element-level antenna amplitude pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AntennaPattern<T> {
    Isotropic,
    /// Same amplitude gain in every direction.
    Constant(T),
    Sector(SectorGain<T>),
}

impl<T: Real> AntennaPattern<T> {
    pub fn from_dbi(dbi: T) -> Self {
        AntennaPattern::Constant(crate::num::db_to_linear(dbi).sqrt())
    }

    pub fn amplitude(&self, dir: &Direction<T>) -> T {
        match self {
            AntennaPattern::Isotropic => T::one(),
            AntennaPattern::Constant(a) => *a,
            AntennaPattern::Sector(s) => s.gain(dir),
        }
    }

    /// Largest power gain over all directions.
    pub fn peak_power_gain(&self) -> T {
        match self {
            AntennaPattern::Isotropic => T::one(),
            AntennaPattern::Constant(a) => *a * *a,
            AntennaPattern::Sector(s) => s.g0(),
        }
    }
}

/// Uniform phase errors in `[-delta_max, delta_max]` radians.
pub fn sample_phase_errors<T: Real, R: Rng + ?Sized>(delta_max: T, n: usize, rng: &mut R) -> Vec<T> {
    let d = crate::num::wide(delta_max);
    (0..n)
        .map(|_| lit(d * (2.0 * rng.random::<f64>() - 1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::num::wavelength;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(rows: usize, cols: usize, fk: f64, split: bool) -> SteeringContext<f64> {
        let lc = wavelength(300e9);
        SteeringContext {
            offsets: ArrayGeometry::upa(rows, cols, lc / 2.0).ae_offsets(),
            lambda_k: wavelength(fk),
            lambda_c: lc,
            beam_split: split,
        }
    }

    #[test]
    fn test_ae_phase_cases() {
        let broadside = Direction::from_angles(0.0, std::f64::consts::FRAC_PI_2);
        let c = ctx(4, 4, 300e9, false);
        for p in &c.offsets {
            assert_abs_diff_eq!(ae_phase(p, &broadside), 0.0, epsilon = 1e-18);
        }
        let y = Direction::from_angles(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(ae_phase(&Vec3::new(0.0, 1e-3, 0.0), &y), 1e-3, epsilon = 1e-18);
    }

    #[test]
    fn test_steering_norm_and_broadside() {
        let c = ctx(4, 8, 310e9, false);
        let a = steering_vector(&c, &Direction::from_angles(0.0, std::f64::consts::FRAC_PI_2));
        for v in &a {
            assert_relative_eq!(v.re, 1.0 / 32f64.sqrt(), max_relative = 1e-12);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        }
        let a = steering_vector(&c, &Direction::from_angles(0.7, 1.1));
        let n: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(n, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn test_steering_mirror_conjugate() {
        // Reversing the direction flips every phase of a centered array.
        let c = ctx(3, 5, 300e9, false);
        let d = Direction::from_angles(0.4, 1.2);
        let a = steering_vector(&c, &d);
        let b = steering_vector(&c, &d.reversed());
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!((x - y.conj()).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn test_aligned_response_is_sqrt_q() {
        let c = ctx(8, 8, 290e9, false);
        let d = Direction::from_angles(-0.3, 1.9);
        let a = steering_vector(&c, &d);
        let w = beamforming_vector(&c, &d, None);
        let s: Complex<f64> = a.iter().zip(&w).map(|(x, y)| x * y).sum();
        assert_relative_eq!(s.re, 8.0, max_relative = 1e-12);
        assert!(w.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert_relative_eq!(equivalent_array_response(&c, &d, &d, None).re, 8.0, max_relative = 1e-12);
        let zeros = vec![0.0; 64];
        assert_eq!(beamforming_vector(&c, &d, Some(&zeros)), w);
    }

    #[test]
    fn test_dirichlet_zero() {
        // Omega_M = pi / M with the column term matched.
        let (rows, cols) = (8, 4);
        let c = ctx(rows, cols, 300e9, false);
        let target = Direction::from_angles(0.0, std::f64::consts::FRAC_PI_2);
        // cos(theta) = lambda / (M delta) puts Omega_M at pi / M.
        let delta = c.lambda_c / 2.0;
        let el = (c.lambda_k / (rows as f64 * delta)).acos();
        let d = Direction::from_angles(0.0, el);
        let closed = upa_array_response(rows, cols, [delta; 2], c.lambda_k, c.lambda_k, &d, &target);
        assert_abs_diff_eq!(closed, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(equivalent_array_response(&c, &d, &target, None).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn test_split_gain_loss_grows_off_center() {
        let target = Direction::from_angles(0.5, 1.0);
        let mut prev = f64::INFINITY;
        for fk in [300e9, 295e9, 290e9, 285e9, 280e9, 270e9] {
            let c = ctx(8, 32, fk, true);
            let a = equivalent_array_response(&c, &target, &target, None).norm();
            assert!(a < prev || fk == 300e9);
            prev = a;
        }
        let c = ctx(8, 32, 300e9, true);
        assert_relative_eq!(equivalent_array_response(&c, &target, &target, None).norm(), 16.0, max_relative = 1e-12);
    }

    #[test]
    fn test_beam_split_direction() {
        assert_eq!(beam_split_direction(0.4, 300e9, 300e9), 0.4);
        assert_relative_eq!(beam_split_direction(1.0, 270e9, 300e9), 0.9);
        assert_relative_eq!(
            beam_split_direction(0.3, 2.0 * 280e9, 300e9),
            2.0 * beam_split_direction(0.3, 280e9, 300e9)
        );
    }

    #[test]
    fn test_sector_gain() {
        let s = SectorGain::from_hpbw(27.7_f64.to_radians(), 27.7_f64.to_radians());
        let dbi = 10.0 * s.g0().log10();
        assert!((dbi - 17.3).abs() < 0.05, "{dbi}");
        assert_eq!(s.gain(&Direction::from_angles(0.0, std::f64::consts::FRAC_PI_2)), s.amplitude);
        assert_eq!(s.gain(&Direction::from_angles(1.0, std::f64::consts::FRAC_PI_2)), 0.0);
        // Boundary inclusive.
        let edge = Direction {
            azimuth: s.azimuth_bounds.1,
            ..Direction::from_angles(0.0, s.elevation_bounds.0)
        };
        assert_eq!(s.gain(&edge), s.amplitude);
        let p = AntennaPattern::from_dbi(20.0_f64);
        assert_relative_eq!(p.peak_power_gain(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn test_phase_errors_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = sample_phase_errors(0.2_f64, 1000, &mut rng);
        assert!(e.iter().all(|x| x.abs() <= 0.2));
        assert!(sample_phase_errors(0.0_f64, 10, &mut rng).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn test_f32_closed_form() {
        let d = Direction::from_angles(0.2_f32, 1.4);
        let t = Direction::from_angles(0.1_f32, 1.5);
        let l = wavelength(300e9_f32);
        let a = upa_array_response(4, 4, [l / 2.0; 2], l, l, &d, &t);
        let b = upa_array_response(
            4,
            4,
            [wavelength(300e9_f64) / 2.0; 2],
            wavelength(300e9),
            wavelength(300e9),
            &Direction::from_angles(0.2, 1.4),
            &Direction::from_angles(0.1, 1.5),
        );
        assert!((a as f64 - b).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn prop_closed_form_matches_sum(
            az in -3.1f64..3.1, el in 0.05f64..3.09, az0 in -3.1f64..3.1, el0 in 0.05f64..3.09,
            fk in 270e9f64..330e9, split in any::<bool>(),
        ) {
            let c = ctx(4, 6, fk, split);
            let d = Direction::from_angles(az, el);
            let t = Direction::from_angles(az0, el0);
            let sum = equivalent_array_response(&c, &d, &t, None);
            let closed = upa_array_response(4, 6, [c.lambda_c / 2.0; 2], c.lambda_k, c.beamformer_lambda(), &d, &t);
            prop_assert!((sum.re - closed).abs() < 1e-9 && sum.im.abs() < 1e-9);
            prop_assert!(sum.norm() <= 24f64.sqrt() + 1e-12);
        }
    }
}
