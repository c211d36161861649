//! Array-of-subarrays geometry: placement, rotation, directions and
//! SA-pair distances.
//!
//! Local frames put each array in the Y-Z plane with boresight along +X.
//! Subarrays and elements are indexed row-major; the public 1-based index
//! helper [`sa_index`] mirrors the usual `q = (m-1) N + n` convention while
//! all internal storage uses the equivalent 0-based `q - 1`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::num::{lit, wavelength, Real};

/// Plain 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3([x, y, z])
    }

    pub fn zero() -> Self {
        Vec3([T::zero(); 3])
    }

    pub fn x(&self) -> T {
        self.0[0]
    }
    pub fn y(&self) -> T {
        self.0[1]
    }
    pub fn z(&self) -> T {
        self.0[2]
    }

    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn cast<U: Real>(&self) -> Vec3<U> {
        Vec3(self.0.map(|v| lit::<U>(crate::num::wide(v))))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3(self.0.map(|v| -v))
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Mat3([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl<T: Real> Mul<Vec3<T>> for Mat3<T> {
    type Output = Vec3<T>;
    fn mul(self, v: Vec3<T>) -> Vec3<T> {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(r)
    }
}

/// Rotation by `alpha` about Z, then `beta` about Y, then `gamma` about X.
pub fn rotation_matrix<T: Real>(alpha: T, beta: T, gamma: T) -> Mat3<T> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    Mat3([
        [ca * cb, ca * sb * sg - cg * sa, sa * sg + ca * cg * sb],
        [cb * sa, ca * cg + sa * sb * sg, cg * sa * sb - ca * sg],
        [-sb, cb * sg, cb * cg],
    ])
}

/// 1-based row-major index `q = (m-1) N + n`.
pub fn sa_index(m: usize, n: usize, rows: usize, cols: usize) -> Result<usize> {
    if m == 0 || n == 0 || m > rows || n > cols {
        return Err(Error::Index(format!(
            "(m={m}, n={n}) outside a {rows}x{cols} grid"
        )));
    }
    Ok((m - 1) * cols + n)
}

/// Full description of one array-of-subarrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry<T> {
    /// SA rows `M`.
    pub sa_rows: usize,
    /// SA columns `N`.
    pub sa_cols: usize,
    /// AE rows per SA.
    pub ae_rows: usize,
    /// AE columns per SA.
    pub ae_cols: usize,
    /// SA spacing along the row (z) and column (y) directions, meters.
    pub sa_spacing: [T; 2],
    /// AE spacing along the row (z) and column (y) directions, meters.
    pub ae_spacing: [T; 2],
    /// Global position of the array center, meters.
    pub center: Vec3<T>,
    /// Z, Y, X rotation angles in radians.
    pub rotation: [T; 3],
}

impl<T: Real> ArrayGeometry<T> {
    /// Single-SA uniform planar array at the origin with no rotation.
    pub fn upa(ae_rows: usize, ae_cols: usize, ae_spacing: T) -> Self {
        ArrayGeometry {
            sa_rows: 1,
            sa_cols: 1,
            ae_rows,
            ae_cols,
            sa_spacing: [ae_spacing * lit(ae_rows as f64), ae_spacing * lit(ae_cols as f64)],
            ae_spacing: [ae_spacing; 2],
            center: Vec3::zero(),
            rotation: [T::zero(); 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        self.collect_violations("", &mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Appends every violated invariant to `out`, each prefixed by `prefix`.
    pub fn collect_violations(&self, prefix: &str, out: &mut Vec<String>) {
        for (name, v) in [
            ("sa_rows", self.sa_rows),
            ("sa_cols", self.sa_cols),
            ("ae_rows", self.ae_rows),
            ("ae_cols", self.ae_cols),
        ] {
            if v == 0 {
                out.push(format!("{prefix}{name} must be >= 1"));
            }
        }
        for (name, v) in [
            ("sa_spacing", self.sa_spacing),
            ("ae_spacing", self.ae_spacing),
        ] {
            if !(v[0] > T::zero() && v[1] > T::zero()) {
                out.push(format!("{prefix}{name} must be > 0"));
            }
        }
        let pi = T::PI();
        let [a, b, g] = self.rotation;
        if !(a > -pi && a <= pi) {
            out.push(format!("{prefix}rotation alpha must lie in (-180, 180] degrees"));
        }
        if !(b >= -pi / lit(2.0) && b <= pi / lit(2.0)) {
            out.push(format!("{prefix}rotation beta must lie in [-90, 90] degrees"));
        }
        if !(g > -pi && g <= pi) {
            out.push(format!("{prefix}rotation gamma must lie in (-180, 180] degrees"));
        }
        if !self.center.0.iter().all(|v| v.is_finite()) {
            out.push(format!("{prefix}center must be finite"));
        }
    }

    /// Number of subarrays `Q`.
    pub fn num_sa(&self) -> usize {
        self.sa_rows * self.sa_cols
    }

    /// Number of elements per subarray.
    pub fn num_ae(&self) -> usize {
        self.ae_rows * self.ae_cols
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        let [a, b, g] = self.rotation;
        rotation_matrix(a, b, g)
    }

    /// Local position of 0-based SA `q`.
    pub fn sa_local(&self, q: usize) -> Vec3<T> {
        let (m, n) = (q / self.sa_cols, q % self.sa_cols);
        Vec3::new(
            T::zero(),
            centered::<T>(n, self.sa_cols) * self.sa_spacing[1],
            centered::<T>(m, self.sa_rows) * self.sa_spacing[0],
        )
    }

    /// Offset of 0-based AE `qbar` from its SA center.
    pub fn ae_offset(&self, qbar: usize) -> Vec3<T> {
        let (m, n) = (qbar / self.ae_cols, qbar % self.ae_cols);
        Vec3::new(
            T::zero(),
            centered::<T>(n, self.ae_cols) * self.ae_spacing[1],
            centered::<T>(m, self.ae_rows) * self.ae_spacing[0],
        )
    }

    pub fn ae_offsets(&self) -> Vec<Vec3<T>> {
        (0..self.num_ae()).map(|i| self.ae_offset(i)).collect()
    }

    pub fn ae_local(&self, q: usize, qbar: usize) -> Vec3<T> {
        self.sa_local(q) + self.ae_offset(qbar)
    }

    pub fn sa_global(&self, q: usize) -> Vec3<T> {
        to_global(self.sa_local(q), &self.rotation_matrix(), self.center)
    }

    pub fn ae_global(&self, q: usize, qbar: usize) -> Vec3<T> {
        to_global(self.ae_local(q, qbar), &self.rotation_matrix(), self.center)
    }

    /// Diagonal of the bounding box of all element positions.
    pub fn max_dimension(&self) -> T {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for q in 0..self.num_sa() {
            for qb in 0..self.num_ae() {
                let p = self.ae_local(q, qb);
                for i in 0..3 {
                    lo[i] = lo[i].min(p.0[i]);
                    hi[i] = hi[i].max(p.0[i]);
                }
            }
        }
        Vec3([hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]).norm()
    }
}

/// `(i - (count-1)/2)` for 0-based `i`.
fn centered<T: Real>(i: usize, count: usize) -> T {
    lit(i as f64 - (count as f64 - 1.0) / 2.0)
}

pub fn to_global<T: Real>(p: Vec3<T>, r: &Mat3<T>, center: Vec3<T>) -> Vec3<T> {
    *r * p + center
}

pub fn from_global<T: Real>(p: Vec3<T>, r: &Mat3<T>, center: Vec3<T>) -> Vec3<T> {
    r.transpose() * (p - center)
}

/// Unit direction with its azimuth/elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T> {
    pub t: Vec3<T>,
    /// Azimuth in `[-pi, pi]`.
    pub azimuth: T,
    /// Elevation (polar angle from +Z) in `[0, pi]`.
    pub elevation: T,
}

impl<T: Real> Direction<T> {
    pub fn from_angles(azimuth: T, elevation: T) -> Self {
        let (sp, cp) = azimuth.sin_cos();
        let (st, ct) = elevation.sin_cos();
        Direction {
            t: Vec3::new(cp * st, sp * st, ct),
            azimuth,
            elevation,
        }
    }

    /// Normalizes `v`; azimuth is 0 at the poles.
    pub fn from_vector(v: Vec3<T>) -> Result<Self> {
        let n = v.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateGeometry(
                "direction vector has zero length".into(),
            ));
        }
        let t = v.scale(T::one() / n);
        let elevation = t.z().max(-T::one()).min(T::one()).acos();
        let azimuth = if t.x() == T::zero() && t.y() == T::zero() {
            T::zero()
        } else {
            t.y().atan2(t.x())
        };
        Ok(Direction {
            t,
            azimuth,
            elevation,
        })
    }

    /// Re-expresses a global direction in the frame rotated by `r`.
    pub fn to_local(&self, r: &Mat3<T>) -> Self {
        // Rotation preserves the norm; re-derive angles without renormalizing.
        let t = r.transpose() * self.t;
        Self::from_vector(t).unwrap_or(*self)
    }

    pub fn reversed(&self) -> Self {
        Self::from_vector(-self.t).unwrap_or(*self)
    }
}

/// Global unit direction from `a` to `b` and its local form under `r`.
pub fn direction_between<T: Real>(
    a: Vec3<T>,
    b: Vec3<T>,
    r: &Mat3<T>,
) -> Result<(Direction<T>, Direction<T>)> {
    let global = Direction::from_vector(b - a)?;
    Ok((global, global.to_local(r)))
}

/// Whether SA-level distances/angles use the planar or spherical model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairModel {
    Planar,
    Spherical,
}

/// Distance and local departure/arrival directions for one SA pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaPairGeometry<T> {
    pub distance: T,
    /// Departure direction in the Tx local frame.
    pub aod: Direction<T>,
    /// Arrival direction (pointing back to Tx) in the Rx local frame.
    pub aoa: Direction<T>,
}

/// Distance and angles between 0-based Tx SA `qt` and Rx SA `qr`.
pub fn sa_pair_geometry<T: Real>(
    tx: &ArrayGeometry<T>,
    rx: &ArrayGeometry<T>,
    qt: usize,
    qr: usize,
    model: PairModel,
) -> Result<SaPairGeometry<T>> {
    let rt = tx.rotation_matrix();
    let rr = rx.rotation_matrix();
    match model {
        PairModel::Planar => {
            let (g, aod) = direction_between(tx.center, rx.center, &rt)?;
            let aoa = g.reversed().to_local(&rr);
            let d0 = (rx.center - tx.center).norm();
            let distance = d0 - (rx.sa_local(qr).dot(&aoa.t) + tx.sa_local(qt).dot(&aod.t));
            Ok(SaPairGeometry { distance, aod, aoa })
        }
        PairModel::Spherical => {
            let pt = tx.sa_global(qt);
            let pr = rx.sa_global(qr);
            let (g, aod) = direction_between(pt, pr, &rt).map_err(|_| {
                Error::DegenerateGeometry(format!("Tx SA {qt} and Rx SA {qr} coincide"))
            })?;
            let aoa = g.reversed().to_local(&rr);
            Ok(SaPairGeometry {
                distance: (pr - pt).norm(),
                aod,
                aoa,
            })
        }
    }
}

/// Radiation-region classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRegion {
    ReactiveNear,
    Fresnel,
    Far,
}

pub fn rayleigh_distance<T: Real>(d_max: T, lambda: T) -> T {
    lit::<T>(2.0) * d_max * d_max / lambda
}

pub fn fresnel_lower_bound<T: Real>(d_max: T, lambda: T) -> T {
    lit::<T>(0.62) * (d_max * d_max * d_max / lambda).sqrt()
}

pub fn field_region<T: Real>(d_max: T, lambda: T, distance: T) -> FieldRegion {
    if distance >= rayleigh_distance(d_max, lambda) {
        FieldRegion::Far
    } else if distance >= fresnel_lower_bound(d_max, lambda) {
        FieldRegion::Fresnel
    } else {
        FieldRegion::ReactiveNear
    }
}

/// Rayleigh distance for an aperture of size `d_max` at `frequency_hz`.
pub fn rayleigh_distance_at<T: Real>(d_max: T, frequency_hz: T) -> T {
    rayleigh_distance(d_max, wavelength(frequency_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn test_sa_index() {
        assert_eq!(sa_index(1, 1, 2, 4).unwrap(), 1);
        assert_eq!(sa_index(2, 3, 2, 4).unwrap(), 7);
        assert_eq!(sa_index(2, 4, 2, 4).unwrap(), 8);
        assert!(sa_index(3, 1, 2, 4).is_err());
        assert!(sa_index(0, 1, 2, 4).is_err());
    }

    #[test]
    fn test_rotation_identity_and_z_quarter_turn() {
        let r = rotation_matrix(0.0_f64, 0.0, 0.0);
        assert_eq!(r, Mat3::identity());
        let r = rotation_matrix(deg(90.0), 0.0, 0.0);
        let v = r * Vec3::new(0.0, 1.0, 0.0);
        assert_abs_diff_eq!(v.x(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.z(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn test_rotation_matches_composed_elementary_rotations() {
        // Independent construction: Rz(a) * Ry(b) * Rx(g).
        let (a, b, g) = (deg(-135.0), deg(15.0), deg(20.0));
        let rz = Mat3([
            [a.cos(), -a.sin(), 0.0],
            [a.sin(), a.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ]);
        let ry = Mat3([
            [b.cos(), 0.0, b.sin()],
            [0.0, 1.0, 0.0],
            [-b.sin(), 0.0, b.cos()],
        ]);
        let rx = Mat3([
            [1.0, 0.0, 0.0],
            [0.0, g.cos(), -g.sin()],
            [0.0, g.sin(), g.cos()],
        ]);
        let composed = rz * ry * rx;
        let r = rotation_matrix(a, b, g);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(r.0[i][j], composed.0[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn test_local_positions() {
        let mut g = ArrayGeometry::upa(1, 1, 1e-3_f64);
        assert_eq!(g.sa_local(0), Vec3::zero());
        g.sa_rows = 2;
        g.sa_cols = 2;
        g.sa_spacing = [0.01, 0.01];
        assert_eq!(g.sa_local(0), Vec3::new(0.0, -0.005, -0.005));
        let sum = (0..4).fold(Vec3::zero(), |acc, q| acc + g.sa_local(q));
        assert_eq!(sum, Vec3::zero());
    }

    #[test]
    fn test_global_translation_only() {
        let c = Vec3::new(1.0, 2.0, 3.0);
        let p = to_global(Vec3::new(0.0, 1.0, 0.0), &Mat3::identity(), c);
        assert_eq!(p, Vec3::new(1.0, 3.0, 3.0));
        assert_eq!(to_global(Vec3::zero(), &Mat3::identity(), c), c);
    }

    #[test]
    fn test_direction_cases() {
        let (g, l) = direction_between(
            Vec3::zero(),
            Vec3::new(5.0_f64, 0.0, 0.0),
            &Mat3::identity(),
        )
        .unwrap();
        assert_eq!(g.t, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!((l.azimuth, l.elevation), (0.0, std::f64::consts::FRAC_PI_2));
        let pole = Direction::from_vector(Vec3::new(0.0_f64, 0.0, 1.0)).unwrap();
        assert_eq!((pole.azimuth, pole.elevation), (0.0, 0.0));
        let y = Direction::from_vector(Vec3::new(0.0_f64, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(y.azimuth, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(y.elevation, std::f64::consts::FRAC_PI_2);
        assert!(Direction::from_vector(Vec3::<f64>::zero()).is_err());
    }

    fn link(d: f64, sa: usize) -> (ArrayGeometry<f64>, ArrayGeometry<f64>) {
        let mut tx = ArrayGeometry::upa(4, 4, 5e-4);
        tx.sa_rows = sa;
        tx.sa_cols = sa;
        tx.sa_spacing = [0.01, 0.01];
        let mut rx = tx.clone();
        rx.center = Vec3::new(d, 0.0, 0.0);
        rx.rotation = [std::f64::consts::PI, 0.0, 0.0];
        (tx, rx)
    }

    #[test]
    fn test_single_sa_distances_agree() {
        let (tx, rx) = link(3.0, 1);
        let p = sa_pair_geometry(&tx, &rx, 0, 0, PairModel::Planar).unwrap();
        let s = sa_pair_geometry(&tx, &rx, 0, 0, PairModel::Spherical).unwrap();
        assert_abs_diff_eq!(p.distance, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.distance, 3.0, epsilon = 1e-12);
        // Facing arrays: both see each other at boresight.
        assert_abs_diff_eq!(p.aoa.t.x(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn test_planar_distance_symmetric_offsets() {
        let mut tx = ArrayGeometry::upa(1, 1, 1e-3_f64);
        tx.sa_cols = 2;
        tx.sa_spacing = [0.02, 0.02];
        let mut rx = ArrayGeometry::upa(1, 1, 1e-3_f64);
        rx.center = Vec3::new(2.0, 0.3, 0.0);
        let d0 = rx.center.norm();
        let a = sa_pair_geometry(&tx, &rx, 0, 0, PairModel::Planar).unwrap();
        let b = sa_pair_geometry(&tx, &rx, 1, 0, PairModel::Planar).unwrap();
        assert_abs_diff_eq!(a.distance + b.distance, 2.0 * d0, epsilon = 1e-12);
        assert!((a.distance - d0).abs() > 1e-6);
    }

    #[test]
    fn test_planar_spherical_gap_shrinks_with_distance() {
        let mut prev = f64::INFINITY;
        let mut prev_ang = f64::INFINITY;
        for d in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let (tx, rx) = link(d, 2);
            let mut gap = 0.0_f64;
            let mut ang = 0.0_f64;
            for qt in 0..4 {
                for qr in 0..4 {
                    let p = sa_pair_geometry(&tx, &rx, qt, qr, PairModel::Planar).unwrap();
                    let s = sa_pair_geometry(&tx, &rx, qt, qr, PairModel::Spherical).unwrap();
                    gap = gap.max((p.distance - s.distance).abs());
                    ang = ang.max(p.aod.t.dot(&s.aod.t).min(1.0).acos());
                }
            }
            assert!(gap < prev && ang < prev_ang, "d={d}: gap {gap}, ang {ang}");
            prev = gap;
            prev_ang = ang;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn test_field_regions() {
        assert_abs_diff_eq!(rayleigh_distance_at(0.1, 0.6e12), 40.02769, epsilon = 1e-4);
        assert_abs_diff_eq!(rayleigh_distance_at(0.1, 6e9), 0.4002769, epsilon = 1e-6);
        assert_abs_diff_eq!(fresnel_lower_bound(0.1_f64, 5e-4), 0.876812, epsilon = 1e-6);
        assert_eq!(field_region(0.1_f64, 5e-4, 50.0), FieldRegion::Far);
        assert_eq!(field_region(0.1_f64, 5e-4, 1.0), FieldRegion::Fresnel);
        assert_eq!(field_region(0.1_f64, 5e-4, 0.5), FieldRegion::ReactiveNear);
    }

    #[test]
    fn test_max_dimension_upa() {
        let g = ArrayGeometry::upa(4, 4, 1e-3_f64);
        assert_abs_diff_eq!(g.max_dimension(), 3e-3 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn test_f32_rotation_orthogonal() {
        let r = rotation_matrix(0.3_f32, -0.2, 1.1);
        let i = r.transpose() * r;
        for a in 0..3 {
            for b in 0..3 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((i.0[a][b] - e).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn prop_rotation_orthonormal(
            a in -3.1f64..3.1, b in -1.55f64..1.55, g in -3.1f64..3.1
        ) {
            let r = rotation_matrix(a, b, g);
            let i = r.transpose() * r;
            for x in 0..3 {
                for y in 0..3 {
                    let e = if x == y { 1.0 } else { 0.0 };
                    prop_assert!((i.0[x][y] - e).abs() < 1e-12);
                }
            }
            prop_assert!((r.det() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn prop_global_round_trip(
            a in -3.1f64..3.1, b in -1.5f64..1.5, g in -3.1f64..3.1,
            p in proptest::array::uniform3(-1.0f64..1.0),
            c in proptest::array::uniform3(-5.0f64..5.0),
        ) {
            let r = rotation_matrix(a, b, g);
            let p = Vec3(p);
            let back = from_global(to_global(p, &r, Vec3(c)), &r, Vec3(c));
            prop_assert!((back - p).norm() < 1e-12);
        }

        #[test]
        fn prop_angle_round_trip(az in -3.1f64..3.1, el in 0.001f64..3.1) {
            let d = Direction::from_angles(az, el);
            let back = Direction::from_vector(d.t).unwrap();
            prop_assert!((back.azimuth - az).abs() < 1e-9);
            prop_assert!((back.elevation - el).abs() < 1e-9);
        }

        #[test]
        fn prop_phase_frame_invariance(
            a in -3.1f64..3.1, b in -1.5f64..1.5, g in -3.1f64..3.1,
            p in proptest::array::uniform3(-0.01f64..0.01),
            az in -3.1f64..3.1, el in 0.01f64..3.13,
        ) {
            let r = rotation_matrix(a, b, g);
            let local_dir = Direction::from_angles(az, el);
            let p = Vec3(p);
            let global_phase = (r * p).dot(&(r * local_dir.t));
            prop_assert!((global_phase - p.dot(&local_dir.t)).abs() < 1e-15);
        }
    }
}
