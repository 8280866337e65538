//! SE(3) pose algebra, reference-axis selection and rotational symmetry groups.
//!
//! Rotations are stored as plain 3×3 matrices. A [`Pose`] maps points from a
//! child frame into its parent frame, so `compose(outer, inner)` chains
//! `parent <- middle <- child` transforms in the usual left-to-right order,
//! e.g. `base <- flange <- camera <- object`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("rotation determinant is {0:.6}, expected +1")]
    BadDeterminant(f64),
    #[error("non-finite value in pose")]
    NonFinite,
    #[error("symmetry group must contain the identity")]
    MissingIdentity,
    #[error("symmetry group is not closed: product of elements {0} and {1} is not listed")]
    NotClosed(usize, usize),
    #[error("invalid signed axis '{0}'")]
    BadAxis(String),
}

/// Rigid transform: `p_parent = rotation * p_child + translation` (meters).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T: Real> {
    pub rotation: Matrix3<T>,
    pub translation: Vector3<T>,
}

/// Largest absolute entry of `RᵀR − I`.
pub fn orthonormality_error<T: Real>(r: &Matrix3<T>) -> T {
    let d = r.transpose() * r - Matrix3::identity();
    d.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Nearest rotation in the Frobenius sense: `R (RᵀR)^{-1/2}`.
pub fn orthonormalize<T: Real>(r: &Matrix3<T>) -> Matrix3<T> {
    let gram = r.transpose() * r;
    let eig = SymmetricEigen::new(gram);
    let inv_sqrt = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l.sqrt()));
    r * (eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

pub fn check_rotation<T: Real>(r: &Matrix3<T>, tol: T) -> Result<(), GeometryError> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let err = orthonormality_error(r);
    if err > tol {
        return Err(GeometryError::NotOrthonormal(to_f64(err)));
    }
    let det = r.determinant();
    if (det - T::one()).abs() > tol {
        return Err(GeometryError::BadDeterminant(to_f64(det)));
    }
    Ok(())
}

impl<T: Real> Pose<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validated constructor (orthonormality and determinant within 1e-9).
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self, GeometryError> {
        check_rotation(&rotation, lit(1e-9))?;
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_parts_unchecked(rotation: Matrix3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Matrix3<T>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    /// `self ∘ inner`; re-orthonormalizes the rotation when drift exceeds the
    /// scalar's drift tolerance.
    pub fn compose(&self, inner: &Pose<T>) -> Pose<T> {
        let mut rotation = self.rotation * inner.rotation;
        if orthonormality_error(&rotation) > T::drift_tolerance() {
            rotation = orthonormalize(&rotation);
        }
        Pose {
            rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose<T> {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation * v
    }

    pub fn is_valid(&self) -> bool {
        check_rotation(&self.rotation, lit(1e-9)).is_ok()
    }

    /// Max-abs difference across rotation and translation entries.
    pub fn max_abs_diff(&self, other: &Pose<T>) -> T {
        let r = (self.rotation - other.rotation).amax();
        let t = (self.translation - other.translation).amax();
        r.max(t)
    }

    pub fn approx_eq(&self, other: &Pose<T>, tol: T) -> bool {
        self.max_abs_diff(other) <= tol
    }
}

/// Homogeneous product `outer · inner`.
pub fn compose<T: Real>(outer: &Pose<T>, inner: &Pose<T>) -> Pose<T> {
    outer.compose(inner)
}

pub fn invert<T: Real>(p: &Pose<T>) -> Pose<T> {
    p.inverse()
}

/// Rotation about a unit axis by `angle` radians (right-handed).
pub fn axis_angle<T: Real>(axis: &Vector3<T>, angle: T) -> Matrix3<T> {
    let k = axis.normalize();
    let (s, c) = angle.sin_cos();
    let kx = k.cross_matrix();
    Matrix3::identity() + kx * s + kx * kx * (T::one() - c)
}

pub fn rot_x<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        T::one(),
        T::zero(),
        T::zero(),
        T::zero(),
        c,
        -s,
        T::zero(),
        s,
        c,
    )
}

pub fn rot_y<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        c,
        T::zero(),
        s,
        T::zero(),
        T::one(),
        T::zero(),
        -s,
        T::zero(),
        c,
    )
}

pub fn rot_z<T: Real>(angle: T) -> Matrix3<T> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        c,
        -s,
        T::zero(),
        s,
        c,
        T::zero(),
        T::zero(),
        T::zero(),
        T::one(),
    )
}

/// Rotation angle of `aᵀb` in `[0, π]`.
///
/// Mathematically `arccos((tr(aᵀb) − 1)/2)`; evaluated through `atan2` of the
/// skew and trace parts so that small angles keep full precision.
pub fn geodesic_angle<T: Real>(a: &Matrix3<T>, b: &Matrix3<T>) -> T {
    let q = a.transpose() * b;
    let two = lit::<T>(2.0);
    let cos = ((q.trace() - T::one()) / two).clamp(-T::one(), T::one());
    let w = Vector3::new(
        q[(2, 1)] - q[(1, 2)],
        q[(0, 2)] - q[(2, 0)],
        q[(1, 0)] - q[(0, 1)],
    );
    let sin = w.norm() / two;
    sin.atan2(cos).clamp(T::zero(), T::pi())
}

/// Minimal rotation (about a horizontal axis) taking unit `dir` onto `+z`.
pub fn swing_to_vertical<T: Real>(dir: &Vector3<T>) -> Matrix3<T> {
    let u = dir.normalize();
    let ez = Vector3::z();
    let c = u.dot(&ez);
    if c >= T::one() {
        return Matrix3::identity();
    }
    if c <= lit::<T>(-1.0 + 1e-12) {
        return rot_x(T::pi());
    }
    let w = u.cross(&ez);
    let wx = w.cross_matrix();
    Matrix3::identity() + wx + wx * wx / (T::one() + c)
}

/// Removes the tilt of `r`: rotates its reference axis exactly onto `+z`
/// about a horizontal axis, leaving the twist about the vertical untouched.
pub fn level_rotation<T: Real>(r: &Matrix3<T>) -> Matrix3<T> {
    let up = reference_axis_of_rotation(r);
    swing_to_vertical(&(r * up.unit::<T>())) * r
}

/// Yaw of a rotation after leveling, measured against `level_reference` of
/// its reference axis.
pub fn yaw_of<T: Real>(r: &Matrix3<T>) -> T {
    let up = reference_axis_of_rotation(r);
    yaw_about_vertical(&level_rotation(r), up)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let w = a - two_pi * ((a + T::pi()) / two_pi).floor();
    if w <= -T::pi() {
        w + two_pi
    } else {
        w
    }
}

/// Rotation about world `+z` of a rotation matrix whose `up` object axis
/// is vertical, measured against the fixed leveling `level_reference(up)`.
pub fn yaw_about_vertical<T: Real>(rotation: &Matrix3<T>, up: SignedAxis) -> T {
    let rel = rotation * level_reference::<T>(up).transpose();
    rel[(1, 0)].atan2(rel[(0, 0)])
}

/// Fixed signed-permutation rotation taking object axis `up` onto `+z`.
pub fn level_reference<T: Real>(up: SignedAxis) -> Matrix3<T> {
    // Rows are right-handed triples with the up axis last.
    let (x, y, z): (Vector3<T>, Vector3<T>, Vector3<T>) = match (up.axis, up.sign) {
        (Axis::Z, Sign::Pos) => (Vector3::x(), Vector3::y(), Vector3::z()),
        (Axis::Z, Sign::Neg) => (Vector3::x(), -Vector3::y(), -Vector3::z()),
        (Axis::X, Sign::Pos) => (Vector3::y(), Vector3::z(), Vector3::x()),
        (Axis::X, Sign::Neg) => (-Vector3::y(), Vector3::z(), -Vector3::x()),
        (Axis::Y, Sign::Pos) => (Vector3::z(), Vector3::x(), Vector3::y()),
        (Axis::Y, Sign::Neg) => (Vector3::z(), -Vector3::x(), -Vector3::y()),
    };
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        match i {
            0 => Axis::X,
            1 => Axis::Y,
            2 => Axis::Z,
            _ => panic!("axis index {i} out of range"),
        }
    }

    pub fn unit<T: Real>(self) -> Vector3<T> {
        let mut v = Vector3::zeros();
        v[self.index()] = T::one();
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Pos => T::one(),
            Sign::Neg => -T::one(),
        }
    }
}

/// One of the six signed object axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedAxis {
    pub axis: Axis,
    pub sign: Sign,
}

impl SignedAxis {
    pub const PX: SignedAxis = SignedAxis::new(Axis::X, Sign::Pos);
    pub const NX: SignedAxis = SignedAxis::new(Axis::X, Sign::Neg);
    pub const PY: SignedAxis = SignedAxis::new(Axis::Y, Sign::Pos);
    pub const NY: SignedAxis = SignedAxis::new(Axis::Y, Sign::Neg);
    pub const PZ: SignedAxis = SignedAxis::new(Axis::Z, Sign::Pos);
    pub const NZ: SignedAxis = SignedAxis::new(Axis::Z, Sign::Neg);

    /// Tie-break priority for reference-axis selection.
    pub const PRIORITY: [SignedAxis; 6] = [
        SignedAxis::PZ,
        SignedAxis::PX,
        SignedAxis::PY,
        SignedAxis::NX,
        SignedAxis::NY,
        SignedAxis::NZ,
    ];

    /// Enumeration order used for grasp candidates.
    pub const ALL: [SignedAxis; 6] = [
        SignedAxis::PX,
        SignedAxis::NX,
        SignedAxis::PY,
        SignedAxis::NY,
        SignedAxis::PZ,
        SignedAxis::NZ,
    ];

    pub const fn new(axis: Axis, sign: Sign) -> Self {
        Self { axis, sign }
    }

    pub fn unit<T: Real>(self) -> Vector3<T> {
        self.axis.unit::<T>() * self.sign.value::<T>()
    }

    pub fn negate(self) -> Self {
        let sign = match self.sign {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        };
        Self::new(self.axis, sign)
    }

    pub fn is_orthogonal(self, other: SignedAxis) -> bool {
        self.axis != other.axis
    }

    /// The signed axis closest to a (not necessarily unit) direction.
    pub fn nearest<T: Real>(dir: &Vector3<T>) -> Self {
        let mut best = SignedAxis::PRIORITY[0];
        let mut best_score = dir.dot(&best.unit());
        for cand in SignedAxis::PRIORITY.iter().skip(1) {
            let s = dir.dot(&cand.unit());
            if s > best_score {
                best = *cand;
                best_score = s;
            }
        }
        best
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Pos => '+',
            Sign::Neg => '-',
        };
        let a = match self.axis {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        };
        write!(f, "{s}{a}")
    }
}

impl FromStr for SignedAxis {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeometryError::BadAxis(s.to_string());
        let mut chars = s.chars();
        let sign = match chars.next().ok_or_else(bad)? {
            '+' => Sign::Pos,
            '-' => Sign::Neg,
            _ => return Err(bad()),
        };
        let axis = match chars.next().ok_or_else(bad)?.to_ascii_lowercase() {
            'x' => Axis::X,
            'y' => Axis::Y,
            'z' => Axis::Z,
            _ => return Err(bad()),
        };
        if chars.next().is_some() {
            return Err(bad());
        }
        Ok(SignedAxis::new(axis, sign))
    }
}

impl Serialize for SignedAxis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SignedAxis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Object axis closest to world vertical: `argmax_v ⟨e_z, R v⟩` over the six
/// signed axes, ties resolved by [`SignedAxis::PRIORITY`].
pub fn reference_axis<T: Real>(p: &Pose<T>) -> SignedAxis {
    reference_axis_of_rotation(&p.rotation)
}

pub fn reference_axis_of_rotation<T: Real>(r: &Matrix3<T>) -> SignedAxis {
    // ⟨e_z, R v⟩ for v = ±e_i is ±R[2, i].
    let score = |a: SignedAxis| a.sign.value::<T>() * r[(2, a.axis.index())];
    let mut best = SignedAxis::PRIORITY[0];
    let mut best_score = score(best);
    for cand in SignedAxis::PRIORITY.iter().skip(1) {
        let s = score(*cand);
        if s > best_score {
            best = *cand;
            best_score = s;
        }
    }
    best
}

/// Finite set of object-frame rotations mapping a block onto itself.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryGroup<T: Real> {
    elements: Vec<Matrix3<T>>,
}

impl<T: Real> SymmetryGroup<T> {
    pub fn trivial() -> Self {
        Self {
            elements: vec![Matrix3::identity()],
        }
    }

    /// Validates rotations, presence of the identity and pairwise closure
    /// (all within 1e-9). The identity is moved to the front.
    pub fn new(elements: Vec<Matrix3<T>>) -> Result<Self, GeometryError> {
        let tol = lit::<T>(1e-9);
        for e in &elements {
            check_rotation(e, tol)?;
        }
        let id = Matrix3::identity();
        let pos = elements
            .iter()
            .position(|e| (e - id).amax() <= tol)
            .ok_or(GeometryError::MissingIdentity)?;
        let mut elements = elements;
        let ident = elements.remove(pos);
        elements.insert(0, ident);
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                let p = a * b;
                if !elements.iter().any(|e| (e - p).amax() <= tol) {
                    return Err(GeometryError::NotClosed(i, j));
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[Matrix3<T>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }
}

/// One pose per group element: rotation `R·S`, translation unchanged.
pub fn symmetry_equivalents<T: Real>(p: &Pose<T>, g: &SymmetryGroup<T>) -> Vec<Pose<T>> {
    g.elements()
        .iter()
        .map(|s| Pose::from_parts_unchecked(p.rotation * s, p.translation))
        .collect()
}

/// The 24 proper signed-permutation matrices (rotation group of the cube).
pub fn cube_rotations<T: Real>() -> Vec<Matrix3<T>> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for signs in 0..8u8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in perm.iter().enumerate() {
                let s = if signs & (1 << row) != 0 {
                    -T::one()
                } else {
                    T::one()
                };
                m[(row, col)] = s;
            }
            if m.determinant() > T::zero() {
                out.push(m);
            }
        }
    }
    // identity first
    out.sort_by_key(|m| usize::from((m - Matrix3::identity()).amax() != T::zero()));
    out
}

/// ZYX (yaw-pitch-roll) factorization `R = Rz(yaw) Ry(pitch) Rx(roll)`.
/// Returns `(roll, pitch, yaw)`.
pub fn zyx_angles<T: Real>(r: &Matrix3<T>) -> Vector3<T> {
    let pitch = (-r[(2, 0)]).clamp(-T::one(), T::one()).asin();
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    Vector3::new(roll, pitch, yaw)
}

pub fn from_zyx<T: Real>(rpy: &Vector3<T>) -> Matrix3<T> {
    rot_z(rpy.z) * rot_y(rpy.y) * rot_x(rpy.x)
}

/// Uniformly random rotation from a uniformly distributed unit quaternion
/// built from three uniform variates in `[0, 1)`.
pub fn rotation_from_uniforms<T: Real>(u1: T, u2: T, u3: T) -> Matrix3<T> {
    let two_pi = T::two_pi();
    let a = (T::one() - u1).sqrt();
    let b = u1.sqrt();
    let (qx, qy) = (a * (two_pi * u2).sin(), a * (two_pi * u2).cos());
    let (qz, qw) = (b * (two_pi * u3).sin(), b * (two_pi * u3).cos());
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(qw, qx, qy, qz));
    q.to_rotation_matrix().into_inner()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl<T: Real> Serialize for Pose<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut rotation = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                rotation[r * 3 + c] = to_f64(self.rotation[(r, c)]);
            }
        }
        let translation = [
            to_f64(self.translation.x),
            to_f64(self.translation.y),
            to_f64(self.translation.z),
        ];
        PoseRepr {
            rotation,
            translation,
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for Pose<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        let rotation = Matrix3::from_row_slice(&repr.rotation.map(lit::<T>));
        let translation = Vector3::from_row_slice(&repr.translation.map(lit::<T>));
        // Files carry printed decimals; accept small drift and snap back.
        check_rotation(&rotation, lit(1e-6)).map_err(serde::de::Error::custom)?;
        let rotation = if orthonormality_error(&rotation) > T::drift_tolerance() {
            orthonormalize(&rotation)
        } else {
            rotation
        };
        Pose::new(rotation, translation).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    type P = Pose<f64>;

    #[test]
    fn identity_composes_trivially() {
        let p = P::from_parts_unchecked(rot_z(0.3) * rot_x(-1.1), Vector3::new(0.1, -0.2, 0.5));
        assert!(compose(&P::identity(), &p).approx_eq(&p, 0.0));
        assert!(compose(&p, &invert(&p)).approx_eq(&P::identity(), 1e-12));
    }

    #[test]
    fn invert_pure_translation_negates() {
        let t = Vector3::new(0.3, -0.1, 2.0);
        let inv = invert(&P::from_translation(t));
        assert_eq!(inv.translation, -t);
        assert_eq!(inv.rotation, Matrix3::identity());
        assert_eq!(invert(&P::identity()), P::identity());
    }

    #[test]
    fn reference_axis_examples() {
        assert_eq!(reference_axis(&P::identity()), SignedAxis::PZ);
        // +90° about base x lifts object +y; −90° lifts object −y.
        let up = P::from_rotation(rot_x(FRAC_PI_2));
        assert_eq!(reference_axis(&up), SignedAxis::PY);
        let down = P::from_rotation(rot_x(-FRAC_PI_2));
        assert_eq!(reference_axis(&down), SignedAxis::NY);
        assert_eq!(reference_axis(&P::from_rotation(rot_x(PI))), SignedAxis::NZ);
    }

    #[test]
    fn reference_axis_tie_prefers_z_then_x() {
        // Exactly 45° between +z and +x after a −45° rotation about y.
        let r = Matrix3::new(
            std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            -std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            1.0,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
        );
        assert_eq!(reference_axis_of_rotation(&r), SignedAxis::PZ);
    }

    #[test]
    fn geodesic_basics() {
        let r = rot_y(0.7) * rot_z(-0.2);
        assert_eq!(geodesic_angle(&r, &r), 0.0);
        let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
        let q = axis_angle(&axis, FRAC_PI_2);
        assert!((geodesic_angle(&Matrix3::identity(), &q) - FRAC_PI_2).abs() < 1e-12);
        assert!((geodesic_angle(&Matrix3::identity(), &rot_x(PI)) - PI).abs() < 1e-12);
        let tiny = rot_z(1e-10f64);
        assert!((geodesic_angle(&Matrix3::identity(), &tiny) - 1e-10).abs() < 1e-20);
    }

    #[test]
    fn cube_group_has_24_closed_elements() {
        let rots = cube_rotations::<f64>();
        assert_eq!(rots.len(), 24);
        assert_eq!(rots[0], Matrix3::identity());
        let g = SymmetryGroup::new(rots).unwrap();
        assert_eq!(g.len(), 24);
    }

    #[test]
    fn symmetry_group_rejects_open_sets() {
        let quarter = rot_z(FRAC_PI_2);
        let err = SymmetryGroup::new(vec![Matrix3::identity(), quarter]).unwrap_err();
        assert!(matches!(err, GeometryError::NotClosed(_, _)));
        assert_eq!(
            SymmetryGroup::new(vec![rot_z(PI)]).unwrap_err(),
            GeometryError::MissingIdentity
        );
    }

    #[test]
    fn half_turn_equivalents_differ_by_diag() {
        let g = SymmetryGroup::new(vec![Matrix3::identity(), rot_z(PI)]).unwrap();
        let eq = symmetry_equivalents(&P::identity(), &g);
        assert_eq!(eq.len(), 2);
        let flip = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        assert!((eq[1].rotation - flip).amax() < 1e-15);
        assert_eq!(eq[0], P::identity());
        let single = symmetry_equivalents(&eq[1], &SymmetryGroup::trivial());
        assert_eq!(single, vec![eq[1]]);
    }

    #[test]
    fn level_reference_maps_up_axis_to_z() {
        for a in SignedAxis::ALL {
            let r = level_reference::<f64>(a);
            check_rotation(&r, 1e-15).unwrap();
            assert!((r * a.unit::<f64>() - Vector3::z()).amax() < 1e-15, "{a}");
            assert!(yaw_about_vertical(&r, a).abs() < 1e-15);
            let yawed = rot_z(0.4) * r;
            assert!((yaw_about_vertical(&yawed, a) - 0.4).abs() < 1e-14);
        }
    }

    #[test]
    fn swing_levels_direction() {
        let d = Vector3::new(0.2, -0.1, 0.9).normalize();
        let s = swing_to_vertical(&d);
        assert!((s * d - Vector3::z()).amax() < 1e-15);
        check_rotation(&s, 1e-14).unwrap();
        // rotation axis is horizontal: e_z·axis = 0 ⇔ s keeps the horizontal component direction in plane
        assert_eq!(swing_to_vertical(&Vector3::<f64>::z()), Matrix3::identity());
        let flip = swing_to_vertical(&(-Vector3::<f64>::z()));
        assert!((flip * -Vector3::<f64>::z() - Vector3::z()).amax() < 1e-12);
    }

    #[test]
    fn zyx_round_trip() {
        let rpy = Vector3::new(0.1, -0.05, 2.5);
        let r = from_zyx(&rpy);
        assert!((zyx_angles(&r) - rpy).amax() < 1e-14);
    }

    #[test]
    fn orthonormalize_recovers_nearest_rotation() {
        let r = rot_z(0.4) * rot_y(1.0);
        let noisy = r + Matrix3::from_element(1e-7);
        let fixed = orthonormalize(&noisy);
        assert!(orthonormality_error(&fixed) < 1e-14);
        assert!((fixed - r).amax() < 1e-6);
    }

    #[test]
    fn pose_json_is_row_major() {
        let p = P::from_parts_unchecked(rot_z(FRAC_PI_2), Vector3::new(1.0, 2.0, 3.0));
        let v: serde_json::Value = serde_json::to_value(p).unwrap();
        let rot: Vec<f64> = serde_json::from_value(v["rotation"].clone()).unwrap();
        assert!((rot[1] + 1.0).abs() < 1e-15, "row-major R[0][1] = -sin");
        let back: P = serde_json::from_value(v).unwrap();
        assert!(back.approx_eq(&p, 0.0));
        let bad = serde_json::json!({"rotation": [1,0,0, 0,1,0, 0,0,2], "translation": [0,0,0]});
        assert!(serde_json::from_value::<P>(bad).is_err());
    }

    #[test]
    fn signed_axis_text_round_trip() {
        for a in SignedAxis::ALL {
            assert_eq!(a.to_string().parse::<SignedAxis>().unwrap(), a);
        }
        assert!("z".parse::<SignedAxis>().is_err());
        assert!("+w".parse::<SignedAxis>().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = Pose::<f32>::from_parts_unchecked(rot_z(0.5f32) * rot_x(0.2), Vector3::new(0.1, 0.2, 0.3));
        let id = p.compose(&p.inverse());
        assert!(id.approx_eq(&Pose::identity(), 1e-6));
        assert_eq!(reference_axis(&p), SignedAxis::PZ);
    }
}
