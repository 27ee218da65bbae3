//! Small linear-algebra helpers shared by the dynamics, controller and
//! sensing code. Quaternions are Hamilton, scalar-first `(w, x, y, z)`.

use nalgebra::{Matrix3, Matrix4, Quaternion, Vector3, Vector4};

pub type Vec3 = Vector3<f64>;
pub type Vec4 = Vector4<f64>;

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
#[inline]
pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] for the antisymmetric part of `m`.
#[inline]
pub fn vee(m: &Matrix3<f64>) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rotation matrix of a quaternion using the homogeneous quadratic form
/// `(w^2 - |v|^2) I + 2 v v^T + 2 w [v]x`.
///
/// For unit quaternions this is the usual body-to-world rotation; for
/// non-unit inputs (intermediate Runge-Kutta stages) it stays a smooth
/// polynomial map, which the analytic Jacobians rely on.
#[inline]
pub fn rotation_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Partial derivatives of [`rotation_matrix`] with respect to `w, x, y, z`.
pub fn rotation_matrix_partials(q: &Quaternion<f64>) -> [Matrix3<f64>; 4] {
    let v = Vec3::new(q.i, q.j, q.k);
    let d_w = Matrix3::identity() * (2.0 * q.w) + skew(&v) * 2.0;
    let mut out = [d_w, Matrix3::zeros(), Matrix3::zeros(), Matrix3::zeros()];
    for (i, slot) in out.iter_mut().enumerate().skip(1) {
        let e = Vec3::ith(i - 1, 1.0);
        *slot = Matrix3::identity() * (-2.0 * v[i - 1])
            + (e * v.transpose() + v * e.transpose()) * 2.0
            + skew(&e) * (2.0 * q.w);
    }
    out
}

/// Matrix of right multiplication by the pure quaternion `(0, omega)`:
/// `q ⊗ (0, omega) == right_product_matrix(omega) * [w, x, y, z]`.
#[inline]
pub fn right_product_matrix(omega: &Vec3) -> Matrix4<f64> {
    let (a, b, c) = (omega.x, omega.y, omega.z);
    Matrix4::new(
        0.0, -a, -b, -c, //
        a, 0.0, c, -b, //
        b, -c, 0.0, a, //
        c, b, -a, 0.0,
    )
}

/// `[w, x, y, z]` coefficients of a quaternion.
#[inline]
pub fn quat_to_wxyz(q: &Quaternion<f64>) -> Vec4 {
    Vec4::new(q.w, q.i, q.j, q.k)
}

#[inline]
pub fn quat_from_wxyz(v: &Vec4) -> Quaternion<f64> {
    Quaternion::new(v[0], v[1], v[2], v[3])
}

/// Quaternion for a rotation of `angle` radians about the world z axis.
pub fn yaw_quaternion(angle: f64) -> Quaternion<f64> {
    let h = 0.5 * angle;
    Quaternion::new(h.cos(), 0.0, 0.0, h.sin())
}

/// Unit quaternion from a rotation matrix (Shepperd's method).
pub fn quaternion_from_matrix(r: &Matrix3<f64>) -> Quaternion<f64> {
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quaternion::new(
            0.25 * s,
            (r[(2, 1)] - r[(1, 2)]) / s,
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(1, 0)] - r[(0, 1)]) / s,
        )
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(2, 1)] - r[(1, 2)]) / s,
            0.25 * s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
        )
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            0.25 * s,
            (r[(1, 2)] + r[(2, 1)]) / s,
        )
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(1, 0)] - r[(0, 1)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
            (r[(1, 2)] + r[(2, 1)]) / s,
            0.25 * s,
        )
    };
    q.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;

    #[test]
    fn rotation_matches_nalgebra_for_unit_quaternions() {
        let uq = UnitQuaternion::from_euler_angles(0.3, -0.7, 1.9);
        let r = rotation_matrix(uq.quaternion());
        assert!((r - uq.to_rotation_matrix().into_inner()).norm() < 1e-14);
        let back = quaternion_from_matrix(&r);
        let same = (back.coords - uq.quaternion().coords).norm() < 1e-12
            || (back.coords + uq.quaternion().coords).norm() < 1e-12;
        assert!(same);
    }

    #[test]
    fn rotation_partials_match_finite_differences() {
        let q = Quaternion::new(0.9, -0.2, 0.35, 0.1);
        let partials = rotation_matrix_partials(&q);
        let h = 1e-7;
        for (i, partial) in partials.iter().enumerate() {
            let mut plus = quat_to_wxyz(&q);
            let mut minus = plus;
            plus[i] += h;
            minus[i] -= h;
            let fd = (rotation_matrix(&quat_from_wxyz(&plus))
                - rotation_matrix(&quat_from_wxyz(&minus)))
                / (2.0 * h);
            assert!((fd - partial).norm() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn right_product_matches_hamilton_product() {
        let q = Quaternion::new(0.5, 0.1, -0.4, 0.3);
        let w = Vec3::new(0.7, -1.1, 2.0);
        let prod = q * Quaternion::new(0.0, w.x, w.y, w.z);
        let via = right_product_matrix(&w) * quat_to_wxyz(&q);
        assert!((quat_to_wxyz(&prod) - via).norm() < 1e-15);
    }

    #[test]
    fn skew_and_vee_are_inverse() {
        let a = Vec3::new(1.0, -2.0, 0.5);
        let b = Vec3::new(0.3, 0.2, -0.9);
        assert!((skew(&a) * b - a.cross(&b)).norm() < 1e-15);
        assert_eq!(vee(&skew(&a)), a);
    }
}
