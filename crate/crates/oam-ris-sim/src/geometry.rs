//! Element placement for the transmit ring, receive rings, and the
//! reflecting panel, plus random user poses.
//!
//! Coordinates are meters in a fixed right-handed frame: the transmit ring
//! is centered on the origin in the `z = 0` plane, the reflecting panel
//! stands in a plane of constant `x`, and users sit inside a sphere off to
//! the side. A user's ring is tilted by two tangent-parameterized angles,
//! one about each in-plane axis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};

/// Position and orientation of one user's receive ring.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPose {
    /// Ring center in meters.
    pub center: Vector3<f64>,
    /// Tilt about the first in-plane axis, radians in `[0, pi/2)`.
    pub tilt_x: f64,
    /// Tilt about the second in-plane axis, radians in `[0, pi/2)`.
    pub tilt_y: f64,
}

/// Transmit ring: `n` elements evenly spaced on a circle of radius `radius`
/// in the `z = 0` plane, starting on the positive x-axis.
pub fn transmit_uca_positions(n: usize, radius: f64) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|i| {
            let angle = TAU * i as f64 / n as f64;
            Vector3::new(radius * angle.cos(), radius * angle.sin(), 0.0)
        })
        .collect()
}

/// Receive ring for one user.
///
/// The ring plane is normal to `(tan tilt_x, tan tilt_y, 1)`; its in-plane
/// axes come from crossing that normal with the x-axis and renormalizing.
/// Element `l` sits at `center - r cos(a_l) b + r sin(a_l) c` with
/// `a_l = 2 pi l / n`, so an untilted ring starts directly below the center
/// on the negative y side. Tilts at or beyond a right angle are rejected
/// because the tangent parameterization breaks down there.
pub fn receiver_uca_positions(
    pose: &UserPose,
    n: usize,
    radius: f64,
) -> Result<Vec<Vector3<f64>>> {
    if !pose.tilt_x.is_finite() || pose.tilt_x.abs() >= FRAC_PI_2 {
        return Err(Error::TangentSingularity { which: "tilt_x" });
    }
    if !pose.tilt_y.is_finite() || pose.tilt_y.abs() >= FRAC_PI_2 {
        return Err(Error::TangentSingularity { which: "tilt_y" });
    }
    let normal = Vector3::new(pose.tilt_x.tan(), pose.tilt_y.tan(), 1.0);
    let first = normal.cross(&Vector3::x()).normalize();
    let second = normal.cross(&normal.cross(&Vector3::x())).normalize();
    Ok((0..n)
        .map(|l| {
            let angle = TAU * l as f64 / n as f64;
            pose.center - first * (radius * angle.cos()) + second * (radius * angle.sin())
        })
        .collect())
}

/// Total deflection between the transmit boresight (the z-axis) and a ring
/// tilted by `(tilt_x, tilt_y)`: `atan(sqrt(tan^2 tilt_x + tan^2 tilt_y))`.
pub fn deflection_angle(tilt_x: f64, tilt_y: f64) -> f64 {
    (tilt_x.tan().hypot(tilt_y.tan())).atan()
}

///// Reflecting panel: an `m_y x m_z` grid in a plane of constant `x`,
/// centered on `center`, with spacings `d_y` and `d_z`.
///
/// Element `m` maps to grid cell `(m / m_z, m % m_z)`, so the z index runs
/// fastest; both axes are offset so the grid is centered.
pub fn ris_upa_positions(
    center: Vector3<f64>,
    m_y: usize,
    m_z: usize,
    d_y: f64,
    d_z: f64,
) -> Vec<Vector3<f64>> {
    let mut points = Vec::with_capacity(m_y * m_z);
    for iy in 0..m_y {
        for iz in 0..m_z {
            points.push(Vector3::new(
                center.x,
                center.y + d_y * (iy as f64 + 0.5 * (1.0 - m_y as f64)),
                center.z + d_z * (iz as f64 + 0.5 * (1.0 - m_z as f64)),
            ));
        }
    }
    points
}

/// Draws `count` user poses: centers uniform inside a sphere (rejection
/// sampling on the bounding cube), tilts uniform in `[0, pi/4]`.
///
/// Per user the draw order is fixed: center first (three coordinates per
/// rejection attempt), then the two tilts, so a given RNG state always
/// produces the same poses.
pub fn sample_user_poses(
    rng: &mut impl Rng,
    count: usize,
    region_center: Vector3<f64>,
    region_radius: f64,
) -> Vec<UserPose> {
    assert!(
        region_radius > 0.0,
        "user region radius must be positive (validated at config load)"
    );
    (0..count)
        .map(|_| {
            let offset = loop {
                let candidate = Vector3::new(
                    rng.random_range(-region_radius..=region_radius),
                    rng.random_range(-region_radius..=region_radius),
                    rng.random_range(-region_radius..=region_radius),
                );
                if candidate.norm_squared() <= region_radius * region_radius {
                    break candidate;
                }
            };
            UserPose {
                center: region_center + offset,
                tilt_x: rng.random_range(0.0..=FRAC_PI_4),
                tilt_y: rng.random_range(0.0..=FRAC_PI_4),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_vec_close(actual: &Vector3<f64>, expected: &Vector3<f64>, tol: f64) {
        assert!(
            (actual - expected).norm() <= tol,
            "expected {expected:?}, got {actual:?}"
        );
    }

    #[test]
    fn transmit_ring_with_four_elements_hits_the_axes() {
        let pts = transmit_uca_positions(4, 2.0);
        assert_eq!(pts.len(), 4);
        assert_vec_close(&pts[0], &Vector3::new(2.0, 0.0, 0.0), 1e-12);
        assert_vec_close(&pts[1], &Vector3::new(0.0, 2.0, 0.0), 1e-12);
        assert_vec_close(&pts[2], &Vector3::new(-2.0, 0.0, 0.0), 1e-12);
        assert_vec_close(&pts[3], &Vector3::new(0.0, -2.0, 0.0), 1e-12);
    }

    #[test]
    fn transmit_ring_stays_on_circle_in_base_plane() {
        let pts = transmit_uca_positions(20, 1.0);
        for p in &pts {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn transmit_ring_single_element_sits_on_x_axis() {
        let pts = transmit_uca_positions(1, 0.5);
        assert_eq!(pts.len(), 1);
        assert_vec_close(&pts[0], &Vector3::new(0.5, 0.0, 0.0), 1e-15);
    }

    #[test]
    fn untilted_receive_ring_matches_hand_construction() {
        let pose = UserPose {
            center: Vector3::new(10.0, 2.0, 1.0),
            tilt_x: 0.0,
            tilt_y: 0.0,
        };
        // normal (0,0,1): first = (0,1,0), second = (-1,0,0)
        let pts = receiver_uca_positions(&pose, 4, 0.2).unwrap();
        assert_vec_close(&pts[0], &Vector3::new(10.0, 1.8, 1.0), 1e-12);
        assert_vec_close(&pts[1], &Vector3::new(9.8, 2.0, 1.0), 1e-12);
        assert_vec_close(&pts[2], &Vector3::new(10.0, 2.2, 1.0), 1e-12);
        assert_vec_close(&pts[3], &Vector3::new(10.2, 2.0, 1.0), 1e-12);
    }

    #[test]
    fn tilted_receive_ring_keeps_radius_and_center() {
        let pose = UserPose {
            center: Vector3::new(8.0, -1.0, 3.0),
            tilt_x: 0.3,
            tilt_y: 0.6,
        };
        let pts = receiver_uca_positions(&pose, 5, 0.2).unwrap();
        let mean = pts.iter().sum::<Vector3<f64>>() / 5.0;
        assert_vec_close(&mean, &pose.center, 1e-12);
        for p in &pts {
            assert!(((p - pose.center).norm() - 0.2).abs() < 1e-12);
        }
        // all elements lie in the plane normal to (tan tx, tan ty, 1)
        let normal = Vector3::new(pose.tilt_x.tan(), pose.tilt_y.tan(), 1.0).normalize();
        for p in &pts {
            assert!((p - pose.center).dot(&normal).abs() < 1e-12);
        }
    }

    #[test]
    fn right_angle_tilt_is_rejected() {
        let pose = UserPose {
            center: Vector3::zeros(),
            tilt_x: FRAC_PI_2,
            tilt_y: 0.0,
        };
        assert!(matches!(
            receiver_uca_positions(&pose, 4, 0.2),
            Err(Error::TangentSingularity { which: "tilt_x" })
        ));
    }

    #[test]
    fn deflection_angle_known_values() {
        assert_eq!(deflection_angle(0.0, 0.0), 0.0);
        let t = 0.4;
        assert!((deflection_angle(t, 0.0) - t).abs() < 1e-12);
        assert!((deflection_angle(0.0, t) - t).abs() < 1e-12);
        // both tilts at pi/4: atan(sqrt(2)) ~ 0.9553
        let both = deflection_angle(FRAC_PI_4, FRAC_PI_4);
        assert!((both - 2.0f64.sqrt().atan()).abs() < 1e-12);
        assert!((both - 0.9553166181245093).abs() < 1e-10);
    }

    #[test]
    fn deflection_angle_matches_ring_normal_oracle() {
        // independent route: measure the angle between the constructed ring
        // normal and the boresight axis
        for &(tx, ty) in &[(0.1, 0.0), (0.0, 0.7), (0.3, 0.5), (FRAC_PI_4, FRAC_PI_4)] {
            let normal = Vector3::new(tx.tan(), ty.tan(), 1.0).normalize();
            let oracle = normal.dot(&Vector3::z()).acos();
            assert!(
                (deflection_angle(tx, ty) - oracle).abs() < 1e-12,
                "mismatch at ({tx}, {ty})"
            );
        }
    }

    #[test]
    fn panel_grid_is_centered_with_z_fastest() {
        let center = Vector3::new(5.0, 2.0, 1.0);
        let pts = ris_upa_positions(center, 2, 3, 0.5, 0.1);
        assert_eq!(pts.len(), 6);
        // element 0: lowest y, lowest z; element 1 moves in z only
        assert_vec_close(&pts[0], &Vector3::new(5.0, 1.75, 0.9), 1e-12);
        assert_vec_close(&pts[1], &Vector3::new(5.0, 1.75, 1.0), 1e-12);
        assert_vec_close(&pts[3], &Vector3::new(5.0, 2.25, 0.9), 1e-12);
        let mean = pts.iter().sum::<Vector3<f64>>() / 6.0;
        assert_vec_close(&mean, &center, 1e-12);
        for p in &pts {
            assert_eq!(p.x, 5.0);
        }
    }

    #[test]
    fn single_element_panel_sits_at_center() {
        let center = Vector3::new(5.0, 2.0, 1.0);
        let pts = ris_upa_positions(center, 1, 1, 0.03, 0.03);
        assert_eq!(pts.len(), 1);
        assert_vec_close(&pts[0], &center, 1e-15);
    }

    #[test]
    fn sampled_poses_stay_in_region_with_bounded_tilts() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let center = Vector3::new(10.0, 2.0, 1.0);
        let poses = sample_user_poses(&mut rng, 64, center, 2.0);
        assert_eq!(poses.len(), 64);
        for pose in &poses {
            assert!((pose.center - center).norm() <= 2.0 + 1e-12);
            assert!((0.0..=FRAC_PI_4).contains(&pose.tilt_x));
            assert!((0.0..=FRAC_PI_4).contains(&pose.tilt_y));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let center = Vector3::new(10.0, 2.0, 1.0);
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(
            sample_user_poses(&mut a, 8, center, 2.0),
            sample_user_poses(&mut b, 8, center, 2.0)
        );
        let mut c = ChaCha8Rng::seed_from_u64(8);
        assert_ne!(
            sample_user_poses(&mut a, 8, center, 2.0),
            sample_user_poses(&mut c, 8, center, 2.0)
        );
    }

    #[test]
    fn sampled_centers_average_near_region_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let center = Vector3::new(10.0, 2.0, 1.0);
        let poses = sample_user_poses(&mut rng, 4000, center, 2.0);
        let mean = poses.iter().map(|p| p.center).sum::<Vector3<f64>>() / 4000.0;
        // standard error of the mean per axis is ~ r/2/sqrt(n) ~ 0.016
        assert!((mean - center).norm() < 0.1, "mean offset {:?}", mean - center);
    }
}
