use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speeds below this (mm/s) leave curvature undefined; it is reported as 0.
pub const CURVATURE_SPEED_FLOOR: f64 = 0.01;

pub const MIN_DERIVATIVE_SAMPLES: usize = 4;

/// Derivative profiles of one pen-down trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicProfiles {
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    /// mm/s
    pub speed: Vec<f64>,
    /// |a|, mm/s²
    pub accel: Vec<f64>,
    /// |j|, mm/s³
    pub jerk: Vec<f64>,
    /// Unwrapped heading, radians.
    pub path_angle: Vec<f64>,
    /// Signed curvature, 1/mm.
    pub curvature: Vec<f64>,
}

/// First derivative on a uniform grid: central differences inside, one-sided
/// differences at both ends.
pub fn gradient(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let mut out = vec![0.0; n];
            out[0] = (values[1] - values[0]) / dt;
            out[n - 1] = (values[n - 1] - values[n - 2]) / dt;
            for i in 1..n - 1 {
                out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
            }
            out
        }
    }
}

/// Removes 2π jumps between consecutive angles.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        if i > 0 {
            let prev = angles[i - 1];
            let d = a - prev;
            if d > PI {
                offset -= TAU * ((d + PI) / TAU).floor();
            } else if d < -PI {
                offset += TAU * ((-d + PI) / TAU).floor();
            }
        }
        out.push(a + offset);
    }
    out
}

/// Computes speed, acceleration, jerk, heading and curvature for uniformly
/// sampled coordinates.
pub fn kinematic_derivatives(x: &[f64], y: &[f64], dt: f64) -> Result<KinematicProfiles> {
    let n = x.len();
    if n < MIN_DERIVATIVE_SAMPLES || y.len() != n {
        return Err(Error::TooShort { len: n.min(y.len()), min: MIN_DERIVATIVE_SAMPLES });
    }
    let vx = gradient(x, dt);
    let vy = gradient(y, dt);
    let ax = gradient(&vx, dt);
    let ay = gradient(&vy, dt);
    let jx = gradient(&ax, dt);
    let jy = gradient(&ay, dt);
    let speed: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).collect();
    let accel = ax.iter().zip(&ay).map(|(a, b)| a.hypot(*b)).collect();
    let jerk = jx.iter().zip(&jy).map(|(a, b)| a.hypot(*b)).collect();
    let raw_angle: Vec<f64> = vy.iter().zip(&vx).map(|(b, a)| b.atan2(*a)).collect();
    let path_angle = unwrap_angles(&raw_angle);
    let floor2 = CURVATURE_SPEED_FLOOR * CURVATURE_SPEED_FLOOR;
    let curvature = (0..n)
        .map(|i| {
            let v2 = vx[i] * vx[i] + vy[i] * vy[i];
            if v2 < floor2 {
                0.0
            } else {
                (vx[i] * ay[i] - vy[i] * ax[i]) / v2.powf(1.5)
            }
        })
        .collect();
    Ok(KinematicProfiles { vx, vy, ax, ay, jx, jy, speed, accel, jerk, path_angle, curvature })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 180.0;

    #[test]
    fn straight_line_constant_speed() {
        let v = 25.0;
        let x: Vec<f64> = (0..100).map(|i| v * i as f64 * DT).collect();
        let y = vec![0.0; 100];
        let k = kinematic_derivatives(&x, &y, DT).unwrap();
        for i in 1..99 {
            assert!((k.speed[i] - v).abs() < 1e-6 * v);
            assert!(k.accel[i].abs() < 1e-6 * v);
        }
        assert!((k.speed[0] - v).abs() < 1e-6 * v);
    }

    #[test]
    fn circle_speed_and_curvature() {
        let (r, w) = (20.0, 2.0);
        let ts: Vec<f64> = (0..360).map(|i| i as f64 * DT).collect();
        let x: Vec<f64> = ts.iter().map(|t| r * (w * t).cos()).collect();
        let y: Vec<f64> = ts.iter().map(|t| r * (w * t).sin()).collect();
        let k = kinematic_derivatives(&x, &y, DT).unwrap();
        for i in 3..357 {
            assert!((k.speed[i] - r * w).abs() < 0.01 * r * w);
            assert!((k.curvature[i] - 1.0 / r).abs() < 0.01 / r);
        }
        // heading unwraps: total turn = w * duration, more than pi
        let turn = k.path_angle[357] - k.path_angle[2];
        assert!((turn - w * 355.0 * DT).abs() < 1e-3, "turn {turn}");
    }

    #[test]
    fn cubic_jerk_is_six() {
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * DT).powi(3)).collect();
        let y = vec![0.0; 60];
        let k = kinematic_derivatives(&x, &y, DT).unwrap();
        for i in 3..57 {
            assert!((k.jx[i] - 6.0).abs() < 6e-3, "jx[{i}] = {}", k.jx[i]);
        }
    }

    #[test]
    fn curvature_guard_at_rest() {
        let x = vec![1.0; 10];
        let y = vec![2.0; 10];
        let k = kinematic_derivatives(&x, &y, DT).unwrap();
        assert!(k.curvature.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn too_short() {
        assert!(matches!(kinematic_derivatives(&[0.0; 3], &[0.0; 3], DT), Err(Error::TooShort { .. })));
    }

    #[test]
    fn unwrap_removes_jumps() {
        let a = [3.0, -3.1, 3.1, -3.0];
        let u = unwrap_angles(&a);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
    }
}
