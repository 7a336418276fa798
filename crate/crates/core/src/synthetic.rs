//! Seeded synthetic skeleton data for smoke tests, ablations and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::io::{CanonicalDataset, Sample};
use crate::skeleton::SkeletonSequence;

/// Coordinates uniform in `[-1, 1]`, independent per frame.
pub fn random_sequence(rng: &mut impl Rng, num_joints: usize, coord_dim: usize, len: usize) -> Result<SkeletonSequence> {
    let data = (0..len * num_joints * coord_dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    SkeletonSequence::new(num_joints, coord_dim, data)
}

fn random_pose(rng: &mut impl Rng, num_joints: usize, coord_dim: usize) -> Vec<f32> {
    (0..num_joints * coord_dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

/// Random proper rotation in 2D or 3D, row-major `d x d`.
pub fn random_rotation(rng: &mut impl Rng, coord_dim: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    if coord_dim == 2 {
        let a = rng.gen_range(0.0..2.0 * PI);
        return vec![a.cos(), -a.sin(), a.sin(), a.cos()];
    }
    // Uniform unit quaternion (Shoemake).
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin());
    vec![
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ]
}

/// Applies `p -> R p + t` to one joint.
pub fn rigid_transform(joint: &mut [f32], rotation: &[f64], translation: &[f64]) {
    let d = joint.len();
    let p: Vec<f64> = joint.iter().map(|&v| v as f64).collect();
    for i in 0..d {
        let rotated: f64 = (0..d).map(|j| rotation[i * d + j] * p[j]).sum();
        joint[i] = (rotated + translation[i]) as f32;
    }
}

/// Half-width of the per-coordinate jitter in [`trajectory_classes`].
pub const JITTER: f64 = 0.01;

fn class_names(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("class_{c}")).collect()
}

/// Classes told apart by their joint-distance pattern.
///
/// Every class has its own base pose. A sample places that pose under a
/// random rigid transform, adds a small per-joint oscillation over time and
/// drifts it along a random path, so only the pose geometry carries the label.
pub fn pose_classes(
    num_classes: usize,
    per_class: usize,
    num_joints: usize,
    coord_dim: usize,
    len: usize,
    seed: u64,
) -> Result<CanonicalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses: Vec<Vec<f32>> = (0..num_classes).map(|_| random_pose(&mut rng, num_joints, coord_dim)).collect();
    let mut samples = Vec::with_capacity(num_classes * per_class);
    for (label, pose) in poses.iter().enumerate() {
        for k in 0..per_class {
            let rot = random_rotation(&mut rng, coord_dim);
            let start: Vec<f64> = (0..coord_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let drift: Vec<f64> = (0..coord_dim).map(|_| rng.gen_range(-0.05..0.05)).collect();
            let phase: Vec<f32> = (0..num_joints).map(|_| rng.gen_range(0.0..std::f32::consts::TAU)).collect();
            let mut data = Vec::with_capacity(len * pose.len());
            for t in 0..len {
                let shift: Vec<f64> = start.iter().zip(&drift).map(|(s, d)| s + d * t as f64).collect();
                for (j, base) in pose.chunks_exact(coord_dim).enumerate() {
                    let wobble = 0.03 * (0.4 * t as f32 + phase[j]).sin();
                    let mut joint: Vec<f32> = base.iter().map(|v| v * (1.0 + wobble)).collect();
                    rigid_transform(&mut joint, &rot, &shift);
                    data.extend_from_slice(&joint);
                }
            }
            samples.push(Sample {
                id: format!("pose{label}_{k}"),
                label,
                sequence: SkeletonSequence::new(num_joints, coord_dim, data)?,
            });
        }
    }
    CanonicalDataset::new(class_names(num_classes), num_joints, coord_dim, samples)
}

/// Classes told apart only by global trajectory.
///
/// Every sample is the same hand pose, translated along a straight line
/// whose direction is set by the class (evenly spaced angles in the x-y
/// plane). Start point and speed vary per sample. Each joint also gets small
/// independent per-frame uniform jitter of at most `JITTER`, like sensor noise, drawn the same
/// way for every class, so joint distances carry no label information.
///
/// Without the jitter every joint-distance channel would be exactly constant
/// across the dataset, which leaves batch normalization nothing to normalize.
pub fn trajectory_classes(
    num_classes: usize,
    per_class: usize,
    num_joints: usize,
    coord_dim: usize,
    len: usize,
    seed: u64,
) -> Result<CanonicalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pose = random_pose(&mut rng, num_joints, coord_dim);
    let mut samples = Vec::with_capacity(num_classes * per_class);
    for label in 0..num_classes {
        let angle = std::f64::consts::TAU * label as f64 / num_classes as f64;
        for k in 0..per_class {
            let speed = rng.gen_range(0.02..0.06);
            let start: Vec<f64> = (0..coord_dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let mut data = Vec::with_capacity(len * pose.len());
            for t in 0..len {
                let step = speed * t as f64;
                let mut offset = start.clone();
                offset[0] += step * angle.cos();
                offset[1] += step * angle.sin();
                for base in pose.chunks_exact(coord_dim) {
                    for (&b, &o) in base.iter().zip(&offset) {
                        let noise = rng.gen_range(-JITTER..JITTER);
                        data.push((b as f64 + o + noise) as f32);
                    }
                }
            }
            samples.push(Sample {
                id: format!("traj{label}_{k}"),
                label,
                sequence: SkeletonSequence::new(num_joints, coord_dim, data)?,
            });
        }
    }
    CanonicalDataset::new(class_names(num_classes), num_joints, coord_dim, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [2, 3] {
            for _ in 0..20 {
                let r = random_rotation(&mut rng, d);
                for i in 0..d {
                    for j in 0..d {
                        let dot: f64 = (0..d).map(|k| r[i * d + k] * r[j * d + k]).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn datasets_are_balanced_and_deterministic() {
        let a = pose_classes(4, 8, 22, 3, 20, 5).unwrap();
        assert_eq!(a.class_counts(), vec![8; 4]);
        assert_eq!(a, pose_classes(4, 8, 22, 3, 20, 5).unwrap());
        let t = trajectory_classes(4, 3, 22, 3, 20, 5).unwrap();
        assert_eq!(t.len(), 12);
    }
}
