use crate::skeleton::JointFrame;

/// Length of the flattened strictly-lower-triangular distance matrix, `N(N-1)/2`.
pub const fn jcd_dim(num_joints: usize) -> usize {
    num_joints * num_joints.saturating_sub(1) / 2
}

/// Pairwise joint distances of one frame.
///
/// Entries are ordered row-major over the strictly lower triangle:
/// `(2,1), (3,1), (3,2), (4,1), ...` in 1-based joint indices.
pub fn compute_jcd(frame: &JointFrame) -> Vec<f32> {
    let mut out = vec![0.0; jcd_dim(frame.num_joints())];
    jcd_into(frame.coords(), frame.coord_dim(), &mut out);
    out
}

/// Writes the distances for flat `coords` into `out` (length `jcd_dim(N)`).
pub fn jcd_into(coords: &[f32], coord_dim: usize, out: &mut [f32]) {
    let n = coords.len() / coord_dim;
    debug_assert_eq!(out.len(), jcd_dim(n));
    let mut idx = 0;
    for i in 1..n {
        let a = &coords[i * coord_dim..(i + 1) * coord_dim];
        for j in 0..i {
            let b = &coords[j * coord_dim..(j + 1) * coord_dim];
            let sq: f32 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            out[idx] = sq.sqrt();
            idx += 1;
        }
    }
}
