//! Euler characteristic of a binary mask read as a union of closed unit
//! cells (squares in 2D, cubes in 3D), counted as
//! `V - E + F` (2D) or `V - E + F - C` (3D) over the distinct cells of the
//! union.
//!
//! The planar count treats everything outside the grid as empty. The
//! periodic count identifies opposite faces, so the union lives on the
//! torus.

use crate::Dim;

/// Copies the mask into a `(side + 2)^dim` buffer with a one-cell halo,
/// zero for planar and wrapped for periodic boundaries.
fn padded(bits: &[bool], side: usize, dim: Dim, periodic: bool) -> Vec<u8> {
    let p = side + 2;
    let src = |c: usize| -> Option<usize> {
        // halo coordinate -> source coordinate
        if c == 0 {
            periodic.then_some(side - 1)
        } else if c == side + 1 {
            periodic.then_some(0)
        } else {
            Some(c - 1)
        }
    };
    match dim {
        Dim::Two => {
            let mut out = vec![0u8; p * p];
            for y in 0..p {
                let Some(sy) = src(y) else { continue };
                for x in 0..p {
                    let Some(sx) = src(x) else { continue };
                    out[y * p + x] = bits[sy * side + sx] as u8;
                }
            }
            out
        }
        Dim::Three => {
            let mut out = vec![0u8; p * p * p];
            for z in 0..p {
                let Some(sz) = src(z) else { continue };
                for y in 0..p {
                    let Some(sy) = src(y) else { continue };
                    for x in 0..p {
                        let Some(sx) = src(x) else { continue };
                        out[(z * p + y) * p + x] = bits[(sz * side + sy) * side + sx] as u8;
                    }
                }
            }
            out
        }
    }
}

/// Closed-cell Euler characteristic of a planar (non-wrapping) mask.
pub fn euler_planar(bits: &[bool], side: usize, dim: Dim) -> i64 {
    count(bits, side, dim, false)
}

/// Closed-cell Euler characteristic of the mask on the periodic torus.
pub fn euler_periodic(bits: &[bool], side: usize, dim: Dim) -> i64 {
    count(bits, side, dim, true)
}

fn count(bits: &[bool], side: usize, dim: Dim, periodic: bool) -> i64 {
    match dim {
        Dim::Two => count_2d(&padded(bits, side, dim, periodic), side, periodic),
        Dim::Three => count_3d(&padded(bits, side, dim, periodic), side, periodic),
    }
}

// Padded index q = c + 1 holds pixel c, so the pixels around vertex v are at
// padded indices v and v + 1.
fn count_2d(q: &[u8], side: usize, periodic: bool) -> i64 {
    let p = side + 2;
    let nv = if periodic { side } else { side + 1 };
    let at = |y: usize, x: usize| q[y * p + x];

    let mut vertices = 0i64;
    let mut edges = 0i64;
    for vy in 0..nv {
        for vx in 0..nv {
            vertices += (at(vy, vx) | at(vy, vx + 1) | at(vy + 1, vx) | at(vy + 1, vx + 1)) as i64;
        }
        // edges along x starting at (vy, vx)
        for vx in 0..side {
            edges += (at(vy, vx + 1) | at(vy + 1, vx + 1)) as i64;
        }
    }
    // edges along y
    for vy in 0..side {
        for vx in 0..nv {
            edges += (at(vy + 1, vx) | at(vy + 1, vx + 1)) as i64;
        }
    }
    let faces = (1..=side)
        .flat_map(|y| (1..=side).map(move |x| (y, x)))
        .filter(|&(y, x)| at(y, x) != 0)
        .count() as i64;
    vertices - edges + faces
}

fn count_3d(q: &[u8], side: usize, periodic: bool) -> i64 {
    let p = side + 2;
    let nv = if periodic { side } else { side + 1 };
    let at = |z: usize, y: usize, x: usize| q[(z * p + y) * p + x] != 0;

    // A cell is the product of, per axis, either a vertex coordinate
    // (range 0..nv, touching padded cells v and v + 1) or a unit interval
    // (range 0..side, touching only padded cell v + 1). It belongs to the
    // union iff one of its incident top-dimensional cubes is set.
    let mut chi = 0i64;
    for mask in 0u8..8 {
        // bit set => cell extends along that axis (z, y, x)
        let extent = |axis: u8| mask & (1 << axis) != 0;
        let k = mask.count_ones() as i64;
        let range = |axis: u8| if extent(axis) { side } else { nv };
        let offs = |axis: u8| -> &'static [usize] {
            if extent(axis) {
                &[1]
            } else {
                &[0, 1]
            }
        };
        let mut present = 0i64;
        for z in 0..range(2) {
            for y in 0..range(1) {
                for x in 0..range(0) {
                    let hit = offs(2).iter().any(|&dz| {
                        offs(1)
                            .iter()
                            .any(|&dy| offs(0).iter().any(|&dx| at(z + dz, y + dy, x + dx)))
                    });
                    present += hit as i64;
                }
            }
        }
        chi += if k % 2 == 0 { present } else { -present };
    }
    chi
}
