//! Connected-component labelling of binary grids (two-pass, union-find).
//!
//! Grids are planar: neighbourhoods never wrap around the edges.

use crate::Dim;

/// Which lattice neighbours count as adjacent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// Shared edge (2D, 4 neighbours) or shared face (3D, 6 neighbours).
    Face,
    /// Any shared vertex: 8 neighbours in 2D, 26 in 3D.
    Full,
}

/// Component labels: `labels[i]` is 0 for pixels outside the labelled set
/// and `1..=count` otherwise. Labels are numbered in raster order of each
/// component's first pixel, which is stored in `first`.
#[derive(Debug, Clone)]
pub struct Labels {
    pub labels: Vec<u32>,
    pub count: usize,
    /// `first[c - 1]` is the raster index of the first pixel of component `c`.
    pub first: Vec<usize>,
}

/// `(dz, dy, dx)` offsets of already-visited neighbours in raster order.
fn backward_offsets(dim: Dim, conn: Connectivity) -> Vec<[isize; 3]> {
    let zr: &[isize] = match dim {
        Dim::Two => &[0],
        Dim::Three => &[-1, 0, 1],
    };
    let mut out = Vec::new();
    for &dz in zr {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nonzero = (dz != 0) as u8 + (dy != 0) as u8 + (dx != 0) as u8;
                if nonzero == 0 {
                    continue;
                }
                if conn == Connectivity::Face && nonzero != 1 {
                    continue;
                }
                // lexicographically negative => visited earlier
                if (dz, dy, dx) < (0, 0, 0) {
                    out.push([dz, dy, dx]);
                }
            }
        }
    }
    out
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// Labels the pixels equal to `target`.
pub fn label(bits: &[bool], side: usize, dim: Dim, target: bool, conn: Connectivity) -> Labels {
    let nz = match dim {
        Dim::Two => 1,
        Dim::Three => side,
    };
    debug_assert_eq!(bits.len(), nz * side * side);
    let offsets = backward_offsets(dim, conn);
    let n = side as isize;
    let mut provisional = vec![0u32; bits.len()];
    // parent[0] is a sentinel for "no label".
    let mut parent: Vec<u32> = vec![0];

    let mut idx = 0usize;
    for z in 0..nz as isize {
        for y in 0..n {
            for x in 0..n {
                if bits[idx] == target {
                    let mut root = 0u32;
                    for &[dz, dy, dx] in &offsets {
                        let (zz, yy, xx) = (z + dz, y + dy, x + dx);
                        if zz < 0 || yy < 0 || xx < 0 || yy >= n || xx >= n {
                            continue;
                        }
                        let j = ((zz * n + yy) * n + xx) as usize;
                        let l = provisional[j];
                        if l == 0 {
                            continue;
                        }
                        let r = find(&mut parent, l);
                        if root == 0 {
                            root = r;
                        } else if r != root {
                            let (lo, hi) = if r < root { (r, root) } else { (root, r) };
                            parent[hi as usize] = lo;
                            root = lo;
                        }
                    }
                    if root == 0 {
                        root = parent.len() as u32;
                        parent.push(root);
                    }
                    provisional[idx] = root;
                }
                idx += 1;
            }
        }
    }

    // Compact roots to 1..=count in order of first appearance.
    let mut compact = vec![0u32; parent.len()];
    let mut first = Vec::new();
    for (i, l) in provisional.iter_mut().enumerate() {
        if *l == 0 {
            continue;
        }
        let r = find(&mut parent, *l) as usize;
        if compact[r] == 0 {
            first.push(i);
            compact[r] = first.len() as u32;
        }
        *l = compact[r];
    }
    Labels {
        labels: provisional,
        count: first.len(),
        first,
    }
}

/// Flags each component (index `c - 1`) that has a pixel on the grid border.
pub fn touches_border(labels: &Labels, side: usize, dim: Dim) -> Vec<bool> {
    let mut out = vec![false; labels.count];
    let last = side - 1;
    let mut mark = |i: usize| {
        let l = labels.labels[i];
        if l != 0 {
            out[l as usize - 1] = true;
        }
    };
    match dim {
        Dim::Two => {
            for t in 0..side {
                mark(t);
                mark(last * side + t);
                mark(t * side);
                mark(t * side + last);
            }
        }
        Dim::Three => {
            for z in 0..side {
                for y in 0..side {
                    for x in 0..side {
                        if z == 0 || z == last || y == 0 || y == last || x == 0 || x == last {
                            mark((z * side + y) * side + x);
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> (Vec<bool>, usize) {
        let side = rows.len();
        let bits = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect::<Vec<_>>();
        assert_eq!(bits.len(), side * side);
        (bits, side)
    }

    #[test]
    fn diagonal_pixels_join_only_under_full_connectivity() {
        let (bits, side) = grid(&["#...", ".#..", "....", "...#"]);
        assert_eq!(
            label(&bits, side, Dim::Two, true, Connectivity::Face).count,
            3
        );
        assert_eq!(
            label(&bits, side, Dim::Two, true, Connectivity::Full).count,
            2
        );
    }

    #[test]
    fn u_shape_merges_late() {
        // two arms meet only on the bottom row
        let (bits, side) = grid(&["#..#", "#..#", "#..#", "####"]);
        let l = label(&bits, side, Dim::Two, true, Connectivity::Face);
        assert_eq!(l.count, 1);
        assert_eq!(l.first, vec![0]);
    }

    #[test]
    fn first_pixels_are_raster_ordered() {
        let (bits, side) = grid(&["..#.", "#...", "...#", "...."]);
        let l = label(&bits, side, Dim::Two, true, Connectivity::Face);
        assert_eq!(l.first, vec![2, 4, 11]);
        assert_eq!(l.labels[2], 1);
        assert_eq!(l.labels[11], 3);
    }

    #[test]
    fn background_border_flags() {
        let (bits, side) = grid(&["....", ".##.", ".##.", "...."]);
        let bg = label(&bits, side, Dim::Two, false, Connectivity::Face);
        assert_eq!(bg.count, 1);
        assert_eq!(touches_border(&bg, side, Dim::Two), vec![true]);
    }

    #[test]
    fn three_d_corner_contact() {
        let side = 3;
        let mut bits = vec![false; 27];
        bits[0] = true; // (0,0,0)
        bits[13] = true; // (1,1,1)
        assert_eq!(
            label(&bits, side, Dim::Three, true, Connectivity::Full).count,
            1
        );
        assert_eq!(
            label(&bits, side, Dim::Three, true, Connectivity::Face).count,
            2
        );
    }
}
