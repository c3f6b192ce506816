//! Global Betti numbers of 3D excursion sets.
//!
//! Foreground is 26-connected and background 6-connected, the pair that
//! matches the union of closed voxels. `b0` and `b2` are counted directly;
//! `b1` follows from `chi = b0 - b1 + b2` with `chi` from the closed-cell
//! count.

use crate::error::{Error, Result};
use crate::euler::euler_planar;
use crate::label::{label, touches_border, Connectivity};
use crate::topo2d::{ExcursionMask, TopoStats};
use crate::Dim;

pub fn betti3d(mask: &ExcursionMask) -> Result<TopoStats> {
    if mask.dim != Dim::Three {
        return Err(Error::Domain("betti3d needs a 3D mask".into()));
    }
    let side = mask.side;
    let fg = label(&mask.bits, side, Dim::Three, true, Connectivity::Full);
    let bg = label(&mask.bits, side, Dim::Three, false, Connectivity::Face);
    let b0 = fg.count as i64;
    let b2 = touches_border(&bg, side, Dim::Three)
        .iter()
        .filter(|&&t| !t)
        .count() as i64;
    let chi = euler_planar(&mask.bits, side, Dim::Three);
    let b1 = b0 + b2 - chi;
    assert!(
        b1 >= 0,
        "negative b1 = {b1}: connectivity and Euler conventions disagree"
    );
    Ok(TopoStats::from_betti(
        mask.nu, b0 as u64, b1 as u64, b2 as u64,
    ))
}
