//! Topology of excursion sets of Gaussian random fields: field synthesis,
//! hole-spectrum decomposition of 2D excursion sets, Betti numbers in 3D,
//! ensemble statistics and counting of topological states.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod euler;
pub mod grf;
pub mod label;
pub mod quad;
pub mod spectrum;
pub mod states;
pub mod topo2d;
pub mod topo3d;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Spatial dimension of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::Config(format!("dimension must be 2 or 3, got {d}"))),
        }
    }

    /// Number of grid cells of a cube with `side` cells per axis.
    pub fn cells(self, side: usize) -> usize {
        side.pow(self.as_usize() as u32)
    }
}
