use std::str::FromStr;

use anyhow::{bail, Context};
use das_core::beamformer::BeamformGrid;
use serde::{Deserialize, Serialize};

/// Rectangular grid given as `X0,X1,Z0,Z1,NX,NZ` (meters, counts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub z0: f64,
    pub z1: f64,
    pub nx: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn build(&self) -> anyhow::Result<BeamformGrid> {
        Ok(BeamformGrid::rectangular((self.x0, self.x1), (self.z0, self.z1), self.nx, self.nz)?)
    }
}

impl FromStr for GridSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            bail!("grid needs X0,X1,Z0,Z1,NX,NZ, got {s:?}");
        }
        let f = |i: usize| parts[i].parse::<f64>().with_context(|| format!("grid bound {:?}", parts[i]));
        let n = |i: usize| parts[i].parse::<usize>().with_context(|| format!("grid count {:?}", parts[i]));
        Ok(Self {
            x0: f(0)?,
            x1: f(1)?,
            z0: f(2)?,
            z1: f(3)?,
            nx: n(4)?,
            nz: n(5)?,
        })
    }
}

/// `LO,HI` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds(pub f64, pub f64);

impl FromStr for Bounds {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (a, b) = s.split_once(',').with_context(|| format!("bounds need LO,HI, got {s:?}"))?;
        Ok(Self(a.trim().parse()?, b.trim().parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid() {
        let g: GridSpec = "-0.01, 0.01,0.005,0.03,64,128".parse().unwrap();
        assert_eq!((g.nx, g.nz, g.x0, g.z1), (64, 128, -0.01, 0.03));
        assert!("1,2,3".parse::<GridSpec>().is_err());
        assert!("1,2,3,4,5,x".parse::<GridSpec>().is_err());
    }

    #[test]
    fn parses_bounds() {
        let b: Bounds = "1200,1700".parse().unwrap();
        assert_eq!(b, Bounds(1200.0, 1700.0));
        assert!("1200".parse::<Bounds>().is_err());
    }
}
