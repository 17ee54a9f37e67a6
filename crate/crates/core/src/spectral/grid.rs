use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)` standing in for the real line.
///
/// Points are `x_j = -L/2 + j L/n`; frequencies are stored in centered order,
/// index `i` carrying wavenumber `k = i - n/2` and frequency `2 pi k / L`.
/// Index 0 is the unpaired Nyquist mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::invalid("n", n as f64, "point count must be even and at least 4"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("length", length, "domain length must be positive"));
        }
        Ok(Self { n, length })
    }

    /// Default desk grid, n = 1024 on L = 100.
    pub fn desk() -> Self {
        Self {
            n: 1024,
            length: 100.0,
        }
    }

    /// Same spacing, twice the extent.
    pub fn doubled(&self) -> Self {
        Self {
            n: 2 * self.n,
            length: 2.0 * self.length,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Frequency spacing `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn point(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed wavenumber of centered index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        i as i64 - (self.n / 2) as i64
    }

    /// Centered index of wavenumber `k`, if it is on the grid.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        (-half..half).contains(&k).then(|| (k + half) as usize)
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.wavenumber(i) as f64 * self.dxi()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.frequency(i)).collect()
    }

    /// Centered index of the Nyquist mode `k = -n/2`.
    pub const NYQUIST: usize = 0;

    /// Centered index of the mean mode `k = 0`.
    pub fn zero_index(&self) -> usize {
        self.n / 2
    }

    /// Index of `-k` for centered index `i` (the Nyquist index maps to itself).
    pub fn mirror(&self, i: usize) -> usize {
        if i == Self::NYQUIST {
            i
        } else {
            self.n - i
        }
    }

    pub fn nyquist_frequency(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            n: self.n,
            length: self.length,
        }
    }
}

/// Plain-data description of a grid for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub n: usize,
    pub length: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_degenerate() {
        assert!(Grid1D::new(7, 1.0).is_err());
        assert!(Grid1D::new(8, 0.0).is_err());
        assert!(Grid1D::new(8, f64::NAN).is_err());
        assert!(Grid1D::new(8, 2.0).is_ok());
    }

    #[test]
    fn frequencies_symmetric_except_nyquist() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let xi = g.frequencies();
        assert_eq!(xi[Grid1D::NYQUIST], -8.0);
        assert_eq!(xi[g.zero_index()], 0.0);
        for i in 1..16 {
            assert_eq!(xi[i], -xi[g.mirror(i)]);
        }
        assert_eq!(g.index_of(3), Some(11));
        assert_eq!(g.index_of(8), None);
    }

    #[test]
    fn points_cover_centered_period() {
        let g = Grid1D::desk();
        assert_eq!(g.point(0), -50.0);
        assert_eq!(g.point(512), 0.0);
        assert!((g.point(1023) + g.dx() - 50.0).abs() < 1e-12);
    }
}
