use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spectral::Spectral;
use super::FieldError;

/// A real coordinate `x_p^r` underlying `q^r = x_0^r + x_1^r i + x_2^r j + x_3^r k`.
/// `r` is zero-based here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub p: usize,
    pub r: usize,
}

impl Coord {
    pub const fn new(p: usize, r: usize) -> Self {
        Coord { p, r }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}^{}", self.p, self.r + 1)
    }
}

struct GridInner {
    n: usize,
    active: Vec<Coord>,
    sizes: Vec<usize>,
    total: usize,
    spectral: Spectral,
}

/// Uniform grid on the flat torus `(ℝ/2πℤ)^{4n}`, resolved only along the
/// active coordinates. Fields are constant along the others.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.inner.n)
            .field("active", &self.inner.active)
            .field("sizes", &self.inner.sizes)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self.inner.active == other.inner.active
                && self.inner.sizes == other.inner.sizes)
    }
}

impl TorusGrid {
    pub fn new(n: usize, active: Vec<Coord>, sizes: Vec<usize>) -> Result<Self, FieldError> {
        if n == 0 {
            return Err(FieldError::Grid("quaternionic dimension must be at least 1".into()));
        }
        if active.is_empty() {
            return Err(FieldError::Grid("at least one active coordinate is required".into()));
        }
        if active.len() != sizes.len() {
            return Err(FieldError::Grid(format!(
                "{} active coordinates but {} grid sizes",
                active.len(),
                sizes.len()
            )));
        }
        for (i, c) in active.iter().enumerate() {
            if c.p > 3 || c.r >= n {
                return Err(FieldError::Grid(format!("active coordinate {i} out of range: {c}")));
            }
            if active[..i].contains(c) {
                return Err(FieldError::Grid(format!("active coordinate {c} repeated")));
            }
        }
        for &s in &sizes {
            if s < 2 || !s.is_power_of_two() || s > u16::MAX as usize {
                return Err(FieldError::Grid(format!("grid size {s} is not a power of two in [2, 32768]")));
            }
        }
        let total = sizes.iter().product();
        let spectral = Spectral::new(&sizes);
        Ok(TorusGrid {
            inner: Arc::new(GridInner {
                n,
                active,
                sizes,
                total,
                spectral,
            }),
        })
    }

    /// All `4n` coordinates active with the same resolution.
    pub fn full(n: usize, points: usize) -> Result<Self, FieldError> {
        let active = (0..n).flat_map(|r| (0..4).map(move |p| Coord::new(p, r))).collect::<Vec<_>>();
        let sizes = vec![points; active.len()];
        Self::new(n, active, sizes)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn active(&self) -> &[Coord] {
        &self.inner.active
    }

    pub fn sizes(&self) -> &[usize] {
        &self.inner.sizes
    }

    pub fn len(&self) -> usize {
        self.inner.total
    }

    pub fn is_empty(&self) -> bool {
        self.inner.total == 0
    }

    pub fn spectral(&self) -> &Spectral {
        &self.inner.spectral
    }

    pub fn axis_of(&self, c: Coord) -> Option<usize> {
        self.inner.active.iter().position(|&a| a == c)
    }

    /// Nyquist frequency `N/2` of an active axis.
    pub fn nyquist(&self, axis: usize) -> usize {
        self.inner.sizes[axis] / 2
    }

    /// Grid coordinates (in `[0, 2π)`) of the point with flat index `idx`.
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for a in (0..self.inner.sizes.len()).rev() {
            let n = self.inner.sizes[a];
            out[a] = 2.0 * PI * (rem % n) as f64 / n as f64;
            rem /= n;
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.inner.sizes[axis] as f64
    }
}
