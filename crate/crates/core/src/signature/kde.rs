//! Product-Gaussian kernel density estimate on a regular grid.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SignatureSample;

pub const GRID_SIZE: usize = 100;
/// Smallest bandwidth used, so degenerate axes still give a finite density.
pub const BANDWIDTH_FLOOR: f64 = 1e-3;

/// Rectangle in (f2, f1) space; x is f2, y is f1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            x_min: 0.0,
            x_max: 1.0,
            y_min: -3.0,
            y_max: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureGrid {
    pub window: Window,
    pub size: usize,
    pub bandwidth: (f64, f64),
    /// Row-major, `density[iy * size + ix]`, evaluated at cell centers.
    pub density: Vec<f64>,
}

impl SignatureGrid {
    pub fn cell_width(&self) -> f64 {
        (self.window.x_max - self.window.x_min) / self.size as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.window.y_max - self.window.y_min) / self.size as f64
    }

    pub fn x_center(&self, ix: usize) -> f64 {
        self.window.x_min + (ix as f64 + 0.5) * self.cell_width()
    }

    pub fn y_center(&self, iy: usize) -> f64 {
        self.window.y_min + (iy as f64 + 0.5) * self.cell_height()
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.density[iy * self.size + ix]
    }

    /// Probability mass of one cell (density × cell area).
    pub fn cell_mass(&self, ix: usize, iy: usize) -> f64 {
        self.at(ix, iy) * self.cell_width() * self.cell_height()
    }

    /// Total mass inside the window.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_width() * self.cell_height()
    }

    /// `(ix, iy)` of the densest cell (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = i;
            }
        }
        (best % self.size, best / self.size)
    }
}

/// Scott's rule for one axis of a 2-D product kernel: `σ̂ · m^(−1/6)` with
/// the unbiased sample deviation, floored at [`BANDWIDTH_FLOOR`].
pub fn scott_bandwidth(values: &[f64]) -> f64 {
    let m = values.len();
    if m < 2 {
        return BANDWIDTH_FLOOR;
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    let h = libm::sqrt(var) * libm::pow(m as f64, -1.0 / 6.0);
    if h > BANDWIDTH_FLOOR {
        h
    } else {
        BANDWIDTH_FLOOR
    }
}

/// Density of the (f2, f1) sample cloud. Empty input gives an all-zero grid.
pub fn kde_grid(samples: &[SignatureSample], window: Window) -> SignatureGrid {
    let xs: Vec<f64> = samples.iter().map(|s| s.f2).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.f1).collect();
    kde_points(&xs, &ys, window)
}

/// [`kde_grid`] over raw coordinates; `xs` and `ys` are paired.
pub fn kde_points(xs: &[f64], ys: &[f64], window: Window) -> SignatureGrid {
    assert_eq!(xs.len(), ys.len(), "paired coordinates");
    let (hx, hy) = (scott_bandwidth(xs), scott_bandwidth(ys));
    let mut grid = SignatureGrid {
        window,
        size: GRID_SIZE,
        bandwidth: (hx, hy),
        density: vec![0.0; GRID_SIZE * GRID_SIZE],
    };
    if xs.is_empty() {
        return grid;
    }
    let kernel = |u: f64, h: f64| libm::exp(-0.5 * (u / h) * (u / h)) / (libm::sqrt(2.0 * PI) * h);
    let cx: Vec<f64> = (0..GRID_SIZE).map(|i| grid.x_center(i)).collect();
    let cy: Vec<f64> = (0..GRID_SIZE).map(|i| grid.y_center(i)).collect();
    let mut kx = vec![0.0; GRID_SIZE];
    let mut ky = vec![0.0; GRID_SIZE];
    for (&x, &y) in xs.iter().zip(ys) {
        for (k, &c) in kx.iter_mut().zip(&cx) {
            *k = kernel(c - x, hx);
        }
        for (k, &c) in ky.iter_mut().zip(&cy) {
            *k = kernel(c - y, hy);
        }
        for (iy, &wy) in ky.iter().enumerate() {
            if wy == 0.0 {
                continue;
            }
            let row = &mut grid.density[iy * GRID_SIZE..(iy + 1) * GRID_SIZE];
            for (d, &wx) in row.iter_mut().zip(&kx) {
                *d += wx * wy;
            }
        }
    }
    let m = xs.len() as f64;
    for d in &mut grid.density {
        *d /= m;
    }
    grid
}
