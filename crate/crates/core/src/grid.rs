//! Dense 2D rasters indexed by cell `(i, j)`, where `i` runs along x (columns)
//! and `j` along y (rows). Storage is row-major: `data[j * width + i]`.

use std::path::Path;

use image::{GrayImage, Luma, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type BinaryGrid = Grid<bool>;
pub type CountGrid = Grid<u32>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "{}x{} grid needs {} cells, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[self.index(i, j)]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        let idx = self.index(i, j);
        &mut self.data[idx]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Cell coordinates of a flat row-major index.
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn ensure_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dim(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// The 4-neighborhood of a cell, clipped to the grid.
    pub fn neighbors4(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
        let (w, h) = (self.width as isize, self.height as isize);
        const OFFSETS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        OFFSETS.into_iter().filter_map(move |(di, dj)| {
            let (ni, nj) = (i as isize + di, j as isize + dj);
            (ni >= 0 && nj >= 0 && ni < w && nj < h).then_some((ni as usize, nj as usize))
        })
    }
}

impl BinaryGrid {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn zip_with(&self, other: &BinaryGrid, f: impl Fn(bool, bool) -> bool) -> Result<BinaryGrid> {
        self.ensure_same_dims(other)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Flat indices of set cells in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().enumerate().filter_map(|(k, &b)| b.then_some(k))
    }

    /// Dilation by a 3x3 (8-neighborhood) structuring element.
    pub fn dilate8(&self) -> BinaryGrid {
        let mut out = Grid::filled(self.width, self.height, false);
        for idx in self.ones() {
            let (i, j) = self.coords(idx);
            for nj in j.saturating_sub(1)..=(j + 1).min(self.height - 1) {
                for ni in i.saturating_sub(1)..=(i + 1).min(self.width - 1) {
                    *out.get_mut(ni, nj) = true;
                }
            }
        }
        out
    }

    /// Morphological opening with a 2x2 square: keeps exactly the cells that are
    /// covered by at least one fully-set 2x2 block.
    pub fn open2x2(&self) -> BinaryGrid {
        let mut out = Grid::filled(self.width, self.height, false);
        if self.width < 2 || self.height < 2 {
            return out;
        }
        for j in 0..self.height - 1 {
            for i in 0..self.width - 1 {
                if *self.get(i, j) && *self.get(i + 1, j) && *self.get(i, j + 1) && *self.get(i + 1, j + 1) {
                    *out.get_mut(i, j) = true;
                    *out.get_mut(i + 1, j) = true;
                    *out.get_mut(i, j + 1) = true;
                    *out.get_mut(i + 1, j + 1) = true;
                }
            }
        }
        out
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if *self.get(x as usize, y as usize) { 255 } else { 0 }])
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gray_image().save(path)?;
        Ok(())
    }
}

impl CountGrid {
    pub fn total(&self) -> u64 {
        self.data.iter().map(|&c| u64::from(c)).sum()
    }

    /// Log-scaled 8-bit rendering: `255 * ln(1 + c) / ln(1 + max)`.
    pub fn to_gray_image(&self) -> GrayImage {
        let max = self.data.iter().copied().max().unwrap_or(0);
        let denom = (1.0 + f64::from(max)).ln();
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let c = *self.get(x as usize, y as usize);
            let v = if denom > 0.0 {
                (255.0 * (1.0 + f64::from(c)).ln() / denom).round()
            } else {
                0.0
            };
            Luma([v as u8])
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gray_image().save(path)?;
        Ok(())
    }
}

/// Blue to green to yellow ramp for `t` in [0, 1].
pub fn similarity_color(t: f64) -> [u8; 3] {
    const LOW: [f64; 3] = [30.0, 60.0, 220.0];
    const MID: [f64; 3] = [40.0, 180.0, 70.0];
    const HIGH: [f64; 3] = [250.0, 225.0, 30.0];
    let t = t.clamp(0.0, 1.0);
    let (a, b, s) = if t < 0.5 { (LOW, MID, t * 2.0) } else { (MID, HIGH, t * 2.0 - 1.0) };
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (a[c] + (b[c] - a[c]) * s).round() as u8;
    }
    out
}

/// Renders a per-cell score grid; `None` cells are black. Scores are stretched
/// over the observed range.
pub fn score_grid_to_rgb(scores: &Grid<Option<f64>>) -> RgbImage {
    let observed = scores.as_slice().iter().flatten();
    let (lo, hi) = observed.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    RgbImage::from_fn(scores.width() as u32, scores.height() as u32, |x, y| {
        match scores.get(x as usize, y as usize) {
            Some(v) => {
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                Rgb(similarity_color(t))
            }
            None => Rgb([0, 0, 0]),
        }
    })
}
