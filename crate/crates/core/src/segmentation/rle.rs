//! Row-major run-length encoding of binary masks. Runs alternate
//! zeros/ones and always start with a (possibly empty) run of zeros.

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;

pub fn encode(mask: &BinaryGrid) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for &b in mask.as_slice() {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

pub fn decode(runs: &[u32], width: usize, height: usize) -> Result<BinaryGrid> {
    let total: u64 = runs.iter().map(|&r| u64::from(r)).sum();
    if total != (width * height) as u64 {
        return Err(Error::schema(format!(
            "RLE covers {total} cells but the grid has {}",
            width * height
        )));
    }
    let mut cells = Vec::with_capacity(width * height);
    let mut value = false;
    for &r in runs {
        cells.extend(std::iter::repeat_n(value, r as usize));
        value = !value;
    }
    BinaryGrid::from_vec(width, height, cells)
}
