use ndarray::Array2;

use super::{DspError, Result};

/// Flattened spectrogram tiles in row-major grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSequence {
    /// N x (P * P).
    pub patches: Array2<f64>,
    pub grid: (usize, usize),
    pub patch_size: usize,
    pub stride: usize,
}

impl PatchSequence {
    pub fn len(&self) -> usize {
        self.patches.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.nrows() == 0
    }
}

/// `(floor((H - P) / S) + 1) * (floor((W - P) / S) + 1)`.
pub fn patch_count(height: usize, width: usize, patch: usize, stride: usize) -> Result<usize> {
    let (gh, gw) = grid(height, width, patch, stride)?;
    Ok(gh * gw)
}

fn grid(height: usize, width: usize, patch: usize, stride: usize) -> Result<(usize, usize)> {
    if patch == 0 || stride == 0 || height < patch || width < patch {
        return Err(DspError::PatchLargerThanInput {
            patch,
            height,
            width,
        });
    }
    Ok(((height - patch) / stride + 1, (width - patch) / stride + 1))
}

/// Slide a `patch x patch` window with step `stride` over a H x W
/// spectrogram. Each tile is flattened row-major.
pub fn extract_patches(spec: &Array2<f64>, patch: usize, stride: usize) -> Result<PatchSequence> {
    let (h, w) = spec.dim();
    let (gh, gw) = grid(h, w, patch, stride)?;
    let mut patches = Array2::zeros((gh * gw, patch * patch));
    for i in 0..gh {
        for j in 0..gw {
            let mut row = patches.row_mut(i * gw + j);
            for di in 0..patch {
                for dj in 0..patch {
                    row[di * patch + dj] = spec[[i * stride + di, j * stride + dj]];
                }
            }
        }
    }
    Ok(PatchSequence {
        patches,
        grid: (gh, gw),
        patch_size: patch,
        stride,
    })
}
