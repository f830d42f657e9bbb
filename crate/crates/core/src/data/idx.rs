use alloc::vec::Vec;

use super::Dataset;
use crate::error::{bail, Result};
use crate::tensor::Tensor;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(b: &[u8], at: usize) -> Result<u32> {
    match b.get(at..at + 4) {
        Some(s) => Ok(u32::from_be_bytes([s[0], s[1], s[2], s[3]])),
        None => bail!(Format, "IDX header truncated"),
    }
}

/// Decodes big-endian IDX image/label buffers into a dataset, taking at most
/// `limit` examples. Pixels are divided by 255; the class count is
/// `max(label) + 1` (at least 2).
pub fn decode_idx(images: &[u8], labels: &[u8], limit: Option<usize>) -> Result<Dataset> {
    let magic = be_u32(images, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        bail!(Format, "image magic {:#010x}, expected {:#010x}", magic, IDX_IMAGES_MAGIC);
    }
    let magic = be_u32(labels, 0)?;
    if magic != IDX_LABELS_MAGIC {
        bail!(Format, "label magic {:#010x}, expected {:#010x}", magic, IDX_LABELS_MAGIC);
    }
    let n_img = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let n_lab = be_u32(labels, 4)? as usize;
    if n_img != n_lab {
        bail!(Format, "{} images but {} labels", n_img, n_lab);
    }
    let dim = rows * cols;
    if dim == 0 {
        bail!(Format, "empty image dimensions");
    }
    if images.len() != 16 + n_img * dim {
        bail!(Format, "image payload is {} bytes, header implies {}", images.len() - 16, n_img * dim);
    }
    if labels.len() != 8 + n_lab {
        bail!(Format, "label payload is {} bytes, header implies {}", labels.len() - 8, n_lab);
    }
    let n = limit.map_or(n_img, |l| l.min(n_img));
    if n == 0 {
        bail!(Format, "no examples");
    }
    let data: Vec<f64> = images[16..16 + n * dim].iter().map(|&p| p as f64 / 255.0).collect();
    let ys: Vec<usize> = labels[8..8 + n].iter().map(|&l| l as usize).collect();
    let classes = ys.iter().copied().max().unwrap_or(0).max(1) + 1;
    Dataset::new(Tensor::matrix(n, dim, data)?, ys, classes)
}
