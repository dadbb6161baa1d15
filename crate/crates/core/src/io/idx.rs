//! Big-endian IDX dataset loader (the published MNIST convention):
//! magic 0x00000803 for images (count, rows, cols, unsigned bytes
//! row-major) and 0x00000801 for labels.

use crate::encoding::GrayImage;
use crate::error::{Error, Result};
use std::collections::HashSet;
use std::path::Path;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Loaded image set with optional aligned labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub images: Vec<GrayImage>,
    pub labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Config("dataset has no labels".into()))
    }

    /// Count of examples per class id.
    pub fn class_counts(&self) -> Result<Vec<(u8, usize)>> {
        let labels = self.labels()?;
        let mut counts: Vec<(u8, usize)> = Vec::new();
        for &l in labels {
            match counts.iter_mut().find(|(c, _)| *c == l) {
                Some((_, n)) => *n += 1,
                None => counts.push((l, 1)),
            }
        }
        counts.sort_by_key(|&(c, _)| c);
        Ok(counts)
    }
}

fn read_u32_be(buf: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let bytes: [u8; 4] = buf
        .get(offset..offset + 4)
        .ok_or_else(|| Error::IdxTruncated {
            path: path.display().to_string(),
            expected: offset + 4,
            found: buf.len(),
        })?
        .try_into()
        .unwrap();
    Ok(u32::from_be_bytes(bytes))
}

struct RawImages {
    count: usize,
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

fn parse_images(buf: &[u8], path: &Path) -> Result<RawImages> {
    let magic = read_u32_be(buf, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::IdxMagic {
            path: path.display().to_string(),
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = read_u32_be(buf, 4, path)? as usize;
    let rows = read_u32_be(buf, 8, path)? as usize;
    let cols = read_u32_be(buf, 12, path)? as usize;
    let expected = 16 + count * rows * cols;
    if buf.len() < expected {
        return Err(Error::IdxTruncated {
            path: path.display().to_string(),
            expected,
            found: buf.len(),
        });
    }
    Ok(RawImages {
        count,
        rows,
        cols,
        pixels: buf[16..expected].to_vec(),
    })
}

fn parse_labels(buf: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = read_u32_be(buf, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::IdxMagic {
            path: path.display().to_string(),
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let count = read_u32_be(buf, 4, path)? as usize;
    let expected = 8 + count;
    if buf.len() < expected {
        return Err(Error::IdxTruncated {
            path: path.display().to_string(),
            expected,
            found: buf.len(),
        });
    }
    Ok(buf[8..expected].to_vec())
}

/// Load an IDX image/label pair, optionally keeping only the classes in
/// `class_filter` and at most `per_class_cap` examples per class, both
/// applied in file order.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    class_filter: Option<&HashSet<u8>>,
    per_class_cap: Option<usize>,
) -> Result<Dataset> {
    let image_buf = std::fs::read(images_path)?;
    let label_buf = std::fs::read(labels_path)?;
    let raw = parse_images(&image_buf, images_path)?;
    let labels = parse_labels(&label_buf, labels_path)?;
    if raw.count != labels.len() {
        return Err(Error::IdxCountMismatch {
            images: raw.count,
            labels: labels.len(),
        });
    }

    let stride = raw.rows * raw.cols;
    let mut images = Vec::new();
    let mut kept_labels = Vec::new();
    let mut per_class: Vec<(u8, usize)> = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        if let Some(filter) = class_filter {
            if !filter.contains(&label) {
                continue;
            }
        }
        if let Some(cap) = per_class_cap {
            let taken = per_class
                .iter_mut()
                .find(|(c, _)| *c == label)
                .map(|e| &mut e.1);
            match taken {
                Some(n) => {
                    if *n >= cap {
                        continue;
                    }
                    *n += 1;
                }
                None => per_class.push((label, 1)),
            }
        }
        let start = i * stride;
        images.push(GrayImage::new(
            raw.rows,
            raw.cols,
            raw.pixels[start..start + stride].to_vec(),
        )?);
        kept_labels.push(label);
    }

    Ok(Dataset {
        images,
        labels: Some(kept_labels),
    })
}

/// Serialize an image set into IDX bytes (used by tests and fixtures).
pub fn write_idx_images(images: &[GrayImage]) -> Vec<u8> {
    let (rows, cols) = images
        .first()
        .map(|i| (i.height, i.width))
        .unwrap_or((0, 0));
    let mut buf = Vec::new();
    buf.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    buf.extend_from_slice(&(images.len() as u32).to_be_bytes());
    buf.extend_from_slice(&(rows as u32).to_be_bytes());
    buf.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        buf.extend_from_slice(img.pixels());
    }
    buf
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    buf.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    buf.extend_from_slice(labels);
    buf
}
