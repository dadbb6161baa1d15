//! Directory + manifest dataset ingestion for raster image sets.
//!
//! The manifest is line-oriented text: `path label role` per line,
//! whitespace-separated, `#` comments allowed. `role` is `train` or
//! `test`. Paths are relative to the manifest's directory.

use crate::encoding::{gabor_downsample, yuv_luma_threshold, GaborBank, GrayImage};
use crate::error::{Error, Result};
use crate::io::idx::Dataset;
use crate::io::pgm::{read_pgm, read_ppm};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: u8,
    pub role: Role,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!(
                "{}:{}: expected `path label role`, got {line:?}",
                path.display(),
                line_no + 1
            )));
        }
        let label: u8 = fields[1].parse().map_err(|_| {
            Error::Format(format!(
                "{}:{}: label must be an integer class id",
                path.display(),
                line_no + 1
            ))
        })?;
        let role = match fields[2] {
            "train" => Role::Train,
            "test" => Role::Test,
            other => {
                return Err(Error::Format(format!(
                    "{}:{}: role must be train or test, got {other:?}",
                    path.display(),
                    line_no + 1
                )))
            }
        };
        entries.push(ManifestEntry {
            path: base.join(fields[0]),
            label,
            role,
        });
    }
    Ok(entries)
}

/// How to turn a raster file into the network's grayscale input.
#[derive(Debug, Clone)]
pub enum Ingest {
    /// Binary PGM taken as-is.
    PgmGray,
    /// Raw planar YUV bytes, luma-thresholded.
    YuvThreshold {
        height: usize,
        width: usize,
        pixel_threshold: u8,
    },
    /// Binary PPM run through the Gabor bank and downsampled.
    PpmGabor {
        bank: GaborBank,
        out_h: usize,
        out_w: usize,
    },
}

fn load_one(path: &Path, ingest: &Ingest) -> Result<GrayImage> {
    match ingest {
        Ingest::PgmGray => read_pgm(path),
        Ingest::YuvThreshold {
            height,
            width,
            pixel_threshold,
        } => {
            let bytes = std::fs::read(path)?;
            yuv_luma_threshold(&bytes, *height, *width, *pixel_threshold)
        }
        Ingest::PpmGabor { bank, out_h, out_w } => {
            let rgb = read_ppm(path)?;
            gabor_downsample(&rgb, bank, *out_h, *out_w)
        }
    }
}

/// Load every manifest entry with the given role.
pub fn load_role(entries: &[ManifestEntry], role: Role, ingest: &Ingest) -> Result<Dataset> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for entry in entries.iter().filter(|e| e.role == role) {
        images.push(load_one(&entry.path, ingest)?);
        labels.push(entry.label);
    }
    Ok(Dataset {
        images,
        labels: Some(labels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::pgm::write_pgm;

    #[test]
    fn manifest_parses_and_loads_pgm_entries() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        write_pgm(&img, &dir.path().join("a.pgm")).unwrap();
        write_pgm(&img, &dir.path().join("b.pgm")).unwrap();
        let manifest = dir.path().join("manifest.txt");
        std::fs::write(
            &manifest,
            "# fixture\na.pgm 1 train\nb.pgm 0 test\n",
        )
        .unwrap();

        let entries = read_manifest(&manifest).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].label, 1);
        assert_eq!(entries[0].role, Role::Train);

        let train = load_role(&entries, Role::Train, &Ingest::PgmGray).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(train.images[0], img);
        let test = load_role(&entries, Role::Test, &Ingest::PgmGray).unwrap();
        assert_eq!(test.labels.as_deref(), Some([0u8].as_slice()));
    }

    #[test]
    fn malformed_lines_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.txt");
        std::fs::write(&manifest, "a.pgm 1\n").unwrap();
        assert!(read_manifest(&manifest).is_err());
        std::fs::write(&manifest, "a.pgm x train\n").unwrap();
        assert!(read_manifest(&manifest).is_err());
        std::fs::write(&manifest, "a.pgm 1 validate\n").unwrap();
        assert!(read_manifest(&manifest).is_err());
    }
}
