//! Binary PGM (P5) / PPM (P6) reading and writing, plus the kernel-bank
//! montage export used to inspect learned features.

use crate::encoding::{GrayImage, RgbImage};
use crate::error::{Error, Result};
use crate::topology::KernelBank;
use std::io::Write;
use std::path::Path;

/// Tile every kernel into a `grid_cols`-wide montage with 1-pixel white
/// separators, scaling weights linearly from [0, w_max] to [0, 255].
/// Trailing empty cells are black.
///
/// Montage dimensions: width = grid_cols*(kernel_w+1)-1 and height
/// analogous with the row count `ceil(num_kernels / grid_cols)`.
pub fn kernel_montage(kernels: &KernelBank, grid_cols: usize) -> Result<GrayImage> {
    if kernels.kernels.is_empty() {
        return Err(Error::Config("kernel bank is empty".into()));
    }
    if grid_cols == 0 {
        return Err(Error::Config("grid_cols must be at least 1".into()));
    }
    let (kh, kw) = (kernels.kernel_h, kernels.kernel_w);
    let grid_rows = kernels.num_neurons().div_ceil(grid_cols);
    let width = grid_cols * (kw + 1) - 1;
    let height = grid_rows * (kh + 1) - 1;
    let mut pixels = vec![0u8; width * height];

    // Separator rows/columns at full intensity.
    for r in 0..height {
        for c in 0..width {
            if r % (kh + 1) == kh || c % (kw + 1) == kw {
                pixels[r * width + c] = 255;
            }
        }
    }

    for (i, kernel) in kernels.kernels.iter().enumerate() {
        let tile_r = (i / grid_cols) * (kh + 1);
        let tile_c = (i % grid_cols) * (kw + 1);
        for kr in 0..kh {
            for kc in 0..kw {
                let w = kernel[kr * kw + kc];
                let value = ((w / kernels.w_max) * 255.0).round().clamp(0.0, 255.0) as u8;
                pixels[(tile_r + kr) * width + tile_c + kc] = value;
            }
        }
    }
    GrayImage::new(height, width, pixels)
}

/// Write the kernel montage as a binary PGM (P5, maxval 255).
pub fn export_kernels_pgm(kernels: &KernelBank, grid_cols: usize, path: &Path) -> Result<()> {
    let montage = kernel_montage(kernels, grid_cols)?;
    write_pgm(&montage, path)
}

pub fn write_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write!(file, "P5\n{} {}\n255\n", image.width, image.height)?;
    file.write_all(image.pixels())?;
    Ok(())
}

pub fn write_ppm(image: &RgbImage, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write!(file, "P6\n{} {}\n255\n", image.width, image.height)?;
    file.write_all(image.bytes())?;
    Ok(())
}

fn parse_netpbm_header(buf: &[u8], magic: &str, path: &Path) -> Result<(usize, usize, usize)> {
    let mut pos = 0usize;
    let mut fields = Vec::new();
    // Header fields are whitespace-separated; '#' starts a comment line.
    while fields.len() < 4 && pos < buf.len() {
        while pos < buf.len() && (buf[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && !(buf[pos] as char).is_whitespace() {
            pos += 1;
        }
        fields.push(
            std::str::from_utf8(&buf[start..pos])
                .map_err(|_| Error::Format(format!("{}: non-ascii header", path.display())))?
                .to_string(),
        );
    }
    if fields.len() < 4 {
        return Err(Error::Format(format!(
            "{}: incomplete netpbm header",
            path.display()
        )));
    }
    if fields[0] != magic {
        return Err(Error::Format(format!(
            "{}: expected {magic}, found {}",
            path.display(),
            fields[0]
        )));
    }
    let width: usize = fields[1]
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad width", path.display())))?;
    let height: usize = fields[2]
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad height", path.display())))?;
    let maxval: usize = fields[3]
        .parse()
        .map_err(|_| Error::Format(format!("{}: bad maxval", path.display())))?;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "{}: only maxval 255 supported, found {maxval}",
            path.display()
        )));
    }
    // One whitespace byte separates the header from the raster.
    Ok((width, height, pos + 1))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let buf = std::fs::read(path)?;
    let (width, height, offset) = parse_netpbm_header(&buf, "P5", path)?;
    let need = width * height;
    if buf.len() < offset + need {
        return Err(Error::Format(format!(
            "{}: raster truncated ({} of {} bytes)",
            path.display(),
            buf.len().saturating_sub(offset),
            need
        )));
    }
    GrayImage::new(height, width, buf[offset..offset + need].to_vec())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let buf = std::fs::read(path)?;
    let (width, height, offset) = parse_netpbm_header(&buf, "P6", path)?;
    let need = width * height * 3;
    if buf.len() < offset + need {
        return Err(Error::Format(format!(
            "{}: raster truncated ({} of {} bytes)",
            path.display(),
            buf.len().saturating_sub(offset),
            need
        )));
    }
    RgbImage::new(height, width, buf[offset..offset + need].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank(num: usize, kh: usize, kw: usize) -> KernelBank {
        KernelBank {
            kernel_h: kh,
            kernel_w: kw,
            w_max: 1.0,
            kernels: vec![vec![0.0; kh * kw]; num],
        }
    }

    #[test]
    fn montage_dimensions_follow_grid_formula() {
        let b = bank(50, 14, 14);
        let m = kernel_montage(&b, 7).unwrap();
        assert_eq!(m.width, 7 * 15 - 1);
        assert_eq!(m.height, 8 * 15 - 1); // ceil(50/7) = 8 rows
    }

    #[test]
    fn fifty_kernels_on_seven_grid_leave_six_black_cells() {
        let mut b = bank(50, 4, 4);
        for k in &mut b.kernels {
            k.fill(1.0);
        }
        let m = kernel_montage(&b, 7).unwrap();
        // 7x8 grid = 56 cells; cells 50..55 stay black.
        for cell in 0..56usize {
            let tile_r = (cell / 7) * 5;
            let tile_c = (cell % 7) * 5;
            let expected = if cell < 50 { 255 } else { 0 };
            for kr in 0..4 {
                for kc in 0..4 {
                    assert_eq!(
                        m.get(tile_r + kr, tile_c + kc),
                        expected,
                        "cell {cell} pixel ({kr},{kc})"
                    );
                }
            }
        }
    }

    #[test]
    fn all_zero_kernel_renders_black_tile() {
        let b = bank(1, 3, 3);
        let m = kernel_montage(&b, 1).unwrap();
        assert_eq!((m.height, m.width), (3, 3));
        assert!(m.pixels().iter().all(|&p| p == 0));
    }

    #[test]
    fn scaling_endpoints_map_to_0_and_255() {
        let mut b = bank(1, 2, 2);
        b.kernels[0][3] = 1.0; // w_max
        let m = kernel_montage(&b, 1).unwrap();
        assert_eq!(m.pixels(), &[0, 0, 0, 255]);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::new(3, 5, (0..15).map(|i| i as u8 * 10).collect()).unwrap();
        write_pgm(&img, &path).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let img = RgbImage::new(2, 2, (0..12).map(|i| i as u8 * 20).collect()).unwrap();
        write_ppm(&img, &path).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn truncated_pgm_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\n\x01\x02").unwrap();
        assert!(read_pgm(&path).is_err());
    }

    #[test]
    fn export_writes_readable_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernels.pgm");
        let mut b = bank(3, 4, 4);
        b.kernels[1].fill(0.5);
        export_kernels_pgm(&b, 2, &path).unwrap();
        let m = read_pgm(&path).unwrap();
        assert_eq!(m.width, 2 * 5 - 1);
        assert_eq!(m.height, 2 * 5 - 1);
        assert_eq!(m.get(0, 4), 255); // separator column
    }
}
