//! Deterministic synthetic fixtures: face/background image pairs in
//! planar YUV form for the detection task, and simple shape images for
//! the rotation task. Used by the CI suites and by the face/rotation
//! experiment protocols, whose original datasets have no canonical
//! retrievable form.

use crate::encoding::{GrayImage, RgbImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn fill_ellipse(px: &mut [u8], w: usize, cy: f64, cx: f64, ry: f64, rx: f64, value: u8) {
    let h = px.len() / w;
    for r in 0..h {
        for c in 0..w {
            let dy = (r as f64 - cy) / ry;
            let dx = (c as f64 - cx) / rx;
            if dy * dy + dx * dx <= 1.0 {
                px[r * w + c] = value;
            }
        }
    }
}

fn fill_rect(px: &mut [u8], w: usize, r0: usize, c0: usize, r1: usize, c1: usize, value: u8) {
    let h = px.len() / w;
    for r in r0..r1.min(h) {
        for c in c0..c1.min(w) {
            px[r * w + c] = value;
        }
    }
}

/// One synthetic face: a bright head ellipse with dark eyes and mouth on a
/// dim noisy background, jittered in position, scale, and brightness.
pub fn synthetic_face_y(rng: &mut ChaCha8Rng, size: usize) -> GrayImage {
    let mut px = vec![0u8; size * size];
    for p in px.iter_mut() {
        *p = rng.gen_range(10..50);
    }
    let cy = size as f64 / 2.0 + rng.gen_range(-2.0..2.0);
    let cx = size as f64 / 2.0 + rng.gen_range(-2.0..2.0);
    let ry = size as f64 * rng.gen_range(0.30..0.38);
    let rx = size as f64 * rng.gen_range(0.24..0.30);
    let skin = rng.gen_range(170..230) as u8;
    fill_ellipse(&mut px, size, cy, cx, ry, rx, skin);

    // Eyes and mouth fall below the luma threshold, leaving holes.
    let eye_dy = ry * 0.35;
    let eye_dx = rx * 0.45;
    let eye_r = (size as f64 * 0.06).max(1.0);
    fill_ellipse(&mut px, size, cy - eye_dy, cx - eye_dx, eye_r, eye_r, 30);
    fill_ellipse(&mut px, size, cy - eye_dy, cx + eye_dx, eye_r, eye_r, 30);
    let mouth_r0 = (cy + ry * 0.45) as usize;
    fill_rect(
        &mut px,
        size,
        mouth_r0,
        (cx - rx * 0.45) as usize,
        mouth_r0 + 2,
        (cx + rx * 0.45) as usize,
        40,
    );
    GrayImage::new(size, size, px).unwrap()
}

/// One synthetic background: a smooth gradient with a few random patches,
/// mostly below the luma threshold and spatially incoherent above it.
pub fn synthetic_background_y(rng: &mut ChaCha8Rng, size: usize) -> GrayImage {
    let mut px = vec![0u8; size * size];
    let base = rng.gen_range(0.0..80.0);
    let slope_r = rng.gen_range(-2.0..2.0);
    let slope_c = rng.gen_range(-2.0..2.0);
    for r in 0..size {
        for c in 0..size {
            let v = base + slope_r * r as f64 + slope_c * c as f64;
            px[r * size + c] = v.clamp(0.0, 140.0) as u8;
        }
    }
    for _ in 0..rng.gen_range(3..8) {
        let r0 = rng.gen_range(0..size);
        let c0 = rng.gen_range(0..size);
        let rh = rng.gen_range(2..6);
        let cw = rng.gen_range(2..6);
        let value = rng.gen_range(40..180) as u8;
        fill_rect(&mut px, size, r0, c0, r0 + rh, c0 + cw, value);
    }
    GrayImage::new(size, size, px).unwrap()
}

/// Wrap a luma plane into planar YUV bytes (U and V neutral).
pub fn y_plane_to_yuv(y: &GrayImage) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(y.num_pixels() * 3);
    bytes.extend_from_slice(y.pixels());
    bytes.extend(std::iter::repeat(128u8).take(y.num_pixels() * 2));
    bytes
}

/// Face-detection fixture set: `n_train` training faces plus a labeled
/// test set of faces (label 1) and backgrounds (label 0), all as planar
/// YUV byte blobs.
pub struct FaceFixture {
    pub train_yuv: Vec<Vec<u8>>,
    pub test_yuv: Vec<Vec<u8>>,
    pub test_labels: Vec<u8>,
    pub size: usize,
}

pub fn face_fixture(
    rng: &mut ChaCha8Rng,
    size: usize,
    n_train: usize,
    n_test_per_class: usize,
) -> FaceFixture {
    let train_yuv = (0..n_train)
        .map(|_| y_plane_to_yuv(&synthetic_face_y(rng, size)))
        .collect();
    let mut test_yuv = Vec::with_capacity(2 * n_test_per_class);
    let mut test_labels = Vec::with_capacity(2 * n_test_per_class);
    for _ in 0..n_test_per_class {
        test_yuv.push(y_plane_to_yuv(&synthetic_face_y(rng, size)));
        test_labels.push(1);
        test_yuv.push(y_plane_to_yuv(&synthetic_background_y(rng, size)));
        test_labels.push(0);
    }
    FaceFixture {
        train_yuv,
        test_yuv,
        test_labels,
        size,
    }
}

fn blank_rgb(size: usize, r: u8, g: u8, b: u8) -> Vec<u8> {
    let mut data = Vec::with_capacity(size * size * 3);
    for _ in 0..size * size {
        data.extend_from_slice(&[r, g, b]);
    }
    data
}

fn paint_rgb(data: &mut [u8], size: usize, row: usize, col: usize, rgb: (u8, u8, u8)) {
    let i = (row * size + col) * 3;
    data[i] = rgb.0;
    data[i + 1] = rgb.1;
    data[i + 2] = rgb.2;
}

/// Three distinct shape images for the rotation task: an L of thick bars,
/// a ring, and diagonal stripes.
pub fn shape_images(size: usize) -> Vec<RgbImage> {
    let bright = (235u8, 220u8, 90u8);
    let q = size / 8;

    // L shape: vertical bar plus a foot.
    let mut l_shape = blank_rgb(size, 15, 15, 25);
    for r in q..size - q {
        for c in 2 * q..3 * q {
            paint_rgb(&mut l_shape, size, r, c, bright);
        }
    }
    for r in size - 2 * q..size - q {
        for c in 3 * q..6 * q {
            paint_rgb(&mut l_shape, size, r, c, bright);
        }
    }

    // Ring.
    let mut ring = blank_rgb(size, 15, 15, 25);
    let center = (size as f64 - 1.0) / 2.0;
    let outer = size as f64 * 0.34;
    let inner = size as f64 * 0.22;
    for r in 0..size {
        for c in 0..size {
            let d = ((r as f64 - center).powi(2) + (c as f64 - center).powi(2)).sqrt();
            if d <= outer && d >= inner {
                paint_rgb(&mut ring, size, r, c, (90, 200, 235));
            }
        }
    }

    // Diagonal stripes.
    let mut stripes = blank_rgb(size, 15, 15, 25);
    for r in 0..size {
        for c in 0..size {
            if (r + c) / q % 2 == 0 {
                paint_rgb(&mut stripes, size, r, c, (220, 90, 200));
            }
        }
    }

    vec![
        RgbImage::new(size, size, l_shape).unwrap(),
        RgbImage::new(size, size, ring).unwrap(),
        RgbImage::new(size, size, stripes).unwrap(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::yuv_luma_threshold;
    use rand::SeedableRng;

    #[test]
    fn faces_survive_thresholding_backgrounds_mostly_dont() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut face_bright = 0usize;
        let mut bg_bright = 0usize;
        for _ in 0..20 {
            let face = y_plane_to_yuv(&synthetic_face_y(&mut rng, 32));
            let bg = y_plane_to_yuv(&synthetic_background_y(&mut rng, 32));
            let f = yuv_luma_threshold(&face, 32, 32, 120).unwrap();
            let b = yuv_luma_threshold(&bg, 32, 32, 120).unwrap();
            face_bright += f.pixels().iter().filter(|&&p| p > 0).count();
            bg_bright += b.pixels().iter().filter(|&&p| p > 0).count();
        }
        assert!(
            face_bright > 4 * bg_bright,
            "faces {face_bright}, backgrounds {bg_bright}"
        );
    }

    #[test]
    fn fixture_is_deterministic_per_seed() {
        let a = face_fixture(&mut ChaCha8Rng::seed_from_u64(4), 32, 3, 5);
        let b = face_fixture(&mut ChaCha8Rng::seed_from_u64(4), 32, 3, 5);
        assert_eq!(a.train_yuv, b.train_yuv);
        assert_eq!(a.test_yuv, b.test_yuv);
        assert_eq!(a.test_labels, b.test_labels);
    }

    #[test]
    fn shapes_are_distinct_and_well_formed() {
        let shapes = shape_images(64);
        assert_eq!(shapes.len(), 3);
        for s in &shapes {
            assert_eq!((s.height, s.width), (64, 64));
        }
        assert_ne!(shapes[0], shapes[1]);
        assert_ne!(shapes[1], shapes[2]);
    }
}
