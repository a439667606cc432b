//! Rendering of normalized GRF windows as 18x500 PNG images, one pixel per
//! matrix element, on a two-stop purple-to-yellow gradient.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::ingest::GrfWindow;
use crate::tensor::Tensor;

pub const COLOR_MIN: [f64; 3] = [68.0, 1.0, 84.0];
pub const COLOR_MAX: [f64; 3] = [253.0, 231.0, 37.0];

/// Map a normalized value in [0,1] to the gradient, rounding half-up.
pub fn value_to_rgb(v: f64) -> [u8; 3] {
    let mut px = [0u8; 3];
    for c in 0..3 {
        let x = COLOR_MIN[c] + v * (COLOR_MAX[c] - COLOR_MIN[c]);
        px[c] = (x + 0.5).floor().clamp(0.0, 255.0) as u8;
    }
    px
}

/// Invert the gradient by least squares over the three channels.
pub fn rgb_to_value(px: [u8; 3]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..3 {
        let d = COLOR_MAX[c] - COLOR_MIN[c];
        num += d * (px[c] as f64 - COLOR_MIN[c]);
        den += d * d;
    }
    (num / den).clamp(0.0, 1.0)
}

/// Write a window as a width x height PNG, matrix row r = pixel row r.
pub fn export_spectrogram(w: &GrfWindow, path: &Path) -> Result<()> {
    if !w.normalized {
        return Err(Error::State("spectrogram export requires a normalized window".into()));
    }
    let img = render(&w.matrix)?;
    img.save(path)
        .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))
}

pub fn render(matrix: &Tensor) -> Result<RgbImage> {
    let (h, w) = match matrix.shape() {
        [h, w] => (*h, *w),
        other => return Err(Error::Shape(format!("expected rank-2 matrix, got {other:?}"))),
    };
    let mut img = RgbImage::new(w as u32, h as u32);
    for r in 0..h {
        for c in 0..w {
            img.put_pixel(c as u32, r as u32, Rgb(value_to_rgb(matrix.at(&[r, c]))));
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ClassLabel;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(value_to_rgb(0.0), [68, 1, 84]);
        assert_eq!(value_to_rgb(1.0), [253, 231, 37]);
    }

    #[test]
    fn colormap_roundtrip_quantization() {
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            let back = rgb_to_value(value_to_rgb(v));
            assert!((back - v).abs() <= 1.0 / 254.0, "v={v} back={back}");
        }
    }

    #[test]
    fn export_dimensions_and_gating() {
        let dir = std::env::temp_dir().join("gaitcnn_spec_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.png");
        let mut w = GrfWindow {
            matrix: Tensor::zeros(vec![500, 18]),
            label: ClassLabel::Healthy,
            subject_id: "GaCo01".into(),
            window_index: 0,
            normalized: false,
        };
        assert!(export_spectrogram(&w, &path).is_err());
        w.normalized = true;
        export_spectrogram(&w, &path).unwrap();
        let img = image::open(&path).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (18, 500));
        assert_eq!(img.get_pixel(0, 0).0, [68, 1, 84]);
    }
}
