use std::path::Path;

use super::SpectroError;

/// Row-major grid of `f64` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl SpectrogramImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self, SpectroError> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(SpectroError::BadImage {
                height,
                width,
                len: pixels.len(),
            });
        }
        Ok(SpectrogramImage { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        SpectrogramImage {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Copies the `size.0 x size.1` window whose top-left corner is `origin`.
    pub fn crop(&self, origin: (usize, usize), size: (usize, usize)) -> Result<Self, SpectroError> {
        let (r0, c0) = origin;
        let (h, w) = size;
        if h == 0 || w == 0 || r0 + h > self.height || c0 + w > self.width {
            return Err(SpectroError::CropOutOfBounds {
                origin,
                size,
                height: self.height,
                width: self.width,
            });
        }
        let mut pixels = Vec::with_capacity(h * w);
        for r in r0..r0 + h {
            pixels.extend_from_slice(&self.pixels[r * self.width + c0..r * self.width + c0 + w]);
        }
        Ok(SpectrogramImage {
            height: h,
            width: w,
            pixels,
        })
    }

    /// Writes an 8-bit grayscale PNG with value `round(255 * pixel)`.
    pub fn write_png(&self, path: &Path) -> Result<(), SpectroError> {
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| (255.0 * p.clamp(0.0, 1.0)).round() as u8)
            .collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer matches dimensions");
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| SpectroError::Png(format!("{}: {e}", path.display())))
    }
}

/// Bilinear resize with corner-aligned sampling: output corners land exactly
/// on input corners.
pub fn resize_bilinear(
    image: &SpectrogramImage,
    out_height: usize,
    out_width: usize,
) -> Result<SpectrogramImage, SpectroError> {
    if out_height == 0 || out_width == 0 {
        return Err(SpectroError::BadImage {
            height: out_height,
            width: out_width,
            len: 0,
        });
    }
    if out_height == image.height && out_width == image.width {
        return Ok(image.clone());
    }
    let scale = |n_in: usize, n_out: usize| {
        if n_out > 1 {
            (n_in - 1) as f64 / (n_out - 1) as f64
        } else {
            0.0
        }
    };
    let sy = scale(image.height, out_height);
    let sx = scale(image.width, out_width);
    // column taps are shared by every row
    let col_taps: Vec<(usize, usize, f64)> = (0..out_width)
        .map(|j| {
            let x = j as f64 * sx;
            let x0 = (x.floor() as usize).min(image.width - 1);
            let x1 = (x0 + 1).min(image.width - 1);
            (x0, x1, x - x0 as f64)
        })
        .collect();
    let mut pixels = Vec::with_capacity(out_height * out_width);
    for i in 0..out_height {
        let y = i as f64 * sy;
        let y0 = (y.floor() as usize).min(image.height - 1);
        let y1 = (y0 + 1).min(image.height - 1);
        let fy = y - y0 as f64;
        let (top, bottom) = (image.row(y0), image.row(y1));
        for &(x0, x1, fx) in &col_taps {
            let t = top[x0] + (top[x1] - top[x0]) * fx;
            let b = bottom[x0] + (bottom[x1] - bottom[x0]) * fx;
            pixels.push(t + (b - t) * fy);
        }
    }
    Ok(SpectrogramImage {
        height: out_height,
        width: out_width,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_constant() {
        let img = SpectrogramImage::new(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(resize_bilinear(&img, 3, 2).unwrap(), img);
        let c = SpectrogramImage::filled(5, 7, 0.42);
        let r = resize_bilinear(&c, 13, 3).unwrap();
        assert!(r.pixels.iter().all(|&v| v == 0.42));
    }

    #[test]
    fn hand_computed_upsample() {
        let img = SpectrogramImage::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let r = resize_bilinear(&img, 2, 4).unwrap();
        let want = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for row in 0..2 {
            for (a, b) in r.row(row).iter().zip(want) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn crop_and_errors() {
        let img = SpectrogramImage::new(3, 3, (0..9).map(f64::from).collect()).unwrap();
        let c = img.crop((1, 1), (2, 2)).unwrap();
        assert_eq!(c.pixels, vec![4.0, 5.0, 7.0, 8.0]);
        assert!(img.crop((2, 2), (2, 2)).is_err());
        assert!(SpectrogramImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(resize_bilinear(&img, 0, 4).is_err());
    }

    #[test]
    fn png_export() {
        let dir = tempfile::tempdir().unwrap();
        let img = SpectrogramImage::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        let path = dir.path().join("a.png");
        img.write_png(&path).unwrap();
        let back = image::open(&path).unwrap().to_luma8();
        assert_eq!(back.into_raw(), vec![0, 128, 255]);
    }

    proptest! {
        #[test]
        fn resize_stays_within_bounds(
            h in 1usize..8, w in 1usize..8, oh in 1usize..20, ow in 1usize..20,
            seed in proptest::collection::vec(-5.0f64..5.0, 64)
        ) {
            let img = SpectrogramImage::new(h, w, seed[..h * w].to_vec()).unwrap();
            let (lo, hi) = img.min_max();
            let r = resize_bilinear(&img, oh, ow).unwrap();
            prop_assert!(r.pixels.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
            prop_assert_eq!(r.get(0, 0), img.get(0, 0));
            if oh > 1 && ow > 1 {
                prop_assert!((r.get(oh - 1, ow - 1) - img.get(h - 1, w - 1)).abs() < 1e-12);
            }
        }
    }
}
