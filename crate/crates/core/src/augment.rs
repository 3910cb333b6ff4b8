//! Grid cropping augmentation.
//!
//! A square image of side `S` is cropped to `C = round(S * ratio)` at the
//! nine grid origins `{0, (S - C) / 2, S - C}` per axis and every crop is
//! resized back to `S x S`. The centre crop is left out by default, which
//! gives eight variants per image.

use thiserror::Error;

use crate::spectro::{resize_bilinear, SpectroError, SpectrogramImage};
use crate::wfdb::BeatClass;

pub const DEFAULT_CROP_RATIO: f64 = 200.0 / 256.0;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("crop side {crop} is too small (image side {side})")]
    ImageTooSmall { side: usize, crop: usize },
    #[error("augmentation needs a square image, got {height}x{width}")]
    NotSquare { height: usize, width: usize },
    #[error("crop ratio {0} must be in (0, 1]")]
    BadRatio(f64),
    #[error(transparent)]
    Image(#[from] SpectroError),
}

impl AugmentError {
    pub fn variant_name(&self) -> &'static str {
        match self {
            AugmentError::ImageTooSmall { .. } => "ImageTooSmall",
            AugmentError::NotSquare { .. } => "NotSquare",
            AugmentError::BadRatio(_) => "BadRatio",
            AugmentError::Image(_) => "Image",
        }
    }
}

/// Grid positions in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CropPosition {
    TopLeft,
    TopCenter,
    TopRight,
    CenterLeft,
    Center,
    CenterRight,
    BottomLeft,
    BottomCenter,
    BottomRight,
}

impl CropPosition {
    pub const ALL: [CropPosition; 9] = [
        CropPosition::TopLeft,
        CropPosition::TopCenter,
        CropPosition::TopRight,
        CropPosition::CenterLeft,
        CropPosition::Center,
        CropPosition::CenterRight,
        CropPosition::BottomLeft,
        CropPosition::BottomCenter,
        CropPosition::BottomRight,
    ];

    fn grid(self) -> (usize, usize) {
        let i = self as usize;
        (i / 3, i % 3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub crop_ratio: f64,
    pub include_center: bool,
    /// Classes that receive augmented copies.
    pub classes: Vec<BeatClass>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            crop_ratio: DEFAULT_CROP_RATIO,
            include_center: false,
            classes: BeatClass::ALL
                .iter()
                .copied()
                .filter(|&c| c != BeatClass::Nor)
                .collect(),
        }
    }
}

impl AugmentConfig {
    pub fn applies_to(&self, class: BeatClass) -> bool {
        self.classes.contains(&class)
    }

    pub fn variants_per_image(&self) -> usize {
        if self.include_center {
            9
        } else {
            8
        }
    }
}

/// `(position, (row, col))` crop origins in grid order.
pub type CropPlan = Vec<(CropPosition, (usize, usize))>;

/// Crop side and `(row, col)` origins for an `side x side` image.
pub fn crop_plan(side: usize, ratio: f64, include_center: bool) -> Result<(usize, CropPlan), AugmentError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(AugmentError::BadRatio(ratio));
    }
    let crop = (side as f64 * ratio).round() as usize;
    if crop < 2 {
        return Err(AugmentError::ImageTooSmall { side, crop });
    }
    let offsets = [0, (side - crop) / 2, side - crop];
    let plan = CropPosition::ALL
        .iter()
        .copied()
        .filter(|&p| include_center || p != CropPosition::Center)
        .map(|p| {
            let (r, c) = p.grid();
            (p, (offsets[r], offsets[c]))
        })
        .collect();
    Ok((crop, plan))
}

/// Cropped-and-resized variants of `image`, in grid order.
pub fn crop_augment(
    image: &SpectrogramImage,
    crop_ratio: f64,
    include_center: bool,
) -> Result<Vec<SpectrogramImage>, AugmentError> {
    if image.height != image.width {
        return Err(AugmentError::NotSquare {
            height: image.height,
            width: image.width,
        });
    }
    let side = image.height;
    let (crop, plan) = crop_plan(side, crop_ratio, include_center)?;
    plan.into_iter()
        .map(|(_, origin)| {
            let c = image.crop(origin, (crop, crop))?;
            Ok(resize_bilinear(&c, side, side)?)
        })
        .collect()
}
