//! Synthetic stimulus families and their on-disk dataset format.
//!
//! Stimuli are 20×20 grayscale grids (optionally block-upscaled) built from
//! three ingredients: i.i.d. uniform noise flanks, a central uninformative
//! band fixed at mid-gray, and single informative stripe columns. The
//! positive class is exact pixel-level mirror symmetry about the vertical
//! midline.

mod dataset;
mod generate;
mod stats;

pub use dataset::{build_dataset, load_dataset, Dataset, DatasetManifest};
pub use generate::{gen_band, gen_image, gen_stripe, mirror_left, upscale_blocks};
pub use stats::left_right_correlation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base side length of every stimulus before block upscaling.
pub const GRID_SIDE: usize = 20;

/// Intensity of the central uninformative band (and stripe background).
pub const BAND_VALUE: u8 = 128;

/// Band widths that occur across training and test families.
pub const BAND_WIDTHS: [u8; 7] = [0, 2, 4, 6, 14, 16, 18];

/// Allowed informative-column offsets for stripe stimuli.
pub const STRIPE_OFFSETS: [u8; 5] = [2, 4, 6, 8, 10];

/// A grayscale image: row-major 8-bit pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageGrid {
    /// A width×height grid filled with a constant value.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        ImageGrid { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::shape(
                format!("{}x{} = {} pixels", width, height, width * height),
                format!("{} pixels", pixels.len()),
            ));
        }
        Ok(ImageGrid { width, height, pixels })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col] = value;
    }

    /// Exact mirror predicate: pixel(r,c) == pixel(r, W−1−c) everywhere.
    pub fn is_mirror_symmetric(&self) -> bool {
        (0..self.height).all(|r| {
            (0..self.width / 2).all(|c| self.get(r, c) == self.get(r, self.width - 1 - c))
        })
    }
}

/// Which stimulus family an image belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Band,
    Stripe,
    /// User-supplied grayscale images with the right half replaced by the
    /// mirrored left half.
    NaturalMirrored,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Brightness {
    #[default]
    Bright,
    Dark,
}

/// Declarative description of one image family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    /// Width of the central mid-gray band, in base pixels (band kind only).
    #[serde(default)]
    pub band_width: u8,
    #[serde(default)]
    pub brightness: Brightness,
    /// Informative column offset x; the mirrored pair is (x, 19−x).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stripe_offset: Option<u8>,
    /// Class of images generated directly from this spec. Dataset builders
    /// override it per image according to the manifest's class balance.
    #[serde(default = "default_true")]
    pub symmetric: bool,
    /// Each base pixel becomes a block_scale×block_scale block.
    #[serde(default = "default_scale")]
    pub block_scale: u32,
}

fn default_true() -> bool {
    true
}

fn default_scale() -> u32 {
    1
}

impl FamilySpec {
    pub fn band(band_width: u8, brightness: Brightness, symmetric: bool) -> Self {
        FamilySpec {
            kind: FamilyKind::Band,
            band_width,
            brightness,
            stripe_offset: None,
            symmetric,
            block_scale: 1,
        }
    }

    pub fn stripe(offset: u8, symmetric: bool) -> Self {
        FamilySpec {
            kind: FamilyKind::Stripe,
            band_width: 0,
            brightness: Brightness::Bright,
            stripe_offset: Some(offset),
            symmetric,
            block_scale: 1,
        }
    }

    /// Side length of generated images: 20 × block_scale.
    pub fn side(&self) -> usize {
        GRID_SIDE * self.block_scale as usize
    }

    pub fn with_symmetric(&self, symmetric: bool) -> Self {
        FamilySpec { symmetric, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_scale < 1 {
            return Err(Error::InvalidSpec("block_scale must be ≥ 1".into()));
        }
        match self.kind {
            FamilyKind::Band => {
                if self.band_width % 2 != 0 || self.band_width > 18 {
                    return Err(Error::InvalidSpec(format!(
                        "band_width must be even and in 0..=18, got {}",
                        self.band_width
                    )));
                }
                if self.stripe_offset.is_some() {
                    return Err(Error::InvalidSpec(
                        "stripe_offset is only meaningful for stripe families".into(),
                    ));
                }
            }
            FamilyKind::Stripe => {
                let x = self.stripe_offset.ok_or_else(|| {
                    Error::InvalidSpec("stripe families require stripe_offset".into())
                })?;
                if !STRIPE_OFFSETS.contains(&x) {
                    return Err(Error::InvalidSpec(format!(
                        "stripe_offset must be one of {:?}, got {}",
                        STRIPE_OFFSETS, x
                    )));
                }
                if self.brightness == Brightness::Dark {
                    return Err(Error::InvalidSpec(
                        "dark variant exists only for band families".into(),
                    ));
                }
                if self.band_width != 0 {
                    return Err(Error::InvalidSpec(
                        "band_width is only meaningful for band families".into(),
                    ));
                }
            }
            FamilyKind::NaturalMirrored => {
                if self.brightness == Brightness::Dark || self.band_width != 0
                    || self.stripe_offset.is_some()
                {
                    return Err(Error::InvalidSpec(
                        "natural_mirrored takes no band/stripe/brightness fields".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short directory-friendly name: band4, band4_dark, stripe10, natural.
    pub fn slug(&self) -> String {
        match self.kind {
            FamilyKind::Band => match self.brightness {
                Brightness::Bright => format!("band{}", self.band_width),
                Brightness::Dark => format!("band{}_dark", self.band_width),
            },
            FamilyKind::Stripe => format!("stripe{}", self.stripe_offset.unwrap_or(0)),
            FamilyKind::NaturalMirrored => "natural".into(),
        }
    }
}
