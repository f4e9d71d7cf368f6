//! Pure stimulus generators. Every image is a function of
//! `(family spec, dataset seed, image index)` alone: each random region
//! draws from its own derived stream, so images can be generated in any
//! order, in parallel, or individually re-created.

use rand::Rng;

use crate::error::{Error, Result};
use crate::imggen::{Brightness, FamilyKind, FamilySpec, ImageGrid, BAND_VALUE, GRID_SIDE};
use crate::rng;

/// Stream ids for the independent random regions of one image.
const REGION_LEFT: u64 = 0;
const REGION_RIGHT: u64 = 1;

#[inline]
fn intensity_range(brightness: Brightness) -> (u8, u8) {
    match brightness {
        // "Full grayscale spectrum" noise; 0 is reserved so flanks are never
        // confusable with true black padding.
        Brightness::Bright => (1, 255),
        // Low-luminance variant capped at the band value.
        Brightness::Dark => (0, 128),
    }
}

/// Band stimulus: noise flanks around a central `band_width`-column block of
/// mid-gray. Symmetric images mirror the left flank onto the right; the rest
/// draw the right flank independently.
pub fn gen_band(spec: &FamilySpec, seed: u64, index: u64) -> Result<ImageGrid> {
    spec.validate()?;
    if spec.kind != FamilyKind::Band {
        return Err(Error::InvalidSpec(format!("gen_band on {:?} family", spec.kind)));
    }
    let b = spec.band_width as usize;
    let flank = (GRID_SIDE - b) / 2;
    let (lo, hi) = intensity_range(spec.brightness);

    let mut img = ImageGrid::filled(GRID_SIDE, GRID_SIDE, BAND_VALUE);
    let mut left = rng::stream(seed, &[index, REGION_LEFT]);
    for r in 0..GRID_SIDE {
        for c in 0..flank {
            img.set(r, c, left.gen_range(lo..=hi));
        }
    }
    if spec.symmetric {
        for r in 0..GRID_SIDE {
            for c in 0..flank {
                img.set(r, GRID_SIDE - 1 - c, img.get(r, c));
            }
        }
    } else {
        let mut right = rng::stream(seed, &[index, REGION_RIGHT]);
        for r in 0..GRID_SIDE {
            for c in 0..flank {
                img.set(r, GRID_SIDE - 1 - c, right.gen_range(lo..=hi));
            }
        }
    }
    upscale_blocks(&img, spec.block_scale as usize)
}

/// Stripe stimulus: mid-gray everywhere except the column pair (x, 19−x).
/// Symmetric images share one random 20-vector between the two columns.
pub fn gen_stripe(x: u8, symmetric: bool, seed: u64, index: u64) -> Result<ImageGrid> {
    let spec = FamilySpec::stripe(x, symmetric);
    spec.validate()?;
    let x = x as usize;
    let mirror = GRID_SIDE - 1 - x;
    let (lo, hi) = intensity_range(Brightness::Bright);

    let mut img = ImageGrid::filled(GRID_SIDE, GRID_SIDE, BAND_VALUE);
    let mut first = rng::stream(seed, &[index, REGION_LEFT]);
    for r in 0..GRID_SIDE {
        img.set(r, x, first.gen_range(lo..=hi));
    }
    if symmetric {
        for r in 0..GRID_SIDE {
            img.set(r, mirror, img.get(r, x));
        }
    } else {
        let mut second = rng::stream(seed, &[index, REGION_RIGHT]);
        for r in 0..GRID_SIDE {
            img.set(r, mirror, second.gen_range(lo..=hi));
        }
    }
    Ok(img)
}

/// Replaces the right half with the mirrored left half. Width must be even.
pub fn mirror_left(image: &ImageGrid) -> Result<ImageGrid> {
    let (w, h) = (image.width(), image.height());
    if w % 2 != 0 {
        return Err(Error::InvalidInput(format!("mirror_left needs even width, got {}", w)));
    }
    let mut out = image.clone();
    for r in 0..h {
        for c in 0..w / 2 {
            out.set(r, w - 1 - c, out.get(r, c));
        }
    }
    Ok(out)
}

/// Nearest-neighbour block upscaling: each pixel becomes a k×k block.
pub fn upscale_blocks(image: &ImageGrid, k: usize) -> Result<ImageGrid> {
    if k < 1 {
        return Err(Error::InvalidInput(format!("block scale must be ≥ 1, got {}", k)));
    }
    if k == 1 {
        return Ok(image.clone());
    }
    let (w, h) = (image.width(), image.height());
    let mut out = ImageGrid::filled(w * k, h * k, 0);
    for r in 0..h {
        for c in 0..w {
            let v = image.get(r, c);
            for dr in 0..k {
                for dc in 0..k {
                    out.set(r * k + dr, c * k + dc, v);
                }
            }
        }
    }
    Ok(out)
}

/// Dispatches to the family's generator, honouring `spec.block_scale`.
/// Natural images cannot be generated from a seed; building those datasets
/// goes through the manifest's source directory instead.
pub fn gen_image(spec: &FamilySpec, seed: u64, index: u64) -> Result<ImageGrid> {
    spec.validate()?;
    match spec.kind {
        FamilyKind::Band => gen_band(spec, seed, index),
        FamilyKind::Stripe => {
            let base = gen_stripe(spec.stripe_offset.unwrap(), spec.symmetric, seed, index)?;
            upscale_blocks(&base, spec.block_scale as usize)
        }
        FamilyKind::NaturalMirrored => Err(Error::InvalidSpec(
            "natural_mirrored images come from a source directory, not a seed".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imggen::Brightness;

    #[test]
    fn band4_center_columns_are_midgray() {
        let spec = FamilySpec::band(4, Brightness::Bright, true);
        let img = gen_band(&spec, 7, 0).unwrap();
        for r in 0..GRID_SIDE {
            for c in 8..12 {
                assert_eq!(img.get(r, c), BAND_VALUE, "pixel ({r},{c})");
            }
        }
    }

    #[test]
    fn band0_symmetric_mirrors_exactly() {
        let spec = FamilySpec::band(0, Brightness::Bright, true);
        for index in 0..50 {
            let img = gen_band(&spec, 3, index).unwrap();
            assert!(img.is_mirror_symmetric());
        }
    }

    #[test]
    fn nonsymmetric_band_is_never_a_mirror() {
        let spec = FamilySpec::band(4, Brightness::Bright, false);
        for index in 0..200 {
            let img = gen_band(&spec, 7, index).unwrap();
            assert!(!img.is_mirror_symmetric(), "index {index}");
        }
    }

    #[test]
    fn generation_is_referentially_transparent() {
        let spec = FamilySpec::band(6, Brightness::Dark, false);
        let a = gen_band(&spec, 11, 42).unwrap();
        let b = gen_band(&spec, 11, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_band(&spec, 11, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stripe_pair_convention_is_mirror_consistent() {
        let img = gen_stripe(2, true, 5, 0).unwrap();
        for r in 0..GRID_SIDE {
            assert_eq!(img.get(r, 2), img.get(r, 17));
        }
        assert!(img.is_mirror_symmetric());
        // x=10 pairs with 9: adjacent informative columns at the midline.
        let img = gen_stripe(10, true, 5, 0).unwrap();
        assert!(img.is_mirror_symmetric());
        for r in 0..GRID_SIDE {
            assert_eq!(img.get(r, 10), img.get(r, 9));
        }
    }

    #[test]
    fn stripe_background_and_sparsity() {
        let img = gen_stripe(4, false, 9, 3).unwrap();
        let informative = [4usize, 15];
        for r in 0..GRID_SIDE {
            for c in 0..GRID_SIDE {
                if !informative.contains(&c) {
                    assert_eq!(img.get(r, c), BAND_VALUE);
                }
            }
        }
    }

    #[test]
    fn mirror_left_is_idempotent() {
        let spec = FamilySpec::band(0, Brightness::Bright, false);
        let img = gen_band(&spec, 1, 0).unwrap();
        let once = mirror_left(&img).unwrap();
        assert!(once.is_mirror_symmetric());
        // Left half untouched.
        for r in 0..GRID_SIDE {
            for c in 0..GRID_SIDE / 2 {
                assert_eq!(once.get(r, c), img.get(r, c));
            }
        }
        assert_eq!(mirror_left(&once).unwrap(), once);
    }

    #[test]
    fn mirror_left_rejects_odd_width() {
        let img = ImageGrid::filled(5, 4, 0);
        assert!(mirror_left(&img).is_err());
    }

    #[test]
    fn upscale_blocks_properties() {
        let spec = FamilySpec::band(2, Brightness::Bright, true);
        let img = gen_band(&spec, 2, 0).unwrap();
        assert_eq!(upscale_blocks(&img, 1).unwrap(), img);
        let up = upscale_blocks(&img, 2).unwrap();
        assert_eq!(up.width(), 40);
        for r in 0..GRID_SIDE {
            for c in 0..GRID_SIDE {
                let v = img.get(r, c);
                assert_eq!(up.get(2 * r, 2 * c), v);
                assert_eq!(up.get(2 * r + 1, 2 * c + 1), v);
            }
        }
        // Means are preserved by constant blocks.
        let mean = |g: &ImageGrid| {
            g.pixels().iter().map(|&p| p as u64).sum::<u64>() as f64 / g.pixels().len() as f64
        };
        assert!((mean(&img) - mean(&up)).abs() < 1e-12);
        assert!(upscale_blocks(&img, 0).is_err());
    }

    #[test]
    fn block_scale_flows_through_gen_image() {
        let mut spec = FamilySpec::band(4, Brightness::Bright, true);
        spec.block_scale = 3;
        let img = gen_image(&spec, 1, 0).unwrap();
        assert_eq!(img.width(), 60);
        assert_eq!(img.height(), 60);
        assert!(img.is_mirror_symmetric());
    }
}
