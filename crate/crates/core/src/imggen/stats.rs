//! Pixel statistics: the left/right flank correlation used as the "degree
//! of non-symmetry" in the misclassification analysis.

use crate::error::{Error, Result};
use crate::imggen::ImageGrid;

/// Pearson correlation between the left flank and the horizontally flipped
/// right flank, excluding `band_width` central columns. `band_width` is in
/// pixels of this image (so a block-upscaled band is wider accordingly).
///
/// Accumulation is exact integer arithmetic, so perfectly (anti)correlated
/// flanks return exactly ±1.0 instead of a value a few ulps away.
pub fn left_right_correlation(image: &ImageGrid, band_width: usize) -> Result<f64> {
    let (w, h) = (image.width(), image.height());
    if band_width % 2 != 0 {
        return Err(Error::InvalidInput(format!("band width must be even, got {}", band_width)));
    }
    if band_width + 2 > w {
        return Err(Error::InvalidInput(format!(
            "band width {} leaves no flank in a width-{} image",
            band_width, w
        )));
    }
    if (w - band_width) % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "width {} minus band {} must be even to split into flanks",
            w, band_width
        )));
    }
    let flank = (w - band_width) / 2;

    let mut n: i128 = 0;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for r in 0..h {
        for c in 0..flank {
            let x = image.get(r, c) as i128;
            let y = image.get(r, w - 1 - c) as i128;
            n += 1;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
    }

    let num = n * sxy - sx * sy;
    let dxx = n * sxx - sx * sx;
    let dyy = n * syy - sy * sy;
    if dxx == 0 || dyy == 0 {
        return Err(Error::UndefinedCorrelation(format!(
            "constant {} flank has zero variance",
            if dxx == 0 { "left" } else { "right" }
        )));
    }
    // Perfect linear relation ⇔ num² == dxx·dyy (Cauchy–Schwarz equality).
    if num * num == dxx * dyy {
        return Ok(if num > 0 { 1.0 } else { -1.0 });
    }
    let r = num as f64 / ((dxx as f64).sqrt() * (dyy as f64).sqrt());
    Ok(r.clamp(-1.0, 1.0))
}
