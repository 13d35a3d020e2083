//! Grayscale raster storage and the crop-resize used to cut network inputs.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatMath;

use crate::geom::BoundingBox;

/// 8-bit grayscale image, row-major, `data[y * width + x]`.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl core::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

/// Raised when raw pixel data disagrees with the stated dimensions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pixel buffer holds {got} bytes, expected {width}x{height} = {expected}")]
pub struct DimensionMismatch {
    pub width: u32,
    pub height: u32,
    pub expected: usize,
    pub got: usize,
}

impl GrayImage {
    /// All-black image of the given size.
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, DimensionMismatch> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(DimensionMismatch {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Pixel value; panics if out of bounds.
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    /// Bilinear sample at continuous coordinates; everything outside the
    /// image reads as zero.
    fn sample_bilinear(&self, sx: f32, sy: f32) -> f32 {
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let x0 = x0 as i64;
        let y0 = y0 as i64;
        let pix = |x: i64, y: i64| -> f32 {
            if x >= 0 && (x as u32) < self.width && y >= 0 && (y as u32) < self.height {
                f32::from(self.get(x as u32, y as u32))
            } else {
                0.0
            }
        };
        (1.0 - fx) * (1.0 - fy) * pix(x0, y0)
            + fx * (1.0 - fy) * pix(x0 + 1, y0)
            + (1.0 - fx) * fy * pix(x0, y0 + 1)
            + fx * fy * pix(x0 + 1, y0 + 1)
    }

    /// Cuts `region` out of the image and resizes it to `out_w` x `out_h`
    /// with bilinear interpolation.
    ///
    /// Output pixel `(j, i)` samples the source at the center-aligned
    /// position `region_min + (j + 0.5) * region_size / out_size - 0.5`, so a
    /// region covering the whole image at the original size reproduces the
    /// image bit for bit. The region may extend past the image border;
    /// samples outside read as zero.
    pub fn crop_resize(&self, region: &BoundingBox, out_w: u32, out_h: u32) -> GrayImage {
        let sx_scale = region.width() / out_w as f32;
        let sy_scale = region.height() / out_h as f32;
        let mut out = GrayImage::new(out_w, out_h);
        for i in 0..out_h {
            let sy = region.y_min + (i as f32 + 0.5) * sy_scale - 0.5;
            for j in 0..out_w {
                let sx = region.x_min + (j as f32 + 0.5) * sx_scale - 0.5;
                let v = self.sample_bilinear(sx, sy).clamp(0.0, 255.0).round();
                out.set(j, i, v as u8);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: u32, h: u32, px: &[u8]) -> GrayImage {
        GrayImage::from_raw(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn from_raw_rejects_wrong_length() {
        let err = GrayImage::from_raw(3, 2, vec![0; 5]).unwrap_err();
        assert_eq!(err.expected, 6);
        assert_eq!(err.got, 5);
    }

    // Upsampling a 2x2 gradient to 4x4; expected values worked out by hand
    // from the center-aligned bilinear formula with zero fill outside.
    #[test]
    fn crop_resize_upsample_reference() {
        let src = img(2, 2, &[10, 20, 30, 40]);
        let full = BoundingBox::new(0.0, 0.0, 2.0, 2.0);
        let out = src.crop_resize(&full, 4, 4);
        #[rustfmt::skip]
        let expected: [u8; 16] = [
             6,  9, 13, 11,
            11, 18, 23, 19,
            19, 28, 33, 26,
            17, 24, 28, 23,
        ];
        assert_eq!(out.as_slice(), &expected);
    }

    // 2x2 checkerboard upsampled to 4x4, hand-evaluated: border samples mix
    // with the zero fill, interior samples are dyadic blends of 0 and 255.
    #[test]
    fn crop_resize_checkerboard_reference() {
        let src = img(2, 2, &[0, 255, 255, 0]);
        let full = BoundingBox::new(0.0, 0.0, 2.0, 2.0);
        let out = src.crop_resize(&full, 4, 4);
        #[rustfmt::skip]
        let expected: [u8; 16] = [
              0,  48, 143, 143,
             48,  96, 159, 143,
            143, 159,  96,  48,
            143, 143,  48,   0,
        ];
        assert_eq!(out.as_slice(), &expected);
    }

    // Cropping the centered 2x2 region of a 3x3 ramp lands each output
    // sample exactly on a source pixel center offset by half: the sample
    // positions hit (0.5+0.5k) so values interpolate to the midpoints.
    #[test]
    fn crop_resize_fractional_crop_reference() {
        let src = img(3, 3, &[0, 50, 100, 50, 100, 150, 100, 150, 200]);
        let region = BoundingBox::new(0.5, 0.5, 2.5, 2.5);
        let out = src.crop_resize(&region, 2, 2);
        assert_eq!(out.as_slice(), &[50, 100, 100, 150]);
    }

    #[test]
    fn crop_resize_identity() {
        let px: Vec<u8> = (0..64u32 * 48).map(|i| (i * 7 % 251) as u8).collect();
        let src = img(64, 48, &px);
        let full = BoundingBox::new(0.0, 0.0, 64.0, 48.0);
        let out = src.crop_resize(&full, 64, 48);
        assert_eq!(out, src);
    }

    #[test]
    fn crop_resize_outside_is_black() {
        let src = img(2, 2, &[10, 20, 30, 40]);
        let region = BoundingBox::new(10.0, 10.0, 12.0, 12.0);
        let out = src.crop_resize(&region, 2, 2);
        assert_eq!(out.as_slice(), &[0, 0, 0, 0]);
    }

    #[test]
    fn crop_resize_straddling_border_zero_fills() {
        let src = img(2, 2, &[10, 20, 30, 40]);
        let region = BoundingBox::new(-1.0, 0.0, 1.0, 2.0);
        let out = src.crop_resize(&region, 2, 2);
        assert_eq!(out.as_slice(), &[0, 10, 0, 30]);
    }

    proptest! {
        // Bilinear interpolation cannot overshoot its support: every output
        // stays within the source value range extended down to zero (the
        // fill value).
        #[test]
        fn crop_resize_respects_value_range(
            px in proptest::collection::vec(0u8..=255, 36..=36),
            x in -4.0f32..8.0,
            y in -4.0f32..8.0,
            w in 0.5f32..10.0,
            h in 0.5f32..10.0,
        ) {
            let src = img(6, 6, &px);
            let hi = *px.iter().max().unwrap();
            let region = BoundingBox::new(x, y, x + w, y + h);
            let out = src.crop_resize(&region, 5, 5);
            for &v in out.as_slice() {
                prop_assert!(v <= hi);
            }
        }
    }
}
