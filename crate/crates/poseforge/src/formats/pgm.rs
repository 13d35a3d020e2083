//! Binary PGM (P5) image files, 8-bit grayscale.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use poseforge_core::image::GrayImage;

use super::FormatError;

pub fn save_pgm(path: &Path, img: &GrayImage) -> Result<(), FormatError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| FormatError::io(path, e))?;
        }
    }
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    let encoder = PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    encoder
        .write_image(img.as_slice(), img.width(), img.height(), ExtendedColorType::L8)
        .map_err(|e| FormatError::Image {
            path: path.to_path_buf(),
            source: e,
        })
}

pub fn load_pgm(path: &Path) -> Result<GrayImage, FormatError> {
    let dynamic = image::open(path).map_err(|e| FormatError::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let luma = dynamic.to_luma8();
    let (w, h) = luma.dimensions();
    GrayImage::from_raw(w, h, luma.into_raw())
        .map_err(|e| FormatError::corrupt(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn checker(w: u32, h: u32) -> GrayImage {
        let mut img = GrayImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, ((x + y) % 2 * 255) as u8 ^ (x as u8));
            }
        }
        img
    }

    #[test]
    fn round_trips_pixels_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = checker(17, 9);
        save_pgm(&path, &img).unwrap();
        let back = load_pgm(&path).unwrap();
        assert_eq!(back.width(), 17);
        assert_eq!(back.height(), 9);
        assert_eq!(back.as_slice(), img.as_slice());
    }

    #[test]
    fn file_is_binary_p5() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        save_pgm(&path, &checker(4, 4)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], b"P5");
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_pgm(Path::new("/nonexistent/q.pgm")).unwrap_err();
        assert!(err.to_string().contains("q.pgm"));
    }

    #[test]
    fn garbage_bytes_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"not an image at all").unwrap();
        assert!(load_pgm(&path).is_err());
    }
}
