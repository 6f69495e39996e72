use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::raster::{Image, Raster};

/// Sample precision for [`save_image`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

/// Reads PNG (8/16-bit) or binary PGM/PPM and maps intensities to `[0, 1]`.
/// Alpha is dropped; gray images load with one channel, everything else
/// with three.
pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = image::guess_format(&bytes).map_err(|e| Error::format(path, e))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::format(path, format!("unsupported image format {format:?}")));
    }
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| Error::format(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = !img.color().has_color();
    let wide = img.color().bytes_per_pixel() / img.color().channel_count() > 1;
    let planes = match (gray, wide) {
        (true, false) => {
            let buf = img.to_luma8();
            vec![Raster::from_fn(w, h, |x, y| {
                buf.get_pixel(x as u32, y as u32)[0] as f64 / 255.0
            })]
        }
        (true, true) => {
            let buf = img.to_luma16();
            vec![Raster::from_fn(w, h, |x, y| {
                buf.get_pixel(x as u32, y as u32)[0] as f64 / 65535.0
            })]
        }
        (false, false) => {
            let buf = img.to_rgb8();
            (0..3)
                .map(|c| Raster::from_fn(w, h, |x, y| buf.get_pixel(x as u32, y as u32)[c] as f64 / 255.0))
                .collect()
        }
        (false, true) => {
            let buf = img.to_rgb16();
            (0..3)
                .map(|c| Raster::from_fn(w, h, |x, y| buf.get_pixel(x as u32, y as u32)[c] as f64 / 65535.0))
                .collect()
        }
    };
    Image::from_planes(planes)
}

fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}

/// Writes PNG, or PGM/PPM for `.pgm`/`.ppm`/`.pnm` paths. Values are
/// clamped to `[0, 1]` and rounded half away from zero.
pub fn save_image(image: &Image, path: &Path, depth: BitDepth) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let format = match ext.as_str() {
        "png" => ImageFormat::Png,
        "pgm" | "ppm" | "pnm" => ImageFormat::Pnm,
        _ => return Err(Error::format(path, format!("unknown image extension '{ext}'"))),
    };
    if image.channels() != 1 && image.channels() != 3 {
        return Err(Error::Contract(format!(
            "cannot save a {}-channel image",
            image.channels()
        )));
    }
    let (w, h) = (image.width() as u32, image.height() as u32);
    let sample = |c: usize, x: u32, y: u32, max: f64| quantize(image.plane(c).get(x as usize, y as usize), max);
    let dynamic = match (image.channels(), depth) {
        (1, BitDepth::Eight) => {
            DynamicImage::ImageLuma8(ImageBuffer::from_fn(w, h, |x, y| Luma([sample(0, x, y, 255.0) as u8])))
        }
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(ImageBuffer::from_fn(w, h, |x, y| {
            Luma([sample(0, x, y, 65535.0) as u16])
        })),
        (_, BitDepth::Eight) => DynamicImage::ImageRgb8(ImageBuffer::from_fn(w, h, |x, y| {
            Rgb([0, 1, 2].map(|c| sample(c, x, y, 255.0) as u8))
        })),
        (_, BitDepth::Sixteen) => DynamicImage::ImageRgb16(ImageBuffer::from_fn(w, h, |x, y| {
            Rgb([0, 1, 2].map(|c| sample(c, x, y, 65535.0) as u16))
        })),
    };
    let mut encoded = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut encoded, format)
        .map_err(|e| Error::format(path, e))?;
    let bytes = encoded.into_inner();
    write_atomic(path, |w| w.write_all(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_bit_half_is_128() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("half.png");
        save_image(&Image::filled(3, 2, 3, 0.5).unwrap(), &path, BitDepth::Eight).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.channels(), 3);
        for p in back.planes() {
            assert!(p.data().iter().all(|&v| v == 128.0 / 255.0));
        }
    }

    #[test]
    fn sixteen_bit_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::gray(Raster::from_fn(17, 9, |x, y| ((x * 31 + y * 7) % 100) as f64 / 99.0)).unwrap();
        for name in ["g.png", "g.pgm"] {
            let path = dir.path().join(name);
            save_image(&img, &path, BitDepth::Sixteen).unwrap();
            let back = load_image(&path).unwrap();
            assert!(back.max_abs_diff(&img).unwrap() <= 0.5 / 65535.0 + 1e-15);
        }
    }

    #[test]
    fn clamps_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppm");
        let img = Image::gray(Raster::from_vec(2, 1, vec![-0.3, 1.7]).unwrap()).unwrap();
        let rgb = Image::from_planes(vec![img.plane(0).clone(); 3]).unwrap();
        save_image(&rgb, &path, BitDepth::Eight).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.plane(1).data(), &[0.0, 1.0]);
    }

    #[test]
    fn missing_file_and_bad_target() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_image(&dir.path().join("nope.png")),
            Err(Error::Io { .. })
        ));
        let target = dir.path().join("missing").join("out.png");
        assert!(save_image(&Image::filled(2, 2, 1, 0.1).unwrap(), &target, BitDepth::Eight).is_err());
        assert!(!target.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
