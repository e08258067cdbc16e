//! Raster ingestion, PNG rendering and content hashing.

use std::fs;
use std::path::Path;

use fieldscout_core::partition::Field;
use fieldscout_core::raster::{synth_field, Blob, FieldSpec, WeedRaster};
use fieldscout_core::Point;
use image::{GrayImage, Luma, Rgb, RgbImage};
use sha2::{Digest, Sha256};

use crate::config::{Channel, FieldSource};
use crate::error::{CliError, CliResult};

/// Decodes an 8-bit grayscale or colour image into a weed raster. Colour
/// images are reduced to one channel; 255 maps to 1.0.
pub fn load_raster(path: &Path, channel: Channel, gsd: f64) -> CliResult<WeedRaster> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let img = image::load_from_memory(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(CliError::Data(format!("{}: image has zero size", path.display())));
    }
    let pixels: Vec<u8> = if img.color().has_color() {
        let rgb = img.to_rgb8();
        match channel {
            Channel::Red => rgb.pixels().map(|p| p[0]).collect(),
            Channel::Green => rgb.pixels().map(|p| p[1]).collect(),
            Channel::Blue => rgb.pixels().map(|p| p[2]).collect(),
            Channel::Luma => img.to_luma8().into_raw(),
        }
    } else {
        img.to_luma8().into_raw()
    };
    Ok(WeedRaster::from_u8(w, h, &pixels, gsd)?)
}

/// Ground truth for a run: the configured raster, or a synthetic field.
pub fn field_from_source(src: &FieldSource, seed: u64) -> CliResult<WeedRaster> {
    if let Some(path) = &src.path {
        return load_raster(path, src.channel, src.gsd);
    }
    let spec = if src.blobs.is_empty() {
        FieldSpec::random_blobs(src.res, src.gsd, src.n_blobs, (src.radius_min, src.radius_max), src.noise, seed)
    } else {
        FieldSpec {
            width: src.res,
            height: src.res,
            gsd: src.gsd,
            blobs: src
                .blobs
                .iter()
                .map(|b| Blob {
                    centre: Point::new(b.x, b.y),
                    radius: b.radius,
                    amplitude: b.amplitude,
                })
                .collect(),
            noise: src.noise,
        }
    };
    Ok(synth_field(&spec, seed)?)
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn field_image(f: &Field) -> GrayImage {
    let n = f.res() as u32;
    GrayImage::from_fn(n, n, |c, r| Luma([to_u8(f.get(c as usize, r as usize))]))
}

pub fn raster_image(r: &WeedRaster) -> RgbImage {
    RgbImage::from_fn(r.width() as u32, r.height() as u32, |c, row| {
        let v = to_u8(r.get(c as usize, row as usize));
        Rgb([v, v, v])
    })
}

/// Plots `pts` (unit-square coordinates) as a polyline over `img`, with a
/// green square at the first point and a blue square at the last.
pub fn draw_trajectory(img: &mut RgbImage, pts: &[Point]) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let px = |p: Point| (p.x * w, p.y * h);
    for seg in pts.windows(2) {
        draw_line(img, px(seg[0]), px(seg[1]), Rgb([220, 30, 30]));
    }
    let mark = ((w.min(h) / 64.0).round() as i64).max(2);
    if let Some(&s) = pts.first() {
        draw_square(img, px(s), mark, Rgb([30, 200, 30]));
    }
    if let Some(&e) = pts.last() {
        draw_square(img, px(e), mark, Rgb([40, 90, 230]));
    }
}

pub fn draw_line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), colour: Rgb<u8>) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        put(img, a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1), colour);
    }
}

fn draw_square(img: &mut RgbImage, c: (f64, f64), half: i64, colour: Rgb<u8>) {
    for dy in -half..=half {
        for dx in -half..=half {
            put(img, c.0 + dx as f64, c.1 + dy as f64, colour);
        }
    }
}

fn put(img: &mut RgbImage, x: f64, y: f64, colour: Rgb<u8>) {
    let (x, y) = (x.floor(), y.floor());
    if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, colour);
    }
}

/// Line chart of several series sharing an x axis, y scaled to `[0, y_max]`.
pub fn line_chart(series: &[Vec<f64>], y_max: f64, width: u32, height: u32) -> RgbImage {
    const PALETTE: [Rgb<u8>; 7] = [
        Rgb([31, 119, 180]),
        Rgb([255, 127, 14]),
        Rgb([44, 160, 44]),
        Rgb([214, 39, 40]),
        Rgb([148, 103, 189]),
        Rgb([140, 86, 75]),
        Rgb([227, 119, 194]),
    ];
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let margin = 20.0;
    let (w, h) = (width as f64 - 2.0 * margin, height as f64 - 2.0 * margin);
    let axis = Rgb([0, 0, 0]);
    draw_line(&mut img, (margin, margin), (margin, margin + h), axis);
    draw_line(&mut img, (margin, margin + h), (margin + w, margin + h), axis);
    let n = series.iter().map(Vec::len).max().unwrap_or(0);
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    for (k, s) in series.iter().enumerate() {
        let at = |i: usize| {
            let x = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            (margin + x * w, margin + h - (s[i] / y_max).clamp(0.0, 1.0) * h)
        };
        for i in 1..s.len() {
            draw_line(&mut img, at(i - 1), at(i), PALETTE[k % PALETTE.len()]);
        }
    }
    img
}

pub trait ImageSave {
    fn save_png(&self, path: &Path) -> CliResult<()>;
}

impl ImageSave for GrayImage {
    fn save_png(&self, path: &Path) -> CliResult<()> {
        self.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

impl ImageSave for RgbImage {
    fn save_png(&self, path: &Path) -> CliResult<()> {
        self.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&fs::read(path).map_err(CliError::io(path))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(dir: &Path, name: &str, img: &RgbImage) -> std::path::PathBuf {
        let p = dir.join(name);
        img.save_png(&p).unwrap();
        p
    }

    #[test]
    fn pixel_scale_and_default_gsd() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(3, 2, |c, _| Luma([if c == 0 { 255 } else if c == 1 { 0 } else { 51 }]));
        let p = dir.path().join("g.png");
        img.save_png(&p).unwrap();
        let r = load_raster(&p, Channel::Red, fieldscout_core::raster::DEFAULT_GSD).unwrap();
        assert_eq!((r.width(), r.height()), (3, 2));
        assert_eq!(r.get(0, 0), 1.0);
        assert_eq!(r.get(1, 1), 0.0);
        assert_eq!(r.get(2, 0), 0.2);
        assert_eq!(r.gsd(), 0.0104);
    }

    #[test]
    fn colour_takes_configured_channel() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::from_pixel(2, 2, Rgb([255, 0, 102]));
        let p = write_png(dir.path(), "c.png", &img);
        assert_eq!(load_raster(&p, Channel::Red, 0.01).unwrap().get(1, 1), 1.0);
        assert_eq!(load_raster(&p, Channel::Green, 0.01).unwrap().get(1, 1), 0.0);
        assert_eq!(load_raster(&p, Channel::Blue, 0.01).unwrap().get(1, 1), 0.4);
    }

    #[test]
    fn unreadable_files_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = load_raster(&dir.path().join("none.png"), Channel::Red, 0.01).unwrap_err();
        assert_eq!(missing.exit_code(), 3);
        let junk = dir.path().join("junk.png");
        fs::write(&junk, b"not an image").unwrap();
        assert_eq!(load_raster(&junk, Channel::Red, 0.01).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn synthetic_source_is_seeded() {
        let src = FieldSource {
            res: 32,
            ..FieldSource::default()
        };
        let a = field_from_source(&src, 4).unwrap();
        assert_eq!(a, field_from_source(&src, 4).unwrap());
        assert_ne!(a, field_from_source(&src, 5).unwrap());
    }

    #[test]
    fn trajectory_marks_endpoints() {
        let mut img = RgbImage::new(64, 64);
        draw_trajectory(&mut img, &[Point::new(0.1, 0.5), Point::new(0.9, 0.5)]);
        assert_eq!(*img.get_pixel(6, 32), Rgb([30, 200, 30]));
        assert_eq!(*img.get_pixel(57, 32), Rgb([40, 90, 230]));
        assert_eq!(*img.get_pixel(32, 32), Rgb([220, 30, 30]));
        assert_eq!(*img.get_pixel(32, 40), Rgb([0, 0, 0]));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
