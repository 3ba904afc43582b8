//! 8-bit grayscale rasters: Netpbm (P5/P6) reading and P5 writing, optional
//! PNG decoding, luminance conversion and resampling.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResizeFilter {
    Nearest,
    #[default]
    Bilinear,
}

impl std::str::FromStr for ResizeFilter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(ResizeFilter::Nearest),
            "bilinear" => Ok(ResizeFilter::Bilinear),
            other => Err(format!(
                "unknown resize filter `{other}` (nearest|bilinear)"
            )),
        }
    }
}

impl std::fmt::Display for ResizeFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResizeFilter::Nearest => "nearest",
            ResizeFilter::Bilinear => "bilinear",
        })
    }
}

/// Rec.601 luma, rounded to nearest. Equal channels pass through unchanged.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    if r == g && g == b {
        return r;
    }
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Param(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::Param("rgb buffer length mismatch".into()));
        }
        let pixels = rgb
            .chunks_exact(3)
            .map(|p| to_grayscale(p[0], p[1], p[2]))
            .collect();
        GrayImage::new(width, height, pixels)
    }

    /// Resamples to `width × height` as real-valued intensities in `[0, 255]`,
    /// row-major. Same-size requests copy the pixels exactly.
    pub fn resample(&self, width: usize, height: usize, filter: ResizeFilter) -> Vec<f64> {
        if width == self.width && height == self.height {
            return self.pixels.iter().map(|&p| f64::from(p)).collect();
        }
        let mut out = Vec::with_capacity(width * height);
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let px = |x: usize, y: usize| f64::from(self.pixels[y * self.width + x]);
        match filter {
            ResizeFilter::Nearest => {
                for y in 0..height {
                    let src_y = (((y as f64 + 0.5) * sy) as usize).min(self.height - 1);
                    for x in 0..width {
                        let src_x = (((x as f64 + 0.5) * sx) as usize).min(self.width - 1);
                        out.push(px(src_x, src_y));
                    }
                }
            }
            ResizeFilter::Bilinear => {
                let max_x = (self.width - 1) as f64;
                let max_y = (self.height - 1) as f64;
                for y in 0..height {
                    let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
                    let y0 = fy.floor() as usize;
                    let y1 = (y0 + 1).min(self.height - 1);
                    let ty = fy - y0 as f64;
                    for x in 0..width {
                        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                        let x0 = fx.floor() as usize;
                        let x1 = (x0 + 1).min(self.width - 1);
                        let tx = fx - x0 as f64;
                        let top = px(x0, y0) * (1.0 - tx) + px(x1, y0) * tx;
                        let bottom = px(x0, y1) * (1.0 - tx) + px(x1, y1) * tx;
                        out.push(top * (1.0 - ty) + bottom * ty);
                    }
                }
            }
        }
        out
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Decodes P5/P6 Netpbm, or PNG when the `png` feature is on.
pub fn decode(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    match bytes {
        [b'P', b'5', ..] | [b'P', b'6', ..] => decode_netpbm(bytes),
        [0x89, b'P', b'N', b'G', ..] => decode_png(bytes),
        _ => Err("unsupported image format (expected binary PGM/PPM or PNG)".into()),
    }
}

pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    decode(&bytes).map_err(|reason| Error::Ingest {
        path: path.to_path_buf(),
        reason,
    })
}

fn decode_netpbm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let color = bytes[1] == b'6';
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        skip_whitespace_and_comments(bytes, &mut pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format!(
                "netpbm header: missing field {} at byte {}",
                i + 1,
                start
            ));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|e| format!("netpbm header field {}: {e}", i + 1))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("netpbm: zero dimension {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("netpbm: maxval {maxval} out of range"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(format!(
                "netpbm: expected whitespace after maxval at byte {pos}"
            ))
        }
    }
    let channels = if color { 3 } else { 1 };
    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    let need = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels * sample_bytes))
        .ok_or_else(|| format!("netpbm: dimensions {width}x{height} overflow"))?;
    let raster = bytes
        .get(pos..pos.saturating_add(need))
        .ok_or_else(|| format!("netpbm: raster truncated, need {need} bytes after byte {pos}"))?;

    let samples: Vec<u8> = if sample_bytes == 2 {
        raster
            .chunks_exact(2)
            .map(|c| rescale(u32::from(u16::from_be_bytes([c[0], c[1]])), maxval))
            .collect()
    } else if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&v| rescale(u32::from(v), maxval))
            .collect()
    };
    if color {
        GrayImage::from_rgb(width, height, &samples).map_err(|e| e.to_string())
    } else {
        GrayImage::new(width, height, samples).map_err(|e| e.to_string())
    }
}

fn rescale(v: u32, maxval: usize) -> u8 {
    let v = v.min(maxval as u32);
    ((f64::from(v) * 255.0 / maxval as f64).round()) as u8
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        if bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        } else if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    use image::{ColorType, ImageFormat};

    let img =
        image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| e.to_string())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16 => {
            GrayImage::new(w, h, img.to_luma8().into_raw()).map_err(|e| e.to_string())
        }
        _ => GrayImage::from_rgb(w, h, &img.to_rgb8().into_raw()).map_err(|e| e.to_string()),
    }
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8]) -> std::result::Result<GrayImage, String> {
    Err("PNG support not compiled in (enable the `png` feature)".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_examples() {
        assert_eq!(to_grayscale(255, 255, 255), 255);
        assert_eq!(to_grayscale(0, 0, 0), 0);
        assert_eq!(to_grayscale(255, 0, 0), 76);
        assert_eq!(to_grayscale(0, 255, 0), 150);
        assert_eq!(to_grayscale(0, 0, 255), 29);
        for v in 0..=255u8 {
            assert_eq!(to_grayscale(v, v, v), v);
        }
    }

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::new(3, 2, vec![0, 10, 20, 30, 40, 255]).unwrap();
        assert_eq!(decode(&img.to_pgm()).unwrap(), img);
    }

    #[test]
    fn pgm_header_with_comments_and_low_maxval() {
        let mut bytes = b"P5\n# a comment\n2 1\n# another\n15\n".to_vec();
        bytes.extend([0u8, 15]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.pixels, vec![0, 255]);
    }

    #[test]
    fn pgm_sixteen_bit() {
        let mut bytes = b"P5 1 1 65535\n".to_vec();
        bytes.extend([0xff, 0xff]);
        assert_eq!(decode(&bytes).unwrap().pixels, vec![255]);
    }

    #[test]
    fn ppm_converts_to_luma() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend([255, 0, 0, 9, 9, 9]);
        assert_eq!(decode(&bytes).unwrap().pixels, vec![76, 9]);
    }

    #[test]
    fn truncated_and_garbage_rejected() {
        assert!(decode(b"P5\n2 2\n255\n\x00\x00")
            .unwrap_err()
            .contains("truncated"));
        assert!(decode(b"P5\n2\n").is_err());
        assert!(decode(b"GIF89a").is_err());
        assert!(decode(b"P5\n0 2\n255\n").is_err());
    }

    #[test]
    fn nearest_upsample_is_block_pattern() {
        let img = GrayImage::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        let up = img.resample(4, 4, ResizeFilter::Nearest);
        #[rustfmt::skip]
        let expect = [
            0.0, 0.0, 255.0, 255.0,
            0.0, 0.0, 255.0, 255.0,
            255.0, 255.0, 0.0, 0.0,
            255.0, 255.0, 0.0, 0.0,
        ];
        assert_eq!(up, expect);
    }

    #[test]
    fn bilinear_examples() {
        let img = GrayImage::new(2, 1, vec![0, 100]).unwrap();
        // Destination centres 0.5,1.5,2.5,3.5 map to source -0.25,0.25,0.75,1.25.
        let up = img.resample(4, 1, ResizeFilter::Bilinear);
        assert_eq!(up, vec![0.0, 25.0, 75.0, 100.0]);

        let flat = GrayImage::new(3, 3, vec![42; 9]).unwrap();
        assert!(flat
            .resample(7, 5, ResizeFilter::Bilinear)
            .iter()
            .all(|&v| v == 42.0));

        let down = GrayImage::new(2, 2, vec![0, 100, 100, 200]).unwrap();
        assert_eq!(down.resample(1, 1, ResizeFilter::Bilinear), vec![100.0]);
    }

    #[cfg(feature = "png")]
    #[test]
    fn png_rgb_decodes_through_luma() {
        use image::{ImageBuffer, Rgb};
        let buf: ImageBuffer<Rgb<u8>, _> =
            ImageBuffer::from_raw(2, 1, vec![255, 0, 0, 7, 7, 7]).unwrap();
        let mut bytes = Vec::new();
        buf.write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )
        .unwrap();
        assert_eq!(decode(&bytes).unwrap().pixels, vec![76, 7]);
    }
}
