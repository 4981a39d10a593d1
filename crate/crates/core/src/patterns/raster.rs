//! Resampling and buffer helpers shared by the pattern implementations.
//!
//! Coordinates are pixel-centre based: pixel `(x, y)` sits at `(x, y)`.
//! Sampling is bilinear and clamps to the nearest edge pixel.

use crate::error::Result;
use crate::image::{to_u8, Image, Rgb};

#[inline]
pub fn sample_bilinear(img: &Image, x: f64, y: f64) -> [f64; 3] {
    let max_x = (img.width() - 1) as f64;
    let max_y = (img.height() - 1) as f64;
    let x = if x.is_finite() { x.clamp(0.0, max_x) } else { 0.0 };
    let y = if y.is_finite() { y.clamp(0.0, max_y) } else { 0.0 };
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as u32, y0 as u32);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let p00 = img.pixel(x0, y0);
    let p10 = img.pixel(x1, y0);
    let p01 = img.pixel(x0, y1);
    let p11 = img.pixel(x1, y1);
    std::array::from_fn(|c| {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

#[inline]
pub fn quantize(p: [f64; 3]) -> Rgb {
    [to_u8(p[0]), to_u8(p[1]), to_u8(p[2])]
}

/// Inverse-maps every output pixel into the source and samples bilinearly.
pub fn warp(img: &Image, out_w: u32, out_h: u32, map: impl Fn(f64, f64) -> (f64, f64)) -> Result<Image> {
    Image::from_fn(out_w, out_h, |x, y| {
        let (sx, sy) = map(x as f64, y as f64);
        quantize(sample_bilinear(img, sx, sy))
    })
}

pub fn resize(img: &Image, out_w: u32, out_h: u32) -> Result<Image> {
    let out_w = out_w.max(1);
    let out_h = out_h.max(1);
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let sx = img.width() as f64 / out_w as f64;
    let sy = img.height() as f64 / out_h as f64;
    warp(img, out_w, out_h, |x, y| ((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5))
}

/// Copies `src` onto `dst` with its top-left corner at `(x0, y0)`, clipping.
pub fn paste(dst: &mut Image, src: &Image, x0: i64, y0: i64) {
    for y in 0..src.height() {
        let ty = y0 + y as i64;
        if ty < 0 || ty >= dst.height() as i64 {
            continue;
        }
        for x in 0..src.width() {
            let tx = x0 + x as i64;
            if tx < 0 || tx >= dst.width() as i64 {
                continue;
            }
            dst.put(tx as u32, ty as u32, src.pixel(x, y));
        }
    }
}

/// Floating-point RGB buffer for filters that need intermediate precision.
#[derive(Clone)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl FloatImage {
    pub fn from_image(img: &Image) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.pixels().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect(),
        }
    }

    pub fn to_image(&self) -> Result<Image> {
        let mut data = Vec::with_capacity(self.data.len() * 3);
        for p in &self.data {
            data.extend_from_slice(&quantize(*p));
        }
        Image::new(self.width as u32, self.height as u32, data)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with edge clamping.
pub fn gaussian_blur(src: &FloatImage, sigma: f64) -> FloatImage {
    gaussian_blur_xy(src, sigma, sigma)
}

/// Separable blur with independent horizontal and vertical sigmas.
pub fn gaussian_blur_xy(src: &FloatImage, sigma_x: f64, sigma_y: f64) -> FloatImage {
    let k = gaussian_kernel(sigma_x);
    let r = (k.len() / 2) as i64;
    let (w, h) = (src.width as i64, src.height as i64);
    let mut tmp = vec![[0.0; 3]; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (i, kv) in k.iter().enumerate() {
                let sx = (x + i as i64 - r).clamp(0, w - 1);
                let p = src.data[(y * w + sx) as usize];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let k = gaussian_kernel(sigma_y);
    let r = (k.len() / 2) as i64;
    let mut out = vec![[0.0; 3]; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (i, kv) in k.iter().enumerate() {
                let sy = (y + i as i64 - r).clamp(0, h - 1);
                let p = tmp[(sy * w + x) as usize];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    FloatImage { width: src.width, height: src.height, data: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_size_resize_is_identity() {
        let img = Image::from_fn(5, 4, |x, y| [x as u8 * 40, y as u8 * 60, 7]).unwrap();
        assert_eq!(resize(&img, 5, 4).unwrap(), img);
        let warped = warp(&img, 5, 4, |x, y| (x, y)).unwrap();
        assert_eq!(warped, img);
    }

    #[test]
    fn bilinear_midpoint() {
        let img = Image::from_fn(2, 1, |x, _| if x == 0 { [0, 0, 0] } else { [100, 200, 50] }).unwrap();
        assert_eq!(sample_bilinear(&img, 0.5, 0.0), [50.0, 100.0, 25.0]);
        // clamped beyond the edge
        assert_eq!(sample_bilinear(&img, 7.0, -3.0), [100.0, 200.0, 50.0]);
    }

    #[test]
    fn blur_preserves_constant() {
        let img = Image::filled(6, 6, [90, 10, 200]).unwrap();
        let out = gaussian_blur(&FloatImage::from_image(&img), 1.7).to_image().unwrap();
        assert_eq!(out, img);
    }
}
