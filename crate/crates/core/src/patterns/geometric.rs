use nalgebra::{SMatrix, SVector};
use rand::Rng;

use super::raster::{sample_bilinear, quantize, warp};
use super::{ApplyCtx, Params};
use crate::error::Result;
use crate::image::{Image, Rgb};

fn center(img: &Image) -> (f64, f64) {
    ((img.width() - 1) as f64 / 2.0, (img.height() - 1) as f64 / 2.0)
}

pub(super) fn resize_crop(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (scale, ratio) = (p.f("scale"), p.f("ratio"));
    let cw = ((scale * ratio).sqrt() * w).clamp(1.0_f64.min(w), w);
    let ch = ((scale / ratio).sqrt() * h).clamp(1.0_f64.min(h), h);
    let x0 = p.f("cx") * (w - cw);
    let y0 = p.f("cy") * (h - ch);
    let (sx, sy) = (cw / w, ch / h);
    warp(img, img.width(), img.height(), |x, y| (x0 + (x + 0.5) * sx - 0.5, y0 + (y + 0.5) * sy - 0.5))
}

pub(super) fn rotate(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let theta = p.f("angle").to_radians();
    let (cos, sin) = (theta.cos(), theta.sin());
    let (cx, cy) = center(img);
    warp(img, img.width(), img.height(), |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        (cx + cos * dx + sin * dy, cy - sin * dx + cos * dy)
    })
}

pub(super) fn padding(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let top = (p.f("top") * h).round() as u32;
    let bottom = (p.f("bottom") * h).round() as u32;
    let left = (p.f("left") * w).round() as u32;
    let right = (p.f("right") * w).round() as u32;
    let color: Rgb = [p.i("r") as u8, p.i("g") as u8, p.i("b") as u8];
    let (ow, oh) = (img.width() + left + right, img.height() + top + bottom);
    Image::from_fn(ow, oh, |x, y| {
        if x >= left && x < left + img.width() && y >= top && y < top + img.height() {
            img.pixel(x - left, y - top)
        } else {
            color
        }
    })
}

pub(super) fn vert_flip(img: &Image, _: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let h = img.height();
    Image::from_fn(img.width(), h, |x, y| img.pixel(x, h - 1 - y))
}

pub(super) fn hori_flip(img: &Image, _: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let w = img.width();
    Image::from_fn(w, img.height(), |x, y| img.pixel(w - 1 - x, y))
}

/// Solves for the homography taking `from[i]` to `to[i]`.
fn homography(from: [(f64, f64); 4], to: [(f64, f64); 4]) -> Option<[f64; 8]> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let (u, v) = from[i];
        let (x, y) = to[i];
        let r = 2 * i;
        a[(r, 0)] = u;
        a[(r, 1)] = v;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -u * x;
        a[(r, 7)] = -v * x;
        b[r] = x;
        a[(r + 1, 3)] = u;
        a[(r + 1, 4)] = v;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -u * y;
        a[(r + 1, 7)] = -v * y;
        b[r + 1] = y;
    }
    let sol = a.lu().solve(&b)?;
    Some(std::array::from_fn(|i| sol[i]))
}

pub(super) fn persp_change(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    if img.width() < 2 || img.height() < 2 {
        return Ok(img.clone());
    }
    let (mw, mh) = ((img.width() - 1) as f64, (img.height() - 1) as f64);
    let corners = [(0.0, 0.0), (mw, 0.0), (mw, mh), (0.0, mh)];
    let d = |k: usize| p.f(&format!("d{k}"));
    let (w, h) = (img.width() as f64, img.height() as f64);
    let moved: [(f64, f64); 4] = std::array::from_fn(|i| (corners[i].0 + d(2 * i) * w, corners[i].1 + d(2 * i + 1) * h));
    let Some(m) = homography(corners, moved) else {
        return Ok(img.clone());
    };
    warp(img, img.width(), img.height(), |x, y| {
        let den = m[6] * x + m[7] * y + 1.0;
        ((m[0] * x + m[1] * y + m[2]) / den, (m[3] * x + m[4] * y + m[5]) / den)
    })
}

pub(super) fn skew(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let t = p.f("angle").to_radians().tan();
    let (cx, cy) = center(img);
    if p.i("axis") == 0 {
        warp(img, img.width(), img.height(), |x, y| (x + t * (y - cy), y))
    } else {
        warp(img, img.width(), img.height(), |x, y| (x, y + t * (x - cx)))
    }
}

/// Piecewise-linear axis map: uniform cells in the output, jittered cells in the source.
fn distorted_axis(len: f64, steps: usize, limit: f64, rng: &mut impl Rng) -> Vec<f64> {
    let weights: Vec<f64> = (0..steps).map(|_| 1.0 + rng.random_range(-limit..=limit)).collect();
    let total: f64 = weights.iter().sum();
    let mut bounds = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    bounds.push(0.0);
    for wgt in &weights {
        acc += wgt;
        bounds.push(acc / total * len);
    }
    bounds
}

fn map_axis(pos: f64, len: f64, bounds: &[f64]) -> f64 {
    let steps = bounds.len() - 1;
    let u = ((pos + 0.5) / len * steps as f64).clamp(0.0, steps as f64);
    let k = (u.floor() as usize).min(steps - 1);
    let t = u - k as f64;
    bounds[k] + t * (bounds[k + 1] - bounds[k]) - 0.5
}

pub(super) fn grid_distort(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let steps = p.i("steps") as usize;
    let limit = p.f("limit");
    let (w, h) = (img.width() as f64, img.height() as f64);
    let xs = distorted_axis(w, steps, limit, &mut ctx.rng);
    let ys = distorted_axis(h, steps, limit, &mut ctx.rng);
    warp(img, img.width(), img.height(), |x, y| (map_axis(x, w, &xs), map_axis(y, h, &ys)))
}

pub(super) fn swirl(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let cx = p.f("cx") * (w - 1.0);
    let cy = p.f("cy") * (h - 1.0);
    let radius = (p.f("radius") * w.min(h)).max(1e-6);
    let strength = if p.i("clockwise") == 1 { -p.f("strength") } else { p.f("strength") };
    let falloff = std::f64::consts::LN_2 / radius;
    Image::from_fn(img.width(), img.height(), |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let rho = dx.hypot(dy);
        let theta = dy.atan2(dx) + strength * (-rho * falloff).exp();
        quantize(sample_bilinear(img, cx + rho * theta.cos(), cy + rho * theta.sin()))
    })
}
