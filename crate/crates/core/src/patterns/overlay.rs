use rand::Rng;

use super::raster::{quantize, resize};
use super::{ApplyCtx, Params};
use crate::error::Result;
use crate::image::{to_u8, Image, Rgb};

fn mix(base: Rgb, over: Rgb, alpha: f64) -> Rgb {
    std::array::from_fn(|c| to_u8(base[c] as f64 * (1.0 - alpha) + over[c] as f64 * alpha))
}

pub(super) fn blend(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let partner = ctx.partners.partner(p.i("partner") as u64)?;
    let partner = resize(&partner, img.width(), img.height())?;
    let alpha = p.f("alpha");
    Image::from_fn(img.width(), img.height(), |x, y| mix(img.pixel(x, y), partner.pixel(x, y), alpha))
}

pub(super) fn add_stripes(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let theta = p.f("angle").to_radians();
    let (cos, sin) = (theta.cos(), theta.sin());
    let (w, h) = (img.width() as f64, img.height() as f64);
    let proj = |x: f64, y: f64| x * cos + y * sin;
    let corners = [proj(0.0, 0.0), proj(w, 0.0), proj(0.0, h), proj(w, h)];
    let dmin = corners.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spacing = ((dmax - dmin) / p.i("count") as f64).max(1e-9);
    let (width, phase, opacity) = (p.f("width"), p.f("phase"), p.f("opacity"));
    let color: Rgb = [p.i("r") as u8, p.i("g") as u8, p.i("b") as u8];
    Image::from_fn(img.width(), img.height(), |x, y| {
        let t = (proj(x as f64 + 0.5, y as f64 + 0.5) - dmin) / spacing + phase;
        let px = img.pixel(x, y);
        if t.fract() < width {
            mix(px, color, opacity)
        } else {
            px
        }
    })
}

#[derive(Clone, Copy)]
enum Shape {
    Ellipse,
    Rect,
    Triangle,
    Star,
    Pentagon,
}

fn regular_polygon(n: usize, radius: f64, inner: Option<f64>) -> Vec<(f64, f64)> {
    let count = if inner.is_some() { 2 * n } else { n };
    (0..count)
        .map(|i| {
            let r = match inner {
                Some(ir) if i % 2 == 1 => ir,
                _ => radius,
            };
            let a = std::f64::consts::TAU * i as f64 / count as f64 - std::f64::consts::FRAC_PI_2;
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

fn inside_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub(super) fn add_shapes(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let mut out = img.clone();
    let (w, h) = (img.width() as f64, img.height() as f64);
    let opacity = p.f("opacity");
    for _ in 0..p.i("count") {
        let rng = &mut ctx.rng;
        let shape = match rng.random_range(0..5) {
            0 => Shape::Ellipse,
            1 => Shape::Rect,
            2 => Shape::Triangle,
            3 => Shape::Star,
            _ => Shape::Pentagon,
        };
        let cx = rng.random_range(0.0..=1.0) * w;
        let cy = rng.random_range(0.0..=1.0) * h;
        let size = (rng.random_range(0.1..=0.35) * w.min(h)).max(1.0);
        let aspect: f64 = rng.random_range(0.5..=1.0);
        let rot: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let color: Rgb = std::array::from_fn(|_| rng.random_range(0..=255u8));
        let poly = match shape {
            Shape::Triangle => regular_polygon(3, size, None),
            Shape::Pentagon => regular_polygon(5, size, None),
            Shape::Star => regular_polygon(5, size, Some(size * 0.45)),
            _ => Vec::new(),
        };
        let (cos, sin) = (rot.cos(), rot.sin());
        let x0 = (cx - size * 1.5).floor().max(0.0) as u32;
        let x1 = ((cx + size * 1.5).ceil().min(w)) as u32;
        let y0 = (cy - size * 1.5).floor().max(0.0) as u32;
        let y1 = ((cy + size * 1.5).ceil().min(h)) as u32;
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let (lx, ly) = (cos * dx + sin * dy, -sin * dx + cos * dy);
                let hit = match shape {
                    Shape::Ellipse => (lx / size).powi(2) + (ly / (size * aspect)).powi(2) <= 1.0,
                    Shape::Rect => lx.abs() <= size && ly.abs() <= size * aspect,
                    _ => inside_polygon(&poly, lx, ly),
                };
                if hit {
                    let px = out.pixel(x, y);
                    out.put(x, y, mix(px, color, opacity));
                }
            }
        }
    }
    Ok(out)
}

pub(super) fn erasing(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let area = p.f("area") * w * h;
    let aspect = p.f("aspect");
    let ew = (area * aspect).sqrt().round().clamp(1.0, w);
    let eh = (area / aspect).sqrt().round().clamp(1.0, h);
    let x0 = (p.f("cx") * (w - ew)).round() as u32;
    let y0 = (p.f("cy") * (h - eh)).round() as u32;
    let mut out = img.clone();
    for y in y0..y0 + eh as u32 {
        for x in x0..x0 + ew as u32 {
            let noise: [f64; 3] = std::array::from_fn(|_| ctx.rng.random_range(0.0..256.0f64).floor());
            out.put(x, y, quantize(noise));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_containment() {
        let tri = regular_polygon(3, 10.0, None);
        assert!(inside_polygon(&tri, 0.0, 0.0));
        assert!(!inside_polygon(&tri, 0.0, 20.0));
        let star = regular_polygon(5, 10.0, Some(4.0));
        assert_eq!(star.len(), 10);
        assert!(inside_polygon(&star, 0.0, -8.0));
    }
}
