use rand::seq::{index, SliceRandom};

use super::raster::{paste, quantize, resize, sample_bilinear};
use super::{ApplyCtx, Params};
use crate::error::Result;
use crate::image::{Image, Rgb};

pub(super) fn stack_image(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let partner = ctx.partners.partner(p.i("partner") as u64)?;
    let scale = p.f("partner_scale");
    let horizontal = p.i("axis") == 0;
    let partner_first = p.i("partner_first") == 1;
    let (w, h) = (img.width(), img.height());
    let partner = if horizontal {
        resize(&partner, ((w as f64 * scale).round() as u32).max(1), h)?
    } else {
        resize(&partner, w, ((h as f64 * scale).round() as u32).max(1))?
    };
    let (ow, oh) = if horizontal { (w + partner.width(), h) } else { (w, h + partner.height()) };
    let mut out = Image::filled(ow, oh, [0, 0, 0])?;
    let (first, second) = if partner_first { (&partner, img) } else { (img, &partner) };
    paste(&mut out, first, 0, 0);
    if horizontal {
        paste(&mut out, second, first.width() as i64, 0);
    } else {
        paste(&mut out, second, 0, first.height() as i64);
    }
    Ok(out)
}

/// Tiles the image `rows x cols` times into the original canvas, with a
/// fractional wrap-around offset.
pub(super) fn repeat(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let rows = p.i("rows") as f64;
    let mut cols = p.i("cols") as f64;
    if rows == 1.0 && cols == 1.0 {
        cols = 2.0;
    }
    let (ox, oy) = (p.f("ox"), p.f("oy"));
    let (w, h) = (img.width() as f64, img.height() as f64);
    Image::from_fn(img.width(), img.height(), |x, y| {
        let u = ((x as f64 + 0.5) / w * cols + ox).fract();
        let v = ((y as f64 + 0.5) / h * rows + oy).fract();
        quantize(sample_bilinear(img, u * w - 0.5, v * h - 0.5))
    })
}

pub(super) fn cut_assemble(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let cols = (p.i("cols") as u32).min(img.width());
    let rows = (p.i("rows") as u32).min(img.height());
    let (cw, ch) = (img.width() / cols, img.height() / rows);
    let mut order: Vec<u32> = (0..rows * cols).collect();
    order.shuffle(&mut ctx.rng);
    Image::from_fn(cw * cols, ch * rows, |x, y| {
        let cell = (y / ch) * cols + x / cw;
        let src = order[cell as usize];
        let (sx, sy) = ((src % cols) * cw + x % cw, (src / cols) * ch + y % ch);
        img.pixel(sx, sy)
    })
}

/// Swaps the contents of two equally sized rectangles.
pub(super) fn cut_paste(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    let rw = ((p.f("w") * w as f64).round() as u32).clamp(1, w);
    let rh = ((p.f("h") * h as f64).round() as u32).clamp(1, h);
    let place = |fx: f64, fy: f64| ((fx * (w - rw) as f64).round() as u32, (fy * (h - rh) as f64).round() as u32);
    let a = place(p.f("x1"), p.f("y1"));
    let b = place(p.f("x2"), p.f("y2"));
    let mut out = img.clone();
    for y in 0..rh {
        for x in 0..rw {
            out.put(b.0 + x, b.1 + y, img.pixel(a.0 + x, a.1 + y));
        }
    }
    for y in 0..rh {
        for x in 0..rw {
            out.put(a.0 + x, a.1 + y, img.pixel(b.0 + x, b.1 + y));
        }
    }
    Ok(out)
}

pub(super) fn shuf_pixels(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let n = (img.width() * img.height()) as usize;
    let k = ((p.f("fraction") * n as f64).round() as usize).min(n);
    let chosen = index::sample(&mut ctx.rng, n, k).into_vec();
    let mut targets = chosen.clone();
    targets.shuffle(&mut ctx.rng);
    let w = img.width() as usize;
    let mut out = img.clone();
    for (src, dst) in chosen.iter().zip(&targets) {
        let px = img.pixel((src % w) as u32, (src / w) as u32);
        out.put((dst % w) as u32, (dst / w) as u32, px);
    }
    Ok(out)
}

/// Rows of shrinking copies: row `i` holds `i + 1` tiles, centred.
pub(super) fn pyramid(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let levels = p.i("levels") as u32;
    let fill = p.f("fill");
    let bg: Rgb = [p.i("r") as u8, p.i("g") as u8, p.i("b") as u8];
    let (w, h) = (img.width(), img.height());
    let mut out = Image::filled(w, h, bg)?;
    let cell_w = w as f64 / levels as f64;
    let cell_h = h as f64 / levels as f64;
    let tw = ((cell_w * fill).floor() as u32).max(1);
    let th = ((cell_h * fill).floor() as u32).max(1);
    let tile = resize(img, tw, th)?;
    for row in 0..levels {
        let n = row + 1;
        let row_cy = (row as f64 + 0.5) * cell_h;
        let start = w as f64 / 2.0 - n as f64 * cell_w / 2.0;
        for i in 0..n {
            let cx = start + (i as f64 + 0.5) * cell_w;
            paste(&mut out, &tile, (cx - tw as f64 / 2.0).round() as i64, (row_cy - th as f64 / 2.0).round() as i64);
        }
    }
    Ok(out)
}
