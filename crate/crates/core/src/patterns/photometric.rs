use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::raster::{gaussian_blur, gaussian_blur_xy, quantize, FloatImage};
use super::{ApplyCtx, Params};
use crate::error::{Error, Result};
use crate::image::{luma, to_u8, Image, Rgb};

pub(super) fn grayscale(img: &Image, _: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    Ok(img.map_pixels(|p| {
        let y = to_u8(luma(p));
        [y, y, y]
    }))
}

fn mean_luma(data: &[[f64; 3]]) -> f64 {
    let sum: f64 = data.iter().map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).sum();
    sum / data.len() as f64
}

pub(super) fn color_jitter(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let mut f = FloatImage::from_image(img);
    let b = p.f("brightness");
    for px in &mut f.data {
        for c in px.iter_mut() {
            *c = (*c * b).clamp(0.0, 255.0);
        }
    }
    let contrast = p.f("contrast");
    let mean = mean_luma(&f.data);
    for px in &mut f.data {
        for c in px.iter_mut() {
            *c = (mean + (*c - mean) * contrast).clamp(0.0, 255.0);
        }
    }
    let sat = p.f("saturation");
    let theta = p.f("hue") * std::f64::consts::TAU;
    let (cos, sin) = (theta.cos(), theta.sin());
    for px in &mut f.data {
        let [r, g, bl] = *px;
        let y = 0.299 * r + 0.587 * g + 0.114 * bl;
        let i = (0.596 * r - 0.274 * g - 0.322 * bl) * sat;
        let q = (0.211 * r - 0.523 * g + 0.312 * bl) * sat;
        let (i, q) = (i * cos - q * sin, i * sin + q * cos);
        *px = [
            y + 0.956 * i + 0.621 * q,
            y - 0.272 * i - 0.647 * q,
            y - 1.106 * i + 1.703 * q,
        ];
    }
    f.to_image()
}

pub(super) fn blur(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    gaussian_blur_xy(&FloatImage::from_image(img), p.f("sigma_x"), p.f("sigma_y")).to_image()
}

fn block_mean(img: &Image, x0: u32, y0: u32, x1: u32, y1: u32) -> Rgb {
    let mut acc = [0.0; 3];
    for y in y0..y1 {
        for x in x0..x1 {
            let p = img.pixel(x, y);
            for c in 0..3 {
                acc[c] += p[c] as f64;
            }
        }
    }
    let n = ((x1 - x0) * (y1 - y0)) as f64;
    quantize(acc.map(|v| v / n))
}

pub(super) fn pixelate(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    let block = p.i("block") as u32;
    let rx0 = ((p.f("x0") * w as f64).floor() as u32).min(w - 1);
    let ry0 = ((p.f("y0") * h as f64).floor() as u32).min(h - 1);
    let rx1 = (rx0 + (p.f("w") * w as f64).ceil() as u32).clamp(rx0 + 1, w);
    let ry1 = (ry0 + (p.f("h") * h as f64).ceil() as u32).clamp(ry0 + 1, h);
    let mut out = img.clone();
    let mut by = ry0;
    while by < ry1 {
        let by1 = (by + block).min(ry1);
        let mut bx = rx0;
        while bx < rx1 {
            let bx1 = (bx + block).min(rx1);
            let m = block_mean(img, bx, by, bx1, by1);
            for y in by..by1 {
                for x in bx..bx1 {
                    out.put(x, y, m);
                }
            }
            bx = bx1;
        }
        by = by1;
    }
    Ok(out)
}

pub(super) fn add_noise(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let normal = Normal::new(0.0, p.f("sigma")).map_err(|e| Error::Pattern(e.to_string()))?;
    let rng = &mut ctx.rng;
    Ok(img.map_pixels(|px| px.map(|v| to_u8(v as f64 + normal.sample(rng)))))
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

pub(super) fn change_chan(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let perm = PERMS[p.i("perm") as usize];
    let invert = p.i("invert");
    let shift = [p.i("shift_r"), p.i("shift_g"), p.i("shift_b")];
    Ok(img.map_pixels(|px| {
        std::array::from_fn(|c| {
            let mut v = px[perm[c]] as i64;
            if invert & (1 << c) != 0 {
                v = 255 - v;
            }
            (v + shift[c]).clamp(0, 255) as u8
        })
    }))
}

const LUMA_Q: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., 12., 12., 14., 19., 26., 58., 60., 55., 14., 13., 16., 24., 40., 57.,
    69., 56., 14., 17., 22., 29., 51., 87., 80., 62., 18., 22., 37., 56., 68., 109., 103., 77., 24., 35., 55., 64.,
    81., 104., 113., 92., 49., 64., 78., 87., 103., 121., 120., 101., 72., 92., 95., 98., 112., 100., 103., 99.,
];

const CHROMA_Q: [f64; 64] = [
    17., 18., 24., 47., 99., 99., 99., 99., 18., 21., 26., 66., 99., 99., 99., 99., 24., 26., 56., 99., 99., 99.,
    99., 99., 47., 66., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99.,
];

fn dct_basis() -> [[f64; 8]; 8] {
    std::array::from_fn(|x| {
        std::array::from_fn(|u| {
            let a = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
            0.5 * a * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos()
        })
    })
}

/// Quantizes one plane through an 8x8 orthonormal DCT, in place.
fn quantize_plane(plane: &mut [f64], w: usize, h: usize, table: &[f64; 64], basis: &[[f64; 8]; 8]) {
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            let mut block = [[0.0; 8]; 8];
            for (y, row) in block.iter_mut().enumerate() {
                for (x, v) in row.iter_mut().enumerate() {
                    let sx = (bx + x).min(w - 1);
                    let sy = (by + y).min(h - 1);
                    *v = plane[sy * w + sx] - 128.0;
                }
            }
            let mut coef = [[0.0; 8]; 8];
            for v in 0..8 {
                for u in 0..8 {
                    let mut s = 0.0;
                    for y in 0..8 {
                        for x in 0..8 {
                            s += block[y][x] * basis[x][u] * basis[y][v];
                        }
                    }
                    let q = table[v * 8 + u];
                    coef[v][u] = (s / q).round() * q;
                }
            }
            for y in 0..8 {
                for x in 0..8 {
                    if bx + x >= w || by + y >= h {
                        continue;
                    }
                    let mut s = 0.0;
                    for v in 0..8 {
                        for u in 0..8 {
                            s += coef[v][u] * basis[x][u] * basis[y][v];
                        }
                    }
                    plane[(by + y) * w + bx + x] = s + 128.0;
                }
            }
        }
    }
}

/// Lossy DCT quantization in YCbCr with libjpeg-style table scaling.
pub(super) fn enc_quality(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let q = p.f("quality");
    let scale = if q < 50.0 { 5000.0 / q } else { 200.0 - 2.0 * q };
    let luma_t: [f64; 64] = LUMA_Q.map(|v| (v * scale / 100.0).max(1.0));
    let chroma_t: [f64; 64] = CHROMA_Q.map(|v| (v * scale / 100.0).max(1.0));
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut planes = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for (i, px) in img.pixels().enumerate() {
        let [r, g, b] = px.map(f64::from);
        planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b;
        planes[1][i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
        planes[2][i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
    let basis = dct_basis();
    quantize_plane(&mut planes[0], w, h, &luma_t, &basis);
    quantize_plane(&mut planes[1], w, h, &chroma_t, &basis);
    quantize_plane(&mut planes[2], w, h, &chroma_t, &basis);
    let mut data = Vec::with_capacity(w * h * 3);
    let [py, pcb, pcr] = &planes;
    for ((&y, &cb), &cr) in py.iter().zip(pcb).zip(pcr) {
        let (cb, cr) = (cb - 128.0, cr - 128.0);
        data.extend_from_slice(&quantize([y + 1.402 * cr, y - 0.344136 * cb - 0.714136 * cr, y + 1.772 * cb]));
    }
    Image::new(img.width(), img.height(), data)
}

pub(super) fn sharpen(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let amount = p.f("amount");
    let src = FloatImage::from_image(img);
    let blurred = gaussian_blur(&src, 1.0);
    let data = src
        .data
        .iter()
        .zip(&blurred.data)
        .map(|(s, b)| std::array::from_fn(|c| s[c] + amount * (s[c] - b[c])))
        .collect();
    FloatImage { data, ..src }.to_image()
}

pub(super) fn solarize(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let t = [p.i("threshold_r"), p.i("threshold_g"), p.i("threshold_b")];
    Ok(img.map_pixels(|px| std::array::from_fn(|c| if px[c] as i64 >= t[c] { 255 - px[c] } else { px[c] })))
}

pub(super) fn posterize(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let steps = [p.i("levels_r"), p.i("levels_g"), p.i("levels_b")].map(|l| (l - 1) as f64);
    let mix = p.f("mix");
    Ok(img.map_pixels(|px| {
        std::array::from_fn(|c| {
            let post = (px[c] as f64 * steps[c] / 255.0).round() * 255.0 / steps[c];
            to_u8(mix * post + (1.0 - mix) * px[c] as f64)
        })
    }))
}

pub(super) fn gamma(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let g = [p.f("gamma_r"), p.f("gamma_g"), p.f("gamma_b")];
    let luts: [Vec<u8>; 3] = g.map(|g| (0..256).map(|v| to_u8(255.0 * (v as f64 / 255.0).powf(g))).collect());
    Ok(img.map_pixels(|px| std::array::from_fn(|c| luts[c][px[c] as usize])))
}

const GROUT: Rgb = [40, 40, 40];

pub(super) fn mosaic(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    let tile = p.i("tile") as u32;
    let grout = p.i("grout") as u32;
    let jitter = p.f("jitter");
    let mut out = img.clone();
    let mut ty = 0;
    while ty < h {
        let ty1 = (ty + tile).min(h);
        let mut tx = 0;
        while tx < w {
            let tx1 = (tx + tile).min(w);
            let mean = block_mean(img, tx, ty, tx1, ty1);
            let color: Rgb = std::array::from_fn(|c| to_u8(mean[c] as f64 + ctx.rng.random_range(-jitter..=jitter)));
            for y in ty..ty1 {
                for x in tx..tx1 {
                    // grout lines along the right and bottom edge of each full tile
                    let on_grout = (tile > grout) && (x - tx >= tile - grout || y - ty >= tile - grout);
                    out.put(x, y, if on_grout { GROUT } else { color });
                }
            }
            tx = tx1;
        }
        ty = ty1;
    }
    Ok(out)
}

pub(super) fn voronoi(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    let n = (p.i("sites") as usize).min((w * h) as usize).max(1);
    let sites: Vec<(f64, f64)> = (0..n)
        .map(|_| (ctx.rng.random_range(0.0..w as f64), ctx.rng.random_range(0.0..h as f64)))
        .collect();
    let mut owner = vec![0usize; (w * h) as usize];
    let mut sums = vec![[0.0f64; 4]; n];
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, (sx, sy)) in sites.iter().enumerate() {
                let d = (px - sx).powi(2) + (py - sy).powi(2);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            let idx = (y * w + x) as usize;
            owner[idx] = best;
            let c = img.pixel(x, y);
            let s = &mut sums[best];
            s[0] += c[0] as f64;
            s[1] += c[1] as f64;
            s[2] += c[2] as f64;
            s[3] += 1.0;
        }
    }
    let colors: Vec<Rgb> = sums
        .iter()
        .map(|s| if s[3] > 0.0 { quantize([s[0] / s[3], s[1] / s[3], s[2] / s[3]]) } else { [0, 0, 0] })
        .collect();
    Image::from_fn(w, h, |x, y| colors[owner[(y * w + x) as usize]])
}

pub(super) fn wave_block(img: &Image, p: &Params, _: &mut ApplyCtx<'_>) -> Result<Image> {
    let (period, offset, factor) = (p.f("period"), p.f("offset"), p.f("factor"));
    let vertical = p.i("vertical") == 1;
    let (w, h) = (img.width(), img.height());
    let len = if vertical { w } else { h } as f64;
    let damped: Vec<bool> = (0..len as u32)
        .map(|i| (((i as f64 + 0.5) / len / period + offset).fract()) >= 0.5)
        .collect();
    Image::from_fn(w, h, |x, y| {
        let px = img.pixel(x, y);
        if damped[if vertical { x } else { y } as usize] {
            px.map(|v| to_u8(v as f64 * factor))
        } else {
            px
        }
    })
}

/// Intensity-histogram oil painting with a seeded one-pixel jitter of each window.
pub(super) fn oil_paint(img: &Image, p: &Params, ctx: &mut ApplyCtx<'_>) -> Result<Image> {
    let r = p.i("radius");
    let levels = p.i("levels") as usize;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let bins: Vec<usize> = img.pixels().map(|px| ((luma(px) * levels as f64 / 256.0) as usize).min(levels - 1)).collect();
    let mut counts = vec![0u32; levels];
    let mut sums = vec![[0u64; 3]; levels];
    let mut data = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let jx = ctx.rng.random_range(-1..=1i64);
            let jy = ctx.rng.random_range(-1..=1i64);
            counts.iter_mut().for_each(|c| *c = 0);
            sums.iter_mut().for_each(|s| *s = [0; 3]);
            for dy in -r..=r {
                let sy = (y + jy + dy).clamp(0, h - 1);
                for dx in -r..=r {
                    let sx = (x + jx + dx).clamp(0, w - 1);
                    let idx = (sy * w + sx) as usize;
                    let b = bins[idx];
                    counts[b] += 1;
                    let px = img.pixel(sx as u32, sy as u32);
                    for c in 0..3 {
                        sums[b][c] += px[c] as u64;
                    }
                }
            }
            let mut best = 0;
            for b in 1..levels {
                if counts[b] > counts[best] {
                    best = b;
                }
            }
            let n = counts[best] as f64;
            data.extend_from_slice(&quantize(sums[best].map(|s| s as f64 / n)));
        }
    }
    Image::new(img.width(), img.height(), data)
}
