use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::image::{luma, Image};

pub const UNIT_NORM_TOLERANCE: f64 = 1e-5;
pub const THUMBNAIL_SIDE: usize = 16;
pub const THUMBNAIL_DIM: usize = THUMBNAIL_SIDE * THUMBNAIL_SIDE;

/// Id-aligned matrix of unit-norm feature vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
}

impl DescriptorSet {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("descriptor dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Shape(format!(
                "{} ids x dim {dim} needs {} values, got {}",
                ids.len(),
                ids.len() * dim,
                data.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if id.is_empty() || id.contains(['\n', '\r']) {
                return Err(Error::Shape(format!("invalid descriptor id {id:?}")));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Shape(format!("duplicate descriptor id `{id}`")));
            }
        }
        for (i, row) in data.chunks_exact(dim).enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("row `{}` has non-finite values", ids[i])));
            }
            let norm = row.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::Shape(format!("row `{}` has norm {norm}, expected 1", ids[i])));
            }
        }
        Ok(Self { ids, dim, data })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(Vec::new(), dim, Vec::new())
    }

    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows have differing lengths".into()));
        }
        Self::new(ids, dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Rows for `wanted`, in that order.
    pub fn subset(&self, wanted: &[String]) -> Result<Self> {
        let index = self.index();
        let mut data = Vec::with_capacity(wanted.len() * self.dim);
        for id in wanted {
            let i = *index
                .get(id.as_str())
                .ok_or_else(|| Error::Input(format!("no descriptor for `{id}`")))?;
            data.extend_from_slice(self.row(i));
        }
        Self::new(wanted.to_vec(), self.dim, data)
    }
}

/// 256-d baseline descriptor: 16x16 bilinear BT.601 thumbnail, mean removed,
/// L2-normalized. Constant images map to the first basis vector.
pub fn thumbnail_descriptor(image: &Image) -> Vec<f32> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let gray: Vec<f64> = image.pixels().map(luma).collect();
    let at = |x: usize, y: usize| gray[y * w + x];
    let sx = w as f64 / THUMBNAIL_SIDE as f64;
    let sy = h as f64 / THUMBNAIL_SIDE as f64;
    let mut v = Vec::with_capacity(THUMBNAIL_DIM);
    for ty in 0..THUMBNAIL_SIDE {
        let y = ((ty as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = y - y0 as f64;
        for tx in 0..THUMBNAIL_SIDE {
            let x = ((tx as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = x - x0 as f64;
            let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
            let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
            v.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-9 {
        let mut e1 = vec![0.0f32; THUMBNAIL_DIM];
        e1[0] = 1.0;
        return e1;
    }
    v.iter().map(|x| (x / norm) as f32).collect()
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

pub fn norm(a: &[f32]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity accumulated in `f64`; zero when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    from_parts(dot(a, b), norm(a), norm(b))
}

pub(crate) fn from_parts(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}
