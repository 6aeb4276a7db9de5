//! Evaluation of SVD expansions on the pixel grid.
//!
//! On-disk pixels are split into fixed blocks; each block evaluates the full
//! basis once and multiplies it against every coefficient column. Blocks are
//! independent and their results come back in block order, so any reduction
//! over blocks is identical for every thread count.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{pixel_center, ReconstructedImage};
use crate::svd_basis::{eval_all_f, index_count, SvdCoeffs};

pub const BLOCK_PIXELS: usize = 512;

/// Flat indices of pixels whose centre lies in the disk, row-major.
pub fn disk_pixels(n: usize) -> Vec<usize> {
    (0..n * n)
        .filter(|&idx| pixel_center(n, idx / n, idx % n).in_disk())
        .collect()
}

/// One block of on-disk pixels and the expansion values there.
#[derive(Debug)]
pub struct PixelBlock<'a> {
    pub index: usize,
    /// Flat pixel indices, `pixels.len()` rows of `values`.
    pub pixels: &'a [usize],
    /// `pixels × columns`.
    pub values: ArrayView2<'a, f64>,
}

/// Evaluates `Σ_idx columns[idx, c] f_idx(p)` on every on-disk pixel, block by
/// block, and returns `visit` results in block order.
///
/// `columns` has `index_count(k_max)` rows in canonical order.
pub fn evaluate_blocks<T: Send>(
    n: usize,
    k_max: usize,
    columns: &Array2<f64>,
    visit: impl Fn(PixelBlock<'_>) -> T + Sync,
) -> Result<Vec<T>> {
    let rows = index_count(k_max);
    if columns.nrows() != rows {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficient rows for k_max={k_max} ({rows} expected)",
            columns.nrows()
        )));
    }
    let pixels = disk_pixels(n);
    let out = pixels
        .par_chunks(BLOCK_PIXELS)
        .enumerate()
        .map(|(index, chunk)| {
            let mut basis = Array2::<f64>::zeros((chunk.len(), rows));
            for (row, &idx) in basis.rows_mut().into_iter().zip(chunk) {
                let p = pixel_center(n, idx / n, idx % n);
                eval_all_f(k_max, p, row.into_slice().expect("standard layout"));
            }
            let values = basis.dot(columns);
            visit(PixelBlock {
                index,
                pixels: chunk,
                values: values.view(),
            })
        })
        .collect();
    Ok(out)
}

/// Images of several expansions sharing one `k_max`.
pub fn reconstruct_many(alphas: &[SvdCoeffs], n: usize) -> Result<Vec<ReconstructedImage>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid size {n} must be at least 2"
        )));
    }
    let Some(k_max) = alphas.first().map(SvdCoeffs::k_max) else {
        return Ok(Vec::new());
    };
    if alphas.iter().any(|a| a.k_max() != k_max) {
        return Err(Error::ShapeMismatch(
            "expansions to reconstruct differ in k_max".into(),
        ));
    }
    let mut columns = Array2::<f64>::zeros((index_count(k_max), alphas.len()));
    for (c, alpha) in alphas.iter().enumerate() {
        for (r, v) in alpha.values().iter().enumerate() {
            columns[[r, c]] = *v;
        }
    }
    let blocks = evaluate_blocks(n, k_max, &columns, |b| {
        (b.pixels.to_vec(), b.values.to_owned())
    })?;
    let mut images = vec![vec![0.0; n * n]; alphas.len()];
    for (pixels, values) in blocks {
        for (row, &idx) in pixels.iter().enumerate() {
            for (c, img) in images.iter_mut().enumerate() {
                img[idx] = values[[row, c]];
            }
        }
    }
    images
        .into_iter()
        .map(|v| ReconstructedImage::from_values(n, v))
        .collect()
}

/// `Σ α* f_{k,l,i}` on the `n×n` grid.
pub fn reconstruct(alpha_star: &SvdCoeffs, n: usize) -> Result<ReconstructedImage> {
    let mut out = reconstruct_many(std::slice::from_ref(alpha_star), n)?;
    Ok(out.pop().expect("one image"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd_basis::SvdIndex;
    use std::f64::consts::PI;

    #[test]
    fn constant_and_zero_images() {
        let img = reconstruct(&SvdCoeffs::unit(4, SvdIndex::new(0, 0, 1).unwrap()), 32).unwrap();
        for (v, m) in img.values().iter().zip(img.mask()) {
            let want = if *m { 1.0 / PI.sqrt() } else { 0.0 };
            assert!((v - want).abs() < 1e-15);
        }
        let zero = reconstruct(&SvdCoeffs::zeros(6), 16).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        assert!(reconstruct(&SvdCoeffs::zeros(6), 1).is_err());
        assert!(reconstruct_many(&[SvdCoeffs::zeros(3), SvdCoeffs::zeros(4)], 8).is_err());
    }

    #[test]
    fn matches_pointwise_evaluation_and_is_linear() {
        let a =
            SvdCoeffs::from_values(6, (0..21).map(|n| (n as f64 * 0.7).sin()).collect()).unwrap();
        let b =
            SvdCoeffs::from_values(6, (0..21).map(|n| (n as f64 * 1.3).cos()).collect()).unwrap();
        let sum = SvdCoeffs::from_values(
            6,
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| x + y)
                .collect(),
        )
        .unwrap();
        let imgs = reconstruct_many(&[a.clone(), b, sum], 40).unwrap();
        for idx in disk_pixels(40) {
            let p = pixel_center(40, idx / 40, idx % 40);
            assert!((imgs[0].values()[idx] - a.eval(p)).abs() < 1e-12);
            let lin = imgs[0].values()[idx] + imgs[1].values()[idx] - imgs[2].values()[idx];
            assert!(lin.abs() < 1e-12);
        }
    }
}
