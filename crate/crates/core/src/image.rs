//! Square raster of the unit disk and PGM output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::svd_basis::DiskPoint;

/// `N×N` image over `[-1,1]²`, row-major with row 0 at the top (`y` near 1).
///
/// Pixels whose centre lies outside the closed unit disk are masked out and
/// hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedImage {
    n: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

/// Centre of pixel `(row, col)` on an `n×n` grid.
pub fn pixel_center(n: usize, row: usize, col: usize) -> DiskPoint {
    let h = 2.0 / n as f64;
    DiskPoint {
        x: -1.0 + (col as f64 + 0.5) * h,
        y: 1.0 - (row as f64 + 0.5) * h,
    }
}

/// Disk membership of every pixel centre, row-major.
pub fn disk_mask(n: usize) -> Vec<bool> {
    (0..n * n)
        .map(|idx| pixel_center(n, idx / n, idx % n).in_disk())
        .collect()
}

impl ReconstructedImage {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid size {n} must be at least 2"
            )));
        }
        Ok(Self {
            n,
            values: vec![0.0; n * n],
            mask: disk_mask(n),
        })
    }

    /// Samples `f` at the on-disk pixel centres.
    pub fn from_fn(n: usize, mut f: impl FnMut(DiskPoint) -> f64) -> Result<Self> {
        let mut img = Self::zeros(n)?;
        for idx in 0..n * n {
            if img.mask[idx] {
                img.values[idx] = f(pixel_center(n, idx / n, idx % n));
            }
        }
        img.check_finite()?;
        Ok(img)
    }

    /// Wraps raw values; off-mask entries are forced to 0.
    pub fn from_values(n: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n}x{n} grid",
                values.len()
            )));
        }
        let mask = disk_mask(n);
        for (v, m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        let img = Self { n, values, mask };
        img.check_finite()?;
        Ok(img)
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(idx) => Err(Error::NonFinite(format!(
                "pixel ({}, {})",
                idx / self.n,
                idx % self.n
            ))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    /// `(min, max)` over all pixels, masked zeros included.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    fn gray_levels(&self) -> Vec<u8> {
        let (lo, hi) = self.range();
        let span = hi - lo;
        self.values
            .iter()
            .map(|&v| {
                if span > 0.0 {
                    (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            })
            .collect()
    }

    /// Binary 8-bit PGM with a linear map of `[min, max]` onto `[0, 255]`.
    pub fn to_pgm_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.n, self.n).into_bytes();
        out.extend(self.gray_levels());
        out
    }

    /// ASCII PGM with the same mapping as [`to_pgm_p5`](Self::to_pgm_p5).
    pub fn to_pgm_p2(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.n, self.n);
        for row in self.gray_levels().chunks(self.n) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Writes a P5 file plus a `<file>.range` sidecar holding the mapping.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm_p5()).map_err(|e| Error::io(path, e))?;
        let (lo, hi) = self.range();
        let sidecar = sidecar_path(path);
        let text = format!("min = {lo:.16e}\nmax = {hi:.16e}\n");
        std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".range");
    name.into()
}

/// Pixelwise mean of equally sized images.
pub fn average_images(images: &[ReconstructedImage]) -> Result<ReconstructedImage> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot average an empty image list".into()))?;
    if images.iter().any(|img| img.n != first.n) {
        return Err(Error::ShapeMismatch(
            "images to average differ in size".into(),
        ));
    }
    let k = images.len() as f64;
    let mut values = vec![0.0; first.values.len()];
    for img in images {
        for (acc, v) in values.iter_mut().zip(&img.values) {
            *acc += v;
        }
    }
    values.iter_mut().for_each(|v| *v /= k);
    ReconstructedImage::from_values(first.n, values)
}
