//! Image fidelity and pose losses.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::types::{EdgePose, TactileImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsimWindow {
    Global,
    /// Square window of the given side, stride 1.
    Sliding(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub c1: f64,
    pub c2: f64,
    pub window: SsimWindow,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            c1: 0.01 * 0.01,
            c2: 0.03 * 0.03,
            window: SsimWindow::Global,
        }
    }
}

impl SsimParams {
    pub fn sliding(size_px: usize) -> Self {
        SsimParams {
            window: SsimWindow::Sliding(size_px),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(invalid_arg("SSIM stabilizers must be positive"));
        }
        if self.window == SsimWindow::Sliding(0) {
            return Err(invalid_arg("SSIM window must be at least 1 px"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseLossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for PoseLossWeights {
    fn default() -> Self {
        PoseLossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

impl PoseLossWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1 + lambda2 > 0.0) {
            return Err(invalid_arg(format!(
                "pose loss weights ({lambda1}, {lambda2}) must be >= 0 with positive sum"
            )));
        }
        Ok(PoseLossWeights { lambda1, lambda2 })
    }
}

/// Mixing weight between the pixel and structural image terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageLossWeight(f64);

impl ImageLossWeight {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid_arg(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(ImageLossWeight(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl Default for ImageLossWeight {
    fn default() -> Self {
        ImageLossWeight(0.5)
    }
}

fn check_shape(a: &TactileImage, b: &TactileImage) -> Result<()> {
    if !a.same_shape(b) {
        return Err(invalid_arg(format!(
            "image shapes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

pub fn mse(a: &TactileImage, b: &TactileImage) -> Result<f64> {
    check_shape(a, b)?;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// SSIM of one window given its raw sums.
#[allow(clippy::too_many_arguments)]
fn ssim_from_sums(n: f64, sa: f64, sb: f64, saa: f64, sbb: f64, sab: f64, c1: f64, c2: f64) -> f64 {
    let (ma, mb) = (sa / n, sb / n);
    let va = (saa / n - ma * ma).max(0.0);
    let vb = (sbb / n - mb * mb).max(0.0);
    let cov = sab / n - ma * mb;
    ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
}

/// Global mean/variance/covariance statistics computed in two passes.
fn ssim_global(a: &[f64], b: &[f64], c1: f64, c2: f64) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
        cov += (x - ma) * (y - mb);
    }
    let (va, vb, cov) = (va / n, vb / n, cov / n);
    ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
}

pub fn ssim(a: &TactileImage, b: &TactileImage, p: &SsimParams) -> Result<f64> {
    check_shape(a, b)?;
    p.validate()?;
    match p.window {
        SsimWindow::Global => Ok(ssim_global(&a.pixels, &b.pixels, p.c1, p.c2)),
        SsimWindow::Sliding(k) => {
            if k > a.width.min(a.height) {
                return Err(invalid_arg(format!("SSIM window {k} exceeds image size")));
            }
            let (w, h) = (a.width, a.height);
            let n = (k * k) as f64;
            let mut total = 0.0;
            let mut count = 0usize;
            for r0 in 0..=h - k {
                for c0 in 0..=w - k {
                    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for r in r0..r0 + k {
                        for c in c0..c0 + k {
                            let (x, y) = (a.pixels[r * w + c], b.pixels[r * w + c]);
                            sa += x;
                            sb += y;
                            saa += x * x;
                            sbb += y * y;
                            sab += x * y;
                        }
                    }
                    total += ssim_from_sums(n, sa, sb, saa, sbb, sab, p.c1, p.c2);
                    count += 1;
                }
            }
            Ok(total / count as f64)
        }
    }
}

/// Literal mixed loss `α·mse + (1−α)·(1 − (1 − ssim))`, i.e. `α·mse + (1−α)·ssim`.
pub fn image_loss(
    a: &TactileImage,
    b: &TactileImage,
    alpha: ImageLossWeight,
    p: &SsimParams,
) -> Result<f64> {
    let al = alpha.alpha();
    let ssim_loss = 1.0 - ssim(a, b, p)?;
    Ok(al * mse(a, b)? + (1.0 - al) * (1.0 - ssim_loss))
}

/// Conventional mixed loss `α·mse + (1−α)·(1 − ssim)`.
pub fn image_loss_conventional(
    a: &TactileImage,
    b: &TactileImage,
    alpha: ImageLossWeight,
    p: &SsimParams,
) -> Result<f64> {
    let al = alpha.alpha();
    Ok(al * mse(a, b)? + (1.0 - al) * (1.0 - ssim(a, b, p)?))
}

pub fn angular_loss(theta_pred: f64, theta_true: f64) -> f64 {
    1.0 - (theta_pred - theta_true).cos()
}

pub fn pose_loss(pred: &EdgePose, truth: &EdgePose, w: &PoseLossWeights) -> f64 {
    let dx = pred.x - truth.x;
    let dy = pred.y - truth.y;
    w.lambda1 * 0.5 * (dx * dx + dy * dy) + w.lambda2 * angular_loss(pred.theta, truth.theta)
}
