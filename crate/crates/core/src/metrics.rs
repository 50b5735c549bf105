//! Reconstruction error and PSNR, scored only over the missing entries.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MaskedMatrix, ObservationMask};

/// 8-bit peak value in the PSNR numerator.
pub const PEAK: f64 = 255.0;

/// `Erec = ‖(X_rec − M)_{Ωᶜ}‖_F`
pub fn erec(recovered: &DenseMatrix, truth: &DenseMatrix, mask: &ObservationMask) -> Result<f64> {
    if recovered.shape() != truth.shape() {
        return Err(Error::domain(format!(
            "recovered is {:?} but truth is {:?}",
            recovered.shape(),
            truth.shape()
        )));
    }
    mask.check_shape(truth.nrows(), truth.ncols(), "truth")?;
    Ok(mask
        .missing_indices()
        .map(|(i, j)| {
            let d = recovered[(i, j)] - truth[(i, j)];
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// Per-channel `Erec` values and missing counts `T_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResiduals {
    pub erec: Vec<f64>,
    pub missing: Vec<usize>,
}

impl ChannelResiduals {
    pub fn single(erec: f64, missing: usize) -> Self {
        Self {
            erec: vec![erec],
            missing: vec![missing],
        }
    }

    /// Residuals of every channel against its truth under a shared mask.
    pub fn from_planes(
        recovered: &[DenseMatrix],
        truth: &[DenseMatrix],
        mask: &ObservationMask,
    ) -> Result<Self> {
        if recovered.len() != truth.len() {
            return Err(Error::domain("channel counts differ"));
        }
        let erec = recovered
            .iter()
            .zip(truth)
            .map(|(x, t)| erec(x, t, mask))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            missing: vec![mask.missing_count(); erec.len()],
            erec,
        })
    }

    /// `SE = Σ_c Erec_c²`
    pub fn squared_error(&self) -> f64 {
        self.erec.iter().map(|e| e * e).sum()
    }

    /// `T = Σ_c T_c`
    pub fn total_missing(&self) -> usize {
        self.missing.iter().sum()
    }

    /// `MSE = SE / T`
    pub fn mse(&self) -> Result<f64> {
        match self.total_missing() {
            0 => Err(Error::domain("no missing entries to score")),
            t => Ok(self.squared_error() / t as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    /// MSE is exactly zero.
    Perfect,
}

impl Psnr {
    /// Finite dB value, `+∞` for a perfect reconstruction.
    pub fn as_db(self) -> f64 {
        match self {
            Psnr::Db(v) => v,
            Psnr::Perfect => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v}"),
            Psnr::Perfect => f.write_str("inf"),
        }
    }
}

/// `10·log₁₀(255² / MSE)`
pub fn psnr(channels: &ChannelResiduals) -> Result<Psnr> {
    let mse = channels.mse()?;
    if mse == 0.0 {
        Ok(Psnr::Perfect)
    } else {
        Ok(Psnr::Db(10.0 * (PEAK * PEAK / mse).log10()))
    }
}

/// Single-channel PSNR of `recovered` against `truth` over the missing entries of `mask`.
pub fn psnr_gray(
    recovered: &DenseMatrix,
    truth: &DenseMatrix,
    mask: &ObservationMask,
) -> Result<Psnr> {
    let e = erec(recovered, truth, mask)?;
    psnr(&ChannelResiduals::single(e, mask.missing_count()))
}

/// `Δ = ‖X_new − X_old‖_F / ‖M_Ω‖_F`
pub fn relative_change(x_new: &DenseMatrix, x_old: &DenseMatrix, m: &MaskedMatrix) -> Result<f64> {
    if x_new.shape() != x_old.shape() || x_new.shape() != m.shape() {
        return Err(Error::domain("iterates and observations differ in shape"));
    }
    let denom = m.observed_norm();
    if denom == 0.0 {
        return Err(Error::domain(
            "observed data is all zero; relative change is undefined",
        ));
    }
    Ok((x_new - x_old).norm() / denom)
}
