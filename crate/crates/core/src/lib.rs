//! Noise characterization and denoising for optical on-off-keying links.
//!
//! The crate covers the full loop from raw captures to a trained denoiser:
//!
//! * [`signal`]: time series, capture files, OOK pulse trains and the
//!   received-signal channel model.
//! * [`stats`]: sample autocorrelation and the Ljung-Box test against
//!   chi-square thresholds.
//! * [`allan`]: overlapping Allan variance and white / flicker / random-walk
//!   coefficient extraction.
//! * [`synth`]: Gaussian and `1/f^alpha` colored noise from the generalized
//!   Wiener filter.
//! * [`dataset`]: paired noisy/clean OOK records for training.
//! * [`cae`]: a 1D convolutional autoencoder with hand-written gradients,
//!   Adam, training and RMSE evaluation.
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod allan;
pub mod cae;
pub mod dataset;
pub mod error;
pub mod seed;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use signal::TimeSeries;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/captures.md")]
    mod captures {}
    #[doc = include_str!("../../../book/src/ljung-box.md")]
    mod ljung_box {}
    #[doc = include_str!("../../../book/src/allan-variance.md")]
    mod allan_variance {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/denoising.md")]
    mod denoising {}
}
