//! Distributions: the zero-augmented gamma family and the scalar special
//! functions it is built on.

pub mod special;
pub mod zaga;

pub use special::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use zaga::{
    gamma_cdf, gamma_logpdf, gamma_quantile, zaga_cdf, zaga_mle, zaga_quantile, zaga_sample,
    ZagaParams,
};
