pub mod dlsde;
pub mod error;
pub mod evaluation;
pub mod ic;
pub mod io;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod scenario;
pub mod signal_model;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signal-model.md")]
    mod signal_model {}
    #[doc = include_str!("../../../book/src/smoothing.md")]
    mod smoothing {}
    #[doc = include_str!("../../../book/src/information-criteria.md")]
    mod information_criteria {}
    #[doc = include_str!("../../../book/src/cnn.md")]
    mod cnn {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
