pub mod ansatz;
pub mod bas;
pub mod classifier;
pub mod compressor;
pub mod encoder;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod simcore;
pub mod swaptest;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/encoder.md")]
    mod encoder {}
    #[doc = include_str!("../../../book/src/compression.md")]
    mod compression {}
    #[doc = include_str!("../../../book/src/swap-test.md")]
    mod swap_test {}
    #[doc = include_str!("../../../book/src/classifier.md")]
    mod classifier {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
