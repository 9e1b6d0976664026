//! Matrix-product-state tools for decohered quantum Ising ladders.

pub mod analysis;
pub mod dmrg;
pub mod ed;
pub mod error;
pub mod filter;
pub mod lanczos;
pub mod linalg;
pub mod model;
pub mod mps;
pub mod observables;
pub mod pauli;
pub mod sweep;
pub mod tensor;
pub mod validation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/doubled-picture.md")]
    mod doubled_picture {}
    #[doc = include_str!("../../../book/src/channels-as-filters.md")]
    mod channels_as_filters {}
    #[doc = include_str!("../../../book/src/preparing-states.md")]
    mod preparing_states {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/sweeps-and-fits.md")]
    mod sweeps_and_fits {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
