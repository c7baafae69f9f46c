pub mod error;
pub mod cli;
pub mod coherence;
pub mod dualfreq;
pub mod filters;
pub mod io;
pub mod pac;
pub mod series;
pub mod simulate;
pub mod spca;
pub mod spectrum;
pub mod var;

pub use error::{Error, Result};
