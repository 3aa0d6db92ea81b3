//! Cusped graphs, volume-form quasi-cocycles and their exact certificates for
//! the punctured-torus bundle group Γ = F(a,b) ⋊_ψ Z with peripheral Z².

pub mod chain;
pub mod cli;
pub mod config;
pub mod cycles;
pub mod engine;
pub mod error;
pub mod fill;
pub mod graph;
pub mod hyperbolization;
pub mod lipfn;
pub mod lp;
pub mod quasicocycle;
pub mod report;
pub mod word;

pub use error::{Error, Result};
