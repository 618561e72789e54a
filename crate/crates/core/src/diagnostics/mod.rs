//! Cross-cutting verification tools: difference-operator Sobolev proxies,
//! manufactured solutions, disk eigenfunctions, and comparison experiments.

pub mod bessel;
mod commutator;
mod manufactured;
mod norms;
mod sqg;

pub use commutator::{
    commutator_check, commutator_defect, commutator_ratio, CommutatorReport, CommutatorTrial,
};
pub use manufactured::{make_manufactured, ManufacturedCase, ManufacturedCaseId};
pub use norms::{
    h4_proxy_line, h4_proxy_surface, h4_proxy_volume, laplacian_surface, laplacian_volume,
};
pub use sqg::{dirichlet_spectral_extension, sqg_compare, SqgReport};
