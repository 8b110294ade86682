//! Entanglement-measure labels: coherent information, quantum relative
//! entropy, and relative entropy of entanglement (analytic isotropic
//! oracle plus a separable-mixture upper-bound optimizer).

mod coherent;
mod ree;
mod relative;

pub use coherent::coherent_information;
pub use ree::{
    ree_isotropic_analytic, ree_upper_bound, ReeOptConfig, ReeResult, SeparableMixture,
};
pub use relative::{relative_entropy, Divergence};
