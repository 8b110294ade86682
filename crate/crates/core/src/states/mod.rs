//! Sampling of random, structured, and stratified bipartite states.
//!
//! Samplers draw from explicit RNG streams so that identical
//! (seed, config) pairs reproduce identical states; parallel callers
//! derive independent streams per work item.

mod sampler;
mod special;
mod stratified;

pub use sampler::{sample_ginibre, sample_separable, sample_state, Ensemble, SamplerConfig};
pub use special::{isotropic, maximally_entangled, noisy_me_family};
pub use stratified::{stratified_sample, BinReport, StratificationSpec, StratifiedSample};
