//! Strong-branching scores of MILPs, WL and 2-FWL color refinement on
//! MILP-graphs, and MP-GNN / 2-FGNN surrogates trained to fit the scores.

pub mod gen;
pub mod instance;
pub mod lp;
pub mod rng;
pub mod sb;
pub mod wl;
pub mod fwl;
pub mod nn;
