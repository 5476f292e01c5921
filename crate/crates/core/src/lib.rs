pub mod cas;
pub mod syntax;
pub mod semantics;
pub mod equivalence;
pub mod queries;
pub mod sampler;
pub mod cli;
