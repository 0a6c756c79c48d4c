pub mod env;
pub mod fold;
pub mod geom;
pub mod kernel;
pub mod library;
pub mod metrics;
pub mod render;
pub mod scorer;
pub mod solver;
pub mod taskgen;
