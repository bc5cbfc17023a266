pub mod cli;
pub mod disclosure_opt;
pub mod dist_core;
pub mod engine;
pub mod fees;
pub mod orderstats;
pub mod presets;
pub mod rng;
pub mod scenario;
