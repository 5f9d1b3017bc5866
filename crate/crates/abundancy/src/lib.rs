//! Runs the abundancy search engine: factor cache and FactorDB client, JSON
//! run configs, the preset run matrix for friends of 10, a parallel driver,
//! reporting and the verification suites.

pub mod cache;
pub mod config;
pub mod factordb;
pub mod oracle;
pub mod parallel;
pub mod presets;
pub mod report;
pub mod verify;
