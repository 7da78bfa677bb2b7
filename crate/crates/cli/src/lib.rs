//! Batch front door for the relativistic periodic-orbit library: JSON job
//! files, pipeline orchestration, parameter sweeps, CSV/JSON emission.

pub mod io;
pub mod jobs;
pub mod pipeline;
pub mod report;
pub mod sweep;
pub mod tolerances;
