//! File formats, wall-clock profiling and the command line around
//! [`lamot_core`].

pub mod cli;
pub mod config;
pub mod fsutil;
pub mod kitti;
pub mod latency_file;
pub mod profiling;
pub mod records;
pub mod scores_file;
pub mod sweep;

pub use lamot_core as core;
