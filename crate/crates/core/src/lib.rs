//! Exploration pipeline for sparse feature maps: minimax outlier removal,
//! angular-gap exit detection, obstacle synthesis from clustered features,
//! RRT planning with shortcut refinement, and a deterministic simulator that
//! drives the whole loop.

pub mod cli;
pub mod config;
pub mod error;
pub mod exit;
pub mod geometry;
pub mod io;
pub mod obstacles;
pub mod outliers;
pub mod planner;
pub mod render;
pub mod sim;

pub use error::{Error, Result};
