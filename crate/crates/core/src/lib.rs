//! Parametric CAD script corpus generation, DXF exchange and evaluation metrics.

pub mod geometry;
pub mod script;
pub mod dxf;
pub mod generator;
pub mod metrics;
pub mod eval;
pub mod cli;
