//! Ingestion, fixed-interval integration and data-quality management for
//! armband wearable exports.

pub mod adapters;
pub mod integrate;
pub mod model;
pub mod pipeline;
pub mod quality;
pub mod service;
pub mod store;
pub mod synth;
