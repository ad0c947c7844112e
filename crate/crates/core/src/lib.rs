//! Geometry textbook knowledge engine.

pub mod backends;
pub mod book;
pub mod discover;
pub mod expand;
pub mod fixtures;
pub mod gen;
pub mod geolang;
pub mod pipeline;
pub mod render;
pub mod store;
