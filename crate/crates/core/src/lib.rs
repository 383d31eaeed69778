//! Design toolkit for multi-DOF mechanical hard stops that protect compliant
//! mechanisms from overload.
//!
//! The pipeline: a stress model gives the safe stress boundary Γ^σ, a pair of
//! torus-cap surfaces gives the contact boundary Γ^hs, both as radial fields
//! over the (δa, ϑa, θsep) workspace; [`spaces`] scores their overlap,
//! [`optimizer`] tunes the surfaces and [`engage`] replays overload surges.

pub mod contact;
pub mod engage;
pub mod error;
pub mod field;
pub mod geometry;
pub mod optimizer;
pub mod ray;
pub mod spaces;
pub mod stress;
pub mod trajectory;

pub use error::{Error, Result};
