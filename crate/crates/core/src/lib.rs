//! Auditing toolkit for longitudinal attribute inference: how well private
//! traits can be predicted from accumulating behavioural event logs.
//!
//! The pipeline is
//! [`ingest`] → [`featurize`] → [`classify`] / [`infodynamics`], with
//! [`cohort`] and [`profile`] layered on top and [`synth`] providing
//! corpora with planted ground truth.

pub mod cache;
pub mod classify;
pub mod cohort;
pub mod error;
pub mod featurize;
pub mod infodynamics;
pub mod ingest;
pub mod model;
pub mod profile;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    map_namespace, BasicCategory, Category, CategoryScheme, Event, FramePosition, Theme, ThemeSet, TimeGrid,
    Trait, TraitLabel, UserId,
};
