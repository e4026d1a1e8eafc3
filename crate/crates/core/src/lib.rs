//! Shallow report generation.
//!
//! The crate is split along the processing chain: [`ir`] holds feature
//! structures and the IR schema, [`tgl`] the rule language, [`engine`] the
//! production-system realizer, [`textorg`] the text organizer and
//! [`airquality`] the measurement data layer. [`pack`] ties the on-disk
//! grammar packs together.

pub mod airquality;
pub mod diagnostics;
pub mod engine;
pub mod ir;
pub mod pack;
pub mod sexpr;
pub mod textorg;
pub mod tgl;
