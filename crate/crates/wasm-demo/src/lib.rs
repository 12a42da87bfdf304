//! Browser demo; filled in after the core crate.
