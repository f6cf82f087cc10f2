//! The guide in `book/` compiled as documentation, so that `cargo test`
//! runs every code listing in it. One module per chapter keeps failures
//! traceable to their chapter.

#[doc = include_str!("../../../book/src/quick-start.md")]
pub mod quick_start {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}
#[doc = include_str!("../../../book/src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/parametrix.md")]
pub mod parametrix {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../docs/config.md")]
pub mod config {}
