//! The user guide, compiled into rustdoc so every code block in the book
//! runs as a doc-test and cannot drift from the library.
//!
//! Rendered chapters live in `book/` (build with `mdbook build book`).

#[doc = include_str!("../../../book/src/index.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/charging.md")]
pub mod charging {}

#[doc = include_str!("../../../book/src/extraction.md")]
pub mod extraction {}

#[doc = include_str!("../../../book/src/squeezing.md")]
pub mod squeezing {}

#[doc = include_str!("../../../book/src/thermodynamics.md")]
pub mod thermodynamics {}

#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds_guide {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli_guide {}
