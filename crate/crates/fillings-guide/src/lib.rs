//! The book's chapters as modules, so `cargo test` runs their code blocks.

#[doc = include_str!("../../../book/src/index.md")]
pub mod index {}
#[doc = include_str!("../../../book/src/words.md")]
pub mod words {}
#[doc = include_str!("../../../book/src/sequences.md")]
pub mod sequences {}
#[doc = include_str!("../../../book/src/diagrams.md")]
pub mod diagrams {}
#[doc = include_str!("../../../book/src/tables.md")]
pub mod tables {}
#[doc = include_str!("../../../book/src/combings.md")]
pub mod combings {}
#[doc = include_str!("../../../book/src/heisenberg.md")]
pub mod heisenberg {}
#[doc = include_str!("../../../book/src/families.md")]
pub mod families {}
