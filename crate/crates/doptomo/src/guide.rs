//! The narrative guide, shared with the rendered book.
//!
//! Each module below embeds one chapter of the mdBook under `book/` as its
//! documentation, so `cargo test --doc` compiles and runs every code snippet
//! in the book. A failing doctest in here means a book chapter has drifted
//! from the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/scene-model.md")]
pub mod scene_model {}

#[doc = include_str!("../../../book/src/imaging.md")]
pub mod imaging {}

#[doc = include_str!("../../../book/src/nulling.md")]
pub mod nulling {}

#[doc = include_str!("../../../book/src/deblurring.md")]
pub mod deblurring {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
