//! Visual question answering by planned image actions.
//!
//! A multimodal chat model first decomposes a question into sub-goals, each
//! bound to an image operation ([`model::ActionKind`]). The operations run
//! locally ([`actions`]) or on a vision-tool sidecar ([`tools`]), producing a
//! processed image per step. The model then writes a textual rationale for
//! each processed image ([`planner`]), and finally answers the question from
//! the interleaved series of rationales ([`refiner`]). Every run leaves an
//! inspectable trace on disk ([`trace`]); [`bench`] scores whole datasets.

pub mod actions;
pub mod bench;
pub mod error;
pub mod gateway;
pub mod imageio;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod planner;
pub mod prompts;
pub mod refiner;
pub mod tools;
pub mod trace;
