//! Role-based multi-agent software pipeline: a product manager, architect,
//! project manager, engineer and QA engineer pass structured documents and
//! code through a shared message pool, with generated tests run in a sandbox
//! and failures fed back to the engineer.
//!
//! Start with [`sop::run`] and [`demo::color_meter_playbook`]; the guide in
//! `book/` walks through each part.

pub mod config;
pub mod demo;
pub mod document;
pub mod eval;
pub mod experience;
pub mod feedback;
pub mod llm;
pub mod model;
pub mod pool;
pub mod sandbox;
pub mod sop;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/message-pool.md")]
    mod message_pool {}
    #[doc = include_str!("../../../book/src/documents.md")]
    mod documents {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/experience.md")]
    mod experience {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
