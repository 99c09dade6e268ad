//! Bridging anaphora resolution cast as extractive question answering.
//!
//! The crate covers the data side of the task end to end:
//!
//! - [`treebank`]: bracketed-tree reading, NP heads and the head /
//!   postmodifier / determiner reductions of a noun phrase.
//! - [`quasigen`]: synthetic bridging pairs from "X prep Y" and "Y 's X"
//!   noun phrases, generated over whole corpora.
//! - [`qagen`]: questions, context windows, answer lists and the extended
//!   SQuAD JSON format.
//! - [`decode`]: constrained span decoding from per-word start/end scores.
//! - [`mentionmap`]: projection of predicted spans onto mentions.
//! - [`eval`]: strict and lenient accuracy.
//!
//! Neural scoring is external; [`mock`] produces schema-valid random scores
//! so that every stage can run without a model.

pub mod decode;
pub mod error;
pub mod eval;
pub mod io;
pub mod mentionmap;
pub mod mock;
pub mod qagen;
pub mod quasigen;
pub mod text;
pub mod treebank;

pub use error::{Error, Result};

/// Version stamped into every file this crate writes.
pub const FORMAT_VERSION: u32 = 1;

/// Runs `f` on a dedicated pool of `workers` threads; parallel iterators
/// inside `f` use that pool.
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}
