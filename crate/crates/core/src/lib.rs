//! Lexeme and synset embeddings derived from word embeddings and a lexical
//! resource.
//!
//! Words, synsets and lexemes (word/synset pairs) of a resource are tied
//! together by a sparse autoencoder per embedding dimension. Training it
//! yields synset and lexeme vectors living in the same space as the input
//! word vectors.

pub mod autoencoder;
pub mod cli;
pub mod crosslingual;
pub mod derive;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod resource;

pub use error::{Error, Result};
