//! Token sources: newline-delimited sentences of whitespace-separated tokens.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::PathBuf;

/// An ordered, possibly unbounded sequence of sentences. Windows never cross
/// sentence boundaries, so the unit of iteration is one sentence's tokens.
#[derive(Debug, Clone)]
pub enum TokenSource {
    /// UTF-8 text file; re-iterable.
    File(PathBuf),
    /// Standard input; single pass only.
    Stdin,
    /// In-memory sentences; re-iterable.
    Memory(Vec<Vec<String>>),
    /// Concatenation of sources; re-iterable when all parts are.
    Chain(Vec<TokenSource>),
}

pub type SentenceIter<'a> = Box<dyn Iterator<Item = io::Result<Vec<String>>> + 'a>;

impl TokenSource {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        TokenSource::File(path.into())
    }

    pub fn memory(sentences: Vec<Vec<String>>) -> Self {
        TokenSource::Memory(sentences)
    }

    /// Parses in-memory text with the same conventions as file input.
    pub fn from_text(text: &str) -> Self {
        TokenSource::Memory(
            text.lines()
                .map(|line| line.split_whitespace().map(str::to_owned).collect())
                .collect(),
        )
    }

    /// Whether the source survives a second pass (batch training needs two).
    pub fn is_reiterable(&self) -> bool {
        match self {
            TokenSource::Stdin => false,
            TokenSource::File(_) | TokenSource::Memory(_) => true,
            TokenSource::Chain(parts) => parts.iter().all(|p| p.is_reiterable()),
        }
    }

    pub fn sentences(&mut self) -> io::Result<SentenceIter<'_>> {
        match self {
            TokenSource::File(path) => {
                let reader = BufReader::new(File::open(&*path)?);
                Ok(Box::new(reader.lines().map(|line| {
                    line.map(|l| l.split_whitespace().map(str::to_owned).collect())
                })))
            }
            TokenSource::Stdin => {
                let reader = BufReader::new(io::stdin());
                Ok(Box::new(reader.lines().map(|line| {
                    line.map(|l| l.split_whitespace().map(str::to_owned).collect())
                })))
            }
            TokenSource::Memory(sentences) => {
                Ok(Box::new(sentences.iter().map(|s| Ok(s.clone()))))
            }
            TokenSource::Chain(parts) => {
                let mut iters = Vec::with_capacity(parts.len());
                for part in parts {
                    iters.push(part.sentences()?);
                }
                Ok(Box::new(iters.into_iter().flatten()))
            }
        }
    }
}
