//! Prenex positive Horn sentences over the single binary relation `E`.
//!
//! A sentence is a quantifier prefix (order significant) over a
//! conjunction of `E(x, y)` atoms. The text format is line based:
//! `A name` / `E name` prefix entries, then `edge name name` atom lines;
//! `#` starts a comment.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SentenceError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("duplicate quantified variable {0}")]
    DuplicateVariable(String),
    #[error("atoms without a quantifier prefix")]
    EmptyPrefix,
    #[error("malformed line {0:?}")]
    BadLine(String),
}

/// Prenex positive Horn sentence. Variables are interned; `names` maps
/// the internal id back to the source name.
#[derive(Clone, PartialEq, Eq)]
pub struct PHSentence {
    names: Vec<String>,
    prefix: Vec<(Quantifier, usize)>,
    atoms: Vec<(usize, usize)>,
    free: Vec<usize>,
}

impl PHSentence {
    /// Builds a closed sentence; every atom variable must be quantified
    /// and prefix variables must be distinct.
    pub fn closed(
        prefix: Vec<(Quantifier, String)>,
        atoms: Vec<(String, String)>,
    ) -> Result<Self, SentenceError> {
        Self::build(prefix, atoms, Vec::new())
    }

    /// Open formula with a declared free-variable list; the free
    /// variables come first in the internal numbering.
    pub fn open(
        free: Vec<String>,
        prefix: Vec<(Quantifier, String)>,
        atoms: Vec<(String, String)>,
    ) -> Result<Self, SentenceError> {
        Self::build(prefix, atoms, free)
    }

    fn build(
        prefix: Vec<(Quantifier, String)>,
        atoms: Vec<(String, String)>,
        free: Vec<String>,
    ) -> Result<Self, SentenceError> {
        let mut names: Vec<String> = Vec::new();
        let mut free_ids = Vec::new();
        for name in free {
            if names.contains(&name) {
                return Err(SentenceError::DuplicateVariable(name));
            }
            free_ids.push(names.len());
            names.push(name);
        }
        let mut ids = Vec::new();
        for (q, name) in prefix {
            if names.contains(&name) {
                return Err(SentenceError::DuplicateVariable(name));
            }
            ids.push((q, names.len()));
            names.push(name);
        }
        if ids.is_empty() && free_ids.is_empty() && atoms.is_empty() {
            return Err(SentenceError::EmptyPrefix);
        }
        let lookup = |name: &str| -> Result<usize, SentenceError> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| SentenceError::UnboundVariable(name.to_string()))
        };
        let mut atom_ids = Vec::new();
        for (x, y) in atoms {
            atom_ids.push((lookup(&x)?, lookup(&y)?));
        }
        Ok(PHSentence { names, prefix: ids, atoms: atom_ids, free: free_ids })
    }

    pub fn prefix(&self) -> &[(Quantifier, usize)] {
        &self.prefix
    }

    pub fn atoms(&self) -> &[(usize, usize)] {
        &self.atoms
    }

    pub fn free_vars(&self) -> &[usize] {
        &self.free
    }

    pub fn is_closed(&self) -> bool {
        self.free.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn universal_count(&self) -> usize {
        self.prefix.iter().filter(|(q, _)| *q == Quantifier::Forall).count()
    }

    /// Sentence file format; inverse of [`parse_sentence`].
    pub fn print(&self) -> String {
        let mut out = String::new();
        for &(q, v) in &self.prefix {
            let tag = match q {
                Quantifier::Forall => 'A',
                Quantifier::Exists => 'E',
            };
            out.push_str(&format!("{} {}\n", tag, self.names[v]));
        }
        for &(x, y) in &self.atoms {
            out.push_str(&format!("edge {} {}\n", self.names[x], self.names[y]));
        }
        out
    }
}

impl fmt::Debug for PHSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &(q, v) in &self.prefix {
            let tag = match q {
                Quantifier::Forall => '∀',
                Quantifier::Exists => '∃',
            };
            write!(f, "{}{} ", tag, self.names[v])?;
        }
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|&(x, y)| format!("E({},{})", self.names[x], self.names[y]))
            .collect();
        write!(f, "{}", atoms.join(" ∧ "))
    }
}

pub fn parse_sentence(text: &str) -> Result<PHSentence, SentenceError> {
    let mut prefix = Vec::new();
    let mut atoms = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["A", name] => prefix.push((Quantifier::Forall, name.to_string())),
            ["E", name] => prefix.push((Quantifier::Exists, name.to_string())),
            ["edge", x, y] => atoms.push((x.to_string(), y.to_string())),
            _ => return Err(SentenceError::BadLine(line.to_string())),
        }
    }
    PHSentence::closed(prefix, atoms)
}

pub fn print_sentence(s: &PHSentence) -> String {
    s.print()
}

/// Deterministic sentence stream: identical seed and bounds yield the
/// identical sentence at every index, across processes.
#[derive(Clone, Copy, Debug)]
pub struct SentenceSampler {
    pub seed: u64,
    pub max_vars: usize,
    pub max_universals: usize,
    pub max_atoms: usize,
}

impl SentenceSampler {
    pub fn new(seed: u64, max_vars: usize, max_universals: usize, max_atoms: usize) -> Self {
        assert!(max_vars >= 1 && max_atoms >= 1, "bounds must be positive");
        SentenceSampler { seed, max_vars, max_universals, max_atoms }
    }

    pub fn sample(&self, index: u64) -> PHSentence {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);

        let nvars = rng.gen_range(1..=self.max_vars);
        let mut prefix = Vec::with_capacity(nvars);
        let mut universals = 0;
        for i in 0..nvars {
            let q = if universals < self.max_universals && rng.gen_bool(0.3) {
                universals += 1;
                Quantifier::Forall
            } else {
                Quantifier::Exists
            };
            prefix.push((q, format!("v{i}")));
        }
        let natoms = rng.gen_range(1..=self.max_atoms);
        let mut atoms = Vec::with_capacity(natoms);
        let mut used: Vec<usize> = Vec::new();
        for _ in 0..natoms {
            // connected atom graph preferred: re-touch a used variable
            // with high probability once one exists
            let x = if !used.is_empty() && rng.gen_bool(0.9) {
                used[rng.gen_range(0..used.len())]
            } else {
                rng.gen_range(0..nvars)
            };
            let y = rng.gen_range(0..nvars);
            if !used.contains(&x) {
                used.push(x);
            }
            if !used.contains(&y) {
                used.push(y);
            }
            atoms.push((format!("v{x}"), format!("v{y}")));
        }
        PHSentence::closed(prefix, atoms).expect("sampled sentence is well-formed")
    }
}
