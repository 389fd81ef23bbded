//! Brute-force decision procedure for positive Horn sentences on a
//! partially reflexive graph template.
//!
//! Quantifiers are processed outermost-in. A universal variable always
//! iterates the full vertex set; existential variables may have their
//! candidate sets narrowed by arc consistency over the atoms, which is
//! sound because the atom conjunction is monotone. All configuration
//! settings yield identical verdicts; only the cost differs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::graphs::PRGraph;
use crate::logic::{PHSentence, Quantifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    None,
    ArcConsistency,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalConfig {
    pub propagation: Propagation,
    pub memoization: bool,
    pub node_limit: Option<u64>,
    pub parallel_universals: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            propagation: Propagation::ArcConsistency,
            memoization: true,
            node_limit: None,
            parallel_universals: false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("node limit exhausted after {0} nodes")]
    ResourceExhausted(u64),
    #[error("sentence has free variables")]
    OpenSentence,
    #[error("template is empty")]
    EmptyTemplate,
    #[error("template too large for the bitset engine (n > 64)")]
    TemplateTooLarge,
    #[error("constant {0} out of template range {1}")]
    ConstantOutOfRange(usize, usize),
}

struct Engine<'a> {
    template: &'a PRGraph,
    prefix: Vec<(Quantifier, usize)>,
    atoms: Vec<(usize, usize)>,
    /// atoms incident to each variable, as (other endpoint, atom index)
    incident: Vec<Vec<usize>>,
    /// position in the prefix at which each variable is quantified
    position_of: Vec<Option<usize>>,
    /// variables quantified before position p that still share an atom
    /// with a variable quantified at or after p (the projective memo key)
    live: Vec<Vec<usize>>,
    full_mask: u64,
    nbr: Vec<u64>,
    nodes: AtomicU64,
    limit: u64,
    cfg: EvalConfig,
}

enum Verdict {
    Done(bool),
    Out,
}

impl<'a> Engine<'a> {
    fn new(
        template: &'a PRGraph,
        prefix: Vec<(Quantifier, usize)>,
        atoms: Vec<(usize, usize)>,
        nvars: usize,
        cfg: EvalConfig,
    ) -> Result<Self, EvalError> {
        if template.n() == 0 {
            return Err(EvalError::EmptyTemplate);
        }
        if template.n() > 64 {
            return Err(EvalError::TemplateTooLarge);
        }
        let mut incident = vec![Vec::new(); nvars];
        for (i, &(x, y)) in atoms.iter().enumerate() {
            incident[x].push(i);
            if y != x {
                incident[y].push(i);
            }
        }
        let mut position_of = vec![None; nvars];
        for (p, &(_, v)) in prefix.iter().enumerate() {
            position_of[v] = Some(p);
        }
        // a pre-assigned variable (constant) has no position and counts
        // as quantified "before everything"
        let pos = |v: usize| position_of[v].unwrap_or(0);
        let mut live = Vec::with_capacity(prefix.len() + 1);
        for p in 0..=prefix.len() {
            let mut vars: Vec<usize> = (0..nvars)
                .filter(|&v| {
                    let quantified_before = match position_of[v] {
                        Some(q) => q < p,
                        None => true,
                    };
                    quantified_before
                        && atoms.iter().any(|&(x, y)| {
                            (x == v && position_of[y].is_some() && pos(y) >= p)
                                || (y == v && position_of[x].is_some() && pos(x) >= p)
                        })
                })
                .collect();
            vars.sort_unstable();
            live.push(vars);
        }
        let nbr: Vec<u64> = (0..template.n()).map(|v| template.neighbor_mask(v)).collect();
        Ok(Engine {
            template,
            prefix,
            atoms,
            incident,
            position_of,
            live,
            full_mask: if template.n() == 64 { !0 } else { (1u64 << template.n()) - 1 },
            nbr,
            nodes: AtomicU64::new(0),
            limit: cfg.node_limit.unwrap_or(u64::MAX),
            cfg,
        })
    }

    fn tick(&self) -> Result<(), EvalError> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.limit {
            Err(EvalError::ResourceExhausted(n))
        } else {
            Ok(())
        }
    }

    /// Checks every atom whose endpoints are both assigned and involves `v`.
    fn consistent_at(&self, assignment: &[usize], v: usize) -> bool {
        self.incident[v].iter().all(|&i| {
            let (x, y) = self.atoms[i];
            let a = assignment[x];
            let b = assignment[y];
            a == usize::MAX || b == usize::MAX || self.template.has_edge(a, b)
        })
    }

    /// Arc-consistency pass over existential domains. Universal variables
    /// are treated as having full domains and are never pruned: a pruned
    /// universal value is exactly a counterexample candidate, which must
    /// surface as a false branch instead. Returns false when some
    /// existential domain empties.
    fn propagate(&self, assignment: &[usize], domains: &mut [u64], from_pos: usize) -> bool {
        let is_future_exist = |v: usize| match self.position_of[v] {
            Some(p) => p >= from_pos && assignment[v] == usize::MAX && self.prefix[p].0 == Quantifier::Exists,
            None => false,
        };
        let mut changed = true;
        while changed {
            changed = false;
            for &(x, y) in &self.atoms {
                for (u, w) in [(x, y), (y, x)] {
                    if !is_future_exist(u) {
                        continue;
                    }
                    // support set for u against w under the atom E(u, w)
                    let w_dom = if assignment[w] != usize::MAX {
                        1u64 << assignment[w]
                    } else if is_future_exist(w) {
                        domains[w]
                    } else {
                        self.full_mask
                    };
                    let mut keep = 0u64;
                    let mut rest = domains[u];
                    while rest != 0 {
                        let a = rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        if self.nbr[a] & w_dom != 0 {
                            keep |= 1 << a;
                        }
                    }
                    if keep != domains[u] {
                        domains[u] = keep;
                        if keep == 0 {
                            return false;
                        }
                        changed = true;
                    }
                }
            }
        }
        true
    }

    fn memo_key(&self, pos: usize, assignment: &[usize]) -> (usize, Vec<usize>) {
        (pos, self.live[pos].iter().map(|&v| assignment[v]).collect())
    }

    fn eval_at(
        &self,
        pos: usize,
        assignment: &mut Vec<usize>,
        domains: &Vec<u64>,
        memo: &mut HashMap<(usize, Vec<usize>), bool>,
    ) -> Result<Verdict, EvalError> {
        self.tick()?;
        if pos == self.prefix.len() {
            // all atoms are between assigned variables now
            let ok = self
                .atoms
                .iter()
                .all(|&(x, y)| self.template.has_edge(assignment[x], assignment[y]));
            return Ok(if ok { Verdict::Done(true) } else { Verdict::Out });
        }
        let key = if self.cfg.memoization {
            let key = self.memo_key(pos, assignment);
            if let Some(&hit) = memo.get(&key) {
                return Ok(if hit { Verdict::Done(true) } else { Verdict::Out });
            }
            Some(key)
        } else {
            None
        };
        let (q, v) = self.prefix[pos];
        let result = match q {
            Quantifier::Forall => {
                let mut all = true;
                for value in 0..self.template.n() {
                    assignment[v] = value;
                    if !self.consistent_at(assignment, v) {
                        all = false;
                    } else {
                        let branch = self.branch_domains(pos + 1, assignment, domains);
                        match branch {
                            Some(doms) => match self.eval_at(pos + 1, assignment, &doms, memo)? {
                                Verdict::Done(true) => {}
                                _ => all = false,
                            },
                            None => all = false,
                        }
                    }
                    assignment[v] = usize::MAX;
                    if !all {
                        break;
                    }
                }
                all
            }
            Quantifier::Exists => {
                let candidates = domains[v];
                let mut found = false;
                let mut rest = candidates;
                while rest != 0 {
                    let value = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    assignment[v] = value;
                    if self.consistent_at(assignment, v) {
                        if let Some(doms) = self.branch_domains(pos + 1, assignment, domains) {
                            if let Verdict::Done(true) = self.eval_at(pos + 1, assignment, &doms, memo)? {
                                found = true;
                            }
                        }
                    }
                    assignment[v] = usize::MAX;
                    if found {
                        break;
                    }
                }
                found
            }
        };
        if let Some(key) = key {
            memo.insert(key, result);
        }
        Ok(if result { Verdict::Done(true) } else { Verdict::Out })
    }

    /// Domains for the subtree below `pos`, after the assignment made at
    /// `pos - 1`; `None` signals a dead branch (an existential domain
    /// emptied).
    fn branch_domains(&self, pos: usize, assignment: &[usize], domains: &Vec<u64>) -> Option<Vec<u64>> {
        match self.cfg.propagation {
            Propagation::None => Some(domains.clone()),
            Propagation::ArcConsistency => {
                let mut doms = domains.clone();
                if self.propagate(assignment, &mut doms, pos) {
                    Some(doms)
                } else {
                    None
                }
            }
        }
    }

    fn run(&self, initial: Vec<usize>) -> Result<bool, EvalError> {
        let nvars = initial.len();
        let domains = vec![self.full_mask; nvars];
        // seed domains once so pre-assigned constants constrain from the start
        let domains = match self.cfg.propagation {
            Propagation::ArcConsistency => {
                let mut doms = domains;
                if !self.propagate(&initial, &mut doms, 0) {
                    return Ok(false);
                }
                doms
            }
            Propagation::None => domains,
        };
        for (i, &val) in initial.iter().enumerate() {
            if val != usize::MAX && !self.consistent_at(&initial, i) {
                return Ok(false);
            }
        }

        if self.cfg.parallel_universals && matches!(self.prefix.first(), Some((Quantifier::Forall, _))) {
            return self.run_parallel_root(initial, domains);
        }
        let mut assignment = initial;
        let mut memo = HashMap::new();
        match self.eval_at(0, &mut assignment, &domains, &mut memo)? {
            Verdict::Done(b) => Ok(b),
            Verdict::Out => Ok(false),
        }
    }

    /// Explores the branches of the outermost universal concurrently.
    /// The verdict is the conjunction of branch verdicts and the node
    /// budget is shared through the engine's atomic counter.
    fn run_parallel_root(&self, initial: Vec<usize>, domains: Vec<u64>) -> Result<bool, EvalError> {
        let (_, v) = self.prefix[0];
        let results: Vec<Result<bool, EvalError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..self.template.n())
                .map(|value| {
                    let mut assignment = initial.clone();
                    let domains = domains.clone();
                    scope.spawn(move || {
                        assignment[v] = value;
                        if !self.consistent_at(&assignment, v) {
                            return Ok(false);
                        }
                        let doms = match self.branch_domains(1, &assignment, &domains) {
                            Some(d) => d,
                            None => return Ok(false),
                        };
                        let mut memo = HashMap::new();
                        match self.eval_at(1, &mut assignment, &doms, &mut memo)? {
                            Verdict::Done(b) => Ok(b),
                            Verdict::Out => Ok(false),
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("branch thread")).collect()
        });
        let mut all = true;
        for r in results {
            all &= r?;
        }
        Ok(all)
    }
}

/// Decides whether the closed sentence holds in the template.
pub fn eval(sentence: &PHSentence, template: &PRGraph, cfg: &EvalConfig) -> Result<bool, EvalError> {
    if !sentence.is_closed() {
        return Err(EvalError::OpenSentence);
    }
    let engine = Engine::new(
        template,
        sentence.prefix().to_vec(),
        sentence.atoms().to_vec(),
        sentence.var_count(),
        *cfg,
    )?;
    engine.run(vec![usize::MAX; sentence.var_count()])
}

/// CSP fragment: existential evaluation of an atom conjunction with some
/// variables pinned to template vertices. Variables are dense `0..nvars`;
/// `pins` assigns constants.
pub fn eval_csp(
    nvars: usize,
    atoms: &[(usize, usize)],
    pins: &[(usize, usize)],
    template: &PRGraph,
    cfg: &EvalConfig,
) -> Result<bool, EvalError> {
    let mut initial = vec![usize::MAX; nvars];
    for &(var, value) in pins {
        if value >= template.n() {
            return Err(EvalError::ConstantOutOfRange(value, template.n()));
        }
        initial[var] = value;
    }
    let prefix: Vec<(Quantifier, usize)> = (0..nvars)
        .filter(|v| initial[*v] == usize::MAX)
        .map(|v| (Quantifier::Exists, v))
        .collect();
    let engine = Engine::new(template, prefix, atoms.to_vec(), nvars, *cfg)?;
    engine.run(initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{find_homomorphism, PathForm, SearchOutcome};
    use crate::logic::{parse_sentence, SentenceSampler};

    fn path(word: &str) -> PRGraph {
        PRGraph::path(&PathForm::parse(word).unwrap())
    }

    fn ev(text: &str, template: &PRGraph) -> bool {
        eval(&parse_sentence(text).unwrap(), template, &EvalConfig::default()).unwrap()
    }

    #[test]
    fn basic_examples() {
        let p101 = path("101");
        assert!(ev("A x\nE y\nedge x y", &p101));
        assert!(!ev("A x\nA y\nedge x y", &p101));
        for word in ["0", "00", "000", "0000"] {
            assert!(!ev("E x\nedge x x", &path(word)));
        }
        // every vertex reaches a loop in two steps on P0010
        assert!(ev("A x\nE y\nE z\nedge x y\nedge y z\nedge z z", &path("0010")));
    }

    #[test]
    fn csp_pinning_examples() {
        let p101 = path("101");
        // 2-edge path pinned on the two loops: middle image exists
        assert!(eval_csp(3, &[(0, 1), (1, 2)], &[(0, 0), (2, 2)], &p101, &EvalConfig::default()).unwrap());
        // single edge pinned on the two loops: not adjacent
        assert!(!eval_csp(2, &[(0, 1)], &[(0, 0), (1, 2)], &p101, &EvalConfig::default()).unwrap());
        // constant out of range
        assert!(matches!(
            eval_csp(1, &[(0, 0)], &[(0, 9)], &p101, &EvalConfig::default()),
            Err(EvalError::ConstantOutOfRange(9, 3))
        ));
    }

    #[test]
    fn node_limit_is_distinct_from_false() {
        let p = path("00100");
        let s = parse_sentence("A x\nA y\nE z\nedge x z\nedge y z").unwrap();
        let cfg = EvalConfig { node_limit: Some(3), ..EvalConfig::default() };
        assert!(matches!(eval(&s, &p, &cfg), Err(EvalError::ResourceExhausted(_))));
    }

    fn all_configs() -> Vec<EvalConfig> {
        let mut out = Vec::new();
        for &prop in &[Propagation::None, Propagation::ArcConsistency] {
            for &memo in &[false, true] {
                out.push(EvalConfig {
                    propagation: prop,
                    memoization: memo,
                    node_limit: None,
                    parallel_universals: false,
                });
            }
        }
        out
    }

    #[test]
    fn config_invariance_sample() {
        let sampler = SentenceSampler::new(11, 6, 2, 7);
        let templates = [path("101"), path("0010"), path("11010")];
        for index in 0..60 {
            let s = sampler.sample(index);
            let t = &templates[(index % 3) as usize];
            let verdicts: Vec<bool> = all_configs().iter().map(|cfg| eval(&s, t, cfg).unwrap()).collect();
            assert!(verdicts.windows(2).all(|w| w[0] == w[1]), "configs disagree on {s:?}");
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let sampler = SentenceSampler::new(23, 6, 2, 7);
        let t = path("01100");
        for index in 0..30 {
            let s = sampler.sample(index);
            let seq = eval(&s, &t, &EvalConfig::default()).unwrap();
            let par = eval(
                &s,
                &t,
                &EvalConfig { parallel_universals: true, ..EvalConfig::default() },
            )
            .unwrap();
            assert_eq!(seq, par, "parallel disagrees on {s:?}");
        }
    }

    #[test]
    fn isomorphic_renaming_preserves_verdicts() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let t = path("0110");
        let mut perm: Vec<usize> = (0..t.n()).collect();
        perm.shuffle(&mut rng);
        let renamed = PRGraph::new(
            t.n(),
            t.edges().map(|(u, v)| (perm[u], perm[v])),
        )
        .unwrap();
        let sampler = SentenceSampler::new(3, 5, 2, 6);
        for index in 0..40 {
            let s = sampler.sample(index);
            assert_eq!(
                eval(&s, &t, &EvalConfig::default()).unwrap(),
                eval(&s, &renamed, &EvalConfig::default()).unwrap()
            );
        }
    }

    #[test]
    fn existential_sentences_agree_with_hom_search() {
        let sampler = SentenceSampler::new(17, 5, 0, 6);
        let t = path("10010");
        for index in 0..40 {
            let s = sampler.sample(index);
            assert_eq!(s.universal_count(), 0);
            // the atom graph of an existential sentence, as a graph
            let g = PRGraph::new(s.var_count(), s.atoms().iter().copied()).unwrap();
            let by_search = matches!(find_homomorphism(&g, &t, 10_000_000), SearchOutcome::Found(_));
            let by_eval = eval(&s, &t, &EvalConfig::default()).unwrap();
            assert_eq!(by_search, by_eval, "mismatch on {s:?}");
        }
    }
}
