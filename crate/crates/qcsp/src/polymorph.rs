//! Majority polymorphisms of partially reflexive trees.
//!
//! Three constructions are provided: a parity-driven operation for
//! irreflexive trees rooted at a degree-one vertex, the median for
//! reflexive trees, and the amalgamated operation for loop-connected
//! trees which dispatches between the two through the tree-component
//! structure. An exhaustive backtracking search over ternary tables
//! complements them: on trees whose loops do not induce a connected
//! subgraph it refutes, which is exactly the boundary the classifier
//! relies on.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graphs::{PRGraph, RootedTree, SearchOutcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolymorphError {
    #[error("root must have degree one")]
    RootDegree,
    #[error("tree must be irreflexive for this construction")]
    NotIrreflexive,
    #[error("tree must be reflexive for this construction")]
    NotReflexive,
    #[error("tree must be loop-connected for this construction")]
    NotLoopConnected,
    #[error("expected a tree")]
    NotATree,
    #[error("carrier sizes do not match")]
    SizeMismatch,
    #[error("rules B and C disagree on a shared root: {0}")]
    IllDefined(String),
}

/// Total ternary operation on `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TernaryTable {
    n: usize,
    table: Vec<usize>,
}

impl TernaryTable {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> usize) -> Self {
        let mut table = Vec::with_capacity(n * n * n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    table.push(f(x, y, z));
                }
            }
        }
        TernaryTable { n, table }
    }

    pub fn carrier(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> usize {
        self.table[(x * self.n + y) * self.n + z]
    }

    /// Dump format: `n`, then one line `x y z -> w` per cell, 1-based.
    pub fn dump(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                for z in 0..self.n {
                    let _ = writeln!(out, "{} {} {} -> {}", x + 1, y + 1, z + 1, self.get(x, y, z) + 1);
                }
            }
        }
        out
    }
}

/// `f(x,x,y) = f(x,y,x) = f(y,x,x) = x` over all pairs.
pub fn is_majority(f: &TernaryTable) -> bool {
    let n = f.carrier();
    for x in 0..n {
        for y in 0..n {
            if f.get(x, x, y) != x || f.get(x, y, x) != x || f.get(y, x, x) != x {
                return false;
            }
        }
    }
    true
}

/// Homomorphism check from the cube to the graph: every triple of
/// ordered edges must map to an edge.
pub fn is_polymorphism(f: &TernaryTable, g: &PRGraph) -> Result<bool, PolymorphError> {
    if f.carrier() != g.n() {
        return Err(PolymorphError::SizeMismatch);
    }
    let dir = g.directed_edges();
    for &(a, a1) in &dir {
        for &(b, b1) in &dir {
            for &(c, c1) in &dir {
                if !g.has_edge(f.get(a, b, c), f.get(a1, b1, c1)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Vertex at the meet adjusted to the wanted parity: the meet itself if
/// its parity matches, otherwise its parent; a root that would need the
/// odd parity resolves to its unique child, which is where the
/// degree-one root condition earns its keep.
fn parity_adjust(tree: &RootedTree, meet: usize, wanted: u32, root_child: usize) -> usize {
    if tree.parity(meet) == wanted {
        meet
    } else {
        match tree.parent(meet) {
            Some(p) => p,
            None => root_child,
        }
    }
}

fn f0_value(tree: &RootedTree, root_child: usize, x: usize, y: usize, z: usize) -> usize {
    let (px, py, pz) = (tree.parity(x), tree.parity(y), tree.parity(z));
    if px == py && py == pz {
        // Rule A: deepest of the three pairwise meets (they are never
        // incomparable), matched to the shared parity
        let meets = [tree.meet(x, y), tree.meet(y, z), tree.meet(x, z)];
        let deepest = *meets.iter().max_by_key(|&&m| tree.depth(m)).unwrap();
        parity_adjust(tree, deepest, px, root_child)
    } else {
        // Rule B: meet of the agreeing pair, matched to its parity
        let (u, v, p) = if px == py {
            (x, y, px)
        } else if py == pz {
            (y, z, py)
        } else {
            (x, z, px)
        };
        parity_adjust(tree, tree.meet(u, v), p, root_child)
    }
}

/// Majority operation on an irreflexive tree rooted at a degree-one
/// vertex: parities propagate from the root and the value is a
/// parity-matched meet.
pub fn f0_table(tree: &RootedTree) -> Result<TernaryTable, PolymorphError> {
    let g = tree.graph();
    if !g.is_irreflexive() {
        return Err(PolymorphError::NotIrreflexive);
    }
    if g.n() == 1 {
        return Ok(TernaryTable::from_fn(1, |_, _, _| 0));
    }
    let root_child = tree.root_child().ok_or(PolymorphError::RootDegree)?;
    Ok(TernaryTable::from_fn(g.n(), |x, y, z| f0_value(tree, root_child, x, y, z)))
}

/// Unique point where the three pairwise paths meet. Computed as the
/// deepest pairwise meet under an arbitrary rooting; not conservative in
/// general.
pub fn median(tree: &RootedTree, x: usize, y: usize, z: usize) -> usize {
    let meets = [tree.meet(x, y), tree.meet(y, z), tree.meet(x, z)];
    *meets.iter().max_by_key(|&&m| tree.depth(m)).unwrap()
}

/// Median operation on a reflexive tree.
pub fn median_table(g: &PRGraph) -> Result<TernaryTable, PolymorphError> {
    if !g.is_tree() {
        return Err(PolymorphError::NotATree);
    }
    if !g.is_reflexive() {
        return Err(PolymorphError::NotReflexive);
    }
    let tree = RootedTree::new(g.clone(), 0).map_err(|_| PolymorphError::NotATree)?;
    Ok(TernaryTable::from_fn(g.n(), |x, y, z| median(&tree, x, y, z)))
}

/// Decomposition of a loop-connected tree into its reflexive centre and
/// the irreflexive tree-components hanging off it. Every component is
/// rooted at a looped vertex and the root has degree one within the
/// component; a looped vertex may root several components at once.
#[derive(Clone, Debug)]
pub struct ComponentStructure {
    /// looped vertices
    pub centre: Vec<usize>,
    pub components: Vec<Component>,
    /// component ids containing each vertex; a looped root lists every
    /// component it roots, an unlooped vertex its unique component
    pub membership: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Component {
    pub root: usize,
    /// unique child of the root within the component
    pub root_child: usize,
    pub vertices: Vec<usize>,
    /// depth within the component (root at 0), indexed by tree vertex
    pub depth: Vec<Option<u32>>,
    /// parent within the component, indexed by tree vertex
    pub parent: Vec<Option<usize>>,
}

impl Component {
    pub fn contains(&self, v: usize) -> bool {
        self.depth[v].is_some()
    }

    pub fn parity(&self, v: usize) -> u32 {
        self.depth[v].expect("vertex in component") % 2
    }

    fn depth_of(&self, v: usize) -> u32 {
        self.depth[v].expect("vertex in component")
    }

    /// Deepest common ancestor within the component.
    pub fn meet(&self, x: usize, y: usize) -> usize {
        let mut a = x;
        let mut b = y;
        while self.depth_of(a) > self.depth_of(b) {
            a = self.parent[a].unwrap();
        }
        while self.depth_of(b) > self.depth_of(a) {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        a
    }

    fn adjust(&self, meet: usize, wanted: u32) -> usize {
        if self.parity(meet) == wanted {
            meet
        } else {
            match self.parent[meet] {
                Some(p) => p,
                None => self.root_child,
            }
        }
    }

    fn f0(&self, x: usize, y: usize, z: usize) -> usize {
        let (px, py, pz) = (self.parity(x), self.parity(y), self.parity(z));
        if px == py && py == pz {
            let meets = [self.meet(x, y), self.meet(y, z), self.meet(x, z)];
            let deepest = *meets.iter().max_by_key(|&&m| self.depth_of(m)).unwrap();
            self.adjust(deepest, px)
        } else {
            let (u, v, p) = if px == py {
                (x, y, px)
            } else if py == pz {
                (y, z, py)
            } else {
                (x, z, px)
            };
            self.adjust(self.meet(u, v), p)
        }
    }
}

impl ComponentStructure {
    /// Decomposes a loop-connected tree. An irreflexive tree becomes a
    /// single component rooted at its smallest-id leaf.
    pub fn new(g: &PRGraph) -> Result<Self, PolymorphError> {
        if !g.is_tree() {
            return Err(PolymorphError::NotATree);
        }
        if !is_loop_connected_graph(g) {
            return Err(PolymorphError::NotLoopConnected);
        }
        let n = g.n();
        let mut membership = vec![Vec::new(); n];
        let mut components = Vec::new();

        let mut push_component = |root: usize, first: usize, membership: &mut Vec<Vec<usize>>| {
            // branch through `first`, walking away from `root`
            let mut vertices = vec![root, first];
            let mut depth = vec![None; n];
            let mut parent = vec![None; n];
            depth[root] = Some(0);
            depth[first] = Some(1);
            parent[first] = Some(root);
            let mut stack = vec![first];
            while let Some(v) = stack.pop() {
                for &u in g.neighbors(v) {
                    if u != v && depth[u].is_none() && u != root {
                        depth[u] = Some(depth[v].unwrap() + 1);
                        parent[u] = Some(v);
                        vertices.push(u);
                        stack.push(u);
                    }
                }
            }
            let id = components.len();
            for &v in &vertices {
                membership[v].push(id);
            }
            components.push(Component { root, root_child: first, vertices, depth, parent });
        };

        if g.is_irreflexive() {
            if n == 1 {
                let comp = Component {
                    root: 0,
                    root_child: 0,
                    vertices: vec![0],
                    depth: vec![Some(0)],
                    parent: vec![None],
                };
                membership[0].push(0);
                components.push(comp);
            } else {
                let root = (0..n)
                    .find(|&v| g.neighbors(v).iter().filter(|&&u| u != v).count() == 1)
                    .expect("tree has a leaf");
                let first = *g.neighbors(root).iter().find(|&&u| u != root).unwrap();
                push_component(root, first, &mut membership);
            }
            return Ok(ComponentStructure { centre: Vec::new(), components, membership });
        }

        let centre = g.loops();
        for &r in &centre {
            let mut unlooped: Vec<usize> = g
                .neighbors(r)
                .iter()
                .copied()
                .filter(|&u| u != r && !g.is_looped(u))
                .collect();
            unlooped.sort_unstable();
            for u in unlooped {
                push_component(r, u, &mut membership);
            }
        }
        Ok(ComponentStructure { centre, components, membership })
    }

    pub fn components_of(&self, v: usize) -> &[usize] {
        &self.membership[v]
    }
}

fn is_loop_connected_graph(g: &PRGraph) -> bool {
    let loops = g.loops();
    if loops.len() <= 1 {
        return true;
    }
    // connectivity of the subgraph induced by the looped vertices
    let mut in_set = vec![false; g.n()];
    for &l in &loops {
        in_set[l] = true;
    }
    let mut seen = vec![false; g.n()];
    let mut stack = vec![loops[0]];
    seen[loops[0]] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v) {
            if u != v && in_set[u] && !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == loops.len()
}

/// Majority operation of a loop-connected tree. Rule A applies the
/// irreflexive construction inside a shared tree-component, rules B and
/// C handle a pair sharing a component, and everything else is the
/// median on the full tree. Where a shared root makes several rule
/// applications possible their agreement is asserted.
pub fn f1_table(g: &PRGraph) -> Result<TernaryTable, PolymorphError> {
    let structure = ComponentStructure::new(g)?;
    let whole = RootedTree::new(g.clone(), 0).map_err(|_| PolymorphError::NotATree)?;
    let n = g.n();
    let mut table = Vec::with_capacity(n * n * n);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                table.push(f1_value(&structure, &whole, x, y, z)?);
            }
        }
    }
    Ok(TernaryTable { n, table })
}

fn f1_value(
    s: &ComponentStructure,
    whole: &RootedTree,
    x: usize,
    y: usize,
    z: usize,
) -> Result<usize, PolymorphError> {
    // Rule A: all three in one tree-component
    let shared: Vec<usize> = s
        .components_of(x)
        .iter()
        .copied()
        .filter(|k| s.components_of(y).contains(k) && s.components_of(z).contains(k))
        .collect();
    if !shared.is_empty() {
        let values: Vec<usize> = shared.iter().map(|&k| s.components[k].f0(x, y, z)).collect();
        if values.windows(2).any(|w| w[0] != w[1]) {
            return Err(PolymorphError::IllDefined(format!("rule A on ({x},{y},{z})")));
        }
        return Ok(values[0]);
    }
    // Rules B / C: a pair shares a component, the third lies elsewhere
    let mut candidates = Vec::new();
    for (u, v) in [(x, y), (y, z), (x, z)] {
        for &k in s.components_of(u) {
            if s.components_of(v).contains(&k) {
                let comp = &s.components[k];
                let value = if comp.parity(u) == comp.parity(v) {
                    comp.adjust(comp.meet(u, v), comp.parity(u))
                } else {
                    comp.root
                };
                candidates.push(value);
            }
        }
    }
    if !candidates.is_empty() {
        if candidates.windows(2).any(|w| w[0] != w[1]) {
            return Err(PolymorphError::IllDefined(format!("rules B/C on ({x},{y},{z})")));
        }
        return Ok(candidates[0]);
    }
    // Rule D
    Ok(median(whole, x, y, z))
}

/// Backtracking search for a majority polymorphism over the free cells
/// of the ternary table, with forward checking against the edge-triple
/// constraints. `Refuted` is only reported after exhausting the space.
pub fn search_majority_polymorphism(g: &PRGraph, node_budget: u64) -> SearchOutcome<TernaryTable> {
    let n = g.n();
    debug_assert!(n <= 64);
    let cell = |x: usize, y: usize, z: usize| (x * n + y) * n + z;
    let total = n * n * n;

    // majority identities pin every cell with a repeated coordinate
    let mut value = vec![usize::MAX; total];
    for x in 0..n {
        for y in 0..n {
            value[cell(x, x, y)] = x;
            value[cell(x, y, x)] = x;
            value[cell(y, x, x)] = x;
        }
    }

    // cell adjacency from ordered edge triples
    let dir = g.directed_edges();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); total];
    for &(a, a1) in &dir {
        for &(b, b1) in &dir {
            for &(c, c1) in &dir {
                adjacency[cell(a, b, c)].push(cell(a1, b1, c1));
            }
        }
    }

    let full: u64 = if n == 64 { !0 } else { (1 << n) - 1 };
    let nbr: Vec<u64> = (0..n).map(|v| g.neighbor_mask(v)).collect();
    let mut domains = vec![full; total];

    // initial propagation from the pinned cells
    for c in 0..total {
        if value[c] != usize::MAX {
            for &d in &adjacency[c] {
                if value[d] == usize::MAX {
                    domains[d] &= nbr[value[c]];
                } else if !g.has_edge(value[c], value[d]) {
                    return SearchOutcome::Refuted;
                }
            }
        }
    }
    if (0..total).any(|c| value[c] == usize::MAX && domains[c] == 0) {
        return SearchOutcome::Refuted;
    }

    let free: Vec<usize> = (0..total).filter(|&c| value[c] == usize::MAX).collect();
    let mut nodes = 0u64;

    fn rec(
        free: &[usize],
        adjacency: &[Vec<usize>],
        nbr: &[u64],
        g: &PRGraph,
        value: &mut Vec<usize>,
        domains: &mut Vec<u64>,
        nodes: &mut u64,
        budget: u64,
    ) -> SearchOutcome<()> {
        *nodes += 1;
        if *nodes > budget {
            return SearchOutcome::Exhausted;
        }
        // most constrained free cell first
        let mut pick = None;
        let mut best = usize::MAX;
        for &c in free {
            if value[c] == usize::MAX {
                let size = domains[c].count_ones() as usize;
                if size < best {
                    best = size;
                    pick = Some(c);
                    if size <= 1 {
                        break;
                    }
                }
            }
        }
        let c = match pick {
            Some(c) => c,
            None => return SearchOutcome::Found(()),
        };
        let mut exhausted = false;
        let mut rest = domains[c];
        while rest != 0 {
            let w = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            // forward check
            let saved: Vec<(usize, u64)> = adjacency[c]
                .iter()
                .filter(|&&d| value[d] == usize::MAX)
                .map(|&d| (d, domains[d]))
                .collect();
            let ok = adjacency[c].iter().all(|&d| value[d] == usize::MAX || g.has_edge(w, value[d]));
            let mut dead = !ok;
            if ok {
                value[c] = w;
                for &(d, _) in &saved {
                    domains[d] &= nbr[w];
                    if domains[d] == 0 {
                        dead = true;
                    }
                }
                if !dead {
                    match rec(free, adjacency, nbr, g, value, domains, nodes, budget) {
                        SearchOutcome::Found(()) => return SearchOutcome::Found(()),
                        SearchOutcome::Exhausted => exhausted = true,
                        SearchOutcome::Refuted => {}
                    }
                }
                for &(d, dom) in &saved {
                    domains[d] = dom;
                }
                value[c] = usize::MAX;
            }
            let _ = dead;
            if exhausted {
                return SearchOutcome::Exhausted;
            }
        }
        SearchOutcome::Refuted
    }

    match rec(&free, &adjacency, &nbr, g, &mut value, &mut domains, &mut nodes, node_budget) {
        SearchOutcome::Found(()) => {
            let table = TernaryTable { n, table: value };
            assert!(is_majority(&table), "search produced a non-majority table");
            assert!(
                is_polymorphism(&table, g).unwrap(),
                "search produced a non-polymorphism"
            );
            SearchOutcome::Found(table)
        }
        SearchOutcome::Refuted => SearchOutcome::Refuted,
        SearchOutcome::Exhausted => SearchOutcome::Exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::partially_reflexive_trees;
    use crate::graphs::PathForm;

    fn path(word: &str) -> PRGraph {
        PRGraph::path(&PathForm::parse(word).unwrap())
    }

    #[test]
    fn meet_basics() {
        let g = path("0000");
        let t = RootedTree::new(g, 0).unwrap();
        assert_eq!(t.meet(0, 3), 0);
        assert_eq!(t.meet(1, 3), 1);
        assert_eq!(t.meet(2, 2), 2);
        // siblings meet at their parent
        let star = PRGraph::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap();
        let t = RootedTree::new(star, 0).unwrap();
        assert_eq!(t.meet(2, 3), 1);
    }

    #[test]
    fn f0_path_examples() {
        // path 0-1-2-3 rooted at 0
        let g = path("0000");
        let t = RootedTree::new(g.clone(), 0).unwrap();
        let f = f0_table(&t).unwrap();
        assert_eq!(f.get(1, 2, 3), 1);
        assert_eq!(f.get(0, 2, 1), 0);
        assert!(is_majority(&f));
        assert!(is_polymorphism(&f, &g).unwrap());
    }

    #[test]
    fn f0_rejects_bad_roots() {
        let g = path("0000");
        let mid = RootedTree::new(g, 1).unwrap();
        assert_eq!(f0_table(&mid).unwrap_err(), PolymorphError::RootDegree);
        let looped = path("1000");
        let t = RootedTree::new(looped, 0).unwrap();
        assert_eq!(f0_table(&t).unwrap_err(), PolymorphError::NotIrreflexive);
    }

    #[test]
    fn median_examples() {
        let g = path("11111");
        let f = median_table(&g).unwrap();
        assert_eq!(f.get(0, 2, 4), 2);
        assert!(is_majority(&f));
        assert!(is_polymorphism(&f, &g).unwrap());
        // star centre wins
        let star = PRGraph::new(3, [(0, 1), (0, 2), (0, 0), (1, 1), (2, 2)]).unwrap();
        let f = median_table(&star).unwrap();
        assert_eq!(f.get(1, 2, 0), 0);
        assert_eq!(median_table(&path("101")).unwrap_err(), PolymorphError::NotReflexive);
    }

    #[test]
    fn f1_on_p100() {
        let g = path("100");
        let f = f1_table(&g).unwrap();
        assert_eq!(f.get(1, 2, 0), 0);
        assert!(is_majority(&f));
        assert!(is_polymorphism(&f, &g).unwrap());
    }

    #[test]
    fn f1_rejects_disconnected_loops() {
        assert_eq!(f1_table(&path("101")).unwrap_err(), PolymorphError::NotLoopConnected);
    }

    #[test]
    fn f1_agrees_with_f0_on_irreflexive_trees() {
        for t in partially_reflexive_trees(5).into_iter().filter(|t| t.is_irreflexive()) {
            let f1 = f1_table(&t).unwrap();
            let root = (0..t.n())
                .find(|&v| t.neighbors(v).iter().filter(|&&u| u != v).count() == 1)
                .unwrap_or(0);
            let rooted = RootedTree::new(t.clone(), root).unwrap();
            let f0 = f0_table(&rooted).unwrap();
            assert_eq!(f0, f1);
        }
    }

    #[test]
    fn f1_majority_polymorphism_small_trees() {
        for n in 1..=6 {
            for t in partially_reflexive_trees(n) {
                if ComponentStructure::new(&t).is_ok() {
                    let f = f1_table(&t).unwrap();
                    assert!(is_majority(&f), "majority fails on {t:?}");
                    assert!(is_polymorphism(&f, &t).unwrap(), "polymorphism fails on {t:?}");
                }
            }
        }
    }

    #[test]
    fn projection_is_not_majority() {
        let first = TernaryTable::from_fn(3, |x, _, _| x);
        assert!(!is_majority(&first));
    }

    #[test]
    fn search_examples() {
        assert!(matches!(
            search_majority_polymorphism(&path("11"), 1_000_000),
            SearchOutcome::Found(_)
        ));
        assert_eq!(search_majority_polymorphism(&path("101"), 50_000_000), SearchOutcome::Refuted);
        assert_eq!(
            search_majority_polymorphism(&path("01010"), 50_000_000),
            SearchOutcome::Refuted
        );
    }

    #[test]
    fn search_refutes_non_loop_connected_small() {
        for n in 2..=5 {
            for t in partially_reflexive_trees(n) {
                if !is_loop_connected_graph(&t) {
                    assert_eq!(
                        search_majority_polymorphism(&t, 100_000_000),
                        SearchOutcome::Refuted,
                        "expected refutation on {t:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn table_dump_shape() {
        let f = median_table(&path("11")).unwrap();
        let dump = f.dump();
        let mut lines = dump.lines();
        assert_eq!(lines.next(), Some("2"));
        assert_eq!(dump.lines().count(), 1 + 8);
        assert!(dump.contains("1 1 2 -> 1"));
    }

    #[test]
    fn size_mismatch_reported() {
        let f = median_table(&path("11")).unwrap();
        assert_eq!(
            is_polymorphism(&f, &path("111")).unwrap_err(),
            PolymorphError::SizeMismatch
        );
    }
}
