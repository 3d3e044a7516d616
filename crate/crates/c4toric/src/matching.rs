//! Defect-graph metrics and exact minimum-weight perfect matching.
//!
//! Decoding happens per CSS sublattice: X errors are matched over the
//! Z-type checks and Z errors over the X-type checks. On the square-octagon
//! lattice the defect graph has unit edges only between squares and their
//! adjacent octagons, so octagon-octagon moves cost 2 per lattice step and a
//! square endpoint adds one unit on top of the Manhattan distance between
//! neighbouring octagons. The closed form is checked against a breadth-first
//! oracle on the explicit defect graph.

use serde::Serialize;
use thiserror::Error;

use crate::codes::{CheckKind, CodeSpec, Orientation, SiteCoord};
use crate::pauli::{Pauli, PauliOperator};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("defects on mixed sublattices: {0:?} vs {1:?}")]
    MixedSublattices(Sublattice, Sublattice),
    #[error("odd defect count {0}; torus syndromes pair up, this is a simulation bug")]
    OddNodeCount(usize),
    #[error("brute-force oracle refuses {0} nodes (limit {1})")]
    TooManyNodes(usize, usize),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
}

/// A CSS matching sublattice, named after the error type it corrects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sublattice {
    XErrors,
    ZErrors,
}

impl Sublattice {
    /// The sublattice on which defects of this check are matched.
    pub fn of_check(kind: CheckKind) -> Sublattice {
        match kind.detects() {
            Pauli::X => Sublattice::XErrors,
            _ => Sublattice::ZErrors,
        }
    }

    /// The single-qubit error corrected on this sublattice.
    pub fn error_pauli(self) -> Pauli {
        match self {
            Sublattice::XErrors => Pauli::X,
            Sublattice::ZErrors => Pauli::Z,
        }
    }
}

/// Spatial classification of a defect for the closed-form metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Octagon check, at the integer coordinates of its parent toric
    /// plaquette or star.
    Octagon { i: usize, j: usize },
    /// Square check, at its toric edge coordinate.
    Square {
        orientation: Orientation,
        i: usize,
        j: usize,
    },
    /// Plain toric check (the defect graph is the bare torus grid).
    ToricSite { i: usize, j: usize },
}

/// A violated check in space-time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DefectNode {
    pub check: usize,
    pub kind: NodeKind,
    pub sublattice: Sublattice,
    pub round: usize,
}

impl DefectNode {
    pub fn new(spec: &CodeSpec, check: usize, round: usize) -> DefectNode {
        let c = &spec.checks[check];
        let kind = match (c.kind, c.coord) {
            (CheckKind::ToricPlaquette | CheckKind::ToricStar, coord) => match coord {
                SiteCoord::Face { i, j } | SiteCoord::Vertex { i, j } => NodeKind::ToricSite { i, j },
                SiteCoord::Edge { .. } => unreachable!("toric checks sit on faces/vertices"),
            },
            (CheckKind::OctagonX, SiteCoord::Vertex { i, j })
            | (CheckKind::OctagonZ, SiteCoord::Face { i, j }) => NodeKind::Octagon { i, j },
            (CheckKind::SquareX | CheckKind::SquareZ, SiteCoord::Edge { orientation, i, j }) => {
                NodeKind::Square { orientation, i, j }
            }
            (kind, coord) => unreachable!("inconsistent check geometry {kind:?} at {coord:?}"),
        };
        DefectNode {
            check,
            kind,
            sublattice: Sublattice::of_check(c.kind),
            round,
        }
    }
}

fn torus_axis_dist(l: usize, a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(l - d)
}

fn torus_manhattan(l: usize, a: (usize, usize), b: (usize, usize)) -> usize {
    torus_axis_dist(l, a.0, b.0) + torus_axis_dist(l, a.1, b.1)
}

/// The two octagons adjacent to a square on the given sublattice. X errors
/// are flagged by face octagons, Z errors by vertex octagons.
fn square_neighbor_octagons(
    l: usize,
    sublattice: Sublattice,
    orientation: Orientation,
    i: usize,
    j: usize,
) -> [(usize, usize); 2] {
    match (sublattice, orientation) {
        (Sublattice::XErrors, Orientation::Horizontal) => [(i, j), (i, (j + l - 1) % l)],
        (Sublattice::XErrors, Orientation::Vertical) => [(i, j), ((i + l - 1) % l, j)],
        (Sublattice::ZErrors, Orientation::Horizontal) => [(i, j), ((i + 1) % l, j)],
        (Sublattice::ZErrors, Orientation::Vertical) => [(i, j), (i, (j + 1) % l)],
    }
}

/// Closed-form deformed Manhattan distance between two same-sublattice
/// defects, in defect-graph edge units.
pub fn spatial_distance(
    spec: &CodeSpec,
    a: &DefectNode,
    b: &DefectNode,
) -> Result<usize, MatchingError> {
    if a.sublattice != b.sublattice {
        return Err(MatchingError::MixedSublattices(a.sublattice, b.sublattice));
    }
    if a.check == b.check {
        return Ok(0);
    }
    let l = spec.l;
    let sub = a.sublattice;
    let d = match (a.kind, b.kind) {
        (NodeKind::ToricSite { i: i1, j: j1 }, NodeKind::ToricSite { i: i2, j: j2 }) => {
            torus_manhattan(l, (i1, j1), (i2, j2))
        }
        (NodeKind::Octagon { i: i1, j: j1 }, NodeKind::Octagon { i: i2, j: j2 }) => {
            2 * torus_manhattan(l, (i1, j1), (i2, j2))
        }
        (NodeKind::Square { orientation, i, j }, NodeKind::Octagon { i: oi, j: oj })
        | (NodeKind::Octagon { i: oi, j: oj }, NodeKind::Square { orientation, i, j }) => {
            let nbrs = square_neighbor_octagons(l, sub, orientation, i, j);
            1 + nbrs
                .iter()
                .map(|&p| 2 * torus_manhattan(l, p, (oi, oj)))
                .min()
                .expect("two neighbours")
        }
        (
            NodeKind::Square {
                orientation: o1,
                i: i1,
                j: j1,
            },
            NodeKind::Square {
                orientation: o2,
                i: i2,
                j: j2,
            },
        ) => {
            let n1 = square_neighbor_octagons(l, sub, o1, i1, j1);
            let n2 = square_neighbor_octagons(l, sub, o2, i2, j2);
            let mut best = usize::MAX;
            for &p in &n1 {
                for &q in &n2 {
                    best = best.min(2 * torus_manhattan(l, p, q));
                }
            }
            2 + best
        }
        _ => unreachable!("toric and square-octagon nodes never share a sublattice"),
    };
    Ok(d)
}

/// Space-time distance: spatial part plus `time_weight` per round of
/// separation (uniform edge weights).
pub fn spacetime_distance(
    spec: &CodeSpec,
    a: &DefectNode,
    b: &DefectNode,
    time_weight: usize,
) -> Result<usize, MatchingError> {
    Ok(spatial_distance(spec, a, b)? + time_weight * a.round.abs_diff(b.round))
}

/// Explicit defect graph of one sublattice: nodes are same-type checks,
/// unit edges are single qubits anticommuting with exactly the two endpoint
/// checks. Realizes "path length counts qubits touched" literally.
pub struct DefectGraph {
    pub sublattice: Sublattice,
    node_of_check: Vec<Option<usize>>,
    check_of_node: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl DefectGraph {
    pub fn build(spec: &CodeSpec, sublattice: Sublattice) -> DefectGraph {
        let mut node_of_check = vec![None; spec.num_checks()];
        let mut check_of_node = Vec::new();
        for (c, check) in spec.checks.iter().enumerate() {
            if Sublattice::of_check(check.kind) == sublattice {
                node_of_check[c] = Some(check_of_node.len());
                check_of_node.push(c);
            }
        }
        let mut adj = vec![Vec::new(); check_of_node.len()];
        let pauli = sublattice.error_pauli();
        for q in 0..spec.n {
            let single = PauliOperator::from_support(spec.n, pauli, &[q]);
            let mut touched = Vec::with_capacity(2);
            for (c, check) in spec.checks.iter().enumerate() {
                if node_of_check[c].is_some() && single.symplectic(&check.op).unwrap() == 1 {
                    touched.push(node_of_check[c].unwrap());
                }
            }
            assert_eq!(
                touched.len(),
                2,
                "qubit {q} must touch exactly two {sublattice:?} checks"
            );
            adj[touched[0]].push((touched[1], q));
            adj[touched[1]].push((touched[0], q));
        }
        DefectGraph {
            sublattice,
            node_of_check,
            check_of_node,
            adj,
        }
    }

    fn node(&self, check: usize) -> usize {
        self.node_of_check[check].expect("check not on this sublattice")
    }

    pub fn contains_check(&self, check: usize) -> bool {
        self.node_of_check
            .get(check)
            .is_some_and(|n| n.is_some())
    }

    /// Breadth-first shortest-path distance between two checks.
    pub fn distance(&self, from_check: usize, to_check: usize) -> usize {
        let (from, to) = (self.node(from_check), self.node(to_check));
        if from == to {
            return 0;
        }
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[from] = 0;
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                return dist[u];
            }
            for &(v, _) in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        unreachable!("torus defect graphs are connected")
    }

    /// Qubits along one minimal path between two checks (empty if equal).
    /// Any minimal path is acceptable: equal-length paths differ by
    /// stabilizer and gauge elements only.
    pub fn path_qubits(&self, from_check: usize, to_check: usize) -> Vec<usize> {
        let (from, to) = (self.node(from_check), self.node(to_check));
        if from == to {
            return Vec::new();
        }
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[from] = true;
        let mut queue = std::collections::VecDeque::from([from]);
        'search: while let Some(u) = queue.pop_front() {
            for &(v, q) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, q));
                    if v == to {
                        break 'search;
                    }
                    queue.push_back(v);
                }
            }
        }
        let mut qubits = Vec::new();
        let mut cur = to;
        while cur != from {
            let (prev, q) = parent[cur].expect("path exists on the torus");
            qubits.push(q);
            cur = prev;
        }
        qubits
    }

    pub fn checks(&self) -> &[usize] {
        &self.check_of_node
    }
}

/// BFS oracle for the closed-form metric.
pub fn spatial_distance_bfs(
    spec: &CodeSpec,
    a: &DefectNode,
    b: &DefectNode,
) -> Result<usize, MatchingError> {
    if a.sublattice != b.sublattice {
        return Err(MatchingError::MixedSublattices(a.sublattice, b.sublattice));
    }
    let graph = DefectGraph::build(spec, a.sublattice);
    Ok(graph.distance(a.check, b.check))
}

/// An even set of same-sublattice defects with a symmetric non-negative
/// weight matrix.
pub struct MatchingProblem {
    pub nodes: Vec<DefectNode>,
    weights: Vec<i64>,
}

impl MatchingProblem {
    pub fn from_fn(
        nodes: Vec<DefectNode>,
        mut weight: impl FnMut(&DefectNode, &DefectNode) -> usize,
    ) -> Result<MatchingProblem, MatchingError> {
        if nodes.len() % 2 != 0 {
            return Err(MatchingError::OddNodeCount(nodes.len()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[0].sublattice != w[1].sublattice) {
            return Err(MatchingError::MixedSublattices(
                w[0].sublattice,
                w[1].sublattice,
            ));
        }
        let n = nodes.len();
        let mut weights = vec![0i64; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = weight(&nodes[i], &nodes[j]) as i64;
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Ok(MatchingProblem { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> i64 {
        self.weights[i * self.nodes.len() + j]
    }

    pub fn total_weight(&self, pairs: &[(usize, usize)]) -> i64 {
        pairs.iter().map(|&(i, j)| self.weight(i, j)).sum()
    }

    /// Debug dump (nodes plus weight matrix) for decoder regression tests.
    pub fn dump_json(&self) -> serde_json::Value {
        let n = self.nodes.len();
        serde_json::json!({
            "nodes": self.nodes.iter().map(|d| serde_json::json!({
                "check": d.check,
                "round": d.round,
                "sublattice": d.sublattice,
            })).collect::<Vec<_>>(),
            "weights": (0..n)
                .map(|i| (0..n).map(|j| self.weight(i, j)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// Exact minimum-weight perfect matching on the complete defect graph,
/// via Edmonds' blossom algorithm. Returns index pairs into the problem's
/// node list.
pub fn mwpm(problem: &MatchingProblem) -> Result<Vec<(usize, usize)>, MatchingError> {
    let n = problem.len();
    if n % 2 != 0 {
        return Err(MatchingError::OddNodeCount(n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // Minimum-weight perfect matching reduces to maximum-weight matching
    // with weights flipped about a bound; strictly positive transformed
    // weights on a complete even graph force a perfect matching.
    let max_w = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| problem.weight(i, j))
        .max()
        .unwrap();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, max_w + 1 - problem.weight(i, j)));
        }
    }
    let mate = blossom::max_weight_matching(&edges, true);
    let mut pairs = Vec::with_capacity(n / 2);
    for v in 0..n {
        let m = mate[v];
        assert!(m != blossom::UNMATCHED, "complete even graph must match all");
        if v < m {
            pairs.push((v, m));
        }
    }
    Ok(pairs)
}

const BRUTE_FORCE_LIMIT: usize = 12;

/// Exhaustive oracle: minimum over all (n-1)!! pairings. Refuses more than
/// [`BRUTE_FORCE_LIMIT`] nodes.
pub fn mwpm_bruteforce(problem: &MatchingProblem) -> Result<Vec<(usize, usize)>, MatchingError> {
    let n = problem.len();
    if n % 2 != 0 {
        return Err(MatchingError::OddNodeCount(n));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(MatchingError::TooManyNodes(n, BRUTE_FORCE_LIMIT));
    }
    fn recurse(
        problem: &MatchingProblem,
        unmatched: &mut Vec<usize>,
        current: &mut Vec<(usize, usize)>,
        acc: i64,
        best: &mut (i64, Vec<(usize, usize)>),
    ) {
        if unmatched.is_empty() {
            if acc < best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        let first = unmatched[0];
        for k in 1..unmatched.len() {
            let partner = unmatched[k];
            let w = problem.weight(first, partner);
            if acc + w >= best.0 {
                continue;
            }
            let mut rest: Vec<usize> = unmatched
                .iter()
                .copied()
                .filter(|&v| v != first && v != partner)
                .collect();
            current.push((first, partner));
            recurse(problem, &mut rest, current, acc + w, best);
            current.pop();
        }
    }
    let mut best = (i64::MAX, Vec::new());
    let mut all: Vec<usize> = (0..n).collect();
    recurse(problem, &mut all, &mut Vec::new(), 0, &mut best);
    Ok(best.1)
}

/// Synthesizes the data correction for a matched defect set: a Pauli chain
/// along a minimal defect-graph path for each pair's spatial endpoints.
/// Time-like separations contribute no data correction.
pub fn pairing_to_correction(
    spec: &CodeSpec,
    graph: &DefectGraph,
    pairs: &[(&DefectNode, &DefectNode)],
) -> PauliOperator {
    let pauli = graph.sublattice.error_pauli();
    let mut correction = PauliOperator::identity(spec.n);
    for (a, b) in pairs {
        for q in graph.path_qubits(a.check, b.check) {
            correction.apply_pauli(q, pauli);
        }
    }
    correction
}

mod blossom {
    //! Maximum-weight matching in general graphs: Edmonds' blossom method
    //! with the primal-dual weight handling, following Galil's exposition
    //! and van Rantwijk's reference implementation. All duals stay integral
    //! for integral edge weights.

    pub const UNMATCHED: usize = usize::MAX;
    const NONE: usize = usize::MAX;

    type Weight = i64;

    struct Solver<'a> {
        edges: &'a [(usize, usize, Weight)],
        max_cardinality: bool,
        nvertex: usize,
        max_weight: Weight,
        endpoint: Vec<usize>,
        neighb_end: Vec<Vec<usize>>,
        mate: Vec<usize>,
        label: Vec<u8>,
        label_end: Vec<usize>,
        in_blossom: Vec<usize>,
        blossom_parent: Vec<usize>,
        blossom_childs: Vec<Vec<usize>>,
        blossom_base: Vec<usize>,
        blossom_endps: Vec<Vec<usize>>,
        best_edge: Vec<usize>,
        blossom_best_edges: Vec<Vec<usize>>,
        unused_blossoms: Vec<usize>,
        dual_var: Vec<Weight>,
        allow_edge: Vec<bool>,
        queue: Vec<usize>,
    }

    /// Returns `mate[v]`: the vertex matched to `v`, or [`UNMATCHED`].
    /// With `max_cardinality` the matching has maximum size, and maximum
    /// weight among those.
    pub fn max_weight_matching(
        edges: &[(usize, usize, Weight)],
        max_cardinality: bool,
    ) -> Vec<usize> {
        if edges.is_empty() {
            return Vec::new();
        }
        let mut solver = Solver::new(edges, max_cardinality);
        solver.solve()
    }

    impl<'a> Solver<'a> {
        fn new(edges: &'a [(usize, usize, Weight)], max_cardinality: bool) -> Solver<'a> {
            let nedge = edges.len();
            let mut nvertex = 0;
            for &(i, j, _) in edges {
                assert!(i != j);
                nvertex = nvertex.max(i + 1).max(j + 1);
            }
            let max_weight = edges.iter().map(|e| e.2).max().unwrap().max(0);
            let endpoint: Vec<usize> = (0..2 * nedge)
                .map(|p| if p % 2 == 0 { edges[p / 2].0 } else { edges[p / 2].1 })
                .collect();
            let mut neighb_end = vec![Vec::new(); nvertex];
            for (k, &(i, j, _)) in edges.iter().enumerate() {
                neighb_end[i].push(2 * k + 1);
                neighb_end[j].push(2 * k);
            }
            let mut dual_var = vec![max_weight; nvertex];
            dual_var.extend(std::iter::repeat_n(0, nvertex));
            let mut blossom_base: Vec<usize> = (0..nvertex).collect();
            blossom_base.extend(std::iter::repeat_n(NONE, nvertex));
            Solver {
                edges,
                max_cardinality,
                nvertex,
                max_weight,
                endpoint,
                neighb_end,
                mate: vec![UNMATCHED; nvertex],
                label: vec![0; 2 * nvertex],
                label_end: vec![NONE; 2 * nvertex],
                in_blossom: (0..nvertex).collect(),
                blossom_parent: vec![NONE; 2 * nvertex],
                blossom_childs: vec![Vec::new(); 2 * nvertex],
                blossom_base,
                blossom_endps: vec![Vec::new(); 2 * nvertex],
                best_edge: vec![NONE; 2 * nvertex],
                blossom_best_edges: vec![Vec::new(); 2 * nvertex],
                unused_blossoms: (nvertex..2 * nvertex).collect(),
                dual_var,
                allow_edge: vec![false; nedge],
                queue: Vec::new(),
            }
        }

        fn slack(&self, k: usize) -> Weight {
            let (i, j, wt) = self.edges[k];
            self.dual_var[i] + self.dual_var[j] - 2 * wt
        }

        fn blossom_leaves(&self, b: usize, out: &mut Vec<usize>) {
            if b < self.nvertex {
                out.push(b);
            } else {
                for &t in &self.blossom_childs[b] {
                    self.blossom_leaves(t, out);
                }
            }
        }

        fn leaves(&self, b: usize) -> Vec<usize> {
            let mut out = Vec::new();
            self.blossom_leaves(b, &mut out);
            out
        }

        fn assign_label(&mut self, w: usize, t: u8, p: usize) {
            let b = self.in_blossom[w];
            assert!(self.label[w] == 0 && self.label[b] == 0);
            self.label[w] = t;
            self.label[b] = t;
            self.label_end[w] = p;
            self.label_end[b] = p;
            self.best_edge[w] = NONE;
            self.best_edge[b] = NONE;
            if t == 1 {
                let leaves = self.leaves(b);
                self.queue.extend(leaves);
            } else {
                let base = self.blossom_base[b];
                assert!(self.mate[base] != UNMATCHED);
                let mate_endpoint = self.mate[base];
                self.assign_label(self.endpoint[mate_endpoint], 1, mate_endpoint ^ 1);
            }
        }

        /// Traces back from both ends of an allowable S-S edge; returns the
        /// base of a new blossom, or NONE if an augmenting path was found.
        fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
            let mut path = Vec::new();
            let mut base = NONE;
            let (mut v, mut w) = (v, w);
            while v != NONE || w != NONE {
                if v == NONE {
                    std::mem::swap(&mut v, &mut w);
                }
                let mut b = self.in_blossom[v];
                if self.label[b] & 4 != 0 {
                    base = self.blossom_base[b];
                    break;
                }
                assert_eq!(self.label[b], 1);
                path.push(b);
                self.label[b] = 5;
                assert_eq!(self.label_end[b], self.mate[self.blossom_base[b]]);
                if self.label_end[b] == NONE {
                    v = NONE;
                } else {
                    v = self.endpoint[self.label_end[b]];
                    b = self.in_blossom[v];
                    assert_eq!(self.label[b], 2);
                    assert!(self.label_end[b] != NONE);
                    v = self.endpoint[self.label_end[b]];
                }
                if w != NONE {
                    std::mem::swap(&mut v, &mut w);
                }
            }
            for b in path {
                self.label[b] = 1;
            }
            base
        }

        fn add_blossom(&mut self, base: usize, k: usize) {
            let (mut v, mut w, _) = self.edges[k];
            let bb = self.in_blossom[base];
            let mut bv = self.in_blossom[v];
            let mut bw = self.in_blossom[w];
            let b = self.unused_blossoms.pop().expect("blossom pool");
            self.blossom_base[b] = base;
            self.blossom_parent[b] = NONE;
            self.blossom_parent[bb] = b;

            let mut childs = Vec::new();
            let mut endps = Vec::new();
            while bv != bb {
                self.blossom_parent[bv] = b;
                childs.push(bv);
                endps.push(self.label_end[bv]);
                assert!(
                    self.label[bv] == 2
                        || (self.label[bv] == 1
                            && self.label_end[bv] == self.mate[self.blossom_base[bv]])
                );
                assert!(self.label_end[bv] != NONE);
                v = self.endpoint[self.label_end[bv]];
                bv = self.in_blossom[v];
            }
            childs.push(bb);
            childs.reverse();
            endps.reverse();
            endps.push(2 * k);
            while bw != bb {
                self.blossom_parent[bw] = b;
                childs.push(bw);
                endps.push(self.label_end[bw] ^ 1);
                assert!(
                    self.label[bw] == 2
                        || (self.label[bw] == 1
                            && self.label_end[bw] == self.mate[self.blossom_base[bw]])
                );
                assert!(self.label_end[bw] != NONE);
                w = self.endpoint[self.label_end[bw]];
                bw = self.in_blossom[w];
            }
            self.blossom_childs[b] = childs;
            self.blossom_endps[b] = endps;

            assert_eq!(self.label[bb], 1);
            self.label[b] = 1;
            self.label_end[b] = self.label_end[bb];
            self.dual_var[b] = 0;
            for v in self.leaves(b) {
                if self.label[self.in_blossom[v]] == 2 {
                    self.queue.push(v);
                }
                self.in_blossom[v] = b;
            }

            // Least-slack edges from the new blossom to other S-blossoms.
            let mut best_edge_to = vec![NONE; 2 * self.nvertex];
            let childs = self.blossom_childs[b].clone();
            for bv in childs {
                let nblists: Vec<Vec<usize>> = if self.blossom_best_edges[bv].is_empty() {
                    self.leaves(bv)
                        .into_iter()
                        .map(|v| self.neighb_end[v].iter().map(|p| p / 2).collect())
                        .collect()
                } else {
                    vec![self.blossom_best_edges[bv].clone()]
                };
                for nblist in nblists {
                    for k in nblist {
                        let (mut i, mut j, _) = self.edges[k];
                        if self.in_blossom[j] == b {
                            std::mem::swap(&mut i, &mut j);
                        }
                        let _ = i;
                        let bj = self.in_blossom[j];
                        if bj != b
                            && self.label[bj] == 1
                            && (best_edge_to[bj] == NONE
                                || self.slack(k) < self.slack(best_edge_to[bj]))
                        {
                            best_edge_to[bj] = k;
                        }
                    }
                }
                self.blossom_best_edges[bv] = Vec::new();
                self.best_edge[bv] = NONE;
            }
            self.blossom_best_edges[b] = best_edge_to.into_iter().filter(|&k| k != NONE).collect();
            self.best_edge[b] = NONE;
            for &k in &self.blossom_best_edges[b] {
                if self.best_edge[b] == NONE || self.slack(k) < self.slack(self.best_edge[b]) {
                    self.best_edge[b] = k;
                }
            }
        }

        fn expand_blossom(&mut self, b: usize, end_stage: bool) {
            for s in self.blossom_childs[b].clone() {
                self.blossom_parent[s] = NONE;
                if s < self.nvertex {
                    self.in_blossom[s] = s;
                } else if end_stage && self.dual_var[s] == 0 {
                    self.expand_blossom(s, end_stage);
                } else {
                    for v in self.leaves(s) {
                        self.in_blossom[v] = s;
                    }
                }
            }
            if !end_stage && self.label[b] == 2 {
                assert!(self.label_end[b] != NONE);
                let entry_child = self.in_blossom[self.endpoint[self.label_end[b] ^ 1]];
                let childs_len = self.blossom_childs[b].len() as isize;
                let mut j = self.blossom_childs[b]
                    .iter()
                    .position(|&c| c == entry_child)
                    .unwrap() as isize;
                let (j_step, endp_trick): (isize, usize) = if j % 2 != 0 {
                    j -= childs_len;
                    (1, 0)
                } else {
                    (-1, 1)
                };
                let mut p = self.label_end[b];
                while j != 0 {
                    self.label[self.endpoint[p ^ 1]] = 0;
                    let q = self.endps_at(b, j - endp_trick as isize) ^ endp_trick ^ 1;
                    self.label[self.endpoint[q]] = 0;
                    let ep = self.endpoint[p ^ 1];
                    self.assign_label(ep, 2, p);
                    let allowed = self.endps_at(b, j - endp_trick as isize) / 2;
                    self.allow_edge[allowed] = true;
                    j += j_step;
                    p = self.endps_at(b, j - endp_trick as isize) ^ endp_trick;
                    self.allow_edge[p / 2] = true;
                    j += j_step;
                }
                let bv = self.childs_at(b, j);
                self.label[self.endpoint[p ^ 1]] = 2;
                self.label[bv] = 2;
                self.label_end[self.endpoint[p ^ 1]] = p;
                self.label_end[bv] = p;
                self.best_edge[bv] = NONE;
                j += j_step;
                while self.childs_at(b, j) != entry_child {
                    let bv = self.childs_at(b, j);
                    if self.label[bv] == 1 {
                        j += j_step;
                        continue;
                    }
                    let mut v = NONE;
                    for leaf in self.leaves(bv) {
                        v = leaf;
                        if self.label[leaf] != 0 {
                            break;
                        }
                    }
                    if v != NONE && self.label[v] != 0 {
                        assert_eq!(self.label[v], 2);
                        assert_eq!(self.in_blossom[v], bv);
                        self.label[v] = 0;
                        self.label[self.endpoint[self.mate[self.blossom_base[bv]]]] = 0;
                        let lbl_end = self.label_end[v];
                        self.assign_label(v, 2, lbl_end);
                    }
                    j += j_step;
                }
            }
            self.label[b] = 0;
            self.label_end[b] = NONE;
            self.blossom_base[b] = NONE;
            self.best_edge[b] = NONE;
            self.blossom_childs[b] = Vec::new();
            self.blossom_endps[b] = Vec::new();
            self.blossom_best_edges[b] = Vec::new();
            self.unused_blossoms.push(b);
        }

        fn childs_at(&self, b: usize, j: isize) -> usize {
            let v = &self.blossom_childs[b];
            let idx = if j >= 0 { j as usize } else { (v.len() as isize + j) as usize };
            v[idx]
        }

        fn endps_at(&self, b: usize, j: isize) -> usize {
            let v = &self.blossom_endps[b];
            let idx = if j >= 0 { j as usize } else { (v.len() as isize + j) as usize };
            v[idx]
        }

        fn augment_blossom(&mut self, b: usize, v: usize) {
            let mut t = v;
            while self.blossom_parent[t] != b {
                t = self.blossom_parent[t];
            }
            if t >= self.nvertex {
                self.augment_blossom(t, v);
            }
            let i = self.blossom_childs[b].iter().position(|&c| c == t).unwrap();
            let childs_len = self.blossom_childs[b].len() as isize;
            let mut j = i as isize;
            let (j_step, endp_trick): (isize, usize) = if i % 2 != 0 {
                j -= childs_len;
                (1, 0)
            } else {
                (-1, 1)
            };
            while j != 0 {
                j += j_step;
                let t = self.childs_at(b, j);
                let p = self.endps_at(b, j - endp_trick as isize) ^ endp_trick;
                if t >= self.nvertex {
                    self.augment_blossom(t, self.endpoint[p]);
                }
                j += j_step;
                let t = self.childs_at(b, j);
                if t >= self.nvertex {
                    self.augment_blossom(t, self.endpoint[p ^ 1]);
                }
                self.mate[self.endpoint[p]] = p ^ 1;
                self.mate[self.endpoint[p ^ 1]] = p;
            }
            self.blossom_childs[b].rotate_left(i);
            self.blossom_endps[b].rotate_left(i);
            self.blossom_base[b] = self.blossom_base[self.blossom_childs[b][0]];
            assert_eq!(self.blossom_base[b], v);
        }

        fn augment_matching(&mut self, k: usize) {
            let (v, w, _) = self.edges[k];
            for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
                loop {
                    let bs = self.in_blossom[s];
                    assert_eq!(self.label[bs], 1);
                    assert_eq!(self.label_end[bs], self.mate[self.blossom_base[bs]]);
                    if bs >= self.nvertex {
                        self.augment_blossom(bs, s);
                    }
                    self.mate[s] = p;
                    if self.label_end[bs] == NONE {
                        break;
                    }
                    let t = self.endpoint[self.label_end[bs]];
                    let bt = self.in_blossom[t];
                    assert_eq!(self.label[bt], 2);
                    assert!(self.label_end[bt] != NONE);
                    s = self.endpoint[self.label_end[bt]];
                    let j = self.endpoint[self.label_end[bt] ^ 1];
                    assert_eq!(self.blossom_base[bt], t);
                    if bt >= self.nvertex {
                        self.augment_blossom(bt, j);
                    }
                    self.mate[j] = self.label_end[bt];
                    p = self.label_end[bt] ^ 1;
                }
            }
        }

        fn solve(&mut self) -> Vec<usize> {
            for _ in 0..self.nvertex {
                self.label = vec![0; 2 * self.nvertex];
                self.best_edge = vec![NONE; 2 * self.nvertex];
                for bbe in &mut self.blossom_best_edges[self.nvertex..] {
                    bbe.clear();
                }
                self.allow_edge = vec![false; self.edges.len()];
                self.queue.clear();
                for v in 0..self.nvertex {
                    if self.mate[v] == UNMATCHED && self.label[self.in_blossom[v]] == 0 {
                        self.assign_label(v, 1, NONE);
                    }
                }
                let mut augmented = false;
                loop {
                    while let Some(v) = self.queue.pop() {
                        assert_eq!(self.label[self.in_blossom[v]], 1);
                        for p in self.neighb_end[v].clone() {
                            let k = p / 2;
                            let w = self.endpoint[p];
                            if self.in_blossom[v] == self.in_blossom[w] {
                                continue;
                            }
                            let mut k_slack = 0;
                            if !self.allow_edge[k] {
                                k_slack = self.slack(k);
                                if k_slack <= 0 {
                                    self.allow_edge[k] = true;
                                }
                            }
                            if self.allow_edge[k] {
                                if self.label[self.in_blossom[w]] == 0 {
                                    self.assign_label(w, 2, p ^ 1);
                                } else if self.label[self.in_blossom[w]] == 1 {
                                    let base = self.scan_blossom(v, w);
                                    if base != NONE {
                                        self.add_blossom(base, k);
                                    } else {
                                        self.augment_matching(k);
                                        augmented = true;
                                        break;
                                    }
                                } else if self.label[w] == 0 {
                                    assert_eq!(self.label[self.in_blossom[w]], 2);
                                    self.label[w] = 2;
                                    self.label_end[w] = p ^ 1;
                                }
                            } else if self.label[self.in_blossom[w]] == 1 {
                                let b = self.in_blossom[v];
                                if self.best_edge[b] == NONE
                                    || k_slack < self.slack(self.best_edge[b])
                                {
                                    self.best_edge[b] = k;
                                }
                            } else if self.label[w] == 0
                                && (self.best_edge[w] == NONE
                                    || k_slack < self.slack(self.best_edge[w]))
                            {
                                self.best_edge[w] = k;
                            }
                        }
                        if augmented {
                            break;
                        }
                    }
                    if augmented {
                        break;
                    }

                    // No augmenting path under the current duals: pump slack.
                    let mut delta_type = -1i8;
                    let mut delta: Weight = 0;
                    let mut delta_edge = NONE;
                    let mut delta_blossom = NONE;
                    if !self.max_cardinality {
                        delta_type = 1;
                        delta = *self.dual_var[..self.nvertex].iter().min().unwrap();
                    }
                    for v in 0..self.nvertex {
                        if self.label[self.in_blossom[v]] == 0 && self.best_edge[v] != NONE {
                            let d = self.slack(self.best_edge[v]);
                            if delta_type == -1 || d < delta {
                                delta = d;
                                delta_type = 2;
                                delta_edge = self.best_edge[v];
                            }
                        }
                    }
                    for b in 0..2 * self.nvertex {
                        if self.blossom_parent[b] == NONE
                            && self.label[b] == 1
                            && self.best_edge[b] != NONE
                        {
                            let d = self.slack(self.best_edge[b]) / 2;
                            if delta_type == -1 || d < delta {
                                delta = d;
                                delta_type = 3;
                                delta_edge = self.best_edge[b];
                            }
                        }
                    }
                    for b in self.nvertex..2 * self.nvertex {
                        if self.blossom_base[b] != NONE
                            && self.blossom_parent[b] == NONE
                            && self.label[b] == 2
                            && (delta_type == -1 || self.dual_var[b] < delta)
                        {
                            delta = self.dual_var[b];
                            delta_type = 4;
                            delta_blossom = b;
                        }
                    }
                    if delta_type == -1 {
                        assert!(self.max_cardinality);
                        delta_type = 1;
                        delta = (*self.dual_var[..self.nvertex].iter().min().unwrap()).max(0);
                    }
                    for v in 0..self.nvertex {
                        match self.label[self.in_blossom[v]] {
                            0 => {}
                            1 => self.dual_var[v] -= delta,
                            2 => self.dual_var[v] += delta,
                            _ => unreachable!(),
                        }
                    }
                    for b in self.nvertex..2 * self.nvertex {
                        if self.blossom_base[b] != NONE && self.blossom_parent[b] == NONE {
                            match self.label[b] {
                                0 => {}
                                1 => self.dual_var[b] += delta,
                                2 => self.dual_var[b] -= delta,
                                _ => unreachable!(),
                            }
                        }
                    }
                    match delta_type {
                        1 => break,
                        2 => {
                            self.allow_edge[delta_edge] = true;
                            let (mut i, j, _) = self.edges[delta_edge];
                            if self.label[self.in_blossom[i]] == 0 {
                                i = j;
                            }
                            assert_eq!(self.label[self.in_blossom[i]], 1);
                            self.queue.push(i);
                        }
                        3 => {
                            self.allow_edge[delta_edge] = true;
                            let (i, _, _) = self.edges[delta_edge];
                            assert_eq!(self.label[self.in_blossom[i]], 1);
                            self.queue.push(i);
                        }
                        4 => self.expand_blossom(delta_blossom, false),
                        _ => unreachable!(),
                    }
                }
                if !augmented {
                    break;
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossom_parent[b] == NONE
                        && self.blossom_base[b] != NONE
                        && self.label[b] == 1
                        && self.dual_var[b] == 0
                    {
                        self.expand_blossom(b, true);
                    }
                }
            }

            if cfg!(debug_assertions) {
                self.verify_optimum();
            }

            let mut mate = vec![UNMATCHED; self.nvertex];
            for v in 0..self.nvertex {
                if self.mate[v] != UNMATCHED {
                    mate[v] = self.endpoint[self.mate[v]];
                }
            }
            for v in 0..self.nvertex {
                assert!(mate[v] == UNMATCHED || mate[mate[v]] == v);
            }
            mate
        }

        /// Complementary-slackness audit of the final primal/dual pair.
        fn verify_optimum(&self) {
            let dual_offset = if self.max_cardinality {
                (-self.dual_var[..self.nvertex].iter().min().unwrap()).max(0)
            } else {
                0
            };
            for (k, &(i, j, wt)) in self.edges.iter().enumerate() {
                let mut s = self.dual_var[i] + self.dual_var[j] - 2 * wt;
                let mut i_blossoms = vec![i];
                let mut j_blossoms = vec![j];
                while self.blossom_parent[*i_blossoms.last().unwrap()] != NONE {
                    i_blossoms.push(self.blossom_parent[*i_blossoms.last().unwrap()]);
                }
                while self.blossom_parent[*j_blossoms.last().unwrap()] != NONE {
                    j_blossoms.push(self.blossom_parent[*j_blossoms.last().unwrap()]);
                }
                i_blossoms.reverse();
                j_blossoms.reverse();
                for (&bi, &bj) in i_blossoms.iter().zip(&j_blossoms) {
                    if bi != bj {
                        break;
                    }
                    s += 2 * self.dual_var[bi];
                }
                assert!(s >= 0, "negative slack on edge {k}");
                if self.mate[i] / 2 == k || self.mate[j] / 2 == k {
                    assert!(self.mate[i] / 2 == k && self.mate[j] / 2 == k);
                    assert_eq!(s, 0, "matched edge {k} has nonzero slack");
                }
            }
            for v in 0..self.nvertex {
                assert!(self.mate[v] != UNMATCHED || self.dual_var[v] + dual_offset == 0);
            }
            let _ = self.max_weight;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_c4_toric, build_toric};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node(spec: &CodeSpec, check: usize, round: usize) -> DefectNode {
        DefectNode::new(spec, check, round)
    }

    /// Check id of the octagon Z check at face (i, j).
    fn oct_z(spec: &CodeSpec, i: usize, j: usize) -> usize {
        spec.checks
            .iter()
            .position(|c| {
                c.kind == CheckKind::OctagonZ && c.coord == SiteCoord::Face { i, j }
            })
            .unwrap()
    }

    fn square_z(spec: &CodeSpec, orientation: Orientation, i: usize, j: usize) -> usize {
        spec.checks
            .iter()
            .position(|c| {
                c.kind == CheckKind::SquareZ
                    && c.coord == SiteCoord::Edge { orientation, i, j }
            })
            .unwrap()
    }

    #[test]
    fn identical_nodes_are_at_distance_zero() {
        let spec = build_c4_toric(4).unwrap();
        let a = node(&spec, oct_z(&spec, 1, 2), 0);
        assert_eq!(spatial_distance(&spec, &a, &a).unwrap(), 0);
    }

    #[test]
    fn adjacent_octagons_cost_two() {
        let spec = build_c4_toric(4).unwrap();
        let a = node(&spec, oct_z(&spec, 0, 0), 0);
        let b = node(&spec, oct_z(&spec, 1, 0), 0);
        assert_eq!(spatial_distance(&spec, &a, &b).unwrap(), 2);
        assert_eq!(spatial_distance_bfs(&spec, &a, &b).unwrap(), 2);
    }

    #[test]
    fn square_endpoint_adds_one_unit() {
        // The vertical edge v(1,0) separates faces (0,0) and (1,0); from its
        // square to the octagon at (2,0) the path is 1 + 2*1.
        let spec = build_c4_toric(4).unwrap();
        let sq = node(&spec, square_z(&spec, Orientation::Vertical, 1, 0), 0);
        let oct = node(&spec, oct_z(&spec, 2, 0), 0);
        assert_eq!(spatial_distance(&spec, &sq, &oct).unwrap(), 3);
        assert_eq!(spatial_distance_bfs(&spec, &sq, &oct).unwrap(), 3);
    }

    #[test]
    fn mixed_sublattices_rejected() {
        let spec = build_c4_toric(2).unwrap();
        let a = node(&spec, 0, 0); // SquareX -> ZErrors
        let b = node(&spec, oct_z(&spec, 0, 0), 0);
        assert!(matches!(
            spatial_distance(&spec, &a, &b),
            Err(MatchingError::MixedSublattices(_, _))
        ));
    }

    #[test]
    fn closed_form_matches_bfs_small_sizes() {
        for l in 2..=4 {
            for spec in [build_c4_toric(l).unwrap(), build_toric(l).unwrap()] {
                for sublattice in [Sublattice::XErrors, Sublattice::ZErrors] {
                    let graph = DefectGraph::build(&spec, sublattice);
                    let checks = graph.checks().to_vec();
                    for (ai, &a) in checks.iter().enumerate() {
                        for &b in &checks[ai..] {
                            let na = node(&spec, a, 0);
                            let nb = node(&spec, b, 0);
                            assert_eq!(
                                spatial_distance(&spec, &na, &nb).unwrap(),
                                graph.distance(a, b),
                                "family {:?} l={l} checks {a},{b}",
                                spec.family,
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn metric_axioms_hold_exhaustively() {
        let spec = build_c4_toric(3).unwrap();
        let graph = DefectGraph::build(&spec, Sublattice::XErrors);
        let nodes: Vec<DefectNode> = graph
            .checks()
            .iter()
            .map(|&c| node(&spec, c, 0))
            .collect();
        for a in &nodes {
            for b in &nodes {
                let dab = spatial_distance(&spec, a, b).unwrap();
                let dba = spatial_distance(&spec, b, a).unwrap();
                assert_eq!(dab, dba);
                assert_eq!(dab == 0, a.check == b.check);
                for c in &nodes {
                    let dac = spatial_distance(&spec, a, c).unwrap();
                    let dcb = spatial_distance(&spec, c, b).unwrap();
                    assert!(dab <= dac + dcb, "triangle inequality violated");
                }
            }
        }
    }

    #[test]
    fn toric_metric_is_torus_manhattan() {
        let spec = build_toric(5).unwrap();
        let graph = DefectGraph::build(&spec, Sublattice::XErrors);
        let a = node(&spec, graph.checks()[0], 0); // plaquette (0,0)
        let b = node(&spec, graph.checks()[4 * 5 + 3], 0); // plaquette (3,4)
        assert_eq!(spatial_distance(&spec, &a, &b).unwrap(), 2 + 1);
    }

    #[test]
    fn spacetime_adds_time_separation() {
        let spec = build_c4_toric(4).unwrap();
        let a = node(&spec, oct_z(&spec, 0, 0), 2);
        let b = DefectNode {
            round: 5,
            ..node(&spec, oct_z(&spec, 0, 0), 0)
        };
        assert_eq!(spacetime_distance(&spec, &a, &b, 1).unwrap(), 3);
        let c = node(&spec, oct_z(&spec, 1, 0), 3);
        assert_eq!(spacetime_distance(&spec, &a, &c, 1).unwrap(), 3);
        assert_eq!(spacetime_distance(&spec, &a, &c, 0).unwrap(), 2);
    }

    #[test]
    fn mwpm_pairs_single_pair() {
        let spec = build_c4_toric(2).unwrap();
        let nodes = vec![node(&spec, oct_z(&spec, 0, 0), 0), node(&spec, oct_z(&spec, 1, 0), 0)];
        let problem =
            MatchingProblem::from_fn(nodes, |a, b| spatial_distance(&spec, a, b).unwrap())
                .unwrap();
        assert_eq!(mwpm(&problem).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn mwpm_collinear_octagons() {
        let spec = build_c4_toric(8).unwrap();
        let nodes: Vec<DefectNode> = [0usize, 1, 4, 5]
            .iter()
            .map(|&x| node(&spec, oct_z(&spec, x, 0), 0))
            .collect();
        let problem =
            MatchingProblem::from_fn(nodes, |a, b| spatial_distance(&spec, a, b).unwrap())
                .unwrap();
        let pairs = mwpm(&problem).unwrap();
        assert_eq!(problem.total_weight(&pairs), 4);
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(sorted, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn mwpm_rejects_odd_problems() {
        let spec = build_c4_toric(2).unwrap();
        let nodes = vec![node(&spec, oct_z(&spec, 0, 0), 0)];
        assert!(matches!(
            MatchingProblem::from_fn(nodes, |_, _| 1),
            Err(MatchingError::OddNodeCount(1))
        ));
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let spec = build_c4_toric(4).unwrap();
        let graph = DefectGraph::build(&spec, Sublattice::XErrors);
        let nodes: Vec<DefectNode> = graph.checks()[..14]
            .iter()
            .map(|&c| node(&spec, c, 0))
            .collect();
        let problem = MatchingProblem::from_fn(nodes, |_, _| 1).unwrap();
        assert!(matches!(
            mwpm_bruteforce(&problem),
            Err(MatchingError::TooManyNodes(14, _))
        ));
    }

    #[test]
    fn mwpm_matches_brute_force_on_random_metric_instances() {
        let spec = build_c4_toric(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let sublattice = if trial % 2 == 0 {
                Sublattice::XErrors
            } else {
                Sublattice::ZErrors
            };
            let graph = DefectGraph::build(&spec, sublattice);
            let count = 2 * rng.random_range(1..=5);
            let nodes: Vec<DefectNode> = (0..count)
                .map(|_| {
                    let c = graph.checks()[rng.random_range(0..graph.checks().len())];
                    let round = rng.random_range(0..8);
                    node(&spec, c, round)
                })
                .collect();
            let problem = MatchingProblem::from_fn(nodes, |a, b| {
                spacetime_distance(&spec, a, b, 1).unwrap()
            })
            .unwrap();
            let exact = mwpm(&problem).unwrap();
            let brute = mwpm_bruteforce(&problem).unwrap();
            assert_eq!(
                problem.total_weight(&exact),
                problem.total_weight(&brute),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn mwpm_matches_brute_force_on_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = build_c4_toric(4).unwrap();
        let graph = DefectGraph::build(&spec, Sublattice::XErrors);
        for trial in 0..200 {
            let count = 2 * rng.random_range(1..=5);
            let nodes: Vec<DefectNode> = graph.checks()[..count]
                .iter()
                .map(|&c| node(&spec, c, 0))
                .collect();
            let mut table = std::collections::HashMap::new();
            let problem = MatchingProblem::from_fn(nodes, |a, b| {
                let key = if a.check < b.check {
                    (a.check, b.check)
                } else {
                    (b.check, a.check)
                };
                *table.entry(key).or_insert_with(|| rng.random_range(1..50))
            })
            .unwrap();
            let exact = mwpm(&problem).unwrap();
            let brute = mwpm_bruteforce(&problem).unwrap();
            assert_eq!(
                problem.total_weight(&exact),
                problem.total_weight(&brute),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn correction_chain_heals_defect_pair() {
        let spec = build_c4_toric(3).unwrap();
        let graph = DefectGraph::build(&spec, Sublattice::XErrors);
        // A single X error creates a square-octagon defect pair; the
        // synthesized chain must cancel its syndrome.
        let error = PauliOperator::from_support(spec.n, Pauli::X, &[0]);
        let syndrome = spec.syndrome(&error);
        let defects: Vec<DefectNode> = syndrome
            .iter()
            .enumerate()
            .filter(|&(c, &hit)| hit && graph.contains_check(c))
            .map(|(c, _)| node(&spec, c, 0))
            .collect();
        assert_eq!(defects.len(), 2);
        let correction = pairing_to_correction(&spec, &graph, &[(&defects[0], &defects[1])]);
        let residual = crate::pauli::multiply(&error, &correction).unwrap();
        assert!(spec.syndrome_is_trivial(&residual));
    }

    #[test]
    fn empty_pairing_gives_identity() {
        let spec = build_c4_toric(2).unwrap();
        let graph = DefectGraph::build(&spec, Sublattice::XErrors);
        assert!(pairing_to_correction(&spec, &graph, &[]).is_identity());
    }

    #[test]
    fn problem_dump_is_wellformed() {
        let spec = build_c4_toric(2).unwrap();
        let nodes = vec![node(&spec, oct_z(&spec, 0, 0), 0), node(&spec, oct_z(&spec, 1, 1), 2)];
        let problem =
            MatchingProblem::from_fn(nodes, |a, b| spacetime_distance(&spec, a, b, 1).unwrap())
                .unwrap();
        let doc = problem.dump_json();
        assert_eq!(doc["nodes"].as_array().unwrap().len(), 2);
        assert_eq!(doc["weights"][0][1], doc["weights"][1][0]);
    }
}
