//! Hypergraphs, matchings, matching covers and edge colorings.
//!
//! Edges are referred to by their index in [`Hypergraph::edges`]. A matching
//! is a list of edge indices whose vertex sets are pairwise disjoint, and a
//! [`MatchingCover`] is a list of matchings whose union is the whole edge set,
//! together with a probability for each matching.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Result};
use crate::scalar::Real;

pub type Vertex = u32;

/// Finite hypergraph with validated, duplicate-free edges.
///
/// Vertices are kept sorted; every edge is stored as a sorted vertex list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: Vec<Vertex>,
    edges: Vec<Vec<Vertex>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Vec<Vertex>>,
}

impl Hypergraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Vec<Vertex>>) -> Result<Self> {
        let vset: BTreeSet<Vertex> = vertices.iter().copied().collect();
        if vset.len() != vertices.len() {
            return Err(input_err!("duplicate vertex labels"));
        }
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, edge) in edges.into_iter().enumerate() {
            if edge.is_empty() {
                return Err(input_err!("edge {i} is empty"));
            }
            let set: BTreeSet<Vertex> = edge.iter().copied().collect();
            if set.len() != edge.len() {
                return Err(input_err!("edge {i} repeats a vertex: {edge:?}"));
            }
            if let Some(v) = set.iter().find(|v| !vset.contains(v)) {
                return Err(input_err!("edge {i} uses unknown vertex {v}"));
            }
            let sorted: Vec<Vertex> = set.into_iter().collect();
            if !seen.insert(sorted.clone()) {
                return Err(input_err!("duplicate edge {sorted:?}"));
            }
            normalized.push(sorted);
        }
        Ok(Self {
            vertices: vset.into_iter().collect(),
            edges: normalized,
        })
    }

    /// Builds a simple graph from vertex pairs; vertices are inferred.
    pub fn from_pairs(pairs: &[(Vertex, Vertex)]) -> Result<Self> {
        let vertices: BTreeSet<Vertex> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        Self::new(
            vertices.into_iter().collect(),
            pairs.iter().map(|&(a, b)| vec![a, b]).collect(),
        )
    }

    pub fn from_file(file: GraphFile) -> Result<Self> {
        Self::new(file.vertices, file.edges)
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Vec<Vertex>] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &[Vertex] {
        &self.edges[index]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// Index of `v` in the sorted vertex list.
    pub fn vertex_index(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn edge_index(&self, edge: &[Vertex]) -> Option<usize> {
        let mut key = edge.to_vec();
        key.sort_unstable();
        self.edges.iter().position(|e| *e == key)
    }

    /// Distinct vertices sharing at least one edge with `v`.
    pub fn neighbors(&self, v: Vertex) -> Result<BTreeSet<Vertex>> {
        if !self.contains_vertex(v) {
            return Err(input_err!("unknown vertex {v}"));
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| e.contains(&v))
            .flat_map(|e| e.iter().copied())
            .filter(|&u| u != v)
            .collect())
    }

    pub fn degree(&self, v: Vertex) -> Result<usize> {
        Ok(self.neighbors(v)?.len())
    }

    /// Maximum vertex degree, zero for an edgeless graph.
    pub fn max_degree(&self) -> usize {
        self.vertices
            .iter()
            .map(|&v| self.degree(v).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// True when every edge has exactly two vertices.
    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|e| e.len() == 2)
    }

    pub fn edges_adjacent(&self, a: usize, b: usize) -> bool {
        a != b && self.edges[a].iter().any(|v| self.edges[b].contains(v))
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v).unwrap_or_default() {
                if seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    fn check_edge_indices(&self, m: &[usize]) -> Result<()> {
        match m.iter().find(|&&e| e >= self.edges.len()) {
            Some(e) => Err(input_err!("edge index {e} is not an edge of the graph")),
            None => Ok(()),
        }
    }

    /// True iff the edges in `m` are pairwise disjoint.
    pub fn is_matching(&self, m: &[usize]) -> Result<bool> {
        self.check_edge_indices(m)?;
        let mut used = BTreeSet::new();
        let mut distinct = BTreeSet::new();
        for &e in m {
            if !distinct.insert(e) {
                return Ok(false);
            }
            for &v in &self.edges[e] {
                if !used.insert(v) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Vizing bounds `(Δ, Δ+1)` on the chromatic index of a simple graph.
    pub fn chromatic_index_bounds(&self) -> Result<(usize, usize)> {
        if let Some(e) = self.edges.iter().find(|e| e.len() != 2) {
            return Err(input_err!("edge {e:?} does not have exactly two vertices"));
        }
        let d = self.max_degree();
        Ok((d, d + 1))
    }

    fn bipartition(&self) -> Option<BTreeMap<Vertex, bool>> {
        let mut side = BTreeMap::new();
        for &root in &self.vertices {
            if side.contains_key(&root) {
                continue;
            }
            side.insert(root, false);
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                let sv = side[&v];
                for u in self.neighbors(v).ok()? {
                    match side.get(&u) {
                        Some(&su) if su == sv => return None,
                        Some(_) => {}
                        None => {
                            side.insert(u, !sv);
                            stack.push(u);
                        }
                    }
                }
            }
        }
        Some(side)
    }

    /// Disjoint matchings covering every edge, with uniform probabilities.
    ///
    /// Simple bipartite graphs get an optimal Δ-coloring (König), other simple
    /// graphs a Misra–Gries coloring with at most Δ+1 colors, and hypergraphs a
    /// greedy coloring of the line graph in descending line-graph degree.
    pub fn edge_coloring<T: Real>(&self) -> Result<MatchingCover<T>> {
        if self.edges.is_empty() {
            return Err(input_err!("cannot color a graph without edges"));
        }
        let colors = if self.is_simple() {
            if self.bipartition().is_some() {
                bipartite_coloring(self)
            } else {
                misra_gries(self)
            }
        } else {
            greedy_line_graph_coloring(self)
        };
        let n_colors = colors.iter().copied().max().map_or(0, |c| c + 1);
        let mut matchings = vec![Vec::new(); n_colors];
        for (e, &c) in colors.iter().enumerate() {
            matchings[c].push(e);
        }
        matchings.retain(|m| !m.is_empty());
        MatchingCover::uniform(self, matchings)
    }

    /// Edge processing order: lexicographic in the sorted vertex labels.
    fn lexicographic_edge_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| self.edges[a].cmp(&self.edges[b]));
        order
    }
}

/// Per-vertex map color -> neighbor along the edge of that color.
struct ColorTable {
    at: HashMap<Vertex, BTreeMap<usize, Vertex>>,
}

impl ColorTable {
    fn new(g: &Hypergraph) -> Self {
        Self {
            at: g.vertices.iter().map(|&v| (v, BTreeMap::new())).collect(),
        }
    }

    fn is_free(&self, v: Vertex, c: usize) -> bool {
        !self.at[&v].contains_key(&c)
    }

    fn first_free(&self, v: Vertex) -> usize {
        (0..).find(|&c| self.is_free(v, c)).unwrap()
    }

    fn color_of(&self, u: Vertex, v: Vertex) -> Option<usize> {
        self.at[&u]
            .iter()
            .find_map(|(&c, &w)| (w == v).then_some(c))
    }

    fn set(&mut self, u: Vertex, v: Vertex, c: usize) {
        self.at.get_mut(&u).unwrap().insert(c, v);
        self.at.get_mut(&v).unwrap().insert(c, u);
    }

    fn clear(&mut self, u: Vertex, v: Vertex) {
        if let Some(c) = self.color_of(u, v) {
            self.at.get_mut(&u).unwrap().remove(&c);
            self.at.get_mut(&v).unwrap().remove(&c);
        }
    }

    /// Swaps colors `a` and `b` along the maximal path that starts at `v`
    /// with an edge of color `a`.
    fn flip_path(&mut self, v: Vertex, a: usize, b: usize) {
        let mut path = Vec::new();
        let mut cur = v;
        let mut want = a;
        let mut visited = BTreeSet::from([v]);
        while let Some(&next) = self.at[&cur].get(&want) {
            path.push((cur, next, want));
            if !visited.insert(next) {
                break;
            }
            cur = next;
            want = if want == a { b } else { a };
        }
        for &(x, y, _) in &path {
            self.clear(x, y);
        }
        for &(x, y, c) in &path {
            self.set(x, y, if c == a { b } else { a });
        }
    }

    fn into_edge_colors(self, g: &Hypergraph) -> Vec<usize> {
        g.edges
            .iter()
            .map(|e| self.color_of(e[0], e[1]).expect("every edge colored"))
            .collect()
    }
}

fn bipartite_coloring(g: &Hypergraph) -> Vec<usize> {
    let mut table = ColorTable::new(g);
    for e in g.lexicographic_edge_order() {
        let (u, v) = (g.edges[e][0], g.edges[e][1]);
        let a = table.first_free(u);
        if !table.is_free(v, a) {
            // The a/b path from v never reaches u in a bipartite graph.
            let b = table.first_free(v);
            table.flip_path(v, a, b);
        }
        table.set(u, v, a);
    }
    table.into_edge_colors(g)
}

fn misra_gries(g: &Hypergraph) -> Vec<usize> {
    let mut table = ColorTable::new(g);
    for e in g.lexicographic_edge_order() {
        let (x, f0) = (g.edges[e][0], g.edges[e][1]);
        let neighbors: Vec<Vertex> = g.neighbors(x).unwrap().into_iter().collect();

        // Maximal fan of x starting at f0.
        let mut fan = vec![f0];
        loop {
            let last = *fan.last().unwrap();
            let next = neighbors.iter().copied().find(|&w| {
                !fan.contains(&w) && table.color_of(x, w).is_some_and(|c| table.is_free(last, c))
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }

        let c = table.first_free(x);
        let d = table.first_free(*fan.last().unwrap());
        if c != d {
            table.flip_path(x, d, c);
        }

        // After inversion d is free at x; find the first fan vertex with d free
        // such that the prefix is still a fan.
        let mut w_idx = 0;
        for (i, &w) in fan.iter().enumerate() {
            if i > 0 {
                let prev = fan[i - 1];
                let still_fan = table
                    .color_of(x, w)
                    .is_some_and(|col| table.is_free(prev, col));
                if !still_fan {
                    break;
                }
            }
            if table.is_free(w, d) {
                w_idx = i;
                break;
            }
        }

        // Rotate the fan prefix [f0 .. w].
        for i in 0..w_idx {
            let next_color = table.color_of(x, fan[i + 1]).unwrap();
            table.clear(x, fan[i + 1]);
            table.set(x, fan[i], next_color);
        }
        table.set(x, fan[w_idx], d);
    }
    table.into_edge_colors(g)
}

fn greedy_line_graph_coloring(g: &Hypergraph) -> Vec<usize> {
    let m = g.edge_count();
    let adj: Vec<Vec<usize>> = (0..m)
        .map(|a| (0..m).filter(|&b| g.edges_adjacent(a, b)).collect())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        adj[b]
            .len()
            .cmp(&adj[a].len())
            .then_with(|| g.edges[a].cmp(&g.edges[b]))
    });
    let mut colors: Vec<Option<usize>> = vec![None; m];
    for e in order {
        let used: BTreeSet<usize> = adj[e].iter().filter_map(|&f| colors[f]).collect();
        colors[e] = Some((0..).find(|c| !used.contains(c)).unwrap());
    }
    colors.into_iter().map(Option::unwrap).collect()
}

/// Matchings covering the edge set, each drawn with the attached probability.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchingCover<T> {
    matchings: Vec<Vec<usize>>,
    probabilities: Vec<T>,
}

impl<T: Real> MatchingCover<T> {
    pub fn new(g: &Hypergraph, matchings: Vec<Vec<usize>>, probabilities: Vec<T>) -> Result<Self> {
        if matchings.is_empty() {
            return Err(input_err!("a matching cover needs at least one matching"));
        }
        if matchings.len() != probabilities.len() {
            return Err(input_err!(
                "{} matchings but {} probabilities",
                matchings.len(),
                probabilities.len()
            ));
        }
        for (l, m) in matchings.iter().enumerate() {
            if !g.is_matching(m)? {
                return Err(input_err!("member {l} is not a matching: {m:?}"));
            }
        }
        let covered: BTreeSet<usize> = matchings.iter().flatten().copied().collect();
        if covered.len() != g.edge_count() {
            let missing: Vec<usize> = (0..g.edge_count())
                .filter(|e| !covered.contains(e))
                .collect();
            return Err(input_err!("matchings miss edges {missing:?}"));
        }
        if probabilities.iter().any(|&p| p < T::zero()) {
            return Err(input_err!("negative matching probability"));
        }
        let total = probabilities.iter().fold(T::zero(), |a, &b| a + b);
        if (total - T::one()).abs() > T::tol(1e-12) {
            return Err(input_err!("probabilities sum to {}, not 1", total.as_f64()));
        }
        Ok(Self {
            matchings,
            probabilities,
        })
    }

    pub fn uniform(g: &Hypergraph, matchings: Vec<Vec<usize>>) -> Result<Self> {
        let m = matchings.len().max(1);
        let p = T::one() / T::from_count(m);
        let probs = vec![p; matchings.len()];
        Self::new(g, matchings, probs)
    }

    /// Probabilities proportional to matching sizes, `p_l = |M_l| / Σ|M_k|`.
    pub fn proportional(g: &Hypergraph, matchings: Vec<Vec<usize>>) -> Result<Self> {
        let total: usize = matchings.iter().map(Vec::len).sum();
        if total == 0 {
            return Err(input_err!("all matchings are empty"));
        }
        let probs = matchings
            .iter()
            .map(|m| T::from_count(m.len()) / T::from_count(total))
            .collect();
        Self::new(g, matchings, probs)
    }

    /// The trivial coloring: one matching per edge, uniform probabilities.
    pub fn trivial(g: &Hypergraph) -> Result<Self> {
        Self::uniform(g, (0..g.edge_count()).map(|e| vec![e]).collect())
    }

    pub fn matchings(&self) -> &[Vec<usize>] {
        &self.matchings
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn with_probabilities(&self, g: &Hypergraph, probabilities: Vec<T>) -> Result<Self> {
        Self::new(g, self.matchings.clone(), probabilities)
    }

    /// Same matchings with probabilities proportional to their sizes.
    pub fn to_proportional(&self, g: &Hypergraph) -> Result<Self> {
        Self::proportional(g, self.matchings.clone())
    }

    pub fn to_uniform(&self, g: &Hypergraph) -> Result<Self> {
        Self::uniform(g, self.matchings.clone())
    }

    /// True when the members are pairwise disjoint (an edge coloring).
    pub fn is_coloring(&self) -> bool {
        let total: usize = self.matchings.iter().map(Vec::len).sum();
        let distinct: BTreeSet<usize> = self.matchings.iter().flatten().copied().collect();
        total == distinct.len()
    }

    pub fn is_uniform(&self) -> bool {
        let p = T::one() / T::from_count(self.len());
        self.probabilities
            .iter()
            .all(|&q| (q - p).abs() <= T::tol(1e-12))
    }

    /// True when `p_l = |M_l| / |E|` for a coloring.
    pub fn is_proportional(&self, g: &Hypergraph) -> bool {
        let e = T::from_count(g.edge_count());
        self.matchings
            .iter()
            .zip(&self.probabilities)
            .all(|(m, &p)| (p - T::from_count(m.len()) / e).abs() <= T::tol(1e-12))
    }

    /// Removes repeated edges left to right, giving a cover of the same
    /// length whose members are pairwise disjoint and contained in the
    /// originals. Probabilities are kept; members may become empty.
    pub fn disjointify(&self, g: &Hypergraph) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let matchings: Vec<Vec<usize>> = self
            .matchings
            .iter()
            .map(|m| m.iter().copied().filter(|&e| seen.insert(e)).collect())
            .collect();
        Self::new(g, matchings, self.probabilities.clone())
    }
}

/// Built-in graph generators.
pub mod generators {
    use super::*;

    /// Chain on vertices `0..n`; closed chains need `n >= 3`.
    pub fn chain(n: usize, closed: bool) -> Result<Hypergraph> {
        if n < 2 {
            return Err(input_err!("a chain needs at least 2 vertices"));
        }
        if closed && n < 3 {
            return Err(input_err!("a closed chain needs at least 3 vertices"));
        }
        let mut pairs: Vec<(Vertex, Vertex)> =
            (0..n - 1).map(|i| (i as Vertex, i as Vertex + 1)).collect();
        if closed {
            pairs.push((0, n as Vertex - 1));
        }
        Hypergraph::from_pairs(&pairs)
    }

    fn lattice(
        width: usize,
        height: usize,
        periodic: (bool, bool),
        vertical: impl Fn(usize, usize) -> bool,
    ) -> Result<Hypergraph> {
        let id = |x: usize, y: usize| (y * width + x) as Vertex;
        let mut edges = BTreeSet::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width || (periodic.0 && width > 2) {
                    let (a, b) = (id(x, y), id((x + 1) % width, y));
                    edges.insert((a.min(b), a.max(b)));
                }
                if vertical(x, y) && (y + 1 < height || (periodic.1 && height > 2)) {
                    let (a, b) = (id(x, y), id(x, (y + 1) % height));
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
        let vertices = (0..(width * height) as Vertex).collect();
        Hypergraph::new(
            vertices,
            edges.into_iter().map(|(a, b)| vec![a, b]).collect(),
        )
    }

    /// Square-lattice patch of `width × height` sites.
    pub fn square(width: usize, height: usize, periodic: (bool, bool)) -> Result<Hypergraph> {
        if width == 0 || height == 0 || width * height < 2 {
            return Err(input_err!("square patch needs at least two sites"));
        }
        lattice(width, height, periodic, |_, _| true)
    }

    /// Honeycomb patch in brick-wall form: rows of `width` sites, vertical
    /// rungs where `x + y` is even. Periodic directions need even lengths.
    pub fn honeycomb(width: usize, height: usize, periodic: (bool, bool)) -> Result<Hypergraph> {
        if width == 0 || height == 0 || width * height < 2 {
            return Err(input_err!("honeycomb patch needs at least two sites"));
        }
        if (periodic.0 && !width.is_multiple_of(2)) || (periodic.1 && !height.is_multiple_of(2)) {
            return Err(input_err!(
                "periodic honeycomb directions need even lengths"
            ));
        }
        lattice(width, height, periodic, |x, y| (x + y) % 2 == 0)
    }

    pub fn complete(n: usize) -> Result<Hypergraph> {
        if n < 2 {
            return Err(input_err!("complete graph needs at least 2 vertices"));
        }
        let mut pairs = Vec::new();
        for a in 0..n as Vertex {
            for b in a + 1..n as Vertex {
                pairs.push((a, b));
            }
        }
        Hypergraph::from_pairs(&pairs)
    }
}
