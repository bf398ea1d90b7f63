//! Van Kampen diagrams as combinatorial maps.
//!
//! Edge `e` owns half-edges `2e` (tail to head, carrying the edge label) and
//! `2e + 1` (head to tail, carrying the inverse label). Each vertex stores its
//! outgoing half-edges in anticlockwise order. Faces are traversed with the
//! face on the left, so the face successor of `h` is the clockwise neighbour
//! of `twin(h)`. The boundary walk keeps the diagram on its left and reads the
//! boundary word from the base vertex ⋆.

mod construct;
mod shelling;

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, UNREACHABLE};
use crate::presentation::{CayleyBall, Presentation};
use crate::words::{Alphabet, Letter, Word};

pub use construct::{cellular_form, sequence_to_diagram};
pub use shelling::{
    boundary_lengths, diagram_to_sequence, shell_along_trees, shell_fl, ExactCaps, ShellMode, ShellMove, ShellMoves, ShellOutcome,
    Shelling,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("malformed rotation system: {0}")]
    Rotation(String),
    #[error("the 1-skeleton is not connected")]
    NotConnected,
    #[error("Euler characteristic {v} - {e} + {f} is not 2")]
    Euler { v: usize, e: usize, f: usize },
    #[error("base half-edge does not leave the base vertex on the boundary")]
    BadBase,
    #[error("cannot recover a rotation at vertex {0} from the face list")]
    Ambiguous(usize),
    #[error("edge set is not a spanning tree")]
    NotSpanning,
    #[error("{count:?} spanning trees exceed the cap of {cap}")]
    TooManyTrees { count: Option<u128>, cap: u128 },
    #[error("{faces} faces / {edges} edges exceed the exact shelling caps")]
    TooManyCells { faces: usize, edges: usize },
    #[error("shelling search stopped after {0} states")]
    StateCap(usize),
    #[error("ball of radius {radius} is too small; need {needed}")]
    BallTooSmall { radius: usize, needed: usize },
    #[error("edge labels are inconsistent with the group")]
    Labels,
    #[error("invalid null-sequence: {0}")]
    InvalidSequence(String),
    #[error("shelling move {step} is illegal: {reason}")]
    InvalidShelling { step: usize, reason: String },
    #[error("cannot parse diagram text: {0}")]
    Parse(String),
}

#[inline]
pub fn twin(h: usize) -> usize {
    h ^ 1
}

#[inline]
pub fn edge_of(h: usize) -> usize {
    h / 2
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    origin: Vec<usize>,
    label: Vec<Letter>,
    rot: Vec<Vec<usize>>,
    pos: Vec<usize>,
    star: usize,
    base: Option<usize>,
    face_of: Vec<Option<usize>>,
    faces: Vec<Vec<usize>>,
}

/// The four combinatorial measurements of a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measures {
    pub area: usize,
    pub idiam: usize,
    pub rad: usize,
    pub gl: usize,
}

/// The dual 1-skeleton: one vertex per interior face plus `outer`, and one
/// edge per edge of the diagram (same indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualGraph {
    pub graph: Graph,
    pub outer: usize,
}

/// A spanning tree of the 1-skeleton and the dual tree formed by the duals of
/// the remaining edges. Both are lists of edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePair {
    pub tree: Vec<usize>,
    pub dual_tree: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DglMode {
    Exact { max_trees: u128 },
    Heuristic,
}

impl DglMode {
    pub const DEFAULT_MAX_TREES: u128 = 200_000;

    pub fn exact() -> DglMode {
        DglMode::Exact { max_trees: Self::DEFAULT_MAX_TREES }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dgl {
    pub value: usize,
    pub pair: TreePair,
    /// False when the value is only an upper bound.
    pub exact: bool,
}

impl Diagram {
    /// Builds a diagram from edges `(tail, head, label)` and anticlockwise
    /// rotations of outgoing half-edges. `base` is the first half-edge of the
    /// boundary walk; `None` only for the one-vertex diagram.
    pub fn from_rotation(
        edges: &[(usize, usize, Letter)],
        rot: Vec<Vec<usize>>,
        star: usize,
        base: Option<usize>,
    ) -> Result<Diagram, DiagramError> {
        let bad = |m: String| Err(DiagramError::Rotation(m));
        let n = rot.len();
        let hcount = 2 * edges.len();
        let mut origin = Vec::with_capacity(hcount);
        let mut label = Vec::with_capacity(hcount);
        for &(u, v, l) in edges {
            if u >= n || v >= n {
                return bad(format!("edge endpoint {} out of range", u.max(v)));
            }
            origin.extend([u, v]);
            label.extend([l, l.inverse()]);
        }
        let mut pos = vec![usize::MAX; hcount];
        for (v, hs) in rot.iter().enumerate() {
            for (i, &h) in hs.iter().enumerate() {
                if h >= hcount || origin[h] != v || pos[h] != usize::MAX {
                    return bad(format!("half-edge {h} misplaced at vertex {v}"));
                }
                pos[h] = i;
            }
        }
        if let Some(h) = pos.iter().position(|&p| p == usize::MAX) {
            return bad(format!("half-edge {h} missing from its rotation"));
        }
        if star >= n {
            return bad(format!("base vertex {star} out of range"));
        }
        match base {
            None if hcount > 0 => return Err(DiagramError::BadBase),
            Some(b) if b >= hcount || origin[b] != star => return Err(DiagramError::BadBase),
            _ => {}
        }
        let mut d = Diagram { origin, label, rot, pos, star, base, face_of: vec![None; hcount], faces: Vec::new() };
        let skeleton = d.skeleton();
        if !skeleton.is_connected() {
            return Err(DiagramError::NotConnected);
        }
        let mut seen = vec![false; hcount];
        let mut cycles = Vec::new();
        for h in 0..hcount {
            if seen[h] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut x = h;
            while !seen[x] {
                seen[x] = true;
                cyc.push(x);
                x = d.next_in_face(x);
            }
            cycles.push(cyc);
        }
        let f = cycles.len().max(1);
        if n + f != edges.len() + 2 {
            return Err(DiagramError::Euler { v: n, e: edges.len(), f });
        }
        if let Some(b) = base {
            let outer = twin(b);
            cycles.retain(|c| !c.contains(&outer));
        }
        for c in &mut cycles {
            let m = c.iter().enumerate().min_by_key(|&(_, &h)| h).map(|(i, _)| i).unwrap_or(0);
            c.rotate_left(m);
        }
        cycles.sort();
        for (i, c) in cycles.iter().enumerate() {
            for &h in c {
                d.face_of[h] = Some(i);
            }
        }
        d.faces = cycles;
        Ok(d)
    }

    /// Builds a diagram from its interior faces, each a cycle of half-edges
    /// with the face on the left. Every vertex must have at most one corner
    /// on the outer face, which fixes the rotations. The boundary walk starts
    /// at ⋆ = `star`, through the least boundary half-edge leaving it.
    pub fn from_faces(
        vertex_count: usize,
        edges: &[(usize, usize, Letter)],
        faces: &[Vec<usize>],
        star: usize,
    ) -> Result<Diagram, DiagramError> {
        let hcount = 2 * edges.len();
        let origin_of = |h: usize| if h % 2 == 0 { edges[h / 2].0 } else { edges[h / 2].1 };
        let mut succ = vec![usize::MAX; hcount];
        let mut has_pred = vec![false; hcount];
        for f in faces {
            for (i, &h) in f.iter().enumerate() {
                let next = f[(i + 1) % f.len()];
                if h >= hcount || next >= hcount || origin_of(next) != origin_of(twin(h)) {
                    return Err(DiagramError::Rotation(format!("face cycle breaks at half-edge {h}")));
                }
                if succ[next] != usize::MAX || has_pred[twin(h)] {
                    return Err(DiagramError::Rotation(format!("half-edge {next} used twice")));
                }
                succ[next] = twin(h);
                has_pred[twin(h)] = true;
            }
        }
        let mut at: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for h in 0..hcount {
            at[origin_of(h)].push(h);
        }
        let mut rot = Vec::with_capacity(vertex_count);
        for (v, hs) in at.iter().enumerate() {
            if hs.is_empty() {
                rot.push(Vec::new());
                continue;
            }
            let heads: Vec<usize> = hs.iter().copied().filter(|&h| !has_pred[h]).collect();
            let start = match heads.as_slice() {
                [] => hs[0],
                [h] => *h,
                _ => return Err(DiagramError::Ambiguous(v)),
            };
            let mut order = vec![start];
            let mut x = start;
            while succ[x] != usize::MAX && succ[x] != start {
                x = succ[x];
                order.push(x);
            }
            if order.len() != hs.len() {
                return Err(DiagramError::Ambiguous(v));
            }
            rot.push(order);
        }
        let face_set: std::collections::HashSet<usize> = faces.iter().flatten().copied().collect();
        // A boundary half-edge leaving ⋆ has an outer-face half-edge as twin.
        let base = (0..hcount).filter(|&h| origin_of(h) == star && !face_set.contains(&twin(h))).min();
        let base = match (hcount, base) {
            (0, _) => None,
            (_, Some(b)) => Some(b),
            (_, None) => return Err(DiagramError::BadBase),
        };
        let d = Diagram::from_rotation(edges, rot, star, base)?;
        if d.faces.len() != faces.len() {
            return Err(DiagramError::BadBase);
        }
        Ok(d)
    }

    /// The one-vertex diagram.
    pub fn vertex() -> Diagram {
        Diagram::from_rotation(&[], vec![Vec::new()], 0, None).expect("valid")
    }

    /// A single edge from ⋆, boundary word `l l⁻¹`.
    pub fn edge(l: Letter) -> Diagram {
        Diagram::from_rotation(&[(0, 1, l)], vec![vec![0], vec![1]], 0, Some(0)).expect("valid")
    }

    /// One face whose boundary reads `w` anticlockwise from ⋆.
    pub fn polygon(w: &Word) -> Result<Diagram, DiagramError> {
        let n = w.len();
        if n == 0 {
            return Ok(Diagram::vertex());
        }
        let edges: Vec<_> = w.letters().iter().enumerate().map(|(i, &l)| (i, (i + 1) % n, l)).collect();
        let face: Vec<usize> = (0..n).map(|i| 2 * i).collect();
        Diagram::from_faces(n, &edges, &[face], 0)
    }

    /// A `rows × cols` grid of squares with horizontal edges labelled by the
    /// first generator, vertical edges by the second and ⋆ at the lower left.
    /// The boundary word is `[a^cols, b^rows]`.
    pub fn grid(rows: usize, cols: usize) -> Diagram {
        if rows == 0 || cols == 0 {
            return Diagram::vertex();
        }
        let id = |i: usize, j: usize| i * (cols + 1) + j;
        let (a, b) = (Letter::gen(0), Letter::gen(1));
        let mut edges = Vec::new();
        let mut horiz = vec![vec![0; cols]; rows + 1];
        let mut vert = vec![vec![0; cols + 1]; rows];
        for i in 0..=rows {
            for j in 0..=cols {
                if j < cols {
                    horiz[i][j] = edges.len();
                    edges.push((id(i, j), id(i, j + 1), a));
                }
                if i < rows {
                    vert[i][j] = edges.len();
                    edges.push((id(i, j), id(i + 1, j), b));
                }
            }
        }
        let mut faces = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                faces.push(vec![
                    2 * horiz[i][j],
                    2 * vert[i][j + 1],
                    2 * horiz[i + 1][j] + 1,
                    2 * vert[i][j] + 1,
                ]);
            }
        }
        Diagram::from_faces((rows + 1) * (cols + 1), &edges, &faces, 0).expect("grids are discs")
    }

    pub fn vertex_count(&self) -> usize {
        self.rot.len()
    }

    pub fn edge_count(&self) -> usize {
        self.origin.len() / 2
    }

    pub fn half_edge_count(&self) -> usize {
        self.origin.len()
    }

    pub fn star(&self) -> usize {
        self.star
    }

    pub fn base(&self) -> Option<usize> {
        self.base
    }

    pub fn origin(&self, h: usize) -> usize {
        self.origin[h]
    }

    pub fn dest(&self, h: usize) -> usize {
        self.origin[twin(h)]
    }

    pub fn label(&self, h: usize) -> Letter {
        self.label[h]
    }

    /// `(tail, head, label)` of edge `e`.
    pub fn edge_data(&self, e: usize) -> (usize, usize, Letter) {
        (self.origin[2 * e], self.origin[2 * e + 1], self.label[2 * e])
    }

    pub fn rotation(&self, v: usize) -> &[usize] {
        &self.rot[v]
    }

    pub fn rot_ccw(&self, h: usize) -> usize {
        let r = &self.rot[self.origin[h]];
        r[(self.pos[h] + 1) % r.len()]
    }

    pub fn rot_cw(&self, h: usize) -> usize {
        let r = &self.rot[self.origin[h]];
        r[(self.pos[h] + r.len() - 1) % r.len()]
    }

    /// Successor of `h` around the face on its left.
    pub fn next_in_face(&self, h: usize) -> usize {
        self.rot_cw(twin(h))
    }

    /// Interior face on the left of `h`, or `None` for the outer face.
    pub fn face_of(&self, h: usize) -> Option<usize> {
        self.face_of[h]
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn area(&self) -> usize {
        self.faces.len()
    }

    /// Boundary word of face `f` read from its least half-edge.
    pub fn face_word(&self, f: usize) -> Word {
        self.faces[f].iter().map(|&h| self.label[h]).collect()
    }

    /// The boundary walk from ⋆ with the diagram on the left; arcs appear
    /// once in each direction.
    pub fn boundary_walk(&self) -> Vec<usize> {
        let Some(b) = self.base else { return Vec::new() };
        let mut walk = vec![b];
        let mut h = self.rot_ccw(twin(b));
        while h != b {
            walk.push(h);
            h = self.rot_ccw(twin(h));
        }
        walk
    }

    pub fn boundary_word(&self) -> Word {
        self.boundary_walk().into_iter().map(|h| self.label[h]).collect()
    }

    /// True if every face reads a word of the relator closure.
    pub fn check(&self, p: &Presentation) -> bool {
        let closure = p.relator_closure();
        (0..self.faces.len()).all(|f| closure.contains(&self.face_word(f)))
    }

    pub fn skeleton(&self) -> Graph {
        Graph::new(self.vertex_count(), (0..self.edge_count()).map(|e| (self.origin[2 * e], self.origin[2 * e + 1])).collect())
    }

    pub fn dual(&self) -> DualGraph {
        let outer = self.faces.len();
        let side = |h: usize| self.face_of[h].unwrap_or(outer);
        let edges = (0..self.edge_count()).map(|e| (side(2 * e), side(2 * e + 1))).collect();
        DualGraph { graph: Graph::new(outer + 1, edges), outer }
    }

    pub fn measure(&self) -> Measures {
        let skeleton = self.skeleton();
        let idiam = skeleton.diameter().expect("diagrams are connected");
        let gl = self.dual().graph.diameter().expect("duals are connected");
        let mut d = vec![UNREACHABLE; self.vertex_count()];
        let mut queue = VecDeque::new();
        let walk = self.boundary_walk();
        let sources = if walk.is_empty() { vec![self.star] } else { walk.iter().map(|&h| self.origin[h]).collect() };
        for v in sources {
            if d[v] == UNREACHABLE {
                d[v] = 0;
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &(w, _) in skeleton.neighbours(u) {
                if d[w] == UNREACHABLE {
                    d[w] = d[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        let rad = d.into_iter().max().unwrap_or(0);
        Measures { area: self.area(), idiam, rad, gl }
    }

    /// Group element of every vertex, as a vertex of `ball`, found by reading
    /// edge labels outward from ⋆ = 1.
    pub fn vertex_elements(&self, ball: &CayleyBall) -> Result<Vec<usize>, DiagramError> {
        let mut elt = vec![usize::MAX; self.vertex_count()];
        elt[self.star] = 0;
        let mut queue = VecDeque::from([self.star]);
        while let Some(u) = queue.pop_front() {
            for &h in &self.rot[u] {
                let v = self.dest(h);
                let here = ball.step(elt[u], self.label[h]).ok_or(DiagramError::BallTooSmall {
                    radius: ball.radius(),
                    needed: ball.radius() + 1,
                })?;
                if elt[v] == usize::MAX {
                    elt[v] = here;
                    queue.push_back(v);
                } else if elt[v] != here {
                    return Err(DiagramError::Labels);
                }
            }
        }
        Ok(elt)
    }

    /// Extrinsic diameter: the largest word-metric distance between the group
    /// elements at two vertices. In-ball distances are exact when the ball
    /// radius is at least ⌊3·IDiam/2⌋.
    pub fn ediam(&self, ball: &CayleyBall) -> Result<usize, DiagramError> {
        let idiam = self.measure().idiam;
        let needed = idiam + idiam / 2;
        if ball.radius() < needed {
            return Err(DiagramError::BallTooSmall { radius: ball.radius(), needed });
        }
        let mut elts = self.vertex_elements(ball)?;
        elts.sort_unstable();
        elts.dedup();
        let mut best = 0;
        for &g in &elts {
            let d = ball.distances_from(g);
            best = elts.iter().map(|&h| d[h]).fold(best, usize::max);
        }
        Ok(best)
    }

    /// Pairs a spanning tree of the 1-skeleton with its dual tree.
    pub fn tree_pair(&self, tree: &[usize]) -> Result<TreePair, DiagramError> {
        let mut tree = tree.to_vec();
        tree.sort_unstable();
        tree.dedup();
        if !self.skeleton().is_spanning_tree(&tree) {
            return Err(DiagramError::NotSpanning);
        }
        let dual_tree: Vec<usize> = (0..self.edge_count()).filter(|e| tree.binary_search(e).is_err()).collect();
        assert!(self.dual().graph.is_spanning_tree(&dual_tree), "the complement of a spanning tree is dual to a spanning tree");
        Ok(TreePair { tree, dual_tree })
    }

    /// Diam(T) + Diam(T*).
    pub fn tree_pair_cost(&self, pair: &TreePair) -> usize {
        self.skeleton().tree_diameter(&pair.tree) + self.dual().graph.tree_diameter(&pair.dual_tree)
    }

    /// Minimum of Diam(T) + Diam(T*) over spanning trees T. Ties go to the
    /// lexicographically least edge set.
    pub fn dgl(&self, mode: DglMode) -> Result<Dgl, DiagramError> {
        let skeleton = self.skeleton();
        let dual = self.dual().graph;
        let cost = |t: &[usize]| {
            let dual_tree: Vec<usize> = (0..self.edge_count()).filter(|e| t.binary_search(e).is_err()).collect();
            (skeleton.tree_diameter(t) + dual.tree_diameter(&dual_tree), dual_tree)
        };
        match mode {
            DglMode::Exact { max_trees } => {
                let count = skeleton.spanning_tree_count();
                if count.map_or(true, |c| c > max_trees) {
                    return Err(DiagramError::TooManyTrees { count, cap: max_trees });
                }
                let mut best: Option<(usize, Vec<usize>, Vec<usize>)> = None;
                skeleton.for_each_spanning_tree(|t| {
                    let (c, dual_tree) = cost(t);
                    if best.as_ref().map_or(true, |b| c < b.0) {
                        best = Some((c, t.to_vec(), dual_tree));
                    }
                    true
                });
                let (value, tree, dual_tree) = best.expect("connected graphs have spanning trees");
                Ok(Dgl { value, pair: TreePair { tree, dual_tree }, exact: true })
            }
            DglMode::Heuristic => {
                let mut best: Option<(usize, Vec<usize>)> = None;
                // Seeds: BFS trees of the skeleton, and complements of BFS
                // trees of the dual.
                let primal = (0..self.vertex_count()).map(|r| skeleton.geodesic_spanning_tree(r));
                let dual_seeds = (0..dual.vertex_count()).map(|r| {
                    let d = dual.geodesic_spanning_tree(r);
                    (0..self.edge_count()).filter(|e| d.binary_search(e).is_err()).collect::<Vec<usize>>()
                });
                for t in primal.chain(dual_seeds) {
                    let c = cost(&t).0;
                    if best.as_ref().map_or(true, |b| (c, &t) < (b.0, &b.1)) {
                        best = Some((c, t));
                    }
                }
                let (mut value, mut tree) = best.expect("at least one vertex");
                // Edge-swap descent: add a non-tree edge, drop an edge of the
                // cycle it closes.
                'improve: loop {
                    for f in 0..self.edge_count() {
                        if tree.binary_search(&f).is_ok() {
                            continue;
                        }
                        let (u, v) = skeleton.edge(f);
                        if u == v {
                            continue;
                        }
                        for e in tree_path(&skeleton, &tree, u, v) {
                            let mut t: Vec<usize> = tree.iter().copied().filter(|&x| x != e).collect();
                            t.push(f);
                            t.sort_unstable();
                            let c = cost(&t).0;
                            if c < value {
                                value = c;
                                tree = t;
                                continue 'improve;
                            }
                        }
                    }
                    break;
                }
                let dual_tree = cost(&tree).1;
                Ok(Dgl { value, pair: TreePair { tree, dual_tree }, exact: false })
            }
        }
    }

    /// Text form: counts, base data, edges, rotations and faces, one record
    /// per line.
    pub fn to_text(&self, a: &Alphabet) -> String {
        let mut out = String::new();
        writeln!(out, "vertices {}", self.vertex_count()).unwrap();
        writeln!(out, "star {}", self.star).unwrap();
        match self.base {
            Some(b) => writeln!(out, "base {b}").unwrap(),
            None => writeln!(out, "base -").unwrap(),
        }
        for e in 0..self.edge_count() {
            let (u, v, l) = self.edge_data(e);
            writeln!(out, "edge {u} {v} {}", a.letter_char(l)).unwrap();
        }
        for (v, r) in self.rot.iter().enumerate() {
            let hs: Vec<String> = r.iter().map(|h| h.to_string()).collect();
            writeln!(out, "rot {v}: {}", hs.join(" ")).unwrap();
        }
        for f in &self.faces {
            let hs: Vec<String> = f.iter().map(|h| h.to_string()).collect();
            writeln!(out, "face {}", hs.join(" ")).unwrap();
        }
        out
    }

    pub fn parse_text(text: &str, a: &Alphabet) -> Result<Diagram, DiagramError> {
        let err = |l: &str| DiagramError::Parse(l.to_string());
        let num = |s: &str, l: &str| s.parse::<usize>().map_err(|_| err(l));
        let mut vertices = None;
        let mut star = 0;
        let mut base = None;
        let mut edges = Vec::new();
        let mut rot: Vec<Vec<usize>> = Vec::new();
        let mut faces = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, rest) = line.split_once(' ').ok_or_else(|| err(line))?;
            match key {
                "vertices" => {
                    let n = num(rest.trim(), line)?;
                    vertices = Some(n);
                    rot = vec![Vec::new(); n];
                }
                "star" => star = num(rest.trim(), line)?,
                "base" => base = if rest.trim() == "-" { None } else { Some(num(rest.trim(), line)?) },
                "edge" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let [u, v, l] = parts.as_slice() else { return Err(err(line)) };
                    let mut cs = l.chars();
                    let l = match (cs.next(), cs.next()) {
                        (Some(c), None) => a.parse_letter(c).ok_or_else(|| err(line))?,
                        _ => return Err(err(line)),
                    };
                    edges.push((num(u, line)?, num(v, line)?, l));
                }
                "rot" => {
                    let (v, hs) = rest.split_once(':').ok_or_else(|| err(line))?;
                    let v = num(v.trim(), line)?;
                    let slot = rot.get_mut(v).ok_or_else(|| err(line))?;
                    *slot = hs.split_whitespace().map(|h| num(h, line)).collect::<Result<_, _>>()?;
                }
                "face" => faces.push(rest.split_whitespace().map(|h| num(h, line)).collect::<Result<Vec<_>, _>>()?),
                _ => return Err(err(line)),
            }
        }
        if vertices.is_none() {
            return Err(err("missing `vertices` line"));
        }
        let d = Diagram::from_rotation(&edges, rot, star, base)?;
        if !faces.is_empty() && faces != d.faces {
            return Err(err("face list disagrees with the rotation system"));
        }
        Ok(d)
    }
}

/// Edges on the tree path between `u` and `v`.
fn tree_path(g: &Graph, tree: &[usize], u: usize, v: usize) -> Vec<usize> {
    let mut parent = vec![None; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    seen[u] = true;
    let mut queue = VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        for &(y, e) in g.neighbours(x) {
            if !seen[y] && tree.binary_search(&e).is_ok() {
                seen[y] = true;
                parent[y] = Some((x, e));
                queue.push_back(y);
            }
        }
    }
    let mut path = Vec::new();
    let mut x = v;
    while let Some((p, e)) = parent[x] {
        path.push(e);
        x = p;
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::WordOracle;

    fn z2() -> Presentation {
        Presentation::free_abelian(2)
    }

    #[test]
    fn boundary_words() {
        let p = z2();
        assert_eq!(p.render(&Diagram::grid(1, 1).boundary_word()), "abAB");
        assert_eq!(p.render(&Diagram::edge(Letter::gen(0)).boundary_word()), "aA");
        assert!(Diagram::vertex().boundary_word().is_empty());
        assert_eq!(p.render(&Diagram::grid(2, 2).boundary_word()), "aabbAABB");
        let w = p.parse_word("abAB").unwrap();
        assert_eq!(Diagram::polygon(&w).unwrap().boundary_word(), w);
    }

    #[test]
    fn check_against_presentations() {
        let square = Diagram::grid(1, 1);
        assert!(square.check(&z2()));
        assert!(!square.check(&Presentation::free(2)));
        assert!(Diagram::vertex().check(&Presentation::free(1)));
    }

    #[test]
    fn measures() {
        assert_eq!(Diagram::grid(1, 1).measure(), Measures { area: 1, idiam: 2, rad: 0, gl: 1 });
        assert_eq!(Diagram::grid(2, 2).measure(), Measures { area: 4, idiam: 4, rad: 1, gl: 2 });
        assert_eq!(Diagram::vertex().measure(), Measures { area: 0, idiam: 0, rad: 0, gl: 0 });
        for d in [Diagram::grid(1, 1), Diagram::grid(2, 3), Diagram::edge(Letter::gen(0))] {
            let v = d.vertex_count() as i64;
            let e = d.edge_count() as i64;
            assert_eq!(v - e + d.area() as i64 + 1, 2);
        }
    }

    #[test]
    fn extrinsic_diameter() {
        let p = z2();
        let o = WordOracle::default_for(&p);
        let ball = CayleyBall::build(&o, 6).unwrap();
        assert_eq!(Diagram::grid(1, 1).ediam(&ball).unwrap(), 2);
        assert_eq!(Diagram::vertex().ediam(&ball).unwrap(), 0);
        let small = CayleyBall::build(&o, 1).unwrap();
        assert!(matches!(Diagram::grid(1, 1).ediam(&small), Err(DiagramError::BallTooSmall { .. })));

        let f2 = Presentation::free(2);
        let of = WordOracle::default_for(&f2);
        let fball = CayleyBall::build(&of, 6).unwrap();
        let w = f2.parse_word("abBA").unwrap();
        let mut tree = Diagram::edge(Letter::gen(0));
        assert_eq!(tree.ediam(&fball).unwrap(), tree.measure().idiam);
        // a path a·b hanging from ⋆
        tree = Diagram::from_rotation(
            &[(0, 1, Letter::gen(0)), (1, 2, Letter::gen(1))],
            vec![vec![0], vec![1, 2], vec![3]],
            0,
            Some(0),
        )
        .unwrap();
        assert_eq!(tree.boundary_word(), w);
        assert_eq!(tree.ediam(&fball).unwrap(), 2);
    }

    #[test]
    fn tree_pairs() {
        let square = Diagram::grid(1, 1);
        let boundary: Vec<usize> = square.boundary_walk().iter().map(|&h| edge_of(h)).collect();
        let pair = square.tree_pair(&boundary[..3]).unwrap();
        assert_eq!(pair.dual_tree, vec![boundary[3]]);
        assert_eq!(square.tree_pair(&boundary[..2]), Err(DiagramError::NotSpanning));
        let v = Diagram::vertex().tree_pair(&[]).unwrap();
        assert!(v.tree.is_empty() && v.dual_tree.is_empty());

        // horizontal comb: all horizontal edges plus the left column
        let g = Diagram::grid(2, 2);
        let comb: Vec<usize> = (0..g.edge_count())
            .filter(|&e| {
                let (u, v, l) = g.edge_data(e);
                l == Letter::gen(0) || (u % 3 == 0 && v % 3 == 0)
            })
            .collect();
        let pair = g.tree_pair(&comb).unwrap();
        assert!(g.dual().graph.is_spanning_tree(&pair.dual_tree));
        assert_eq!(pair.dual_tree.len(), 4);
    }

    #[test]
    fn dgl_small() {
        let square = Diagram::grid(1, 1);
        let d = square.dgl(DglMode::exact()).unwrap();
        assert_eq!(d.value, 4);
        assert!(d.exact);
        assert_eq!(square.skeleton().spanning_tree_count(), Some(4));
        assert_eq!(Diagram::vertex().dgl(DglMode::exact()).unwrap().value, 0);

        let g = Diagram::grid(2, 2);
        assert_eq!(g.skeleton().spanning_tree_count(), Some(192));
        let exact = g.dgl(DglMode::exact()).unwrap();
        let heuristic = g.dgl(DglMode::Heuristic).unwrap();
        assert!(heuristic.value >= exact.value);
        assert_eq!(g.tree_pair_cost(&exact.pair), exact.value);
        let m = g.measure();
        assert!(m.gl <= exact.value);
        assert!(exact.value <= 4 * m.area + 8);
        assert!(matches!(g.dgl(DglMode::Exact { max_trees: 10 }), Err(DiagramError::TooManyTrees { .. })));
    }

    #[test]
    fn text_round_trip() {
        let a = z2().alphabet().clone();
        for d in [Diagram::vertex(), Diagram::edge(Letter::gen(1)), Diagram::grid(2, 3)] {
            let text = d.to_text(&a);
            let back = Diagram::parse_text(&text, &a).unwrap();
            assert_eq!(back, d);
            assert_eq!(back.to_text(&a), text);
        }
        assert!(Diagram::parse_text("vertices 1\nrot 0: 5\n", &a).is_err());
    }
}
