//! Example families: the dyadic-arc multigraphs Γₙ, the ternary trees 𝒯ₙ and
//! the fattened-tree diagrams Δₙ with their shrinking skirts.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::diagram::{shell_fl, twin, DglMode, Diagram, DiagramError, ExactCaps, ShellMode, TreePair};
use crate::graph::Graph;
use crate::words::Letter;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("n = {n} outside 1..={max}")]
    OutOfRange { n: usize, max: usize },
    #[error("no planar block layout found for the level-{0} tree")]
    Layout(usize),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

fn check_range(n: usize, max: usize) -> Result<(), FamilyError> {
    if n == 0 || n > max {
        return Err(FamilyError::OutOfRange { n, max });
    }
    Ok(())
}

const H: Letter = Letter::gen(0);
const V: Letter = Letter::gen(1);

// ---------------------------------------------------------------- Γₙ

pub const GAMMA_MAX: usize = 6;

/// Γₙ as a planar diagram: vertices 0..=2ⁿ on a line joined by path edges
/// `0..2ⁿ`, and for each dyadic interval of length at least 2 one arc above
/// the line and one below.
#[derive(Debug, Clone)]
pub struct Gamma {
    pub n: usize,
    pub diagram: Diagram,
    /// The horizontal path, as edge indices.
    pub path_tree: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaReport {
    pub n: usize,
    pub diam_gamma: usize,
    pub diam_dual: usize,
    /// Diam of the horizontal path, 2ⁿ.
    pub diam_path: usize,
    /// Diam of the dual of the horizontal path.
    pub diam_path_dual: usize,
    /// The dual of the horizontal path is a BFS tree of the dual from the
    /// outer vertex.
    pub path_dual_geodesic: bool,
    pub best: TreePair,
    pub best_diam: usize,
    pub best_dual_diam: usize,
    /// True when `best` minimises Diam(S) + Diam(S*) over all spanning trees.
    pub best_exact: bool,
}

pub fn gamma_n(n: usize) -> Result<Gamma, FamilyError> {
    check_range(n, GAMMA_MAX)?;
    let len = 1usize << n;
    let mut edges: Vec<(usize, usize, Letter)> = (0..len).map(|i| (i, i + 1, H)).collect();
    // arcs[j][k] = (upper, lower) edge indices of [k·2ʲ, (k+1)·2ʲ].
    let mut arcs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + 1];
    for j in 1..=n {
        for k in 0..len >> j {
            let (a, b) = (k << j, (k + 1) << j);
            edges.push((a, b, V));
            edges.push((a, b, V));
            arcs[j].push((edges.len() - 2, edges.len() - 1));
        }
    }
    let mut faces = Vec::new();
    for j in 1..=n {
        for (k, &(up, lo)) in arcs[j].iter().enumerate() {
            let (c1, c2) = if j == 1 {
                ((2 * k, 2 * k), (2 * k + 1, 2 * k + 1))
            } else {
                (arcs[j - 1][2 * k], arcs[j - 1][2 * k + 1])
            };
            faces.push(vec![2 * c1.0, 2 * c2.0, 2 * up + 1]);
            faces.push(vec![2 * lo, 2 * c2.1 + 1, 2 * c1.1 + 1]);
        }
    }
    let diagram = Diagram::from_faces(len + 1, &edges, &faces, 0)?;
    Ok(Gamma { n, diagram, path_tree: (0..len).collect() })
}

impl Gamma {
    /// Measures Γₙ and searches for a spanning tree S with small
    /// Diam(S) + Diam(S*): exhaustively when at most `max_trees` spanning
    /// trees exist, otherwise by the heuristic descent.
    pub fn report(&self, max_trees: u128) -> GammaReport {
        let d = &self.diagram;
        let skeleton = d.skeleton();
        let dual = d.dual();
        let path = d.tree_pair(&self.path_tree).expect("the path spans");
        let in_tree = {
            let mut m = vec![false; d.edge_count()];
            for &e in &path.dual_tree {
                m[e] = true;
            }
            m
        };
        let geodesic = dual.graph.distances_from(dual.outer) == dual.graph.distances_within(dual.outer, |e| in_tree[e]);
        let best = match d.dgl(DglMode::Exact { max_trees }) {
            Ok(b) => b,
            Err(_) => d.dgl(DglMode::Heuristic).expect("connected"),
        };
        GammaReport {
            n: self.n,
            diam_gamma: skeleton.diameter().expect("connected"),
            diam_dual: dual.graph.diameter().expect("connected"),
            diam_path: skeleton.tree_diameter(&path.tree),
            diam_path_dual: dual.graph.tree_diameter(&path.dual_tree),
            path_dual_geodesic: geodesic,
            best_diam: skeleton.tree_diameter(&best.pair.tree),
            best_dual_diam: dual.graph.tree_diameter(&best.pair.dual_tree),
            best_exact: best.exact,
            best: best.pair,
        }
    }
}

// ---------------------------------------------------------------- 𝒯ₙ

pub const TREE_MAX: usize = 8;

/// 𝒯₁ is one edge; 𝒯ₙ is three copies of 𝒯ₙ₋₁ glued at one leaf each. The
/// glued leaf of each copy is its `root`, and the root of 𝒯ₙ is the
/// lowest-numbered other leaf of the first copy.
#[derive(Debug, Clone)]
pub struct TernaryTree {
    pub n: usize,
    pub graph: Graph,
    pub root: usize,
}

pub fn ternary_tree(n: usize) -> Result<TernaryTree, FamilyError> {
    check_range(n, TREE_MAX)?;
    let (mut vcount, mut edges, mut root) = (2usize, vec![(0usize, 1usize)], 0usize);
    for _ in 1..n {
        let centre = 0;
        let mut next = vec![];
        let mut new_count = 1;
        let mut first_leaves = Vec::new();
        for copy in 0..3 {
            // Vertex map: root goes to the centre, the rest are renumbered.
            let mut map = vec![0; vcount];
            for (v, m) in map.iter_mut().enumerate() {
                if v == root {
                    *m = centre;
                } else {
                    *m = new_count;
                    new_count += 1;
                }
            }
            next.extend(edges.iter().map(|&(a, b)| (map[a], map[b])));
            if copy == 0 {
                let mut deg = vec![0; vcount];
                for &(a, b) in &edges {
                    deg[a] += 1;
                    deg[b] += 1;
                }
                first_leaves = (0..vcount).filter(|&v| v != root && deg[v] == 1).map(|v| map[v]).collect();
            }
        }
        root = first_leaves.into_iter().min().expect("trees have two leaves");
        vcount = new_count;
        edges = next;
    }
    Ok(TernaryTree { n, graph: Graph::new(vcount, edges), root })
}

impl TernaryTree {
    pub const SWEEP_MAX_VERTICES: usize = 22;

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Discrete sweep width: the front passes the vertices one at a time,
    /// and while passing `v` after the set X it meets every edge incident to
    /// `v` and every edge with exactly one end in X. Returns the least, over
    /// vertex orders, of the most edges met at once; `None` above
    /// [`Self::SWEEP_MAX_VERTICES`] vertices.
    pub fn sweep_width(&self) -> Option<usize> {
        let nv = self.graph.vertex_count();
        if nv > Self::SWEEP_MAX_VERTICES {
            return None;
        }
        let edges = self.graph.edges();
        let full = (1usize << nv) - 1;
        let mut best = vec![u8::MAX; full + 1];
        best[0] = 0;
        for x in 0..full {
            if best[x] == u8::MAX {
                continue;
            }
            for v in 0..nv {
                if x >> v & 1 == 1 {
                    continue;
                }
                let met = edges
                    .iter()
                    .filter(|&&(a, b)| a == v || b == v || ((x >> a & 1) != (x >> b & 1)))
                    .count() as u8;
                let y = x | 1 << v;
                best[y] = best[y].min(best[x].max(met));
            }
        }
        Some(best[full] as usize)
    }
}

// ---------------------------------------------------------------- Δₙ

pub const DELTA_MAX: usize = 4;
/// Skirt rings are added until the outer circuit is at most this long.
pub const SKIRT_STOP: usize = 8;

#[derive(Debug, Clone)]
pub struct DeltaFamily {
    pub n: usize,
    pub diagram: Diagram,
    /// Faces of the fattened tree.
    pub tree_area: usize,
    /// Boundary length of the fattened tree.
    pub tree_perimeter: usize,
    /// Faces per skirt ring, from the tree outwards.
    pub rings: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaReport {
    pub n: usize,
    pub area: usize,
    pub boundary: usize,
    pub idiam: usize,
    pub gl: usize,
    pub rad: usize,
    pub fl_upper: usize,
    /// max(ℓ(∂Δ), IDiam(Δ)), or the exact value when `fl_exact`.
    pub fl_lower: usize,
    pub fl_exact: bool,
}

/// Block layout of a tree on the square lattice: each internal vertex gets a
/// junction cell, each edge one cell next to its end junctions; leaves get no
/// cell. Cells only touch along sides of cells that are adjacent in the
/// tree. Found by backtracking.
fn layout(t: &Graph) -> Option<Vec<(i64, i64)>> {
    let nv = t.vertex_count();
    let internal: Vec<bool> = (0..nv).map(|v| t.neighbours(v).len() > 1).collect();
    if t.edge_count() == 1 {
        return Some(vec![(0, 0)]);
    }
    let start = (0..nv).find(|&v| internal[v])?;
    let mut state = LayoutState { cells: BTreeMap::new(), pos: vec![None; nv] };
    state.pos[start] = Some((0, 0));
    state.cells.insert((0, 0), Cell::Junction(start));
    // Edges in BFS order from `start`, oriented away from it.
    let mut order = Vec::new();
    let mut seen = vec![false; nv];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &(u, e) in t.neighbours(v) {
            if !seen[u] {
                seen[u] = true;
                order.push((v, u, e));
                queue.push_back(u);
            }
        }
    }
    if place(t, &internal, &order, 0, &mut state) {
        Some(state.cells.into_keys().collect())
    } else {
        None
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Junction(usize),
    Edge(usize),
}

struct LayoutState {
    cells: BTreeMap<(i64, i64), Cell>,
    pos: Vec<Option<(i64, i64)>>,
}

fn place(t: &Graph, internal: &[bool], order: &[(usize, usize, usize)], i: usize, s: &mut LayoutState) -> bool {
    let Some(&(v, u, e)) = order.get(i) else {
        return true;
    };
    let (x, y) = s.pos[v].expect("parent placed");
    for (dx, dy) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
        let ec = (x + dx, y + dy);
        let jc = (x + 2 * dx, y + 2 * dy);
        let mut new = vec![(ec, Cell::Edge(e))];
        if internal[u] {
            new.push((jc, Cell::Junction(u)));
        }
        if new.iter().any(|(c, _)| s.cells.contains_key(c)) {
            continue;
        }
        for &(c, k) in &new {
            s.cells.insert(c, k);
        }
        if internal[u] {
            s.pos[u] = Some(jc);
        }
        if layout_ok(t, &s.cells, &new) && place(t, internal, order, i + 1, s) {
            return true;
        }
        for (c, _) in &new {
            s.cells.remove(c);
        }
        s.pos[u] = None;
    }
    false
}

/// New cells may share a side only with tree-adjacent cells and may not
/// meet any other cell at a corner alone.
fn layout_ok(t: &Graph, cells: &BTreeMap<(i64, i64), Cell>, new: &[((i64, i64), Cell)]) -> bool {
    let adjacent = |a: Cell, b: Cell| match (a, b) {
        (Cell::Junction(v), Cell::Edge(e)) | (Cell::Edge(e), Cell::Junction(v)) => {
            let (p, q) = t.edge(e);
            p == v || q == v
        }
        _ => false,
    };
    for &((x, y), k) in new {
        for (dx, dy) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
            if let Some(&o) = cells.get(&(x + dx, y + dy)) {
                if !adjacent(k, o) {
                    return false;
                }
            }
        }
        for (dx, dy) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            if cells.contains_key(&(x + dx, y + dy))
                && !cells.contains_key(&(x + dx, y))
                && !cells.contains_key(&(x, y + dy))
            {
                return false;
            }
        }
    }
    true
}

/// Edges and faces of the square-lattice polyomino on `squares`, with
/// horizontal edges labelled by the first generator and vertical ones by the
/// second. Returns (vertex count, edges, faces, ⋆) with ⋆ the lower-left
/// corner of the lowest, then leftmost, square.
#[allow(clippy::type_complexity)]
fn polyomino_parts(squares: &BTreeSet<(i64, i64)>) -> (usize, Vec<(usize, usize, Letter)>, Vec<Vec<usize>>, usize) {
    let mut vid: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for &(x, y) in squares {
        for p in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
            let k = vid.len();
            vid.entry(p).or_insert(k);
        }
    }
    let mut edges = Vec::new();
    let mut eid: BTreeMap<((i64, i64), (i64, i64)), usize> = BTreeMap::new();
    let mut edge = |a: (i64, i64), b: (i64, i64), l: Letter| {
        *eid.entry((a, b)).or_insert_with(|| {
            edges.push((vid[&a], vid[&b], l));
            edges.len() - 1
        })
    };
    let mut faces = Vec::new();
    for &(x, y) in squares {
        let bottom = edge((x, y), (x + 1, y), H);
        let right = edge((x + 1, y), (x + 1, y + 1), V);
        let top = edge((x, y + 1), (x + 1, y + 1), H);
        let left = edge((x, y), (x, y + 1), V);
        faces.push(vec![2 * bottom, 2 * right, 2 * top + 1, 2 * left + 1]);
    }
    let low = squares.iter().min_by_key(|&&(x, y)| (y, x)).expect("non-empty");
    (vid.len(), edges, faces, vid[low])
}

/// The diagram of a simply connected polyomino.
pub fn polyomino(squares: &BTreeSet<(i64, i64)>) -> Result<Diagram, FamilyError> {
    if squares.is_empty() {
        return Ok(Diagram::vertex());
    }
    let (nv, edges, faces, star) = polyomino_parts(squares);
    Ok(Diagram::from_faces(nv, &edges, &faces, star)?)
}

/// A round grid disc: the `area` unit squares whose centres lie nearest the
/// origin, ties broken by angle.
pub fn round_disc(area: usize) -> Result<Diagram, FamilyError> {
    let r = (area as f64).sqrt() as i64 + 2;
    let mut all: Vec<(i64, i64)> = (-r..r).flat_map(|x| (-r..r).map(move |y| (x, y))).collect();
    let key = |&(x, y): &(i64, i64)| {
        let (cx, cy) = (2 * x + 1, 2 * y + 1);
        ((cx * cx + cy * cy), (cy as f64).atan2(cx as f64).to_bits() as i64)
    };
    all.sort_by_key(key);
    polyomino(&all.into_iter().take(area).collect())
}

/// Δₙ: 𝒯ₙ fattened to n-thick blocks, then wrapped in rings of
/// quadrilaterals whose outer circuits roughly halve each time, until the
/// outer circuit has length at most [`SKIRT_STOP`]. That last circuit is
/// ∂Δₙ.
pub fn delta_n(n: usize) -> Result<DeltaFamily, FamilyError> {
    check_range(n, DELTA_MAX)?;
    let tree = ternary_tree(n)?;
    let cells = layout(&tree.graph).ok_or(FamilyError::Layout(n))?;
    let k = n as i64;
    let squares: BTreeSet<(i64, i64)> = cells
        .iter()
        .flat_map(|&(cx, cy)| (0..k).flat_map(move |i| (0..k).map(move |j| (cx * k + i, cy * k + j))))
        .collect();
    let (mut nv, mut edges, mut faces, star) = polyomino_parts(&squares);
    let tree_area = faces.len();
    let fat = Diagram::from_faces(nv, &edges, &faces, star)?;
    // The current circuit, as half-edges with the built part on their left.
    let mut circuit = fat.boundary_walk();
    let tree_perimeter = circuit.len();
    let mut rings = Vec::new();
    let mut star = star;
    while circuit.len() > SKIRT_STOP {
        let a = circuit.len();
        let b = 2 * a.div_ceil(4);
        let m = (a + b) / 2;
        let wide = (a - b) / 2;
        let origin = |h: usize, edges: &[(usize, usize, Letter)]| if h % 2 == 0 { edges[h / 2].0 } else { edges[h / 2].1 };
        let outer: Vec<usize> = (nv..nv + b).collect();
        nv += b;
        let first_new = edges.len();
        for i in 0..b {
            edges.push((outer[i], outer[(i + 1) % b], H));
        }
        // Steps: `wide` faces take two inner edges, the rest one inner and one
        // outer edge, spread evenly.
        let steps: Vec<(usize, usize)> =
            (0..m).map(|i| if (i + 1) * wide / m > i * wide / m { (2, 0) } else { (1, 1) }).collect();
        let (mut p, mut q) = (0, 0);
        let mut spokes = Vec::with_capacity(m);
        for &(x, y) in &steps {
            spokes.push(edges.len());
            edges.push((origin(circuit[p % a], &edges), outer[q % b], V));
            p += x;
            q += y;
        }
        let (mut p, mut q) = (0, 0);
        for (i, &(x, y)) in steps.iter().enumerate() {
            let mut f: Vec<usize> = (0..x).rev().map(|t| twin(circuit[(p + t) % a])).collect();
            f.push(2 * spokes[i]);
            f.extend((0..y).map(|t| 2 * (first_new + (q + t) % b)));
            f.push(2 * spokes[(i + 1) % m] + 1);
            faces.push(f);
            p += x;
            q += y;
        }
        rings.push(m);
        circuit = (0..b).map(|i| 2 * (first_new + i)).collect();
        star = outer[0];
    }
    let diagram = Diagram::from_faces(nv, &edges, &faces, star)?;
    Ok(DeltaFamily { n, diagram, tree_area, tree_perimeter, rings })
}

impl DeltaFamily {
    /// Measures Δₙ. With `exact` caps the shelling search is exhaustive;
    /// otherwise FL is bracketed by the tree-following upper bound and
    /// max(ℓ(∂Δ), IDiam).
    pub fn report(&self, exact: Option<ExactCaps>) -> Result<DeltaReport, FamilyError> {
        let d = &self.diagram;
        let m = d.measure();
        let boundary = d.boundary_word().len();
        let upper = shell_fl(d, ShellMode::UpperBound)?;
        let mut report = DeltaReport {
            n: self.n,
            area: m.area,
            boundary,
            idiam: m.idiam,
            gl: m.gl,
            rad: m.rad,
            fl_upper: upper.value,
            fl_lower: boundary.max(m.idiam),
            fl_exact: false,
        };
        if let Some(caps) = exact {
            let out = shell_fl(d, ShellMode::Exact(caps))?;
            if out.exact {
                report.fl_upper = out.value;
                report.fl_lower = out.value;
                report.fl_exact = true;
            } else {
                report.fl_upper = report.fl_upper.min(out.value);
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_small_cases() {
        let g = gamma_n(1).unwrap();
        assert_eq!((g.diagram.vertex_count(), g.diagram.edge_count(), g.diagram.area()), (3, 4, 2));
        let r = gamma_n(3).unwrap().report(1000);
        assert_eq!(r.diam_path, 8);
        assert!(r.path_dual_geodesic);
        assert!(r.best_diam + r.best_dual_diam < r.diam_path + r.diam_path_dual);
    }

    #[test]
    fn ternary_tree_sizes() {
        for n in 1..=5 {
            let t = ternary_tree(n).unwrap();
            assert_eq!(t.edge_count(), 3usize.pow(n as u32 - 1));
            assert_eq!(t.graph.vertex_count(), t.edge_count() + 1);
            assert!(t.graph.is_connected());
        }
        assert_eq!(ternary_tree(1).unwrap().sweep_width(), Some(1));
        assert_eq!(ternary_tree(2).unwrap().sweep_width(), Some(3));
    }

    #[test]
    fn delta_is_a_disc() {
        let d1 = delta_n(1).unwrap();
        assert_eq!((d1.diagram.area(), d1.rings.len()), (1, 0));
        for n in 2..=3 {
            let d = delta_n(n).unwrap();
            let t = ternary_tree(n).unwrap().graph;
            let internal = (0..t.vertex_count()).filter(|&v| t.neighbours(v).len() > 1).count();
            assert_eq!(d.tree_area, n * n * (t.edge_count() + internal));
            assert!(d.diagram.boundary_word().len() <= SKIRT_STOP);
            assert!(!d.rings.is_empty());
        }
    }

    #[test]
    fn round_disc_has_requested_area() {
        for a in [1, 5, 12, 30] {
            assert_eq!(round_disc(a).unwrap().area(), a);
        }
    }
}
