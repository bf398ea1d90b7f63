//! Shellings: sequences of 1-cell collapses, 1-cell expansions and 2-cell
//! collapses that reduce a diagram to its base vertex.
//!
//! An intermediate diagram is tracked by its boundary walk, as a list of
//! half-edges of the original diagram, together with the set of faces still
//! present. Each walk entry carries a flag saying whether the face on its left
//! is still attached on that side; after a cut along an edge the two copies of
//! the edge can disagree.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::{edge_of, twin, Diagram, DiagramError, TreePair};
use crate::dps::{Move, NullSequence};
use crate::words::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShellMove {
    /// Remove the spike traversed at walk positions `at` and `at + 1`.
    OneCellCollapse { at: usize },
    /// Cut along `half_edge`, which leaves the corner just before walk
    /// position `at` and points into the diagram. At ⋆, `at = 0` keeps ⋆ on
    /// the copy after the cut and `at = len` on the copy before it.
    OneCellExpand { at: usize, half_edge: usize },
    /// Remove `face` with the boundary edge at walk position `at`.
    TwoCellCollapse { face: usize, at: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Shelling {
    pub moves: Vec<ShellMove>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellMoves {
    /// 1-cell and 2-cell collapses only.
    Collapses,
    /// Collapses plus cuts along interior edges of the original diagram.
    WithExpansions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCaps {
    pub max_faces: usize,
    pub max_edges: usize,
    pub max_states: usize,
    pub moves: ShellMoves,
}

impl Default for ExactCaps {
    fn default() -> ExactCaps {
        ExactCaps { max_faces: 14, max_edges: 60, max_states: 4_000_000, moves: ShellMoves::WithExpansions }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellMode {
    Exact(ExactCaps),
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellOutcome {
    /// Largest boundary length met along `shelling`.
    pub value: usize,
    pub shelling: Shelling,
    /// True when `value` is the minimum over the move set searched.
    pub exact: bool,
    /// The tree pair that drove an upper-bound shelling.
    pub pair: Option<TreePair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct State {
    /// `(half-edge << 1) | live`, where `live` means the face on the left of
    /// this traversal is still attached.
    walk: Vec<u32>,
    faces: Vec<u64>,
}

#[inline]
fn he(x: u32) -> usize {
    (x >> 1) as usize
}

#[inline]
fn live(x: u32) -> bool {
    x & 1 == 1
}

#[inline]
fn entry(h: usize, live: bool) -> u32 {
    ((h as u32) << 1) | live as u32
}

impl State {
    fn initial(d: &Diagram) -> State {
        let mut faces = vec![0u64; d.area().div_ceil(64)];
        for f in 0..d.area() {
            faces[f / 64] |= 1 << (f % 64);
        }
        let walk = d.boundary_walk().into_iter().map(|h| entry(h, d.face_of(h).is_some())).collect();
        State { walk, faces }
    }

    fn has_face(&self, f: usize) -> bool {
        self.faces[f / 64] >> (f % 64) & 1 == 1
    }

    fn face_alive(&self, d: &Diagram, h: usize) -> Option<usize> {
        d.face_of(h).filter(|&f| self.has_face(f))
    }

    fn is_final(&self) -> bool {
        self.walk.is_empty() && self.faces.iter().all(|&m| m == 0)
    }

    fn len(&self) -> usize {
        self.walk.len()
    }
}

struct View<'a> {
    d: &'a Diagram,
    st: &'a State,
    on_walk: Vec<bool>,
}

impl<'a> View<'a> {
    fn new(d: &'a Diagram, st: &'a State) -> View<'a> {
        let mut on_walk = vec![false; d.edge_count()];
        for &x in &st.walk {
            on_walk[edge_of(he(x))] = true;
        }
        View { d, st, on_walk }
    }

    fn present(&self, h: usize) -> bool {
        self.on_walk[edge_of(h)] || self.st.face_alive(self.d, h).is_some() || self.st.face_alive(self.d, twin(h)).is_some()
    }

    fn corner(&self, i: usize) -> (usize, usize) {
        let n = self.st.len();
        (he(self.st.walk[(i + n - 1) % n]), he(self.st.walk[i % n]))
    }

    /// Half-edges inside the diagram at the corner before walk position `i`,
    /// listed anticlockwise.
    fn sector(&self, i: usize) -> Vec<usize> {
        let d = self.d;
        let (a, b) = self.corner(i);
        let v = d.origin(b);
        let r = d.rotation(v);
        let k = r.len();
        let ccw_open = |from: usize, to: usize| -> Vec<usize> {
            let start = r.iter().position(|&h| h == from).expect("in rotation");
            (1..k).map(|s| r[(start + s) % k]).take_while(|&h| h != to).collect()
        };
        if b != twin(a) {
            return ccw_open(b, twin(a));
        }
        // At the far end of a spike or cut the corner is everything at this
        // copy of the vertex that no other corner claims.
        let n = self.st.len();
        let mut claimed = vec![b];
        for j in 0..n {
            if j == i {
                continue;
            }
            let (aj, bj) = self.corner(j);
            if d.origin(bj) != v || bj == twin(aj) {
                continue;
            }
            claimed.push(bj);
            claimed.push(twin(aj));
            claimed.extend(ccw_open(bj, twin(aj)));
        }
        r.iter().copied().filter(|h| !claimed.contains(h)).collect()
    }

    fn is_spike(&self, i: usize) -> bool {
        let n = self.st.len();
        i + 1 < n
            && he(self.st.walk[i + 1]) == twin(he(self.st.walk[i]))
            && self.sector(i + 1).into_iter().all(|h| !self.present(h))
    }

    fn expansions(&self, i: usize) -> Vec<usize> {
        self.sector(i)
            .into_iter()
            .filter(|&h| {
                !self.on_walk[edge_of(h)]
                    && self.st.face_alive(self.d, h).is_some()
                    && self.st.face_alive(self.d, twin(h)).is_some()
            })
            .collect()
    }

    fn moves(&self, kind: ShellMoves) -> Vec<ShellMove> {
        let n = self.st.len();
        if let Some(at) = (0..n).find(|&i| self.is_spike(i)) {
            // Removing a spike never lengthens the boundary and commutes with
            // every other move.
            return vec![ShellMove::OneCellCollapse { at }];
        }
        let mut out = Vec::new();
        for (at, &x) in self.st.walk.iter().enumerate() {
            if live(x) {
                if let Some(face) = self.st.face_alive(self.d, he(x)) {
                    out.push(ShellMove::TwoCellCollapse { face, at });
                }
            }
        }
        if kind == ShellMoves::WithExpansions {
            for i in 0..n {
                for h in self.expansions(i) {
                    out.push(ShellMove::OneCellExpand { at: i, half_edge: h });
                    if i == 0 {
                        out.push(ShellMove::OneCellExpand { at: n, half_edge: h });
                    }
                }
            }
        }
        out
    }
}

fn apply(d: &Diagram, st: &State, m: ShellMove) -> Result<State, String> {
    let view = View::new(d, st);
    let n = st.len();
    match m {
        ShellMove::OneCellCollapse { at } => {
            if !view.is_spike(at) {
                return Err(format!("positions {at}, {} do not traverse a spike", at + 1));
            }
            let mut walk = st.walk.clone();
            walk.drain(at..at + 2);
            Ok(State { walk, faces: st.faces.clone() })
        }
        ShellMove::OneCellExpand { at, half_edge } => {
            if at > n || n == 0 {
                return Err(format!("no corner at position {at}"));
            }
            if !view.expansions(at % n).contains(&half_edge) {
                return Err(format!("half-edge {half_edge} is not an interior edge at corner {at}"));
            }
            let mut walk = st.walk.clone();
            walk.splice(at..at, [entry(half_edge, true), entry(twin(half_edge), true)]);
            Ok(State { walk, faces: st.faces.clone() })
        }
        ShellMove::TwoCellCollapse { face, at } => {
            let Some(&x) = st.walk.get(at) else { return Err(format!("no boundary edge at {at}")) };
            if !live(x) || st.face_alive(d, he(x)) != Some(face) {
                return Err(format!("face {face} is not attached along position {at}"));
            }
            let mut faces = st.faces.clone();
            faces[face / 64] &= !(1 << (face % 64));
            let h = he(x);
            let mut rest = Vec::new();
            let mut y = d.next_in_face(h);
            while y != h {
                rest.push(y);
                y = d.next_in_face(y);
            }
            let attached = |y: usize| st.walk.iter().any(|&z| z == entry(y, true));
            let after = State { walk: Vec::new(), faces };
            let inserted: Vec<u32> = rest
                .iter()
                .rev()
                .map(|&y| entry(twin(y), !attached(y) && after.face_alive(d, twin(y)).is_some()))
                .collect();
            let mut walk: Vec<u32> = st
                .walk
                .iter()
                .map(|&z| if live(z) && d.face_of(he(z)) == Some(face) { z & !1 } else { z })
                .collect();
            walk.splice(at..at + 1, inserted);
            Ok(State { walk, faces: after.faces })
        }
    }
}

fn check_caps(d: &Diagram, caps: &ExactCaps) -> Result<(), DiagramError> {
    if d.area() > caps.max_faces || d.edge_count() > caps.max_edges {
        return Err(DiagramError::TooManyCells { faces: d.area(), edges: d.edge_count() });
    }
    Ok(())
}

/// Minimises the largest boundary length over shellings, by a bottleneck
/// best-first search over intermediate diagrams.
fn exact(d: &Diagram, caps: &ExactCaps) -> Result<ShellOutcome, DiagramError> {
    check_caps(d, caps)?;
    let start = State::initial(d);
    let mut states = vec![start.clone()];
    let mut parent: Vec<Option<(usize, ShellMove)>> = vec![None];
    let mut bottleneck = vec![start.len()];
    let mut index: FxHashMap<State, usize> = FxHashMap::default();
    index.insert(start.clone(), 0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); start.len() + 1];
    buckets[start.len()].push(0);
    let mut done = vec![false];
    let mut level = start.len();
    loop {
        let Some(id) = buckets.get_mut(level).and_then(Vec::pop) else {
            level += 1;
            if level >= buckets.len() {
                return Err(DiagramError::StateCap(states.len()));
            }
            continue;
        };
        if done[id] || bottleneck[id] != level {
            continue;
        }
        done[id] = true;
        let st = states[id].clone();
        if st.is_final() {
            let mut moves = Vec::new();
            let mut cur = id;
            while let Some((p, m)) = parent[cur] {
                moves.push(m);
                cur = p;
            }
            moves.reverse();
            return Ok(ShellOutcome { value: level, shelling: Shelling { moves }, exact: true, pair: None });
        }
        for m in View::new(d, &st).moves(caps.moves) {
            let next = apply(d, &st, m).expect("generated moves are legal");
            let b = level.max(next.len());
            let target = match index.get(&next) {
                Some(&t) if done[t] || bottleneck[t] <= b => continue,
                Some(&t) => t,
                None => {
                    if states.len() >= caps.max_states {
                        return Err(DiagramError::StateCap(states.len()));
                    }
                    let t = states.len();
                    index.insert(next.clone(), t);
                    states.push(next);
                    parent.push(None);
                    bottleneck.push(usize::MAX);
                    done.push(false);
                    t
                }
            };
            bottleneck[target] = b;
            parent[target] = Some((id, m));
            if buckets.len() <= b {
                buckets.resize(b + 1, Vec::new());
            }
            buckets[b].push(target);
        }
    }
}

/// The tree-following shelling: faces are removed along the dual-tree paths
/// from the outer face to the faces met while walking around `pair.tree`,
/// with any face not on such a path removed (with its whole dual subtree) as
/// soon as its dual-tree parent is gone; spikes are collapsed as soon as they
/// appear.
pub fn shell_along_trees(d: &Diagram, pair: &TreePair) -> Result<ShellOutcome, DiagramError> {
    let checked = d.tree_pair(&pair.tree)?;
    let outer = d.area();
    let dual = d.dual();
    // Root the dual tree at the outer face.
    let mut parent_edge = vec![usize::MAX; outer + 1];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); outer + 1];
    let mut seen = vec![false; outer + 1];
    seen[outer] = true;
    let mut queue = VecDeque::from([outer]);
    let in_dual_tree = {
        let mut m = vec![false; d.edge_count()];
        for &e in &checked.dual_tree {
            m[e] = true;
        }
        m
    };
    while let Some(x) = queue.pop_front() {
        for &(y, e) in dual.graph.neighbours(x) {
            if in_dual_tree[e] && !seen[y] {
                seen[y] = true;
                parent_edge[y] = e;
                children[x].push(y);
                queue.push_back(y);
            }
        }
    }
    let parent_of = |f: usize| {
        let (u, v) = dual.graph.edge(parent_edge[f]);
        if u == f {
            v
        } else {
            u
        }
    };

    // Walk around the tree, noting the face to the right of each step.
    let in_tree = {
        let mut m = vec![false; d.edge_count()];
        for &e in &checked.tree {
            m[e] = true;
        }
        m
    };
    let next_tree = |h: usize| {
        let r = d.rotation(d.origin(h));
        let k = r.len();
        let p = r.iter().position(|&x| x == h).expect("in rotation");
        (1..=k).map(|s| r[(p + s) % k]).find(|&x| in_tree[edge_of(x)]).expect("tree edge")
    };
    let mut targets = Vec::new();
    if let (Some(b), false) = (d.base(), checked.tree.is_empty()) {
        let first = if in_tree[edge_of(b)] { b } else { next_tree(b) };
        let mut h = first;
        loop {
            if let Some(f) = d.face_of(twin(h)) {
                targets.push(f);
            }
            h = next_tree(twin(h));
            if h == first {
                break;
            }
        }
    }
    let mut on_path = vec![false; outer + 1];
    let paths: Vec<Vec<usize>> = targets
        .iter()
        .map(|&f| {
            let mut path = vec![f];
            let mut x = f;
            while x != outer {
                on_path[x] = true;
                x = parent_of(x);
                if x != outer {
                    path.push(x);
                }
            }
            path.reverse();
            path
        })
        .collect();

    let mut order = Vec::with_capacity(outer);
    let mut scheduled = vec![false; outer + 1];
    fn subtree(f: usize, children: &[Vec<usize>], scheduled: &mut [bool], order: &mut Vec<usize>) {
        scheduled[f] = true;
        order.push(f);
        for &c in &children[f] {
            subtree(c, children, scheduled, order);
        }
    }
    let schedule = |f: usize, scheduled: &mut Vec<bool>, order: &mut Vec<usize>| {
        scheduled[f] = true;
        order.push(f);
        for &c in &children[f] {
            if !on_path[c] && !scheduled[c] {
                subtree(c, &children, scheduled, order);
            }
        }
    };
    for &c in &children[outer] {
        if !on_path[c] {
            subtree(c, &children, &mut scheduled, &mut order);
        }
    }
    for path in &paths {
        for &f in path {
            if !scheduled[f] {
                schedule(f, &mut scheduled, &mut order);
            }
        }
    }
    for f in 0..outer {
        if !scheduled[f] {
            subtree(f, &children, &mut scheduled, &mut order);
        }
    }

    let mut st = State::initial(d);
    let mut value = st.len();
    let mut moves = Vec::new();
    let collapse_spikes = |st: &mut State, moves: &mut Vec<ShellMove>| {
        while let Some(at) = (0..st.len()).find(|&i| View::new(d, st).is_spike(i)) {
            let m = ShellMove::OneCellCollapse { at };
            *st = apply(d, st, m).expect("spike");
            moves.push(m);
        }
    };
    collapse_spikes(&mut st, &mut moves);
    for f in order {
        let e = parent_edge[f];
        let h = if d.face_of(2 * e) == Some(f) { 2 * e } else { 2 * e + 1 };
        let at = st.walk.iter().position(|&z| z == entry(h, true)).expect("dual-tree parent edge is on the boundary");
        let m = ShellMove::TwoCellCollapse { face: f, at };
        st = apply(d, &st, m).expect("legal collapse");
        moves.push(m);
        value = value.max(st.len());
        collapse_spikes(&mut st, &mut moves);
    }
    debug_assert!(st.is_final());
    Ok(ShellOutcome { value, shelling: Shelling { moves }, exact: false, pair: Some(checked) })
}

/// FL(Δ): the least L such that some shelling keeps every boundary within
/// length L. `UpperBound` runs the tree-following shelling for geodesic
/// spanning trees rooted at up to 64 vertices and keeps the best.
pub fn shell_fl(d: &Diagram, mode: ShellMode) -> Result<ShellOutcome, DiagramError> {
    match mode {
        ShellMode::Exact(caps) => exact(d, &caps),
        ShellMode::UpperBound => {
            let skeleton = d.skeleton();
            let mut roots: Vec<usize> = (0..d.vertex_count()).take(64).collect();
            if !roots.contains(&d.star()) {
                roots.push(d.star());
            }
            let mut best: Option<ShellOutcome> = None;
            for r in roots {
                let tree = skeleton.geodesic_spanning_tree(r);
                let out = shell_along_trees(d, &d.tree_pair(&tree)?)?;
                if best.as_ref().map_or(true, |b| out.value < b.value) {
                    best = Some(out);
                }
            }
            Ok(best.expect("at least one root"))
        }
    }
}

/// The null-sequence read off a shelling: each intermediate boundary word is
/// read from ⋆.
pub fn diagram_to_sequence(d: &Diagram, s: &Shelling) -> Result<NullSequence, DiagramError> {
    let mut st = State::initial(d);
    let mut moves = Vec::with_capacity(s.moves.len());
    for (step, &m) in s.moves.iter().enumerate() {
        let dm = match m {
            ShellMove::OneCellCollapse { at } => Move::FreeReduce { at },
            ShellMove::OneCellExpand { at, half_edge } => Move::FreeExpand { at, letter: d.label(half_edge) },
            ShellMove::TwoCellCollapse { at, .. } => {
                let h = st.walk.get(at).map(|&x| he(x)).unwrap_or(usize::MAX);
                let mut closure = Vec::new();
                if h != usize::MAX {
                    let mut y = h;
                    loop {
                        closure.push(d.label(y));
                        y = d.next_in_face(y);
                        if y == h {
                            break;
                        }
                    }
                }
                Move::ApplyRelator { closure: Word::from(closure), consumed: 1, at }
            }
        };
        st = apply(d, &st, m).map_err(|reason| DiagramError::InvalidShelling { step, reason })?;
        moves.push(dm);
    }
    if !st.is_final() {
        return Err(DiagramError::InvalidShelling { step: s.moves.len(), reason: "diagram not reduced to ⋆".into() });
    }
    Ok(NullSequence::new(d.boundary_word(), moves))
}

/// Boundary lengths along a shelling, starting with ℓ(∂Δ).
pub fn boundary_lengths(d: &Diagram, s: &Shelling) -> Result<Vec<usize>, DiagramError> {
    let mut st = State::initial(d);
    let mut out = vec![st.len()];
    for (step, &m) in s.moves.iter().enumerate() {
        st = apply(d, &st, m).map_err(|reason| DiagramError::InvalidShelling { step, reason })?;
        out.push(st.len());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::DglMode;
    use crate::dps::{replay, Basepoint};
    use crate::presentation::Presentation;

    fn exact_fl(d: &Diagram) -> ShellOutcome {
        shell_fl(d, ShellMode::Exact(ExactCaps::default())).unwrap()
    }

    #[test]
    fn square_shells_at_six() {
        let sq = Diagram::grid(1, 1);
        let out = exact_fl(&sq);
        assert_eq!(out.value, 6);
        let ns = diagram_to_sequence(&sq, &out.shelling).unwrap();
        assert_eq!(ns.relator_count(), 1);
        let r = replay(&ns, &Presentation::free_abelian(2), Basepoint::Fixed);
        assert!(r.is_null());
        assert_eq!(r.stats.max_len, 6);
        assert_eq!(*boundary_lengths(&sq, &out.shelling).unwrap().iter().max().unwrap(), 6);
    }

    #[test]
    fn trivial_shellings() {
        let v = Diagram::vertex();
        assert_eq!(exact_fl(&v).value, 0);
        assert!(diagram_to_sequence(&v, &Shelling::default()).unwrap().moves.is_empty());
        let e = Diagram::edge(crate::words::Letter::gen(0));
        assert_eq!(exact_fl(&e).value, 2);
    }

    #[test]
    fn grid_exact_within_upper_bound() {
        let g = Diagram::grid(2, 2);
        let ex = exact_fl(&g);
        let ub = shell_fl(&g, ShellMode::UpperBound).unwrap();
        assert!(ex.value <= ub.value);
        assert!(g.measure().idiam <= ex.value);
        let collapses =
            shell_fl(&g, ShellMode::Exact(ExactCaps { moves: ShellMoves::Collapses, ..ExactCaps::default() })).unwrap();
        assert!(ex.value <= collapses.value);
        let p = Presentation::free_abelian(2);
        for out in [&ex, &ub] {
            let ns = diagram_to_sequence(&g, &out.shelling).unwrap();
            let r = replay(&ns, &p, Basepoint::Fixed);
            assert!(r.is_null());
            assert_eq!(r.stats.max_len, out.value);
            assert_eq!(ns.relator_count(), 4);
        }
    }

    #[test]
    fn tree_following_bound() {
        for g in [Diagram::grid(1, 1), Diagram::grid(2, 2), Diagram::grid(2, 3), Diagram::grid(1, 4)] {
            let lambda = 4;
            let skeleton = g.skeleton();
            let dual = g.dual().graph;
            let mut count = 0;
            skeleton.for_each_spanning_tree(|t| {
                let pair = g.tree_pair(t).unwrap();
                let out = shell_along_trees(&g, &pair).unwrap();
                let bound = skeleton.tree_diameter(&pair.tree)
                    + 2 * lambda * dual.tree_diameter(&pair.dual_tree)
                    + g.boundary_word().len();
                assert!(out.value <= bound, "{} > {bound}", out.value);
                count += 1;
                count < 300
            });
            let _ = g.dgl(DglMode::Heuristic).unwrap();
        }
    }

    #[test]
    fn illegal_moves_are_rejected() {
        let sq = Diagram::grid(1, 1);
        let bad = Shelling { moves: vec![ShellMove::OneCellCollapse { at: 0 }] };
        assert!(matches!(diagram_to_sequence(&sq, &bad), Err(DiagramError::InvalidShelling { step: 0, .. })));
        let unfinished = Shelling { moves: vec![ShellMove::TwoCellCollapse { face: 0, at: 0 }] };
        assert!(diagram_to_sequence(&sq, &unfinished).is_err());
    }
}
