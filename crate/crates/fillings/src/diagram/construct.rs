//! Null-sequence to diagram.
//!
//! The diagram is grown backwards from the last word (the one-vertex diagram
//! for ε). Undoing a free reduction attaches a spike, undoing a relator move
//! attaches a face along the replaced subword, and undoing a free expansion
//! zips two adjacent boundary edges together. When the two zipped edges
//! already close up a loop, zipping would enclose a sphere; the subdiagram
//! inside the loop is discarded instead, since its boundary word is freely
//! trivial.

use super::{edge_of, twin, Diagram, DiagramError};
use crate::dps::{replay, Basepoint, Move, NullSequence};
use crate::presentation::Presentation;
use crate::words::{Letter, Word};

/// Rewrites every relator move as a move that consumes exactly one letter,
/// padding with free moves: an insertion of `v` becomes an expansion by its
/// first letter followed by a replacement, and a move consuming `k ≥ 2`
/// letters becomes a one-letter replacement followed by `k − 1` free
/// reductions. Other moves are unchanged.
pub fn cellular_form(ns: &NullSequence) -> NullSequence {
    let mut moves = Vec::with_capacity(ns.moves.len());
    for m in &ns.moves {
        match m {
            Move::ApplyRelator { closure, consumed: 0, at } => {
                let v = closure.invert();
                let l = v.letters();
                moves.push(Move::FreeExpand { at: *at, letter: l[0] });
                let closure = Word::letter(l[0].inverse()).concat(&v.subword(1, v.len()).invert());
                moves.push(Move::ApplyRelator { closure, consumed: 1, at: at + 1 });
            }
            Move::ApplyRelator { closure, consumed, at } if *consumed >= 2 => {
                let k = *consumed;
                let vlen = closure.len() - k;
                moves.push(Move::ApplyRelator { closure: closure.clone(), consumed: 1, at: *at });
                for t in 0..k - 1 {
                    moves.push(Move::FreeReduce { at: at + vlen + k - 2 - t });
                }
            }
            other => moves.push(other.clone()),
        }
    }
    NullSequence::new(ns.start.clone(), moves)
}

struct Builder {
    origin: Vec<usize>,
    label: Vec<Letter>,
    edge_alive: Vec<bool>,
    rot: Vec<Vec<usize>>,
    vertex_alive: Vec<bool>,
    star: usize,
    base: Option<usize>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            origin: Vec::new(),
            label: Vec::new(),
            edge_alive: Vec::new(),
            rot: vec![Vec::new()],
            vertex_alive: vec![true],
            star: 0,
            base: None,
        }
    }

    fn dest(&self, h: usize) -> usize {
        self.origin[twin(h)]
    }

    fn rot_ccw(&self, h: usize) -> usize {
        let r = &self.rot[self.origin[h]];
        let p = r.iter().position(|&x| x == h).expect("half-edge in its rotation");
        r[(p + 1) % r.len()]
    }

    fn walk(&self) -> Vec<usize> {
        let Some(b) = self.base else { return Vec::new() };
        let mut walk = vec![b];
        let mut h = self.rot_ccw(twin(b));
        while h != b {
            walk.push(h);
            h = self.rot_ccw(twin(h));
            assert!(walk.len() <= self.origin.len(), "boundary walk does not close");
        }
        walk
    }

    fn word(&self) -> Word {
        self.walk().into_iter().map(|h| self.label[h]).collect()
    }

    fn corner_vertex(&self, walk: &[usize], j: usize) -> usize {
        if walk.is_empty() {
            self.star
        } else {
            self.origin[walk[j % walk.len()]]
        }
    }

    fn new_vertex(&mut self) -> usize {
        self.rot.push(Vec::new());
        self.vertex_alive.push(true);
        self.rot.len() - 1
    }

    fn new_edge(&mut self, u: usize, v: usize, l: Letter) -> usize {
        self.origin.extend([u, v]);
        self.label.extend([l, l.inverse()]);
        self.edge_alive.push(true);
        self.origin.len() - 2
    }

    fn insert_after(&mut self, v: usize, anchor: usize, h: usize) {
        let r = &mut self.rot[v];
        let p = r.iter().position(|&x| x == anchor).expect("anchor in rotation");
        r.insert(p + 1, h);
    }

    fn insert_before(&mut self, v: usize, anchor: usize, h: usize) {
        let r = &mut self.rot[v];
        let p = r.iter().position(|&x| x == anchor).expect("anchor in rotation");
        r.insert(p, h);
    }

    /// Undo a free reduction at `j` that removed `x x⁻¹`.
    fn spike(&mut self, j: usize, x: Letter) {
        let walk = self.walk();
        let n = walk.len();
        let v = self.corner_vertex(&walk, j);
        let r = self.new_vertex();
        let g = self.new_edge(v, r, x);
        if n == 0 {
            self.rot[v].push(g);
        } else {
            self.insert_after(v, twin(walk[(j + n - 1) % n]), g);
        }
        self.rot[r].push(twin(g));
        if j == 0 {
            self.base = Some(g);
        }
    }

    /// Undo a relator move that replaced the letter `x` at `j` by the `k`
    /// letters now at `j..j + k`.
    fn face(&mut self, j: usize, k: usize, x: Letter) {
        let walk = self.walk();
        let n = walk.len();
        let s = self.corner_vertex(&walk, j);
        let t = self.corner_vertex(&walk, j + k);
        let g = self.new_edge(s, t, x);
        if k == 0 {
            if n == 0 {
                self.rot[s].extend([g, twin(g)]);
            } else {
                self.insert_after(s, twin(walk[(j + n - 1) % n]), g);
                self.insert_after(s, g, twin(g));
            }
        } else {
            self.insert_after(t, twin(walk[j + k - 1]), twin(g));
            self.insert_before(s, walk[j], g);
        }
        if j == 0 {
            self.base = Some(g);
        }
    }

    /// Undo a free expansion that inserted the pair now at `j`, `j + 1`.
    fn fold(&mut self, j: usize) -> Result<(), String> {
        let walk = self.walk();
        let n = walk.len();
        let (e1, e2) = (walk[j], walk[j + 1]);
        let (p, r, q) = (self.origin[e1], self.origin[e2], self.dest(e2));
        let mut expected: Vec<usize> = walk.iter().enumerate().filter(|&(i, _)| i != j && i != j + 1).map(|(_, &h)| h).collect();
        if edge_of(e1) == edge_of(e2) || p == q {
            self.delete_lobe(e1, e2, p)?;
        } else {
            let mut rq = self.rot[q].clone();
            let start = rq.iter().position(|&h| h == walk[(j + 2) % n]).ok_or("walk and rotation disagree")?;
            rq.rotate_left(start);
            if rq.pop() != Some(twin(e2)) {
                return Err("walk and rotation disagree at a zipped corner".into());
            }
            let mut rp = self.rot[p].clone();
            let start = rp.iter().position(|&h| h == e1).ok_or("walk and rotation disagree")?;
            rp.rotate_left(start);
            if p == r {
                rp.retain(|&h| h != e2);
            }
            if q == r {
                rq.retain(|&h| h != e2);
            }
            for &h in &rq {
                self.origin[h] = p;
            }
            rp.extend(rq);
            self.rot[p] = rp;
            self.rot[q].clear();
            self.vertex_alive[q] = false;
            if r != p && r != q {
                self.rot[r].retain(|&h| h != e2);
            }
            self.edge_alive[edge_of(e2)] = false;
            if self.star == q {
                self.star = p;
            }
            for h in &mut expected {
                if *h == twin(e2) {
                    *h = e1;
                }
            }
        }
        self.base = expected.first().copied();
        if self.walk() != expected {
            return Err("zipping did not produce the expected boundary".into());
        }
        Ok(())
    }

    /// Removes everything enclosed by the loop `e1 e2` at `p`.
    fn delete_lobe(&mut self, e1: usize, e2: usize, p: usize) -> Result<(), String> {
        let r = &self.rot[p];
        let start = r.iter().position(|&h| h == e1).ok_or("lobe edge missing")?;
        let mut at_p = Vec::new();
        for s in 0..r.len() {
            let h = r[(start + s) % r.len()];
            at_p.push(h);
            if h == twin(e2) {
                break;
            }
        }
        let mut doomed_edges: Vec<usize> = at_p.iter().map(|&h| edge_of(h)).collect();
        let mut stack: Vec<usize> = at_p.iter().map(|&h| self.dest(h)).filter(|&v| v != p).collect();
        let mut doomed_vertices = Vec::new();
        while let Some(v) = stack.pop() {
            if v == p || !self.vertex_alive[v] || doomed_vertices.contains(&v) {
                continue;
            }
            if v == self.star {
                return Err("base vertex inside a discarded lobe".into());
            }
            doomed_vertices.push(v);
            for &h in &self.rot[v] {
                doomed_edges.push(edge_of(h));
                stack.push(self.dest(h));
            }
        }
        for &e in &doomed_edges {
            self.edge_alive[e] = false;
        }
        for &v in &doomed_vertices {
            self.vertex_alive[v] = false;
            self.rot[v].clear();
        }
        let alive = self.edge_alive.clone();
        self.rot[p].retain(|&h| alive[edge_of(h)]);
        Ok(())
    }

    fn shift(&mut self, k: usize) {
        let walk = self.walk();
        let n = walk.len();
        if n == 0 {
            return;
        }
        let b = walk[(n - k % n) % n];
        self.base = Some(b);
        self.star = self.origin[b];
    }

    fn finish(self) -> Result<Diagram, DiagramError> {
        let mut vmap = vec![usize::MAX; self.rot.len()];
        let mut nv = 0;
        for (v, &alive) in self.vertex_alive.iter().enumerate() {
            if alive {
                vmap[v] = nv;
                nv += 1;
            }
        }
        let mut emap = vec![usize::MAX; self.edge_alive.len()];
        let mut edges = Vec::new();
        for (e, &alive) in self.edge_alive.iter().enumerate() {
            if alive {
                emap[e] = edges.len();
                edges.push((vmap[self.origin[2 * e]], vmap[self.origin[2 * e + 1]], self.label[2 * e]));
            }
        }
        let hmap = |h: usize| 2 * emap[edge_of(h)] + (h & 1);
        let rot = self
            .rot
            .iter()
            .enumerate()
            .filter(|&(v, _)| self.vertex_alive[v])
            .map(|(_, r)| r.iter().map(|&h| hmap(h)).collect())
            .collect();
        Diagram::from_rotation(&edges, rot, vmap[self.star], self.base.map(hmap))
    }
}

/// A diagram for `ns.start` whose faces correspond to (a subset of) the
/// relator moves of `ns`. Relator moves are first put in one-letter form by
/// [`cellular_form`].
pub fn sequence_to_diagram(ns: &NullSequence, p: &Presentation) -> Result<Diagram, DiagramError> {
    let basepoint =
        if ns.moves.iter().any(|m| matches!(m, Move::CyclicShift { .. })) { Basepoint::Free } else { Basepoint::Fixed };
    let r = replay(ns, p, basepoint);
    if !r.is_null() {
        return Err(DiagramError::InvalidSequence(match r.first_invalid {
            Some(i) => format!("move {i} is illegal"),
            None => "the sequence does not end at the empty word".into(),
        }));
    }
    let cell = cellular_form(ns);
    let words = replay(&cell, p, basepoint).words;
    let internal = |m: String| DiagramError::InvalidSequence(format!("internal: {m}"));
    let mut b = Builder::new();
    for (i, m) in cell.moves.iter().enumerate().rev() {
        let w = &words[i];
        match m {
            Move::FreeReduce { at } => b.spike(*at, w.letters()[*at]),
            Move::FreeExpand { at, .. } => b.fold(*at).map_err(internal)?,
            Move::ApplyRelator { closure, at, .. } => b.face(*at, closure.len() - 1, closure.letters()[0]),
            Move::CyclicShift { offset } => b.shift(*offset),
        }
        if b.word() != *w {
            return Err(internal(format!("boundary mismatch after undoing move {i}")));
        }
    }
    let d = b.finish()?;
    debug_assert_eq!(d.boundary_word(), ns.start);
    Ok(d)
}
