//! Colored tree Jacobi diagrams modulo AS, with the `comm`, `η` and fission maps.
//!
//! # Planar convention
//!
//! A diagram is presented by a colored root leaf and a [`Shape`]. The vertex
//! created by `Shape::Node(a, b)` has the counterclockwise cyclic order
//! `(toward root, b, a)`, and the edge toward the root is labeled `[a, b]`.
//!
//! # Canonical form
//!
//! A diagram rooted at a leaf is encoded as a token string: the root color
//! `c` gives `c + 2`, a leaf of color `c` gives `c + 2`, and a node gives
//! `0`, then both children, then `1`. At each node the children are sorted so
//! that the smaller encoding comes first; every swap contributes a factor
//! `-1`. The canonical form is the least encoding over all root leaves. A
//! diagram equals its own negative (and is zero modulo AS) when two sibling
//! encodings coincide or two minimal rootings carry opposite signs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::koszul::{ExteriorChain, NilpotentBasis};
use crate::lie::{lyndon_basis, HTensorLie, LieElement};
use crate::linalg::{Matrix, PivotOrder};
use crate::rational::{serde_pq, Q};
use crate::tensor::Word;
use crate::Memo;

const OPEN: u8 = 0;
const CLOSE: u8 = 1;
const MAX_COLOR: usize = 250;

/// A planar rooted binary tree with colored leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Shape {
    Leaf(usize),
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn leaf(color: usize) -> Shape {
        Shape::Leaf(color)
    }

    pub fn node(a: Shape, b: Shape) -> Shape {
        Shape::Node(Box::new(a), Box::new(b))
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            Shape::Leaf(_) => 1,
            Shape::Node(a, b) => a.num_leaves() + b.num_leaves(),
        }
    }

    fn max_color(&self) -> usize {
        match self {
            Shape::Leaf(c) => *c,
            Shape::Node(a, b) => a.max_color().max(b.max_color()),
        }
    }

    fn min_color(&self) -> usize {
        match self {
            Shape::Leaf(c) => *c,
            Shape::Node(a, b) => a.min_color().min(b.min_color()),
        }
    }

    /// The iterated bracket `[a, b]` this shape stands for.
    pub fn to_lie(&self, n: usize, max_degree: usize) -> Result<LieElement> {
        match self {
            Shape::Leaf(c) => {
                if *c == 0 || *c > n {
                    return Err(Error::Index { index: *c, n });
                }
                Ok(LieElement::generator(n, max_degree, *c))
            }
            Shape::Node(a, b) => a.to_lie(n, max_degree)?.bracket(&b.to_lie(n, max_degree)?),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Leaf(c) => write!(f, "X{c}"),
            Shape::Node(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone)]
enum Vertex {
    Leaf {
        color: usize,
        nbr: usize,
    },
    /// Neighbors in counterclockwise order.
    Tri([usize; 3]),
}

/// Unrooted planar tree as an adjacency structure.
#[derive(Debug, Clone)]
struct Graph {
    vertices: Vec<Vertex>,
    /// Leaf vertex ids in presentation order, root first.
    leaves: Vec<usize>,
}

impl Graph {
    fn from_planar(root: usize, shape: &Shape) -> Graph {
        let mut g = Graph { vertices: vec![Vertex::Leaf { color: root, nbr: 1 }], leaves: vec![0] };
        g.add(shape, 0);
        g
    }

    fn add(&mut self, shape: &Shape, parent: usize) -> usize {
        let id = self.vertices.len();
        match shape {
            Shape::Leaf(c) => {
                self.vertices.push(Vertex::Leaf { color: *c, nbr: parent });
                self.leaves.push(id);
            }
            Shape::Node(a, b) => {
                self.vertices.push(Vertex::Tri([0; 3]));
                let ia = self.add(a, id);
                let ib = self.add(b, id);
                self.vertices[id] = Vertex::Tri([parent, ib, ia]);
            }
        }
        id
    }

    fn color(&self, leaf: usize) -> usize {
        match self.vertices[leaf] {
            Vertex::Leaf { color, .. } => color,
            Vertex::Tri(_) => unreachable!("not a leaf"),
        }
    }

    fn leaf_nbr(&self, leaf: usize) -> usize {
        match self.vertices[leaf] {
            Vertex::Leaf { nbr, .. } => nbr,
            Vertex::Tri(_) => unreachable!("not a leaf"),
        }
    }

    /// The two far neighbors of a trivalent `u` seen from `from`, as the
    /// planar children `(a, b)` of `Shape::Node(a, b)`.
    fn children(nbrs: &[usize; 3], from: usize) -> (usize, usize) {
        let p = nbrs.iter().position(|&x| x == from).expect("adjacent");
        (nbrs[(p + 2) % 3], nbrs[(p + 1) % 3])
    }

    /// Planar shape of the branch at `u` seen from its neighbor `from`.
    fn branch(&self, u: usize, from: usize) -> Shape {
        match &self.vertices[u] {
            Vertex::Leaf { color, .. } => Shape::Leaf(*color),
            Vertex::Tri(nbrs) => {
                let (a, b) = Self::children(nbrs, from);
                Shape::node(self.branch(a, u), self.branch(b, u))
            }
        }
    }

    /// Sorted encoding of the branch, with the AS sign, or `None` if the
    /// branch has an orientation-reversing symmetry.
    fn encode(&self, u: usize, from: usize) -> Option<(Vec<u8>, i32)> {
        match &self.vertices[u] {
            Vertex::Leaf { color, .. } => Some((vec![(*color + 2) as u8], 1)),
            Vertex::Tri(nbrs) => {
                let (a, b) = Self::children(nbrs, from);
                let (ca, sa) = self.encode(a, u)?;
                let (cb, sb) = self.encode(b, u)?;
                let (first, second, sign) = match ca.cmp(&cb) {
                    std::cmp::Ordering::Equal => return None,
                    std::cmp::Ordering::Less => (ca, cb, sa * sb),
                    std::cmp::Ordering::Greater => (cb, ca, -sa * sb),
                };
                let mut code = Vec::with_capacity(first.len() + second.len() + 2);
                code.push(OPEN);
                code.extend(first);
                code.extend(second);
                code.push(CLOSE);
                Some((code, sign))
            }
        }
    }

    fn canonical(&self) -> Option<(Vec<u8>, i32)> {
        let mut best: Option<(Vec<u8>, i32)> = None;
        for &r in &self.leaves {
            let (body, sign) = self.encode(self.leaf_nbr(r), r)?;
            let mut code = vec![(self.color(r) + 2) as u8];
            code.extend(body);
            match &best {
                Some((b, s)) if *b == code => {
                    if *s != sign {
                        return None;
                    }
                }
                Some((b, _)) if *b < code => {}
                _ => best = Some((code, sign)),
            }
        }
        best
    }
}

fn parse_shape(code: &[u8], pos: &mut usize) -> Shape {
    let t = code[*pos];
    *pos += 1;
    if t == OPEN {
        let a = parse_shape(code, pos);
        let b = parse_shape(code, pos);
        debug_assert_eq!(code[*pos], CLOSE);
        *pos += 1;
        Shape::node(a, b)
    } else {
        Shape::Leaf(t as usize - 2)
    }
}

/// A connected colored tree diagram in AS-canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeDiagram {
    code: Vec<u8>,
}

impl TreeDiagram {
    /// Canonicalizes a planar presentation: the presented diagram equals
    /// `sign * canonical`. `None` means it vanishes modulo AS.
    pub fn from_planar(root: usize, shape: &Shape) -> Result<Option<(TreeDiagram, i32)>> {
        let lo = root.min(shape.min_color());
        let hi = root.max(shape.max_color());
        if lo == 0 || hi > MAX_COLOR {
            return Err(Error::Index { index: if lo == 0 { 0 } else { hi }, n: MAX_COLOR });
        }
        Ok(Graph::from_planar(root, shape).canonical().map(|(code, sign)| (TreeDiagram { code }, sign)))
    }

    /// The degree-1 diagram with two leaves.
    pub fn edge(a: usize, b: usize) -> Result<TreeDiagram> {
        Ok(Self::from_planar(a, &Shape::Leaf(b))?.expect("an edge is never zero").0)
    }

    /// Planar presentation of the canonical form: `(root color, shape)`.
    pub fn planar(&self) -> (usize, Shape) {
        let mut pos = 1;
        (self.code[0] as usize - 2, parse_shape(&self.code, &mut pos))
    }

    fn graph(&self) -> Graph {
        let (r, s) = self.planar();
        Graph::from_planar(r, &s)
    }

    /// Number of leaves minus one.
    pub fn degree(&self) -> usize {
        self.code.iter().filter(|&&t| t >= 2).count() - 1
    }

    /// Leaf colors, the canonical root first, then the leaves of the
    /// canonical shape from left to right.
    pub fn leaf_colors(&self) -> Vec<usize> {
        self.code.iter().filter(|&&t| t >= 2).map(|&t| t as usize - 2).collect()
    }

    pub fn max_color(&self) -> usize {
        self.leaf_colors().into_iter().max().unwrap_or(0)
    }

    fn check_n(&self, n: usize) -> Result<()> {
        let m = self.max_color();
        if m > n {
            return Err(Error::Index { index: m, n });
        }
        Ok(())
    }

    /// `comm(T_v)` for the leaf `v` at position `leaf` of [`Self::leaf_colors`].
    pub fn comm(&self, n: usize, leaf: usize) -> Result<LieElement> {
        self.check_n(n)?;
        let g = self.graph();
        let &v = g.leaves.get(leaf).ok_or(Error::Precondition(format!(
            "leaf {leaf} does not exist; the diagram has {} leaves",
            g.leaves.len()
        )))?;
        g.branch(g.leaf_nbr(v), v).to_lie(n, self.degree())
    }

    /// `η(T) = sum_v col(v) ⊗ comm(T_v)`.
    pub fn eta(&self, n: usize) -> Result<HTensorLie> {
        self.check_n(n)?;
        let l = self.degree();
        let g = self.graph();
        let mut entries: Vec<LieElement> = (0..n).map(|_| LieElement::zero(n, l)).collect();
        for &v in &g.leaves {
            let c = g.color(v);
            let y = g.branch(g.leaf_nbr(v), v).to_lie(n, l)?;
            entries[c - 1] = entries[c - 1].try_add(&y)?;
        }
        HTensorLie::new(entries)
    }

    /// `φ(T) = sum_r comm(T_r^(3)) ∧ comm(T_r^(2)) ∧ comm(T_r^(1))` over
    /// trivalent `r`, reduced into the given nilpotent quotient.
    pub fn fission(&self, basis: &Arc<NilpotentBasis>) -> Result<ExteriorChain> {
        let n = basis.n();
        self.check_n(n)?;
        let l = self.degree();
        let g = self.graph();
        let mut out = ExteriorChain::zero(basis.clone(), 3);
        for (r, v) in g.vertices.iter().enumerate() {
            if let Vertex::Tri(nbrs) = v {
                let parts: Vec<LieElement> =
                    nbrs.iter().rev().map(|&u| g.branch(u, r).to_lie(n, l)).collect::<Result<_>>()?;
                out = out.try_add(&ExteriorChain::wedge(basis.clone(), &parts))?;
            }
        }
        Ok(out)
    }

    /// `sum_v col(v) ∧ comm(T_v)` in `Λ^2`.
    pub fn leaf_wedge_sum(&self, basis: &Arc<NilpotentBasis>) -> Result<ExteriorChain> {
        let n = basis.n();
        self.check_n(n)?;
        let l = self.degree();
        let g = self.graph();
        let mut out = ExteriorChain::zero(basis.clone(), 2);
        for &v in &g.leaves {
            let x = LieElement::generator(n, l, g.color(v));
            let y = g.branch(g.leaf_nbr(v), v).to_lie(n, l)?;
            out = out.try_add(&ExteriorChain::wedge(basis.clone(), &[x, y]))?;
        }
        Ok(out)
    }

    /// Graphviz rendering. Edges point away from the canonical root; at a
    /// trivalent vertex entered along its in-edge the two out-edges are
    /// listed in counterclockwise order.
    pub fn to_dot(&self, name: &str) -> String {
        let g = self.graph();
        let mut s = format!("digraph \"{name}\" {{\n  edge [dir=none];\n");
        for (id, v) in g.vertices.iter().enumerate() {
            match v {
                Vertex::Leaf { color, .. } => s += &format!("  v{id} [shape=circle, label=\"X{color}\"];\n"),
                Vertex::Tri(_) => s += &format!("  v{id} [shape=point];\n"),
            }
        }
        s += &format!("  v0 -> v{};\n", g.leaf_nbr(0));
        for (id, v) in g.vertices.iter().enumerate() {
            if let Vertex::Tri(nbrs) = v {
                s += &format!("  v{id} -> v{};\n  v{id} -> v{};\n", nbrs[1], nbrs[2]);
            }
        }
        s += "}\n";
        s
    }
}

impl fmt::Display for TreeDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (r, s) = self.planar();
        write!(f, "X{r} : {s}")
    }
}

/// A rational combination of canonical diagrams.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeCombination {
    terms: BTreeMap<TreeDiagram, Q>,
}

/// One serialized term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTermJson {
    pub root: usize,
    pub shape: String,
    pub degree: usize,
    #[serde(with = "serde_pq")]
    pub coefficient: Q,
}

impl TreeCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(t: TreeDiagram) -> Self {
        let mut s = Self::zero();
        s.add_term(t, Q::one());
        s
    }

    /// Adds a planar presentation, canonicalizing it.
    pub fn add_planar(&mut self, root: usize, shape: &Shape, c: Q) -> Result<()> {
        if let Some((t, sign)) = TreeDiagram::from_planar(root, shape)? {
            self.add_term(t, if sign < 0 { -c } else { c });
        }
        Ok(())
    }

    pub fn add_term(&mut self, t: TreeDiagram, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(t.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&t);
        }
    }

    pub fn add_scaled(&self, other: &TreeCombination, c: &Q) -> TreeCombination {
        let mut s = self.clone();
        for (t, v) in &other.terms {
            s.add_term(t.clone(), v * c);
        }
        s
    }

    pub fn scale(&self, c: &Q) -> TreeCombination {
        TreeCombination::zero().add_scaled(self, c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TreeDiagram, &Q)> {
        self.terms.iter()
    }

    pub fn degrees(&self) -> BTreeSet<usize> {
        self.terms.keys().map(TreeDiagram::degree).collect()
    }

    pub fn degree_part(&self, d: usize) -> TreeCombination {
        TreeCombination {
            terms: self.terms.iter().filter(|(t, _)| t.degree() == d).map(|(t, c)| (t.clone(), c.clone())).collect(),
        }
    }

    /// `η` extended linearly; entries truncated at `max_degree`.
    pub fn eta(&self, n: usize, max_degree: usize) -> Result<HTensorLie> {
        let mut acc = HTensorLie::zero(n, max_degree);
        for (t, c) in &self.terms {
            acc = acc.add_scaled(&t.eta(n)?.retruncate(max_degree), c)?;
        }
        Ok(acc)
    }

    pub fn fission(&self, basis: &Arc<NilpotentBasis>) -> Result<ExteriorChain> {
        let mut acc = ExteriorChain::zero(basis.clone(), 3);
        for (t, c) in &self.terms {
            acc = acc.add_scaled(&t.fission(basis)?, c)?;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Vec<TreeTermJson> {
        self.terms
            .iter()
            .map(|(t, c)| {
                let (root, shape) = t.planar();
                TreeTermJson { root, shape: shape.to_string(), degree: t.degree(), coefficient: c.clone() }
            })
            .collect()
    }
}

/// Planar binary shapes with `leaves` leaves, all colored 0.
fn shapes(leaves: usize) -> Vec<Shape> {
    if leaves == 1 {
        return vec![Shape::Leaf(0)];
    }
    let mut out = Vec::new();
    for left in 1..leaves {
        for a in shapes(left) {
            for b in shapes(leaves - left) {
                out.push(Shape::node(a.clone(), b));
            }
        }
    }
    out
}

fn recolor(s: &Shape, colors: &mut impl Iterator<Item = usize>) -> Shape {
    match s {
        Shape::Leaf(_) => Shape::Leaf(colors.next().expect("enough colors")),
        Shape::Node(a, b) => {
            let a = recolor(a, colors);
            Shape::node(a, recolor(b, colors))
        }
    }
}

/// Largest supported `(n, l)` for enumeration.
pub const ENUMERATION_LIMIT: (usize, usize) = (4, 5);

/// Every nonzero canonical diagram of degree `l` colored by `1..=n`.
pub fn enumerate_trees(n: usize, l: usize) -> Result<Arc<Vec<TreeDiagram>>> {
    static CACHE: Memo<(usize, usize), Vec<TreeDiagram>> = OnceLock::new();
    if n == 0 || l == 0 {
        return Err(Error::Precondition("enumeration needs n >= 1 and l >= 1".into()));
    }
    if n > ENUMERATION_LIMIT.0 || l > ENUMERATION_LIMIT.1 {
        return Err(Error::ScaleLimit(format!(
            "tree enumeration supports n <= {} and degree <= {}, got n = {n}, degree = {l}",
            ENUMERATION_LIMIT.0, ENUMERATION_LIMIT.1
        )));
    }
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.read().unwrap().get(&(n, l)) {
        return Ok(v.clone());
    }
    let mut found = BTreeSet::new();
    let total = n.pow(l as u32);
    for s in shapes(l) {
        for code in 0..total {
            let mut digits = (0..l).scan(code, |c, _| {
                let d = *c % n;
                *c /= n;
                Some(d + 1)
            });
            let colored = recolor(&s, &mut digits);
            for root in 1..=n {
                if let Some((t, _)) = TreeDiagram::from_planar(root, &colored)? {
                    found.insert(t);
                }
            }
        }
    }
    let v = Arc::new(found.into_iter().collect::<Vec<_>>());
    cache.write().unwrap().insert((n, l), v.clone());
    Ok(v)
}

/// Row index of `(i, w)` in `H ⊗ L_l` coordinates.
fn eta_rows(n: usize, l: usize) -> (usize, HashMap<(usize, Word), usize>) {
    let basis = lyndon_basis(n, l);
    let mut index = HashMap::new();
    for i in 1..=n {
        for (k, w) in basis.iter().enumerate() {
            index.insert((i, *w), (i - 1) * basis.len() + k);
        }
    }
    (n * basis.len(), index)
}

fn eta_vector(x: &HTensorLie, l: usize, index: &HashMap<(usize, Word), usize>, rows: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); rows];
    for i in 1..=x.n() {
        for (w, c) in x.entry(i).degree_coords(l) {
            v[index[&(i, *w)]] = c.clone();
        }
    }
    v
}

/// Matrix of `η` on [`enumerate_trees`]`(n, l)`.
pub fn eta_matrix(n: usize, l: usize) -> Result<Arc<Matrix>> {
    static CACHE: Memo<(usize, usize), Matrix> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.read().unwrap().get(&(n, l)) {
        return Ok(m.clone());
    }
    let trees = enumerate_trees(n, l)?;
    let (rows, index) = eta_rows(n, l);
    let cols: Vec<Vec<(usize, Q)>> = trees
        .iter()
        .map(|t| {
            let v = eta_vector(&t.eta(n)?, l, &index, rows);
            Ok(v.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect())
        })
        .collect::<Result<_>>()?;
    let m = Arc::new(Matrix::from_sparse_columns(rows, &cols));
    cache.write().unwrap().insert((n, l), m.clone());
    Ok(m)
}

/// A tree combination with `η(result) = x`, degree by degree.
pub fn eta_inverse(x: &HTensorLie) -> Result<TreeCombination> {
    let n = x.n();
    let mut out = TreeCombination::zero();
    let Some(top) = x.top_degree() else { return Ok(out) };
    for l in 1..=top {
        let part = x.degree_part(l);
        if part.is_zero() {
            continue;
        }
        if !part.in_d()? {
            return Err(Error::NotInD { degree: l });
        }
        let trees = enumerate_trees(n, l)?;
        let m = eta_matrix(n, l)?;
        let (rows, index) = eta_rows(n, l);
        let rhs = eta_vector(&part, l, &index, rows);
        let sol = m
            .solve(&rhs, PivotOrder::Forward)
            .ok_or_else(|| Error::Internal(format!("rank deficiency of the enumerated span in degree {l}")))?;
        for (t, c) in trees.iter().zip(sol) {
            out.add_term(t.clone(), c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koszul::nilpotent_basis;
    use crate::lie::d_dimension;
    use crate::rational::q;

    fn leaf(c: usize) -> Shape {
        Shape::leaf(c)
    }

    fn node(a: Shape, b: Shape) -> Shape {
        Shape::node(a, b)
    }

    fn gen(n: usize, d: usize, i: usize) -> LieElement {
        LieElement::generator(n, d, i)
    }

    #[test]
    fn edge_comm_and_eta() {
        let t = TreeDiagram::edge(2, 1).unwrap();
        assert_eq!(t.degree(), 1);
        assert_eq!(t.leaf_colors(), vec![1, 2]);
        assert_eq!(t.comm(2, 0).unwrap(), gen(2, 1, 2));
        let eta = t.eta(2).unwrap();
        assert_eq!(eta.entry(1), &gen(2, 1, 2));
        assert_eq!(eta.entry(2), &gen(2, 1, 1));
    }

    #[test]
    fn worked_example_comm() {
        let shape = node(node(node(leaf(1), leaf(2)), node(leaf(3), leaf(4))), leaf(5));
        let (t, sign) = TreeDiagram::from_planar(6, &shape).unwrap().unwrap();
        assert_eq!(t.degree(), 5);
        let root = t.leaf_colors().iter().position(|&c| c == 6).unwrap();
        let comm = t.comm(6, root).unwrap().scale(&q(sign as i64));
        let x = |i| gen(6, 5, i);
        let b = |a: LieElement, c: LieElement| a.bracket(&c).unwrap();
        let expected = b(b(b(x(1), x(2)), b(x(3), x(4))), x(5));
        assert_eq!(comm, expected);
    }

    #[test]
    fn tripod_sign_follows_cyclic_order() {
        let (t, sign) = TreeDiagram::from_planar(3, &node(leaf(1), leaf(2))).unwrap().unwrap();
        let root = t.leaf_colors().iter().position(|&c| c == 3).unwrap();
        let comm = t.comm(3, root).unwrap().scale(&q(sign as i64));
        assert_eq!(comm, gen(3, 2, 1).bracket(&gen(3, 2, 2)).unwrap());
        let (u, s2) = TreeDiagram::from_planar(3, &node(leaf(2), leaf(1))).unwrap().unwrap();
        assert_eq!(t, u);
        assert_eq!(sign, -s2);
    }

    #[test]
    fn tripod_fission() {
        // Leaves a=1, b=2, c=3 in counterclockwise order around the vertex.
        let (t, sign) = TreeDiagram::from_planar(1, &node(leaf(3), leaf(2))).unwrap().unwrap();
        let basis = nilpotent_basis(3, 2);
        let phi = t.fission(&basis).unwrap().scale(&q(sign as i64));
        let expected = ExteriorChain::wedge(basis, &[gen(3, 1, 3), gen(3, 1, 2), gen(3, 1, 1)]);
        assert_eq!(phi, expected);
    }

    #[test]
    fn symmetric_diagrams_vanish() {
        assert!(TreeDiagram::from_planar(1, &node(leaf(2), leaf(2))).unwrap().is_none());
        // Degree 3 "H" with matching halves swapped by a rotation.
        let h = node(node(leaf(1), leaf(2)), leaf(1));
        let r = TreeDiagram::from_planar(2, &h).unwrap();
        if let Some((t, _)) = r {
            assert!(!t.eta(2).unwrap().is_zero());
        }
    }

    #[test]
    fn rerooting_is_consistent() {
        let shape = node(node(leaf(1), leaf(2)), node(leaf(3), leaf(1)));
        let (t, s) = TreeDiagram::from_planar(2, &shape).unwrap().unwrap();
        let g = Graph::from_planar(2, &shape);
        for &r in &g.leaves {
            let (u, s2) = TreeDiagram::from_planar(g.color(r), &g.branch(g.leaf_nbr(r), r)).unwrap().unwrap();
            assert_eq!(t, u);
            assert_eq!(s, s2);
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_trees(2, 1).unwrap().len(), 3);
        for n in 1..=4 {
            assert_eq!(enumerate_trees(n, 1).unwrap().len(), n * (n + 1) / 2);
        }
        assert!(matches!(enumerate_trees(5, 2), Err(Error::ScaleLimit(_))));
    }

    #[test]
    fn eta_rank_is_dim_d() {
        for (n, l) in [(2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (2, 4)] {
            assert_eq!(eta_matrix(n, l).unwrap().rank(), d_dimension(n, l), "n={n} l={l}");
        }
    }

    #[test]
    fn eta_lands_in_d() {
        for (n, l) in [(2, 3), (3, 3)] {
            for t in enumerate_trees(n, l).unwrap().iter() {
                assert!(t.eta(n).unwrap().in_d().unwrap());
            }
        }
    }

    #[test]
    fn eta_inverse_of_symmetric_edge() {
        let x = HTensorLie::new(vec![gen(2, 1, 2), gen(2, 1, 1)]).unwrap();
        let b = eta_inverse(&x).unwrap();
        assert_eq!(b, TreeCombination::single(TreeDiagram::edge(1, 2).unwrap()));
        assert!(eta_inverse(&HTensorLie::zero(2, 3)).unwrap().is_zero());
        let bad = HTensorLie::new(vec![gen(2, 1, 2), LieElement::zero(2, 1)]).unwrap();
        assert_eq!(eta_inverse(&bad), Err(Error::NotInD { degree: 1 }));
    }

    #[test]
    fn eta_inverse_round_trip() {
        for t in enumerate_trees(3, 3).unwrap().iter().take(40) {
            let x = t.eta(3).unwrap();
            assert_eq!(eta_inverse(&x).unwrap().eta(3, 3).unwrap(), x);
        }
    }

    #[test]
    fn ihx_in_kernel_of_eta() {
        let (a, b, c) = (node(leaf(1), leaf(2)), leaf(3), node(leaf(2), leaf(3)));
        let mut sum = TreeCombination::zero();
        sum.add_planar(1, &node(node(a.clone(), b.clone()), c.clone()), q(1)).unwrap();
        sum.add_planar(1, &node(node(b.clone(), c.clone()), a.clone()), q(1)).unwrap();
        sum.add_planar(1, &node(node(c, a), b), q(1)).unwrap();
        assert!(!sum.is_zero());
        assert!(sum.eta(3, 5).unwrap().is_zero());
    }

    #[test]
    fn fission_boundary_identity() {
        for (n, l) in [(2, 2), (3, 3)] {
            let basis = nilpotent_basis(n, l);
            for t in enumerate_trees(n, l).unwrap().iter() {
                assert_eq!(t.fission(&basis).unwrap().boundary(), t.leaf_wedge_sum(&basis).unwrap(), "{t}");
            }
        }
    }

    #[test]
    fn dot_lists_every_vertex() {
        let (t, _) = TreeDiagram::from_planar(3, &node(leaf(1), leaf(2))).unwrap().unwrap();
        let dot = t.to_dot("tripod");
        assert_eq!(dot.matches("shape=circle").count(), 3);
        assert_eq!(dot.matches("shape=point").count(), 1);
        assert_eq!(dot.matches("->").count(), 3);
    }
}
