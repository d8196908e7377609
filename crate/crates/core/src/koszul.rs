//! Exterior powers of free nilpotent Lie algebras, the Koszul boundary and
//! graded homology with explicit bases.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lie::{lyndon_basis, LieElement};
use crate::linalg::{Matrix, PivotOrder};
use crate::rational::{to_pq, Q};
use crate::tensor::Word;
use crate::trees::{enumerate_trees, TreeCombination};
use crate::Memo;

type Coords = Vec<(usize, Q)>;

/// Lyndon basis of `L / L_{>= c+1}`, ordered by degree then lexicographically.
#[derive(Debug)]
pub struct NilpotentBasis {
    n: usize,
    class: usize,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    brackets: RwLock<HashMap<(usize, usize), Arc<Coords>>>,
}

/// Shared basis for `(n, c)`.
pub fn nilpotent_basis(n: usize, class: usize) -> Arc<NilpotentBasis> {
    static CACHE: Memo<(usize, usize), NilpotentBasis> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.read().unwrap().get(&(n, class)) {
        return b.clone();
    }
    let words: Vec<Word> = (1..=class).flat_map(|d| lyndon_basis(n, d).iter().copied().collect::<Vec<_>>()).collect();
    let index = words.iter().enumerate().map(|(k, w)| (*w, k)).collect();
    let b = Arc::new(NilpotentBasis { n, class, words, index, brackets: RwLock::default() });
    cache.write().unwrap().entry((n, class)).or_insert(b).clone()
}

impl NilpotentBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, k: usize) -> Word {
        self.words[k]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.words[k].len()
    }

    pub fn index_of(&self, w: Word) -> Option<usize> {
        self.index.get(&w).copied()
    }

    /// Coordinates of a Lie element, dropping degrees above the class.
    pub fn coords(&self, x: &LieElement) -> Vec<(usize, Q)> {
        x.terms().filter(|(w, _)| w.len() <= self.class).map(|(w, c)| (self.index[&w], c.clone())).collect()
    }

    pub fn to_lie(&self, k: usize) -> LieElement {
        LieElement::basis(self.n, self.class, self.words[k]).expect("basis word")
    }

    /// `[e_a, e_b]` modulo degree `> c`.
    pub fn bracket(&self, a: usize, b: usize) -> Arc<Vec<(usize, Q)>> {
        if let Some(r) = self.brackets.read().unwrap().get(&(a, b)) {
            return r.clone();
        }
        let r = if self.degree(a) + self.degree(b) > self.class {
            Vec::new()
        } else {
            self.coords(&self.to_lie(a).bracket(&self.to_lie(b)).expect("same n"))
        };
        let r = Arc::new(r);
        self.brackets.write().unwrap().insert((a, b), r.clone());
        r
    }

    /// Strictly increasing `p`-tuples of total degree `d`, in lexicographic order.
    pub fn tuples(&self, p: usize, d: usize) -> Vec<Vec<usize>> {
        fn go(
            b: &NilpotentBasis,
            start: usize,
            left: usize,
            deg: usize,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if left == 0 {
                if deg == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            for k in start..b.len() {
                let dk = b.degree(k);
                // Later elements have degree >= dk.
                if dk * left > deg {
                    break;
                }
                cur.push(k);
                go(b, k + 1, left - 1, deg - dk, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(self, 0, p, d, &mut Vec::new(), &mut out);
        out
    }
}

/// Sorts `t` in place, returning the permutation sign, or `None` when an
/// index repeats.
fn sort_with_sign(t: &mut [usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..t.len() {
        let mut j = i;
        while j > 0 && t[j - 1] > t[j] {
            t.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if t.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// An element of `Λ^p (L / L_{>= c+1})`.
#[derive(Debug, Clone)]
pub struct ExteriorChain {
    basis: Arc<NilpotentBasis>,
    p: usize,
    coords: BTreeMap<Vec<usize>, Q>,
}

impl PartialEq for ExteriorChain {
    fn eq(&self, other: &Self) -> bool {
        self.basis.n == other.basis.n
            && self.basis.class == other.basis.class
            && self.p == other.p
            && self.coords == other.coords
    }
}

impl Eq for ExteriorChain {}

impl ExteriorChain {
    pub fn zero(basis: Arc<NilpotentBasis>, p: usize) -> Self {
        ExteriorChain { basis, p, coords: BTreeMap::new() }
    }

    pub fn basis(&self) -> &Arc<NilpotentBasis> {
        &self.basis
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Q)> {
        self.coords.iter()
    }

    pub fn coeff(&self, tuple: &[usize]) -> Q {
        self.coords.get(tuple).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `c * e_{t_1} ∧ ... ∧ e_{t_p}` for an arbitrary index tuple.
    pub fn add_wedge(&mut self, tuple: &[usize], c: Q) {
        debug_assert_eq!(tuple.len(), self.p);
        if c.is_zero() {
            return;
        }
        let mut t = tuple.to_vec();
        let Some(sign) = sort_with_sign(&mut t) else { return };
        let c = if sign < 0 { -c } else { c };
        let e = self.coords.entry(t.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.coords.remove(&t);
        }
    }

    /// `x_1 ∧ ... ∧ x_p`, each factor reduced modulo degree `> c`.
    pub fn wedge(basis: Arc<NilpotentBasis>, factors: &[LieElement]) -> Self {
        let mut out = ExteriorChain::zero(basis.clone(), factors.len());
        let expanded: Vec<Vec<(usize, Q)>> = factors.iter().map(|f| basis.coords(f)).collect();
        fn go(ex: &[Vec<(usize, Q)>], k: usize, cur: &mut Vec<usize>, c: Q, out: &mut ExteriorChain) {
            if k == ex.len() {
                out.add_wedge(cur, c);
                return;
            }
            for (idx, v) in &ex[k] {
                if cur.contains(idx) {
                    continue;
                }
                cur.push(*idx);
                go(ex, k + 1, cur, &c * v, out);
                cur.pop();
            }
        }
        go(&expanded, 0, &mut Vec::new(), Q::one(), &mut out);
        out
    }

    fn check_compatible(&self, other: &ExteriorChain) -> Result<()> {
        if self.p != other.p || self.basis.n != other.basis.n || self.basis.class != other.basis.class {
            return Err(Error::Mismatch(format!(
                "chains in Λ^{} (n={}, c={}) and Λ^{} (n={}, c={})",
                self.p, self.basis.n, self.basis.class, other.p, other.basis.n, other.basis.class
            )));
        }
        Ok(())
    }

    pub fn add_scaled(&self, other: &ExteriorChain, c: &Q) -> Result<ExteriorChain> {
        self.check_compatible(other)?;
        let mut s = self.clone();
        for (t, v) in &other.coords {
            let e = s.coords.entry(t.clone()).or_insert_with(Q::zero);
            *e += v * c;
            if e.is_zero() {
                s.coords.remove(t);
            }
        }
        Ok(s)
    }

    pub fn try_add(&self, other: &ExteriorChain) -> Result<ExteriorChain> {
        self.add_scaled(other, &Q::one())
    }

    pub fn try_sub(&self, other: &ExteriorChain) -> Result<ExteriorChain> {
        self.add_scaled(other, &-Q::one())
    }

    pub fn scale(&self, c: &Q) -> ExteriorChain {
        let mut s = self.clone();
        if c.is_zero() {
            s.coords.clear();
        } else {
            for v in s.coords.values_mut() {
                *v *= c;
            }
        }
        s
    }

    pub fn tuple_degree(&self, t: &[usize]) -> usize {
        t.iter().map(|&k| self.basis.degree(k)).sum()
    }

    /// Internal degrees present.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.coords.keys().map(|t| self.tuple_degree(t)).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn degree_part(&self, d: usize) -> ExteriorChain {
        let mut s = ExteriorChain::zero(self.basis.clone(), self.p);
        s.coords = self
            .coords
            .iter()
            .filter(|(t, _)| self.tuple_degree(t) == d)
            .map(|(t, c)| (t.clone(), c.clone()))
            .collect();
        s
    }

    /// Image in `Λ^p (L / L_{>= class+1})`; requires `class <= c`.
    pub fn reduce(&self, class: usize) -> Result<ExteriorChain> {
        if class > self.basis.class {
            return Err(Error::Precondition(format!(
                "cannot lift a class-{} chain to class {class}",
                self.basis.class
            )));
        }
        let target = nilpotent_basis(self.basis.n, class);
        let cutoff = target.len();
        let mut s = ExteriorChain::zero(target, self.p);
        s.coords = self
            .coords
            .iter()
            .filter(|(t, _)| t.iter().all(|&k| k < cutoff))
            .map(|(t, c)| (t.clone(), c.clone()))
            .collect();
        Ok(s)
    }

    /// The Koszul boundary
    /// `∂(h_1 ∧ ... ∧ h_p) = sum_{i<j} (-1)^{i+j} [h_i, h_j] ∧ h_1 ∧ ..ĥ_i..ĥ_j.. ∧ h_p`.
    pub fn boundary(&self) -> ExteriorChain {
        let mut out = ExteriorChain::zero(self.basis.clone(), self.p.saturating_sub(1));
        if self.p <= 1 {
            return out;
        }
        for (t, c) in &self.coords {
            for i in 0..self.p {
                for j in i + 1..self.p {
                    // 1-based exponent i+j equals 0-based (i+1)+(j+1).
                    let sign = if (i + j) % 2 == 0 { c.clone() } else { -c.clone() };
                    let rest: Vec<usize> =
                        t.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, v)| *v).collect();
                    for (e, v) in self.basis.bracket(t[i], t[j]).iter() {
                        let mut tuple = Vec::with_capacity(self.p - 1);
                        tuple.push(*e);
                        tuple.extend_from_slice(&rest);
                        out.add_wedge(&tuple, &sign * v);
                    }
                }
            }
        }
        out
    }

    fn vector(&self, index: &HashMap<Vec<usize>, usize>, len: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); len];
        for (t, c) in &self.coords {
            v[index[t]] = c.clone();
        }
        v
    }
}

/// `∂` as a matrix from `Λ^p` of degree `d` to `Λ^{p-1}` of degree `d`.
fn boundary_matrix(basis: &Arc<NilpotentBasis>, p: usize, d: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>, Matrix) {
    let src = basis.tuples(p, d);
    let dst = if p >= 2 { basis.tuples(p - 1, d) } else { Vec::new() };
    let index: HashMap<&Vec<usize>, usize> = dst.iter().enumerate().map(|(k, t)| (t, k)).collect();
    let cols: Vec<Vec<(usize, Q)>> = src
        .iter()
        .map(|t| {
            let mut ch = ExteriorChain::zero(basis.clone(), p);
            ch.coords.insert(t.clone(), Q::one());
            ch.boundary().coords.into_iter().map(|(u, c)| (index[&u], c)).collect()
        })
        .collect();
    let m = Matrix::from_sparse_columns(dst.len(), &cols);
    (src, dst, m)
}

/// Solves `∂_3 t = target` degree by degree; `order` selects which of the
/// (generally many) solutions is returned.
pub fn solve_boundary(target: &ExteriorChain, order: PivotOrder) -> Result<ExteriorChain> {
    if target.p() != 2 {
        return Err(Error::Precondition("solve_boundary expects a 2-chain".into()));
    }
    let basis = target.basis().clone();
    let mut out = ExteriorChain::zero(basis.clone(), 3);
    for d in target.degrees() {
        let (src, dst, m) = boundary_matrix(&basis, 3, d);
        let index: HashMap<Vec<usize>, usize> = dst.iter().enumerate().map(|(k, t)| (t.clone(), k)).collect();
        let rhs = target.degree_part(d).vector(&index, dst.len());
        let x = m
            .solve(&rhs, order)
            .ok_or_else(|| Error::Precondition(format!("2-chain is not a boundary in degree {d}")))?;
        for (t, c) in src.iter().zip(x) {
            out.add_wedge(t, c);
        }
    }
    Ok(out)
}

/// Homology of one internal degree.
#[derive(Debug)]
struct Block {
    chains: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    cycle_test: Matrix,
    dim_kernel: usize,
    dim_image: usize,
    image: Matrix,
    reps: Vec<Vec<Q>>,
}

/// `H_p(L / L_{>= c+1})` with a deterministic basis of cycle representatives.
#[derive(Debug)]
pub struct Homology {
    basis: Arc<NilpotentBasis>,
    p: usize,
    blocks: BTreeMap<usize, Block>,
    fingerprint: String,
}

/// One row of a homology dimension table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DegreeDims {
    pub degree: usize,
    pub dim_chains: usize,
    pub dim_kernel: usize,
    pub dim_image: usize,
    pub dim_homology: usize,
}

/// Computes `H_p` of the class-`c` free nilpotent Lie algebra on `n` generators.
pub fn homology(p: usize, n: usize, class: usize) -> Result<Arc<Homology>> {
    static CACHE: Memo<(usize, usize, usize), Homology> = OnceLock::new();
    if p == 0 || p > 4 {
        return Err(Error::Precondition(format!("homology is available for 1 <= p <= 4, got {p}")));
    }
    if n == 0 || class == 0 {
        return Err(Error::Precondition("need n >= 1 and class >= 1".into()));
    }
    let cache = CACHE.get_or_init(Default::default);
    if let Some(h) = cache.read().unwrap().get(&(p, n, class)) {
        return Ok(h.clone());
    }
    let basis = nilpotent_basis(n, class);
    let mut blocks = BTreeMap::new();
    let mut hasher = Sha256::new();
    hasher.update(format!("H{p} n={n} c={class}\n"));
    for d in p..=p * class {
        let (chains, _, dp) = boundary_matrix(&basis, p, d);
        if chains.is_empty() {
            continue;
        }
        let (_, _, dq) = boundary_matrix(&basis, p + 1, d);
        let kernel = dp.nullspace();
        let dim_image = dq.rank();
        // Representatives: kernel vectors that are pivots of [image | kernel].
        let mut cols: Vec<Vec<(usize, Q)>> = (0..dq.cols())
            .map(|c| dq.column(c).into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        cols.extend(kernel.iter().map(|k| k.iter().cloned().enumerate().filter(|(_, v)| !v.is_zero()).collect()));
        let joint = Matrix::from_sparse_columns(chains.len(), &cols);
        let rref = joint.rref_augmented(&[], PivotOrder::Forward);
        let reps: Vec<Vec<Q>> =
            rref.pivots.iter().filter(|&&c| c >= dq.cols()).map(|&c| kernel[c - dq.cols()].clone()).collect();
        if reps.len() != kernel.len() - dim_image {
            return Err(Error::Internal(format!("homology bookkeeping failed in degree {d}")));
        }
        hasher.update(format!("d={d} dim={}\n", reps.len()));
        for r in &reps {
            let line: Vec<String> = r.iter().map(to_pq).collect();
            hasher.update(line.join(","));
            hasher.update("\n");
        }
        let index = chains.iter().enumerate().map(|(k, t)| (t.clone(), k)).collect();
        blocks.insert(d, Block { chains, index, cycle_test: dp, dim_kernel: kernel.len(), dim_image, image: dq, reps });
    }
    let h = Arc::new(Homology { basis, p, blocks, fingerprint: hex::encode(hasher.finalize()) });
    cache.write().unwrap().insert((p, n, class), h.clone());
    Ok(h)
}

impl Homology {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn basis(&self) -> &Arc<NilpotentBasis> {
        &self.basis
    }

    /// Hex SHA-256 of the representative matrix.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn dims(&self) -> Vec<DegreeDims> {
        self.blocks
            .iter()
            .map(|(d, b)| DegreeDims {
                degree: *d,
                dim_chains: b.chains.len(),
                dim_kernel: b.dim_kernel,
                dim_image: b.dim_image,
                dim_homology: b.reps.len(),
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.values().map(|b| b.reps.len()).sum()
    }

    pub fn dim_in_degree(&self, d: usize) -> usize {
        self.blocks.get(&d).map_or(0, |b| b.reps.len())
    }

    /// Degrees with nonzero homology, in order.
    pub fn degrees(&self) -> Vec<usize> {
        self.blocks.iter().filter(|(_, b)| !b.reps.is_empty()).map(|(d, _)| *d).collect()
    }

    /// The `k`-th representative of degree `d` as a chain.
    pub fn representative(&self, d: usize, k: usize) -> ExteriorChain {
        let b = &self.blocks[&d];
        let mut ch = ExteriorChain::zero(self.basis.clone(), self.p);
        for (t, c) in b.chains.iter().zip(&b.reps[k]) {
            ch.add_wedge(t, c.clone());
        }
        ch
    }

    fn check_chain(&self, z: &ExteriorChain) -> Result<()> {
        if z.p() != self.p || z.basis().n() != self.basis.n || z.basis().class() != self.basis.class {
            return Err(Error::Mismatch(format!(
                "chain in Λ^{} (n={}, c={}) vs H_{} (n={}, c={})",
                z.p(),
                z.basis().n(),
                z.basis().class(),
                self.p,
                self.basis.n,
                self.basis.class
            )));
        }
        Ok(())
    }

    /// Class of a cycle in the representative basis.
    pub fn project(self: &Arc<Self>, z: &ExteriorChain) -> Result<HomologyClass> {
        self.check_chain(z)?;
        let mut coords = BTreeMap::new();
        for d in z.degrees() {
            let b = self.blocks.get(&d).ok_or_else(|| Error::Internal(format!("no chains in degree {d}")))?;
            let v = z.degree_part(d).vector(&b.index, b.chains.len());
            if b.cycle_test.rows() > 0 && b.cycle_test.mul_vec(&v).iter().any(|x| !x.is_zero()) {
                return Err(Error::NotACycle);
            }
            if b.reps.is_empty() {
                continue;
            }
            let mut cols: Vec<Vec<(usize, Q)>> = (0..b.image.cols())
                .map(|c| b.image.column(c).into_iter().enumerate().filter(|(_, x)| !x.is_zero()).collect())
                .collect();
            cols.extend(b.reps.iter().map(|r| r.iter().cloned().enumerate().filter(|(_, x)| !x.is_zero()).collect()));
            let m = Matrix::from_sparse_columns(b.chains.len(), &cols);
            let x = m
                .solve(&v, PivotOrder::Forward)
                .ok_or_else(|| Error::Internal(format!("cycle outside kernel span in degree {d}")))?;
            let c: Vec<Q> = x[b.image.cols()..].to_vec();
            if c.iter().any(|q| !q.is_zero()) {
                coords.insert(d, c);
            }
        }
        Ok(HomologyClass { homology: self.clone(), coords })
    }

    pub fn zero_class(self: &Arc<Self>) -> HomologyClass {
        HomologyClass { homology: self.clone(), coords: BTreeMap::new() }
    }
}

/// Coordinates of a homology class, relative to a computed basis.
#[derive(Debug, Clone)]
pub struct HomologyClass {
    homology: Arc<Homology>,
    /// Nonzero per-degree coordinate vectors only.
    coords: BTreeMap<usize, Vec<Q>>,
}

impl PartialEq for HomologyClass {
    fn eq(&self, other: &Self) -> bool {
        self.homology.fingerprint == other.homology.fingerprint && self.coords == other.coords
    }
}

impl Eq for HomologyClass {}

/// Serialized class: coordinates per internal degree plus the basis hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HomologyClassJson {
    pub fingerprint: String,
    pub components: Vec<ClassComponentJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassComponentJson {
    pub degree: usize,
    pub coordinates: Vec<String>,
}

impl HomologyClass {
    pub fn homology(&self) -> &Arc<Homology> {
        &self.homology
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinates in degree `d` (zeros when absent).
    pub fn coordinates_in(&self, d: usize) -> Vec<Q> {
        self.coords.get(&d).cloned().unwrap_or_else(|| vec![Q::zero(); self.homology.dim_in_degree(d)])
    }

    /// All coordinates, concatenated in increasing degree.
    pub fn coordinates(&self) -> Vec<Q> {
        self.homology.blocks.keys().flat_map(|&d| self.coordinates_in(d)).collect()
    }

    /// The degree-`d` component.
    pub fn component(&self, d: usize) -> HomologyClass {
        let coords = self.coords.iter().filter(|(e, _)| **e == d).map(|(e, v)| (*e, v.clone())).collect();
        HomologyClass { homology: self.homology.clone(), coords }
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.coords.keys().copied().collect()
    }

    pub fn add_scaled(&self, other: &HomologyClass, c: &Q) -> Result<HomologyClass> {
        if self.homology.fingerprint != other.homology.fingerprint {
            return Err(Error::Mismatch("classes in different homology bases".into()));
        }
        let mut coords = self.coords.clone();
        for (d, v) in &other.coords {
            let e = coords.entry(*d).or_insert_with(|| vec![Q::zero(); v.len()]);
            for (a, b) in e.iter_mut().zip(v) {
                *a += b * c;
            }
            if e.iter().all(Zero::is_zero) {
                coords.remove(d);
            }
        }
        Ok(HomologyClass { homology: self.homology.clone(), coords })
    }

    pub fn try_add(&self, other: &HomologyClass) -> Result<HomologyClass> {
        self.add_scaled(other, &Q::one())
    }

    /// A cycle representing this class.
    pub fn representative(&self) -> ExteriorChain {
        let mut ch = ExteriorChain::zero(self.homology.basis.clone(), self.homology.p);
        for (d, v) in &self.coords {
            for (k, c) in v.iter().enumerate() {
                ch = ch.add_scaled(&self.homology.representative(*d, k), c).expect("same space");
            }
        }
        ch
    }

    pub fn to_json(&self) -> HomologyClassJson {
        HomologyClassJson {
            fingerprint: self.homology.fingerprint.clone(),
            components: self
                .homology
                .degrees()
                .into_iter()
                .map(|d| ClassComponentJson {
                    degree: d,
                    coordinates: self.coordinates_in(d).iter().map(to_pq).collect(),
                })
                .collect(),
        }
    }
}

/// The component of `x` in internal degree `d`.
pub fn h3_degree_component(x: &HomologyClass, d: usize) -> HomologyClass {
    x.component(d)
}

fn check_tree_degrees(b: &TreeCombination, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Precondition("Φ needs k >= 2".into()));
    }
    match b.degrees().into_iter().find(|&l| l < k || l > 2 * k - 2) {
        Some(l) => Err(Error::Precondition(format!("tree degree {l} outside [{k}, {}]", 2 * k - 2))),
        None => Ok(()),
    }
}

/// `Φ(b)`: the class of the fission of `b` in `H_3(L / L_{>= k})`.
pub fn phi_class(b: &TreeCombination, n: usize, k: usize) -> Result<HomologyClass> {
    check_tree_degrees(b, k)?;
    let h = homology(3, n, k - 1)?;
    h.project(&b.fission(h.basis())?)
}

/// Columns: `Φ` of each tree in [`enumerate_trees`]`(n, l)`, as coordinates
/// in internal degree `l + 1` of `H_3(L / L_{>= k})`.
pub fn phi_matrix(n: usize, k: usize, l: usize) -> Result<Matrix> {
    let trees = enumerate_trees(n, l)?;
    let h = homology(3, n, k - 1)?;
    let rows = h.dim_in_degree(l + 1);
    let cols: Vec<Vec<(usize, Q)>> = trees
        .iter()
        .map(|t| {
            let c = phi_class(&TreeCombination::single(t.clone()), n, k)?;
            Ok(c.coordinates_in(l + 1).into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_sparse_columns(rows, &cols))
}

/// A tree combination `b` with `Φ(b) = x`, for `x` in `H_3(L / L_{>= k})`.
pub fn phi_inverse(x: &HomologyClass, k: usize) -> Result<TreeCombination> {
    let n = x.homology().basis().n();
    if x.homology().basis().class() + 1 != k || x.homology().p() != 3 {
        return Err(Error::Mismatch(format!("class does not live in H_3(L / L_>={k})")));
    }
    let mut out = TreeCombination::zero();
    for d in x.degrees() {
        let l = d - 1;
        let m = phi_matrix(n, k, l)?;
        let sol = m
            .solve(&x.coordinates_in(d), PivotOrder::Forward)
            .ok_or_else(|| Error::Internal(format!("Φ is not onto in degree {d}")))?;
        for (t, c) in enumerate_trees(n, l)?.iter().zip(sol) {
            out.add_term(t.clone(), c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{d_dimension, witt_dim};
    use crate::rational::q;

    fn gen(n: usize, c: usize, i: usize) -> LieElement {
        LieElement::generator(n, c, i)
    }

    #[test]
    fn basis_sizes() {
        for (n, c) in [(2, 3), (3, 4)] {
            let b = nilpotent_basis(n, c);
            assert_eq!(b.len(), (1..=c).map(|d| witt_dim(n, d)).sum::<usize>());
        }
    }

    #[test]
    fn boundary_of_two_chain_is_minus_bracket() {
        let b = nilpotent_basis(2, 2);
        let ch = ExteriorChain::wedge(b.clone(), &[gen(2, 2, 1), gen(2, 2, 2)]);
        let d = ch.boundary();
        let br = gen(2, 2, 1).bracket(&gen(2, 2, 2)).unwrap();
        let expected = ExteriorChain::wedge(b, &[br.scale(&q(-1))]);
        assert_eq!(d, expected);
        assert!(ExteriorChain::wedge(nilpotent_basis(2, 2), &[gen(2, 2, 1)]).boundary().is_zero());
    }

    #[test]
    fn wedge_antisymmetry() {
        let b = nilpotent_basis(3, 2);
        let x = ExteriorChain::wedge(b.clone(), &[gen(3, 2, 2), gen(3, 2, 1)]);
        let y = ExteriorChain::wedge(b.clone(), &[gen(3, 2, 1), gen(3, 2, 2)]);
        assert_eq!(x, y.scale(&q(-1)));
        assert!(ExteriorChain::wedge(b, &[gen(3, 2, 1), gen(3, 2, 1)]).is_zero());
    }

    #[test]
    fn boundary_squared_vanishes_on_basis() {
        let b = nilpotent_basis(2, 4);
        for p in 2..=4 {
            for d in p..=p * 4 {
                for t in b.tuples(p, d) {
                    let mut ch = ExteriorChain::zero(b.clone(), p);
                    ch.add_wedge(&t, q(1));
                    assert!(ch.boundary().boundary().is_zero(), "p={p} t={t:?}");
                }
            }
        }
    }

    #[test]
    fn abelian_h3() {
        let h = homology(3, 3, 1).unwrap();
        assert_eq!(h.dim(), 1);
    }

    #[test]
    fn h3_matches_d_dimensions_small() {
        // H_3(L / L_{>=2}) for n = 3 has the dimension of D_2... shifted: k=2 gives D_2.
        assert_eq!(homology(3, 3, 1).unwrap().dim(), d_dimension(3, 2));
        let h = homology(3, 2, 2).unwrap();
        assert_eq!(h.dim(), d_dimension(2, 3) + d_dimension(2, 4));
    }

    #[test]
    fn boundaries_project_to_zero() {
        let h = homology(3, 2, 3).unwrap();
        let b = h.basis().clone();
        let ch = ExteriorChain::wedge(
            b,
            &[
                gen(2, 3, 1),
                gen(2, 3, 2),
                gen(2, 3, 1).bracket(&gen(2, 3, 2)).unwrap(),
                gen(2, 3, 2).bracket(&gen(2, 3, 1).bracket(&gen(2, 3, 2)).unwrap()).unwrap(),
            ],
        );
        let z = ch.boundary();
        assert!(h.project(&z).unwrap().is_zero());
    }

    #[test]
    fn non_cycle_rejected() {
        let h = homology(3, 2, 2).unwrap();
        let ch = ExteriorChain::wedge(
            h.basis().clone(),
            &[gen(2, 2, 1), gen(2, 2, 2), gen(2, 2, 1).bracket(&gen(2, 2, 2)).unwrap()],
        );
        // ∂ of X1∧X2∧[X1,X2] vanishes in class 2; make a non-cycle instead.
        let b2 = nilpotent_basis(2, 2);
        let bad = ExteriorChain::wedge(b2, &[gen(2, 2, 1), gen(2, 2, 2)]);
        assert!(h.project(&ch).is_ok());
        assert!(matches!(homology(2, 2, 2).unwrap().project(&bad), Err(Error::NotACycle)));
    }

    #[test]
    fn solve_boundary_two_orders() {
        let b = nilpotent_basis(2, 3);
        let src = ExteriorChain::wedge(b, &[gen(2, 3, 1), gen(2, 3, 2), gen(2, 3, 1).bracket(&gen(2, 3, 2)).unwrap()]);
        let target = src.boundary();
        for order in [PivotOrder::Forward, PivotOrder::Reverse] {
            let t = solve_boundary(&target, order).unwrap();
            assert_eq!(t.boundary(), target);
        }
    }

    #[test]
    fn phi_is_graded_and_onto() {
        for (n, k) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            let h = homology(3, n, k - 1).unwrap();
            let rank: usize = (k..=2 * k - 2).map(|l| phi_matrix(n, k, l).unwrap().rank()).sum();
            assert_eq!(rank, h.dim(), "n={n} k={k}");
        }
        let t = enumerate_trees(3, 3).unwrap()[5].clone();
        let c = phi_class(&TreeCombination::single(t.clone()), 3, 3).unwrap();
        assert_eq!(c.degrees(), vec![4]);
        let back = phi_inverse(&c, 3).unwrap();
        assert_eq!(back.eta(3, 3).unwrap(), t.eta(3).unwrap());
    }

    #[test]
    fn phi_rejects_out_of_range_degrees() {
        let t = enumerate_trees(2, 1).unwrap()[0].clone();
        assert!(matches!(phi_class(&TreeCombination::single(t), 2, 2), Err(Error::Precondition(_))));
        assert!(phi_class(&TreeCombination::zero(), 2, 2).unwrap().is_zero());
    }

    #[test]
    fn fingerprint_is_stable() {
        let a = homology(3, 2, 2).unwrap();
        assert_eq!(a.fingerprint().len(), 64);
        assert_eq!(a.fingerprint(), homology(3, 2, 2).unwrap().fingerprint());
    }
}
