//! Finitely supported cochains on one tree and on a product of two trees.
//!
//! Values are stored on even edges only. Each unoriented edge of depth ≤ m
//! has a dense index `u = out_offset(depth) + idx`, and exactly one of its
//! orientations is even. The other orientation carries the negated value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bttree::{Ball, EdgeId, Mat2, P1Point, Tree, VertexId};
use crate::error::{Error, Result};

/// Number of unoriented edges of depth ≤ m.
pub fn edge_count(tree: &Tree, m: u32) -> usize {
    tree.out_offset(m + 1) as usize
}

/// Dense unoriented index of `e` and the sign relating it to the even orientation.
pub fn undirected(tree: &Tree, e: EdgeId) -> (usize, i64) {
    let u = (tree.out_offset(e.depth) + e.idx) as usize;
    (u, if tree.is_even(e) { 1 } else { -1 })
}

/// The even orientation of unoriented edge `u`.
pub fn even_edge(tree: &Tree, u: usize) -> EdgeId {
    let e = tree.edge_at(2 * u);
    if tree.is_even(e) {
        e
    } else {
        e.opposite()
    }
}

fn reduce(x: i64, modulus: Option<i64>) -> i64 {
    match modulus {
        Some(n) => x.rem_euclid(n),
        None => x,
    }
}

/// A cochain on the edges of depth ≤ m of a single tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain1 {
    pub tree: Tree,
    pub m: u32,
    pub vals: Vec<i64>,
}

impl Cochain1 {
    pub fn zeros(tree: Tree, m: u32) -> Self {
        Cochain1 { tree, m, vals: vec![0; edge_count(&tree, m)] }
    }

    pub fn from_fn(tree: Tree, m: u32, f: impl Fn(EdgeId) -> i64) -> Self {
        let vals = (0..edge_count(&tree, m)).map(|u| f(even_edge(&tree, u))).collect();
        Cochain1 { tree, m, vals }
    }

    /// `c(e) = [x ∈ U_e] − [y ∈ U_e]`.
    pub fn dirac(tree: Tree, x: &P1Point, y: &P1Point, m: u32) -> Result<Self> {
        let mut vals = Vec::with_capacity(edge_count(&tree, m));
        for u in 0..edge_count(&tree, m) {
            let b = tree.ball(even_edge(&tree, u));
            vals.push(i64::from(tree.contains(&b, x)?) - i64::from(tree.contains(&b, y)?));
        }
        Ok(Cochain1 { tree, m, vals })
    }

    pub fn get(&self, e: EdgeId) -> Result<i64> {
        if e.depth > self.m {
            return Err(Error::OutOfDepth(e.depth));
        }
        let (u, s) = undirected(&self.tree, e);
        Ok(s * self.vals[u])
    }

    /// Star sums at every vertex of depth ≤ m − 1, in dense vertex order.
    pub fn phi(&self) -> Vec<i64> {
        let nv = if self.m == 0 { 0 } else { self.tree.num_vertices(self.m - 1) };
        (0..nv)
            .map(|i| self.tree.edges_from(self.tree.vertex_at(i)).into_iter().map(|e| self.get(e).unwrap()).sum())
            .collect()
    }

    pub fn is_harmonic(&self) -> bool {
        self.phi().iter().all(|&x| x == 0)
    }

    /// Measure of a disjoint union of edge balls.
    pub fn measure(&self, balls: &[EdgeId]) -> Result<i64> {
        balls.iter().map(|&e| self.get(e)).sum()
    }

    pub fn tensor(&self, o: &Cochain1) -> FiniteCochain {
        assert_eq!(self.m, o.m);
        let mut vals = Vec::with_capacity(self.vals.len() * o.vals.len());
        for a in &self.vals {
            vals.extend(o.vals.iter().map(|b| a * b));
        }
        FiniteCochain { tree: self.tree, m: self.m, modulus: None, vals }
    }
}

/// A cochain on pairs of edges of depth ≤ m, optionally reduced mod `modulus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteCochain {
    pub tree: Tree,
    pub m: u32,
    pub modulus: Option<i64>,
    pub vals: Vec<i64>,
}

impl FiniteCochain {
    pub fn zeros(tree: Tree, m: u32, modulus: Option<i64>) -> Self {
        let n = edge_count(&tree, m);
        FiniteCochain { tree, m, modulus, vals: vec![0; n * n] }
    }

    /// Fills the table by evaluating `f` on every even pair.
    pub fn from_fn(tree: Tree, m: u32, modulus: Option<i64>, f: impl Fn(EdgeId, EdgeId) -> i64 + Sync) -> Self {
        Self::try_from_fn(tree, m, modulus, |a, b| Ok(f(a, b))).unwrap()
    }

    pub fn try_from_fn(
        tree: Tree,
        m: u32,
        modulus: Option<i64>,
        f: impl Fn(EdgeId, EdgeId) -> Result<i64> + Sync,
    ) -> Result<Self> {
        let n = edge_count(&tree, m);
        let evens: Vec<EdgeId> = (0..n).map(|u| even_edge(&tree, u)).collect();
        let vals = (0..n * n)
            .into_par_iter()
            .map(|k| f(evens[k / n], evens[k % n]).map(|x| reduce(x, modulus)))
            .collect::<Result<Vec<i64>>>()?;
        Ok(FiniteCochain { tree, m, modulus, vals })
    }

    pub fn n(&self) -> usize {
        edge_count(&self.tree, self.m)
    }

    pub fn get(&self, e1: EdgeId, e2: EdgeId) -> Result<i64> {
        let d = e1.depth.max(e2.depth);
        if d > self.m {
            return Err(Error::OutOfDepth(d));
        }
        let (u1, s1) = undirected(&self.tree, e1);
        let (u2, s2) = undirected(&self.tree, e2);
        Ok(reduce(s1 * s2 * self.vals[u1 * self.n() + u2], self.modulus))
    }

    /// Sets the value on the given (not necessarily even) pair.
    pub fn set(&mut self, e1: EdgeId, e2: EdgeId, x: i64) {
        let (u1, s1) = undirected(&self.tree, e1);
        let (u2, s2) = undirected(&self.tree, e2);
        let n = self.n();
        self.vals[u1 * n + u2] = reduce(s1 * s2 * x, self.modulus);
    }

    pub fn with_modulus(&self, modulus: i64) -> Self {
        FiniteCochain { modulus: Some(modulus), vals: self.vals.iter().map(|&x| x.rem_euclid(modulus)).collect(), ..self.clone() }
    }

    fn zip(&self, o: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        assert_eq!((self.tree, self.m), (o.tree, o.m), "cochains on different truncations");
        let modulus = self.modulus.or(o.modulus);
        let vals = self.vals.iter().zip(&o.vals).map(|(&a, &b)| reduce(f(a, b), modulus)).collect();
        FiniteCochain { tree: self.tree, m: self.m, modulus, vals }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, k: i64) -> Self {
        FiniteCochain { vals: self.vals.iter().map(|&x| reduce(k * x, self.modulus)).collect(), ..self.clone() }
    }

    /// Values in the symmetric range `(−N/2, N/2]` when reduced.
    pub fn centered(&self, x: i64) -> i64 {
        match self.modulus {
            Some(n) if x > n / 2 => x - n,
            _ => x,
        }
    }

    fn vertex_count(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.tree.num_vertices(self.m - 1)
        }
    }

    fn star_sum(&self, v: VertexId, f: impl Fn(EdgeId) -> i64) -> i64 {
        self.tree.edges_from(v).into_iter().map(f).sum()
    }

    /// `φ₁(c)(v, e)` for vertices of depth ≤ m − 1 and even `e`, indexed
    /// `[vertex_index · n + u]`.
    pub fn phi1(&self) -> Vec<i64> {
        let n = self.n();
        (0..self.vertex_count() * n)
            .into_par_iter()
            .map(|k| {
                let v = self.tree.vertex_at(k / n);
                let s = self.star_sum(v, |e| {
                    let (u1, s1) = undirected(&self.tree, e);
                    s1 * self.vals[u1 * n + k % n]
                });
                reduce(s, self.modulus)
            })
            .collect()
    }

    /// `φ₂(c)(e, v)` indexed `[u · vertex_count + vertex_index]`.
    pub fn phi2(&self) -> Vec<i64> {
        let (n, nv) = (self.n(), self.vertex_count());
        (0..n * nv)
            .into_par_iter()
            .map(|k| {
                let v = self.tree.vertex_at(k % nv);
                let s = self.star_sum(v, |e| {
                    let (u2, s2) = undirected(&self.tree, e);
                    s2 * self.vals[(k / nv) * n + u2]
                });
                reduce(s, self.modulus)
            })
            .collect()
    }

    pub fn is_harmonic(&self) -> bool {
        self.phi1().iter().all(|&x| x == 0) && self.phi2().iter().all(|&x| x == 0)
    }

    /// Measure of a disjoint union of product balls `U_{e₁} × U_{e₂}`.
    pub fn measure(&self, balls: &[(EdgeId, EdgeId)]) -> Result<i64> {
        let s = balls.iter().map(|&(a, b)| self.get(a, b)).sum::<Result<i64>>()?;
        Ok(reduce(s, self.modulus))
    }

    /// `(g⋆c)(x) = c(g⁻¹x)` for `g` given by its two local images. `g` must
    /// map edges of depth ≤ m to edges of depth ≤ m.
    pub fn act(&self, g: &[Mat2; 2]) -> Result<Self> {
        let p1 = edge_permutation(&self.tree, &g[0].adjugate(), self.m)?;
        let p2 = edge_permutation(&self.tree, &g[1].adjugate(), self.m)?;
        let n = self.n();
        let vals = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let ((a, sa), (b, sb)) = (p1[k / n], p2[k % n]);
                reduce(sa * sb * self.vals[a * n + b], self.modulus)
            })
            .collect();
        Ok(FiniteCochain { vals, ..self.clone() })
    }

    /// `g⋆D − D`.
    pub fn coboundary(&self, g: &[Mat2; 2]) -> Result<Self> {
        Ok(self.act(g)?.sub(self))
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{}:{}:{:?};", self.tree.p, self.m, self.modulus));
        for v in &self.vals {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn dump(&self) -> CochainDump {
        let n = self.n();
        let labels: Vec<String> = (0..n).map(|u| self.tree.edge_label(even_edge(&self.tree, u))).collect();
        let values = self
            .vals
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(k, &x)| (labels[k / n].clone(), labels[k % n].clone(), x))
            .collect();
        CochainDump { schema_version: 1, p: [self.tree.p; 2], m: self.m, modulus: self.modulus, values }
    }

    pub fn from_dump(d: &CochainDump) -> Result<Self> {
        if d.schema_version != 1 {
            return Err(Error::Schema(format!("unsupported cochain dump version {}", d.schema_version)));
        }
        if d.p[0] != d.p[1] || d.p[0] < 3 || d.p[0] % 2 == 0 {
            return Err(Error::Schema(format!("unsupported primes {:?}", d.p)));
        }
        let tree = Tree::new(d.p[0]);
        let mut c = FiniteCochain::zeros(tree, d.m, d.modulus);
        for (a, b, x) in &d.values {
            let (e1, e2) = (tree.parse_edge(a)?, tree.parse_edge(b)?);
            if !tree.is_even(e1) || !tree.is_even(e2) || e1.depth.max(e2.depth) > d.m {
                return Err(Error::Schema(format!("({a}, {b}) is not an even pair of depth ≤ {}", d.m)));
            }
            c.set(e1, e2, *x);
        }
        Ok(c)
    }
}

/// Header plus the nonzero `(edge, edge, value)` entries in dense order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CochainDump {
    pub schema_version: u32,
    pub p: [u64; 2],
    pub m: u32,
    pub modulus: Option<i64>,
    pub values: Vec<(String, String, i64)>,
}

/// For each even edge `u` of depth ≤ m: the unoriented index and sign of `g·u`.
pub fn edge_permutation(tree: &Tree, g: &Mat2, m: u32) -> Result<Vec<(usize, i64)>> {
    (0..edge_count(tree, m))
        .into_par_iter()
        .map(|u| {
            let e = tree.act(g, even_edge(tree, u))?;
            if e.depth > m {
                return Err(Error::OutOfDepth(e.depth));
            }
            Ok(undirected(tree, e))
        })
        .collect()
}

/// The `p` edges leaving the target of `e` other than its opposite; their
/// balls partition `U_e`.
pub fn children(tree: &Tree, e: EdgeId) -> Vec<EdgeId> {
    let back = e.opposite();
    tree.edges_from(tree.target(e)).into_iter().filter(|&f| f != back).collect()
}

/// Membership of a point in `U_e`, for oracles.
pub fn indicator(tree: &Tree, e: EdgeId, x: &P1Point) -> Result<i64> {
    let b: Ball = tree.ball(e);
    Ok(i64::from(tree.contains(&b, x)?))
}
