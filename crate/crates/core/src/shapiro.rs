//! Fixture loading and evaluation of the induced cocycle.
//!
//! A fixture carries radial systems on both trees: for every even edge `e`
//! an element `γ_e` with `γ_e⁻¹·e₀ = e`, and for every vertex `v` an element
//! `γ_v` with `γ_v⁻¹·b(v) = v`, where `b(v)` is the base vertex for even `v`
//! and the far end of `e₀` for odd `v`. Tree-2 radials must fix the base
//! edge of tree 1. The cocycle value on an even pair is `κ(h)` for the
//! element `h` obtained by reducing `g` first on tree 1 and then on tree 2.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bttree::{EdgeId, Mat2, Tree, VertexId};
use crate::cochain::{edge_count, even_edge, undirected};
use crate::error::{Error, Result};
use crate::group::{Elem, Embedder, GlobalMat, MatLiteral};

pub const FIXTURE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RadialFile {
    pub edges: BTreeMap<String, MatLiteral>,
    pub vertices: BTreeMap<String, MatLiteral>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KappaFile {
    Zero,
    DetValuation { ell: u64 },
    Table { entries: Vec<(String, i64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub m: MatLiteral,
    pub kappa: i64,
}

/// A golden value for the pipeline at a given depth and precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFile {
    pub depth: u32,
    pub prec: u32,
    pub value: [String; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema_version: u32,
    #[serde(default)]
    pub label: String,
    pub p: u64,
    pub disc: i64,
    /// Radial systems cover everything of depth ≤ this.
    pub depth: u32,
    #[serde(default)]
    pub generators: Vec<GeneratorFile>,
    pub psi_u: MatLiteral,
    pub radial: [RadialFile; 2],
    pub kappa: KappaFile,
    #[serde(default)]
    pub expected: Option<ExpectedFile>,
}

/// Values of the character κ on the level group.
#[derive(Clone, Debug)]
pub enum KappaOracle {
    Zero,
    /// `ord_ℓ N(det h)`: additive on all of GL₂(F).
    DetValuation(u64),
    /// Exported values keyed by [`GlobalMat::fingerprint`].
    Table(HashMap<String, i64>),
}

fn ord(n: &BigInt, ell: u64) -> i64 {
    let l = BigInt::from(ell);
    let mut x = n.clone();
    let mut k = 0;
    while !x.is_zero() && (&x % &l).is_zero() {
        x /= &l;
        k += 1;
    }
    k
}

impl KappaOracle {
    pub fn from_file(k: &KappaFile) -> Result<Self> {
        Ok(match k {
            KappaFile::Zero => KappaOracle::Zero,
            KappaFile::DetValuation { ell } => {
                if *ell < 2 {
                    return Err(Error::Schema(format!("ℓ = {ell} is not a prime")));
                }
                KappaOracle::DetValuation(*ell)
            }
            KappaFile::Table { entries } => {
                let mut t = HashMap::new();
                for (fp, v) in entries {
                    if t.insert(fp.clone(), *v).is_some_and(|old| old != *v) {
                        return Err(Error::Schema(format!("conflicting kappa entries for {fp}")));
                    }
                }
                KappaOracle::Table(t)
            }
        })
    }

    /// True when κ is a homomorphism on all of GL₂(F), so it can be
    /// evaluated factor by factor.
    pub fn is_additive(&self) -> bool {
        !matches!(self, KappaOracle::Table(_))
    }

    pub fn kappa(&self, h: &GlobalMat) -> Result<i64> {
        match self {
            KappaOracle::Zero => Ok(0),
            KappaOracle::DetValuation(ell) => {
                let n = h.det_norm();
                Ok(ord(n.numer(), *ell) - ord(n.denom(), *ell))
            }
            KappaOracle::Table(t) => {
                let fp = h.fingerprint();
                t.get(&fp).copied().ok_or(Error::OracleIncomplete(fp))
            }
        }
    }
}

/// A radial element and its exact inverse.
#[derive(Clone, Debug)]
pub struct Radial {
    pub gamma: Elem,
    pub gamma_inv: Elem,
    /// κ(γ), when κ is additive.
    pub kappa: Option<i64>,
}

/// One tree's radial system, indexed densely.
#[derive(Clone, Debug)]
pub struct RadialSystem {
    pub edges: Vec<Radial>,
    pub vertices: Vec<Radial>,
}

/// What a transporter must carry the base pair to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// `(v₁, e₂)`: a vertex on tree 1 and an even edge on tree 2.
    VertexEdge(VertexId, EdgeId),
    /// `(e₁, v₂)`.
    EdgeVertex(EdgeId, VertexId),
    /// An even pair of edges.
    EdgeEdge(EdgeId, EdgeId),
}

/// The far end of `e₀` for odd vertices and the base vertex otherwise.
pub fn base_variant(tree: &Tree, v: VertexId) -> VertexId {
    if tree.is_even_vertex(v) {
        VertexId::BASE
    } else {
        tree.target(tree.base_edge())
    }
}

#[derive(Debug)]
pub struct Fixture {
    pub label: String,
    pub ctx: Embedder,
    pub depth: u32,
    pub radial: [RadialSystem; 2],
    pub psi: Elem,
    pub generators: Vec<(Elem, i64)>,
    pub kappa: KappaOracle,
    pub expected: Option<ExpectedFile>,
}

/// Reads and validates a fixture file.
pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let file: FixtureFile = serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    Fixture::from_file(&file)
}

fn radial_elem(ctx: &Embedder, l: &MatLiteral, disc: i64, id: &str, kappa: &KappaOracle) -> Result<Radial> {
    let g = GlobalMat::from_literal(l, disc)?;
    if !g.is_invertible() {
        return Err(Error::Schema(format!("radial element at {id} is singular")));
    }
    let k = if kappa.is_additive() { Some(kappa.kappa(&g)?) } else { None };
    let gi = g.inv()?;
    Ok(Radial { gamma: ctx.elem(g), gamma_inv: ctx.elem(gi), kappa: k })
}

/// The pieces of `h = γ_{e₂}·γ_{e₁}·g·γ_{e₁'}⁻¹·γ_{e₂'}⁻¹` for an even pair.
pub struct Reduction<'a> {
    /// Local images of `h`.
    pub local: [Mat2; 2],
    pub left: [&'a Radial; 2],
    pub right: [&'a Radial; 2],
    pub moved: (EdgeId, EdgeId),
}

impl Reduction<'_> {
    /// The exact element `h`.
    pub fn global(&self, g: &GlobalMat) -> GlobalMat {
        self.left[1]
            .gamma
            .g
            .mul(&self.left[0].gamma.g)
            .mul(g)
            .mul(&self.right[0].gamma_inv.g)
            .mul(&self.right[1].gamma_inv.g)
    }

    /// κ(h) from the factors, for additive κ with κ(g) given.
    pub fn additive_kappa(&self, kg: i64) -> Option<i64> {
        Some(self.left[0].kappa? + self.left[1].kappa? + kg - self.right[0].kappa? - self.right[1].kappa?)
    }
}

impl Fixture {
    /// Working precision of the local images for a given radial depth.
    pub fn working_precision(depth: u32) -> u32 {
        4 * depth + 40
    }

    pub fn from_file(f: &FixtureFile) -> Result<Fixture> {
        if f.schema_version != FIXTURE_SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported fixture schema_version {}", f.schema_version)));
        }
        if f.p < 3 || f.p % 2 == 0 || f.disc % 4 != 1 {
            return Err(Error::Schema(format!("need an odd prime and a discriminant ≡ 1 mod 4, got p = {}, D = {}", f.p, f.disc)));
        }
        if f.depth == 0 {
            return Err(Error::Schema("radial depth must be at least 1".into()));
        }
        let ctx = Embedder::new(f.disc, f.p, Self::working_precision(f.depth))?;
        let kappa = KappaOracle::from_file(&f.kappa)?;
        let tree = ctx.tree;
        let mut radial = Vec::new();
        for (side, rf) in f.radial.iter().enumerate() {
            let mut edges = Vec::new();
            for u in 0..edge_count(&tree, f.depth) {
                let e = even_edge(&tree, u);
                let id = tree.edge_label(e);
                let l = rf.edges.get(&id).ok_or_else(|| Error::Schema(format!("tree {} radial system lacks edge {id}", side + 1)))?;
                let r = radial_elem(&ctx, l, f.disc, &id, &kappa)?;
                if tree.act(&r.gamma_inv.local[side], tree.base_edge()) != Ok(e) {
                    return Err(Error::RadialContractViolation(format!("tree {} edge {id}", side + 1)));
                }
                edges.push(r);
            }
            let mut vertices = Vec::new();
            for v in tree.vertices(f.depth) {
                let id = tree.vertex_label(v);
                let l = rf.vertices.get(&id).ok_or_else(|| Error::Schema(format!("tree {} radial system lacks vertex {id}", side + 1)))?;
                let r = radial_elem(&ctx, l, f.disc, &id, &kappa)?;
                if tree.act_vertex(&r.gamma_inv.local[side], base_variant(&tree, v)) != Ok(v) {
                    return Err(Error::RadialContractViolation(format!("tree {} vertex {id}", side + 1)));
                }
                vertices.push(r);
            }
            radial.push(RadialSystem { edges, vertices });
        }
        // tree-2 radials must lie in the tree-1 level group
        for (k, r) in radial[1].edges.iter().chain(&radial[1].vertices).enumerate() {
            if tree.act(&r.gamma.local[0], tree.base_edge()) != Ok(tree.base_edge()) {
                return Err(Error::RadialContractViolation(format!("tree 2 radial #{k} moves the tree-1 base edge")));
            }
        }
        let psi = ctx.elem(GlobalMat::from_literal(&f.psi_u, f.disc)?);
        for side in 0..2 {
            if tree.act_vertex(&psi.local[side], VertexId::BASE)? != VertexId::BASE {
                return Err(Error::Schema(format!("psi_u moves the base vertex of tree {}", side + 1)));
            }
        }
        let generators = f
            .generators
            .iter()
            .map(|g| Ok((ctx.elem(GlobalMat::from_literal(&g.m, f.disc)?), g.kappa)))
            .collect::<Result<Vec<_>>>()?;
        let [r1, r2]: [RadialSystem; 2] = radial.try_into().expect("two trees");
        Ok(Fixture {
            label: f.label.clone(),
            ctx,
            depth: f.depth,
            radial: [r1, r2],
            psi,
            generators,
            kappa,
            expected: f.expected.clone(),
        })
    }

    pub fn tree(&self) -> Tree {
        self.ctx.tree
    }

    fn edge_radial(&self, side: usize, e: EdgeId) -> Result<&Radial> {
        let tree = self.tree();
        if e.depth > self.depth {
            return Err(Error::DepthExceeded(format!("tree {} edge {} beyond radial depth {}", side + 1, tree.edge_label(e), self.depth)));
        }
        if !tree.is_even(e) {
            return Err(Error::RadialContractViolation(format!("odd edge {} has no radial element", tree.edge_label(e))));
        }
        Ok(&self.radial[side].edges[undirected(&tree, e).0])
    }

    fn vertex_radial(&self, side: usize, v: VertexId) -> Result<&Radial> {
        if v.depth > self.depth {
            return Err(Error::DepthExceeded(format!("tree {} vertex {} beyond radial depth {}", side + 1, self.tree().vertex_label(v), self.depth)));
        }
        Ok(&self.radial[side].vertices[self.tree().vertex_index(v)])
    }

    /// `(b, e')` with `e' = g⁻¹·e` and `b = γ_e·g·γ_{e'}⁻¹`, which fixes the base edge.
    pub fn reduce(&self, g: &Elem, e: EdgeId, side: usize) -> Result<(Elem, EdgeId)> {
        let tree = self.tree();
        let e2 = tree.act(&g.local_inv()[side], e)?;
        let b = self.edge_radial(side, e)?.gamma.mul(g).mul(&self.edge_radial(side, e2)?.gamma_inv);
        if tree.act(&b.local[side], tree.base_edge())? != tree.base_edge() {
            return Err(Error::RadialContractViolation(format!("reduction at {} leaves the base edge", tree.edge_label(e))));
        }
        Ok((b, e2))
    }

    fn reduce_local<'a>(&'a self, g: &[Mat2; 2], e: EdgeId, side: usize) -> Result<([Mat2; 2], EdgeId, &'a Radial, &'a Radial)> {
        let tree = self.tree();
        let e2 = tree.act(&g[side].adjugate(), e)?;
        let (l, r) = (self.edge_radial(side, e)?, self.edge_radial(side, e2)?);
        let b = [0, 1].map(|i| l.gamma.local[i].mul(&g[i]).mul(&r.gamma_inv.local[i]));
        if tree.act(&b[side], tree.base_edge())? != tree.base_edge() {
            return Err(Error::RadialContractViolation(format!("reduction at {} leaves the base edge", tree.edge_label(e))));
        }
        Ok((b, e2, l, r))
    }

    /// Reduces `g` at the even pair `(e₁, e₂)`: first on tree 1, then on tree 2.
    pub fn reduce_pair_local(&self, g: &Elem, e1: EdgeId, e2: EdgeId) -> Result<Reduction<'_>> {
        let (b, m1, l1, r1) = self.reduce_local(&g.local, e1, 0)?;
        let (h, m2, l2, r2) = self.reduce_local(&b, e2, 1)?;
        let tree = self.tree();
        if tree.act(&h[0], tree.base_edge())? != tree.base_edge() {
            return Err(Error::RadialContractViolation(format!(
                "tree 2 reduction at {} leaves the tree-1 base edge",
                tree.edge_label(e2)
            )));
        }
        Ok(Reduction { local: h, left: [l1, l2], right: [r1, r2], moved: (m1, m2) })
    }

    /// The element `h` of the level group attached to `(g, e₁, e₂)`.
    pub fn reduce_pair(&self, g: &Elem, e1: EdgeId, e2: EdgeId) -> Result<Elem> {
        let r = self.reduce_pair_local(g, e1, e2)?;
        Ok(Elem { g: r.global(&g.g), local: r.local })
    }

    /// `g` with `g⁻¹·base = target`, composed from one radial element per tree.
    pub fn transporter(&self, target: Target) -> Result<Elem> {
        let tree = self.tree();
        let first = match target {
            Target::VertexEdge(v, _) => self.vertex_radial(0, v)?,
            Target::EdgeVertex(e, _) | Target::EdgeEdge(e, _) => self.edge_radial(0, e)?,
        };
        // move the tree-2 target by the tree-1 radial, then fetch its radial
        let g1 = &first.gamma;
        let second = match target {
            Target::VertexEdge(_, e) | Target::EdgeEdge(_, e) => {
                let moved = tree.act(&g1.local[1], e)?;
                self.edge_radial(1, moved)?
            }
            Target::EdgeVertex(_, v) => {
                let moved = tree.act_vertex(&g1.local[1], v)?;
                if tree.is_even_vertex(moved) != tree.is_even_vertex(v) {
                    return Err(Error::RadialContractViolation("tree-1 radial changes parity on tree 2".into()));
                }
                self.vertex_radial(1, moved)?
            }
        };
        let g = second.gamma.mul(g1);
        let gi = g.local_inv();
        let ok = match target {
            Target::VertexEdge(v, e) => {
                tree.act_vertex(&gi[0], base_variant(&tree, v))? == v && tree.act(&gi[1], tree.base_edge())? == e
            }
            Target::EdgeVertex(e, v) => {
                tree.act(&gi[0], tree.base_edge())? == e && tree.act_vertex(&gi[1], base_variant(&tree, v))? == v
            }
            Target::EdgeEdge(a, b) => tree.act(&gi[0], tree.base_edge())? == a && tree.act(&gi[1], tree.base_edge())? == b,
        };
        if !ok {
            return Err(Error::RadialContractViolation(format!("transporter to {target:?}")));
        }
        Ok(g)
    }
}

/// A Γ-cocycle with values in cochains on pairs of edges.
pub trait Cocycle: Sync {
    /// `c(g)(e₁, e₂)` for arbitrary orientations.
    fn eval(&self, g: &Elem, e1: EdgeId, e2: EdgeId) -> Result<i64>;

    fn tree(&self) -> Tree;
}

/// The cocycle induced from κ through the radial systems, with a cache.
pub struct ShapiroCocycle<'a> {
    pub fixture: &'a Fixture,
    cache: RwLock<HashMap<(String, u32, u64, u32, u64), i64>>,
}

impl<'a> ShapiroCocycle<'a> {
    pub fn new(fixture: &'a Fixture) -> Self {
        ShapiroCocycle { fixture, cache: RwLock::new(HashMap::new()) }
    }

    /// Evaluation without the cache.
    pub fn evaluate_uncached(&self, g: &Elem, e1: EdgeId, e2: EdgeId) -> Result<i64> {
        let r = self.fixture.reduce_pair_local(g, e1, e2)?;
        let k = &self.fixture.kappa;
        if k.is_additive() {
            if let Some(v) = r.additive_kappa(k.kappa(&g.g)?) {
                return Ok(v);
            }
        }
        k.kappa(&r.global(&g.g))
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().unwrap().len()
    }
}

/// Exact identity of a global matrix, used as a cache key.
fn exact_key(g: &GlobalMat) -> String {
    g.m.iter().flatten().map(|x| format!("{}/{}|{}/{}", x.a.numer(), x.a.denom(), x.b.numer(), x.b.denom())).collect::<Vec<_>>().join(";")
}

impl Cocycle for ShapiroCocycle<'_> {
    fn eval(&self, g: &Elem, e1: EdgeId, e2: EdgeId) -> Result<i64> {
        let tree = self.tree();
        let (s1, s2) = (if tree.is_even(e1) { 1 } else { -1 }, if tree.is_even(e2) { 1 } else { -1 });
        let (a, b) = (if s1 > 0 { e1 } else { e1.opposite() }, if s2 > 0 { e2 } else { e2.opposite() });
        let key = (exact_key(&g.g), a.depth, a.idx, b.depth, b.idx + if b.outward { 0 } else { 1 << 62 });
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(s1 * s2 * v);
        }
        let v = self.evaluate_uncached(g, a, b)?;
        self.cache.write().unwrap().insert(key, v);
        Ok(s1 * s2 * v)
    }

    fn tree(&self) -> Tree {
        self.fixture.tree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_valuation_counts_prime_powers() {
        let k = KappaOracle::DetValuation(5);
        let g = GlobalMat::from_ints([[25, 0], [0, 3]], 37);
        assert_eq!(k.kappa(&g).unwrap(), 4);
        let h = GlobalMat::from_ints([[1, 0], [0, 5]], 37).inv().unwrap();
        assert_eq!(k.kappa(&h).unwrap(), -2);
    }

    #[test]
    fn table_reports_missing_entries() {
        let g = GlobalMat::from_ints([[2, 1], [1, 1]], 37);
        let k = KappaOracle::from_file(&KappaFile::Table { entries: vec![(g.fingerprint(), 3)] }).unwrap();
        assert_eq!(k.kappa(&g).unwrap(), 3);
        let h = GlobalMat::from_ints([[2, 1], [1, 2]], 37);
        assert!(matches!(k.kappa(&h), Err(Error::OracleIncomplete(_))));
    }

    #[test]
    fn conflicting_table_is_a_schema_error() {
        let fp = GlobalMat::identity(37).fingerprint();
        let f = KappaFile::Table { entries: vec![(fp.clone(), 1), (fp, 2)] };
        assert!(matches!(KappaOracle::from_file(&f), Err(Error::Schema(_))));
    }

    #[test]
    fn base_variants() {
        let t = Tree::new(3);
        assert_eq!(base_variant(&t, VertexId { depth: 2, idx: 5 }), VertexId::BASE);
        assert_eq!(base_variant(&t, VertexId { depth: 3, idx: 5 }), t.target(t.base_edge()));
    }
}
