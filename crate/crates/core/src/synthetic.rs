//! Synthetic fixtures and cocycles for exercising the pipeline.
//!
//! The group is GL₂(F) acting on both trees through the two embeddings.
//! Elements with prescribed images at the two sides come from an
//! idempotent `ε ∈ Z[w]` with `ε ≡ 1` at side 1 and `ε ≡ 0` at side 2
//! modulo `p^N`: the matrix `ε·A + (1 − ε)·B` looks like `A` on tree 1 and
//! like `B` on tree 2.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::bttree::{EdgeId, P1Point, Tree, VertexId};
use crate::cochain::{edge_count, even_edge, indicator, FiniteCochain};
use crate::error::{Error, Result};
use crate::group::{Elem, GlobalMat};
use crate::numberfield::{FieldElement, FieldEmbedding, PrimeSide};
use crate::padic::{inv_mod_pn, pow_p, Padic};
use crate::shapiro::{Cocycle, FixtureFile, GeneratorFile, KappaFile, KappaOracle, RadialFile, FIXTURE_SCHEMA_VERSION};

/// `(ε, 1 − ε)` for the given modulus exponent.
pub fn crt_idempotents(disc: i64, p: u64, n: u32) -> Result<(FieldElement, FieldElement)> {
    let w1 = FieldEmbedding::new(disc, PrimeSide::new(p, 1), n + 4)?.w_image().residue(n)?;
    let w2 = FieldEmbedding::new(disc, PrimeSide::new(p, 2), n + 4)?.w_image().residue(n)?;
    let m = pow_p(p, n);
    let diff = (&w1 + &m - &w2) % &m;
    let b = inv_mod_pn(&diff, p, n);
    let a = (&m - (&b * &w2) % &m) % &m;
    let eps = FieldElement::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()), disc);
    let rest = FieldElement::one(disc).sub(&eps);
    Ok((eps, rest))
}

fn int_mat(e: &[[BigInt; 2]; 2], disc: i64) -> GlobalMat {
    let f = |x: &BigInt| FieldElement::from_rational(BigRational::from_integer(x.clone()), disc);
    GlobalMat::new(f(&e[0][0]), f(&e[0][1]), f(&e[1][0]), f(&e[1][1]))
}

fn identity_int() -> [[BigInt; 2]; 2] {
    [[BigInt::one(), BigInt::zero()], [BigInt::zero(), BigInt::one()]]
}

/// `ε·A + (1 − ε)·B`.
pub fn crt_matrix(eps: &(FieldElement, FieldElement), a: &[[BigInt; 2]; 2], b: &[[BigInt; 2]; 2], disc: i64) -> GlobalMat {
    let (ga, gb) = (int_mat(a, disc), int_mat(b, disc));
    let e = |i: usize, j: usize| eps.0.mul(&ga.m[i][j]).add(&eps.1.mul(&gb.m[i][j]));
    GlobalMat::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
}

/// Clears p-power denominators so the matrix is integral.
fn integral(p: u64, m: [[BigRational; 2]; 2]) -> [[BigInt; 2]; 2] {
    let pb = BigInt::from(p);
    let mut scale = BigInt::one();
    for x in m.iter().flatten() {
        while !(x * BigRational::from_integer(scale.clone())).is_integer() {
            scale *= &pb;
        }
    }
    let s = BigRational::from_integer(scale);
    m.map(|row| row.map(|x| (x * &s).to_integer()))
}

fn mat_mul_int(a: &[[BigInt; 2]; 2], b: &[[BigInt; 2]; 2]) -> [[BigInt; 2]; 2] {
    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// Local target for `γ_e⁻¹`: the normal form of `e`, made integral.
pub fn edge_target(tree: &Tree, e: EdgeId) -> [[BigInt; 2]; 2] {
    integral(tree.p, tree.normal_form(e))
}

/// Local target for `γ_v⁻¹`, carrying the base variant of `v` to `v`.
pub fn vertex_target(tree: &Tree, v: VertexId) -> [[BigInt; 2]; 2] {
    if v.depth == 0 {
        return identity_int();
    }
    let g = edge_target(tree, EdgeId { depth: v.depth, idx: v.idx, outward: true });
    if v.depth % 2 == 0 {
        let dp = [[BigInt::from(tree.p), BigInt::zero()], [BigInt::zero(), BigInt::one()]];
        mat_mul_int(&g, &dp)
    } else {
        g
    }
}

/// Parameters of a synthetic fixture.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub p: u64,
    pub disc: i64,
    pub depth: u32,
    pub kappa: KappaFile,
    /// Images of the cycle element at the two sides; both must be elliptic
    /// elements of GL₂(Z_p).
    pub psi: [[[i64; 2]; 2]; 2],
}

impl SyntheticSpec {
    pub fn new(p: u64, disc: i64, depth: u32, kappa: KappaFile) -> Self {
        SyntheticSpec { p, disc, depth, kappa, psi: [[[0, -1], [1, 0]], [[1, -1], [2, -1]]] }
    }
}

/// Builds a fixture whose radial systems satisfy the loader's contract.
pub fn synthetic_fixture(spec: &SyntheticSpec) -> Result<FixtureFile> {
    let tree = Tree::new(spec.p);
    let n = 2 * spec.depth + 6;
    let eps = crt_idempotents(spec.disc, spec.p, n)?;
    let id = identity_int();
    let mut radial = [RadialFile::default(), RadialFile::default()];
    for (side, rf) in radial.iter_mut().enumerate() {
        let place = |t: &[[BigInt; 2]; 2]| -> Result<GlobalMat> {
            let g = if side == 0 { crt_matrix(&eps, t, &id, spec.disc) } else { crt_matrix(&eps, &id, t, spec.disc) };
            g.inv()
        };
        for u in 0..edge_count(&tree, spec.depth) {
            let e = even_edge(&tree, u);
            rf.edges.insert(tree.edge_label(e), place(&edge_target(&tree, e))?.to_literal());
        }
        for v in tree.vertices(spec.depth) {
            rf.vertices.insert(tree.vertex_label(v), place(&vertex_target(&tree, v))?.to_literal());
        }
    }
    let big = |m: [[i64; 2]; 2]| m.map(|r| r.map(BigInt::from));
    let psi = crt_matrix(&eps, &big(spec.psi[0]), &big(spec.psi[1]), spec.disc);
    let kappa = KappaOracle::from_file(&spec.kappa)?;
    let generators = [[[1, 1], [0, 1]], [[1, 0], [spec.p as i64, 1]], [[0, -1], [1, 0]]]
        .into_iter()
        .map(|m| {
            let g = GlobalMat::from_ints(m, spec.disc);
            Ok(GeneratorFile { kappa: kappa.kappa(&g).unwrap_or(0), m: g.to_literal() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FixtureFile {
        schema_version: FIXTURE_SCHEMA_VERSION,
        label: format!("synthetic p={} D={} depth={}", spec.p, spec.disc, spec.depth),
        p: spec.p,
        disc: spec.disc,
        depth: spec.depth,
        generators,
        psi_u: psi.to_literal(),
        radial,
        kappa: spec.kappa.clone(),
        expected: None,
    })
}

/// One term `n·δ(x₁, y₁) ⊗ δ(x₂, y₂)` of a harmonic cochain.
#[derive(Clone, Debug)]
pub struct DiracTerm {
    pub coeff: i64,
    pub points: [[P1Point; 2]; 2],
}

/// A cochain defined at every depth: Dirac tensors plus hashed noise.
#[derive(Clone, Debug)]
pub struct GlobalCochain {
    pub tree: Tree,
    pub terms: Vec<DiracTerm>,
    /// `(seed, amplitude)` of the non-harmonic part.
    pub noise: Option<(u64, i64)>,
}

fn noise_value(seed: u64, amp: i64, a: EdgeId, b: EdgeId) -> i64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for e in [a, b] {
        h.update(e.depth.to_le_bytes());
        h.update(e.idx.to_le_bytes());
        h.update([u8::from(e.outward)]);
    }
    let d = h.finalize();
    let x = u64::from_le_bytes(d[..8].try_into().unwrap());
    (x % (2 * amp as u64 + 1)) as i64 - amp
}

impl GlobalCochain {
    pub fn value(&self, e1: EdgeId, e2: EdgeId) -> Result<i64> {
        let t = &self.tree;
        let mut s = 0;
        for term in &self.terms {
            let [[x1, y1], [x2, y2]] = &term.points;
            let a = indicator(t, e1, x1)? - indicator(t, e1, y1)?;
            if a == 0 {
                continue;
            }
            s += term.coeff * a * (indicator(t, e2, x2)? - indicator(t, e2, y2)?);
        }
        if let Some((seed, amp)) = self.noise {
            let (s1, s2) = (if t.is_even(e1) { 1 } else { -1 }, if t.is_even(e2) { 1 } else { -1 });
            let a = if s1 > 0 { e1 } else { e1.opposite() };
            let b = if s2 > 0 { e2 } else { e2.opposite() };
            s += s1 * s2 * noise_value(seed, amp, a, b);
        }
        Ok(s)
    }

    pub fn harmonic_part(&self) -> GlobalCochain {
        GlobalCochain { noise: None, ..self.clone() }
    }

    pub fn truncate(&self, m: u32) -> Result<FiniteCochain> {
        FiniteCochain::try_from_fn(self.tree, m, None, |a, b| self.value(a, b))
    }
}

/// `c(g) = g⋆T − T` for a cochain `T` defined everywhere.
pub struct CoboundaryCocycle {
    pub t: GlobalCochain,
}

impl Cocycle for CoboundaryCocycle {
    fn eval(&self, g: &Elem, e1: EdgeId, e2: EdgeId) -> Result<i64> {
        let gi = g.local_inv();
        let tree = self.t.tree;
        Ok(self.t.value(tree.act(&gi[0], e1)?, tree.act(&gi[1], e2)?)? - self.t.value(e1, e2)?)
    }

    fn tree(&self) -> Tree {
        self.t.tree
    }
}

/// A random point of P¹(Q) viewed in P¹(Q_p): ∞, an integer, or a
/// rational with a p-power denominator.
pub fn random_point<R: Rng>(rng: &mut R, p: u64, prec: u32) -> P1Point {
    let pi = p as i64;
    let span = pi.pow(4);
    match rng.gen_range(0..8) {
        0 => P1Point::Infinity,
        1 | 2 => {
            let k = rng.gen_range(1..3u32);
            let num = rng.gen_range(-span..=span) * pi + rng.gen_range(1..pi);
            let x = BigRational::new(BigInt::from(num), BigInt::from(pi.pow(k)));
            P1Point::Finite(Padic::from_rational(p, &x, prec))
        }
        _ => P1Point::Finite(Padic::from_i64(p, rng.gen_range(-span..=span), prec)),
    }
}

pub fn random_dirac_term<R: Rng>(rng: &mut R, p: u64, coeff_range: i64) -> DiracTerm {
    let mut pair = || loop {
        let (x, y) = (random_point(rng, p, 60), random_point(rng, p, 60));
        if x != y {
            return [x, y];
        }
    };
    let points = [pair(), pair()];
    let mut coeff = 0;
    while coeff == 0 {
        coeff = rng.gen_range(-coeff_range..=coeff_range);
    }
    DiracTerm { coeff, points }
}

/// A random harmonic cochain, optionally with hashed noise added.
pub fn random_global_cochain<R: Rng>(rng: &mut R, p: u64, terms: usize, noise: bool) -> GlobalCochain {
    GlobalCochain {
        tree: Tree::new(p),
        terms: (0..terms).map(|_| random_dirac_term(rng, p, 3)).collect(),
        noise: noise.then(|| (rng.gen(), rng.gen_range(1..=5))),
    }
}

/// Drops one radial entry, for negative tests of the loader.
pub fn without_edge(f: &FixtureFile, side: usize, label: &str) -> FixtureFile {
    let mut g = f.clone();
    g.radial[side].edges.remove(label);
    g
}

/// Replaces κ by a table exported from another oracle on the given elements.
pub fn export_table(elements: &[GlobalMat], oracle: &KappaOracle) -> Result<KappaFile> {
    let mut t = BTreeMap::new();
    for h in elements {
        let v = oracle.kappa(h)?;
        if let Some(old) = t.insert(h.fingerprint(), v) {
            if old != v {
                return Err(Error::Schema("oracle is not constant on scalar classes".into()));
            }
        }
    }
    Ok(KappaFile::Table { entries: t.into_iter().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapiro::Fixture;

    #[test]
    fn idempotent_images() {
        let (e1, e2) = crt_idempotents(37, 3, 12).unwrap();
        let s1 = FieldEmbedding::new(37, PrimeSide::new(3, 1), 30).unwrap();
        let s2 = FieldEmbedding::new(37, PrimeSide::new(3, 2), 30).unwrap();
        assert!(s1.embed(&e1).sub(&Padic::from_i64(3, 1, 30)).valuation_bound() >= 12);
        assert!(s2.embed(&e1).valuation_bound() >= 12);
        assert!(s2.embed(&e2).sub(&Padic::from_i64(3, 1, 30)).valuation_bound() >= 12);
    }

    #[test]
    fn targets_move_base_objects() {
        let t = Tree::new(3);
        for e in t.even_edges(3) {
            let g = crate::bttree::Mat2::from_rational(3, &edge_target(&t, e).map(|r| r.map(BigRational::from_integer)), 30);
            assert_eq!(t.act(&g, t.base_edge()).unwrap(), e);
        }
        for v in t.vertices(3) {
            let g = crate::bttree::Mat2::from_rational(3, &vertex_target(&t, v).map(|r| r.map(BigRational::from_integer)), 30);
            assert_eq!(t.act_vertex(&g, crate::shapiro::base_variant(&t, v)).unwrap(), v);
        }
    }

    #[test]
    fn synthetic_fixture_loads() {
        let f = synthetic_fixture(&SyntheticSpec::new(3, 37, 2, KappaFile::Zero)).unwrap();
        let fx = Fixture::from_file(&f).unwrap();
        assert_eq!(fx.radial[0].edges.len(), 16);
        assert_eq!(fx.radial[1].vertices.len(), 17);
    }

    #[test]
    fn noise_respects_orientation() {
        let t = Tree::new(3);
        let g = GlobalCochain { tree: t, terms: vec![], noise: Some((7, 4)) };
        let (a, b) = (t.base_edge(), EdgeId { depth: 2, idx: 3, outward: false });
        assert_eq!(g.value(a.opposite(), b).unwrap(), -g.value(a, b).unwrap());
        assert_eq!(g.value(a, b.opposite()).unwrap(), -g.value(a, b).unwrap());
    }
}
