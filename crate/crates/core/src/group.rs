//! Exact 2×2 matrices over F and their images in GL₂(Q_p) at both sides.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bttree::{Mat2, Tree};
use crate::error::{Error, Result};
use crate::numberfield::{f_from_literal, f_to_literal, FLiteral, FieldElement, FieldEmbedding, PrimeSide};

/// Fixture syntax for a matrix: `[[a, b], [c, d]]` of F-literals.
pub type MatLiteral = [[FLiteral; 2]; 2];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GlobalMat {
    pub m: [[FieldElement; 2]; 2],
}

impl GlobalMat {
    pub fn new(a: FieldElement, b: FieldElement, c: FieldElement, d: FieldElement) -> Self {
        GlobalMat { m: [[a, b], [c, d]] }
    }

    pub fn disc(&self) -> i64 {
        self.m[0][0].disc
    }

    pub fn identity(disc: i64) -> Self {
        let (o, z) = (FieldElement::one(disc), FieldElement::zero(disc));
        GlobalMat::new(o.clone(), z.clone(), z, o)
    }

    pub fn from_ints(e: [[i64; 2]; 2], disc: i64) -> Self {
        let f = |x: i64| FieldElement::from_ints(x, 0, disc);
        GlobalMat::new(f(e[0][0]), f(e[0][1]), f(e[1][0]), f(e[1][1]))
    }

    pub fn mul(&self, o: &GlobalMat) -> GlobalMat {
        let e = |i: usize, j: usize| self.m[i][0].mul(&o.m[0][j]).add(&self.m[i][1].mul(&o.m[1][j]));
        GlobalMat::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn det(&self) -> FieldElement {
        self.m[0][0].mul(&self.m[1][1]).sub(&self.m[0][1].mul(&self.m[1][0]))
    }

    pub fn adjugate(&self) -> GlobalMat {
        let [[a, b], [c, d]] = &self.m;
        GlobalMat::new(d.clone(), b.neg(), c.neg(), a.clone())
    }

    pub fn inv(&self) -> Result<GlobalMat> {
        let di = self.det().inv().map_err(|_| Error::Schema("singular matrix".into()))?;
        let adj = self.adjugate();
        let s = |x: &FieldElement| x.mul(&di);
        Ok(GlobalMat::new(s(&adj.m[0][0]), s(&adj.m[0][1]), s(&adj.m[1][0]), s(&adj.m[1][1])))
    }

    pub fn scale(&self, k: &FieldElement) -> GlobalMat {
        let s = |x: &FieldElement| x.mul(k);
        GlobalMat::new(s(&self.m[0][0]), s(&self.m[0][1]), s(&self.m[1][0]), s(&self.m[1][1]))
    }

    pub fn is_identity(&self) -> bool {
        *self == GlobalMat::identity(self.disc())
    }

    /// sha256 of the matrix divided by its first nonzero entry.
    pub fn fingerprint(&self) -> String {
        let first = self.m.iter().flatten().find(|x| !x.is_zero()).cloned().unwrap_or_else(|| FieldElement::one(self.disc()));
        let n = self.scale(&first.inv().expect("nonzero"));
        let mut h = Sha256::new();
        h.update(format!("D={};", self.disc()));
        for x in n.m.iter().flatten() {
            h.update(format!("{}/{}|{}/{};", x.a.numer(), x.a.denom(), x.b.numer(), x.b.denom()));
        }
        hex::encode(h.finalize())
    }

    pub fn from_literal(l: &MatLiteral, disc: i64) -> Result<Self> {
        let f = |x: &FLiteral| f_from_literal(x, disc);
        Ok(GlobalMat::new(f(&l[0][0])?, f(&l[0][1])?, f(&l[1][0])?, f(&l[1][1])?))
    }

    pub fn to_literal(&self) -> MatLiteral {
        self.m.clone().map(|row| row.map(|x| f_to_literal(&x)))
    }

    /// Norm to Q of the determinant.
    pub fn det_norm(&self) -> BigRational {
        self.det().norm()
    }

    pub fn is_invertible(&self) -> bool {
        !self.det().norm().is_zero()
    }
}

/// The two embeddings F ↪ Q_p, with the tree they act on.
#[derive(Clone, Debug)]
pub struct Embedder {
    pub tree: Tree,
    pub emb: [FieldEmbedding; 2],
}

impl Embedder {
    pub fn new(disc: i64, p: u64, prec: u32) -> Result<Self> {
        Ok(Embedder {
            tree: Tree::new(p),
            emb: [FieldEmbedding::new(disc, PrimeSide::new(p, 1), prec)?, FieldEmbedding::new(disc, PrimeSide::new(p, 2), prec)?],
        })
    }

    pub fn p(&self) -> u64 {
        self.tree.p
    }

    pub fn local(&self, g: &GlobalMat, side: usize) -> Mat2 {
        let e = &self.emb[side];
        let [[a, b], [c, d]] = &g.m;
        Mat2::new(e.embed(a), e.embed(b), e.embed(c), e.embed(d))
    }

    pub fn elem(&self, g: GlobalMat) -> Elem {
        let local = [self.local(&g, 0), self.local(&g, 1)];
        Elem { g, local }
    }
}

/// A global matrix with its cached local images.
#[derive(Clone, Debug)]
pub struct Elem {
    pub g: GlobalMat,
    pub local: [Mat2; 2],
}

impl Elem {
    pub fn mul(&self, o: &Elem) -> Elem {
        Elem { g: self.g.mul(&o.g), local: [self.local[0].mul(&o.local[0]), self.local[1].mul(&o.local[1])] }
    }

    pub fn inv(&self) -> Result<Elem> {
        Ok(Elem { g: self.g.inv()?, local: [self.local[0].adjugate(), self.local[1].adjugate()] })
    }

    /// Local images of the inverse, as adjugates (equal in PGL₂).
    pub fn local_inv(&self) -> [Mat2; 2] {
        [self.local[0].adjugate(), self.local[1].adjugate()]
    }
}

/// Serialised matrix entry list, for dumps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedMat {
    pub id: String,
    pub m: MatLiteral,
}
