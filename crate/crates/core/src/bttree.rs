//! The Bruhat–Tits tree of PGL₂(Q_p).
//!
//! Vertices are closed discs `B(c, k) = {t : v(t − c) ≥ k}` of Q_p. The base
//! vertex is `Z_p` and the base edge `e₀` runs from `Z_p` to `pZ_p`, with
//! `U_{e₀} = pZ_p`. An edge from a disc to a child disc has `U_e` equal to
//! the child; the opposite edge has the complement.
//!
//! Edge ids are `(depth, idx, outward)`. An outward edge of depth `n` is
//! named by a path of `n` digits: on the finite branch the base-p digits of
//! the centre of `U_e ⊂ Z_p`, and on the branch through ∞ the digits of
//! `1/U_e ⊂ pZ_p` with the leading 0 replaced by `p`. `idx` is that path
//! read as a mixed-radix number, first digit most significant.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{inv_mod_pn, Padic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub depth: u32,
    pub idx: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub depth: u32,
    pub idx: u64,
    pub outward: bool,
}

impl EdgeId {
    pub fn opposite(&self) -> EdgeId {
        EdgeId { outward: !self.outward, ..*self }
    }
}

impl VertexId {
    pub const BASE: VertexId = VertexId { depth: 0, idx: 0 };
}

/// `{t : v(t − c) ≥ k}` with `c` reduced to its digits below `p^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Disc {
    pub center: BigRational,
    pub k: i64,
}

/// A compact-open set `U_e`: a disc, or the complement of one in P¹(Q_p).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ball {
    Finite(Disc),
    Complement(Disc),
}

impl Ball {
    pub fn complement(&self) -> Ball {
        match self {
            Ball::Finite(d) => Ball::Complement(d.clone()),
            Ball::Complement(d) => Ball::Finite(d.clone()),
        }
    }

    pub fn disc(&self) -> &Disc {
        match self {
            Ball::Finite(d) | Ball::Complement(d) => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum P1Point {
    Finite(Padic),
    Infinity,
}

/// A 2×2 matrix over Q_p acting by Möbius transformations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub m: [[Padic; 2]; 2],
}

impl Mat2 {
    pub fn new(a: Padic, b: Padic, c: Padic, d: Padic) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn from_i64(p: u64, e: [[i64; 2]; 2], prec: u32) -> Self {
        let f = |x: i64| Padic::from_i64(p, x, prec);
        Mat2::new(f(e[0][0]), f(e[0][1]), f(e[1][0]), f(e[1][1]))
    }

    pub fn from_rational(p: u64, e: &[[BigRational; 2]; 2], prec: u32) -> Self {
        let f = |x: &BigRational| Padic::from_rational(p, x, prec);
        Mat2::new(f(&e[0][0]), f(&e[0][1]), f(&e[1][0]), f(&e[1][1]))
    }

    pub fn identity(p: u64) -> Self {
        Self::from_i64(p, [[1, 0], [0, 1]], 64)
    }

    pub fn prime(&self) -> u64 {
        self.m[0][0].prime()
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let e = |i: usize, j: usize| self.m[i][0].mul(&o.m[0][j]).add(&self.m[i][1].mul(&o.m[1][j]));
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn det(&self) -> Padic {
        self.m[0][0].mul(&self.m[1][1]).sub(&self.m[0][1].mul(&self.m[1][0]))
    }

    /// The adjugate, which is the inverse in PGL₂.
    pub fn adjugate(&self) -> Mat2 {
        let [[a, b], [c, d]] = &self.m;
        Mat2::new(d.clone(), b.neg(), c.neg(), a.clone())
    }

    pub fn apply(&self, t: &P1Point) -> Result<P1Point> {
        let [[a, b], [c, d]] = &self.m;
        let (num, den) = match t {
            P1Point::Infinity => (a.clone(), c.clone()),
            P1Point::Finite(x) => (a.mul(x).add(b), c.mul(x).add(d)),
        };
        if den.is_exact_zero() {
            return Ok(P1Point::Infinity);
        }
        if den.is_zero() {
            return Err(Error::InsufficientPrecision(format!("Möbius denominator {den}")));
        }
        Ok(P1Point::Finite(num.div(&den)?))
    }
}

fn ipow(p: u64, e: u32) -> u64 {
    p.pow(e)
}

fn valuation_big(p: u64, x: &BigInt) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    while (&y % &pb).is_zero() {
        y /= &pb;
        v += 1;
    }
    Some(v)
}

/// Valuation of a rational, `None` for zero.
pub fn valuation_q(p: u64, x: &BigRational) -> Option<i64> {
    Some(valuation_big(p, x.numer())? - valuation_big(p, x.denom()).unwrap())
}

/// The Bruhat–Tits tree for a fixed prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tree {
    pub p: u64,
}

/// What [`Tree::enumerate`] lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Vertices,
    Edges,
    EvenEdges,
    OutwardLevel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Vertex(VertexId),
    Edge(EdgeId),
}

impl Tree {
    pub fn new(p: u64) -> Self {
        assert!(p >= 3 && p % 2 == 1, "odd primes only");
        Tree { p }
    }

    /// Number of outward edges of depth `n ≥ 1`: `(p+1)p^{n−1}`.
    pub fn level_size(&self, n: u32) -> u64 {
        if n == 0 {
            0
        } else {
            (self.p + 1) * ipow(self.p, n - 1)
        }
    }

    /// Number of outward edges of depth `< n`.
    pub fn out_offset(&self, n: u32) -> u64 {
        if n <= 1 {
            0
        } else {
            (self.p + 1) * (ipow(self.p, n - 1) - 1) / (self.p - 1)
        }
    }

    pub fn num_edges(&self, m: u32) -> usize {
        2 * self.out_offset(m + 1) as usize
    }

    pub fn num_vertices(&self, m: u32) -> usize {
        1 + self.out_offset(m + 1) as usize
    }

    /// Dense index in `0..num_edges(m)` for edges of depth ≤ m.
    pub fn edge_index(&self, e: EdgeId) -> usize {
        (2 * (self.out_offset(e.depth) + e.idx) + u64::from(!e.outward)) as usize
    }

    pub fn edge_at(&self, i: usize) -> EdgeId {
        let outward = i % 2 == 0;
        let mut j = (i / 2) as u64;
        let mut n = 1;
        while j >= self.level_size(n) {
            j -= self.level_size(n);
            n += 1;
        }
        EdgeId { depth: n, idx: j, outward }
    }

    pub fn vertex_index(&self, v: VertexId) -> usize {
        if v.depth == 0 {
            0
        } else {
            (1 + self.out_offset(v.depth) + v.idx) as usize
        }
    }

    pub fn vertex_at(&self, i: usize) -> VertexId {
        if i == 0 {
            return VertexId::BASE;
        }
        let e = self.edge_at(2 * (i - 1));
        VertexId { depth: e.depth, idx: e.idx }
    }

    pub fn base_edge(&self) -> EdgeId {
        EdgeId { depth: 1, idx: 0, outward: true }
    }

    pub fn source(&self, e: EdgeId) -> VertexId {
        if e.outward {
            self.parent(VertexId { depth: e.depth, idx: e.idx })
        } else {
            VertexId { depth: e.depth, idx: e.idx }
        }
    }

    pub fn target(&self, e: EdgeId) -> VertexId {
        self.source(e.opposite())
    }

    fn parent(&self, v: VertexId) -> VertexId {
        if v.depth <= 1 {
            VertexId::BASE
        } else {
            VertexId { depth: v.depth - 1, idx: v.idx / self.p }
        }
    }

    /// Even edges have their source at even distance from the base vertex.
    pub fn is_even(&self, e: EdgeId) -> bool {
        self.source(e).depth % 2 == 0
    }

    pub fn is_even_vertex(&self, v: VertexId) -> bool {
        v.depth % 2 == 0
    }

    /// The `p + 1` edges with source `v`, outward ones first by digit.
    pub fn edges_from(&self, v: VertexId) -> Vec<EdgeId> {
        if v.depth == 0 {
            return (0..=self.p).map(|d| EdgeId { depth: 1, idx: d, outward: true }).collect();
        }
        let mut out: Vec<EdgeId> =
            (0..self.p).map(|d| EdgeId { depth: v.depth + 1, idx: v.idx * self.p + d, outward: true }).collect();
        out.push(EdgeId { depth: v.depth, idx: v.idx, outward: false });
        out
    }

    /// The edge pointing from `v` towards the base vertex (none at the base).
    pub fn inward_from(&self, v: VertexId) -> Option<EdgeId> {
        (v.depth > 0).then_some(EdgeId { depth: v.depth, idx: v.idx, outward: false })
    }

    pub fn outward_level(&self, m: u32) -> Vec<EdgeId> {
        (0..self.level_size(m)).map(|idx| EdgeId { depth: m, idx, outward: true }).collect()
    }

    pub fn vertices(&self, m: u32) -> Vec<VertexId> {
        (0..self.num_vertices(m)).map(|i| self.vertex_at(i)).collect()
    }

    /// All edges of depth ≤ m in dense-index order.
    pub fn edges(&self, m: u32) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.num_edges(m));
        for n in 1..=m {
            for idx in 0..self.level_size(n) {
                out.push(EdgeId { depth: n, idx, outward: true });
                out.push(EdgeId { depth: n, idx, outward: false });
            }
        }
        out
    }

    pub fn even_edges(&self, m: u32) -> Vec<EdgeId> {
        self.edges(m).into_iter().filter(|e| self.is_even(*e)).collect()
    }

    pub fn enumerate(&self, m: u32, kind: Kind) -> Vec<Item> {
        match kind {
            Kind::Vertices => self.vertices(m).into_iter().map(Item::Vertex).collect(),
            Kind::Edges => self.edges(m).into_iter().map(Item::Edge).collect(),
            Kind::EvenEdges => self.even_edges(m).into_iter().map(Item::Edge).collect(),
            Kind::OutwardLevel => self.outward_level(m).into_iter().map(Item::Edge).collect(),
        }
    }

    /// Path digits from the base vertex; the first may equal `p` (∞ branch).
    pub fn path(&self, depth: u32, idx: u64) -> Vec<u64> {
        let mut d = Vec::with_capacity(depth as usize);
        let mut x = idx;
        for _ in 1..depth {
            d.push(x % self.p);
            x /= self.p;
        }
        if depth > 0 {
            d.push(x);
        }
        d.reverse();
        d
    }

    fn idx_of_path(&self, path: &[u64]) -> u64 {
        path.iter().skip(1).fold(path[0], |acc, &d| acc * self.p + d)
    }

    fn pb(&self) -> BigInt {
        BigInt::from(self.p)
    }

    fn ppow(&self, e: i64) -> BigRational {
        let pk = BigInt::from(self.p).pow(e.unsigned_abs() as u32);
        if e >= 0 {
            BigRational::from_integer(pk)
        } else {
            BigRational::new(BigInt::one(), pk)
        }
    }

    /// Reduces `c` to its p-adic digits below `p^k`. `c` must have a
    /// denominator that is a power of p times a unit.
    pub fn disc(&self, c: &BigRational, k: i64) -> Disc {
        let Some(v) = valuation_q(self.p, c) else {
            return Disc { center: BigRational::zero(), k };
        };
        if v >= k {
            return Disc { center: BigRational::zero(), k };
        }
        let x = Padic::from_rational(self.p, c, (k - v) as u32 + 1);
        Disc { center: x.cap_abs(k).to_rational(), k }
    }

    fn disc_from_padic(&self, x: &Padic, k: i64) -> Result<Disc> {
        if x.abs_prec().is_some_and(|a| a < k) {
            return Err(Error::InsufficientPrecision(format!("disc centre {x} needed to O({}^{k})", self.p)));
        }
        Ok(Disc { center: x.cap_abs(k).to_rational(), k })
    }

    /// Distance of the vertex `B(c, k)` from the base vertex `Z_p`.
    pub fn disc_distance(&self, d: &Disc) -> i64 {
        let vc = valuation_q(self.p, &d.center).unwrap_or(i64::MAX);
        d.k - 2 * 0.min(d.k).min(vc)
    }

    fn digits_of(&self, c: &BigInt, n: u32) -> Vec<u64> {
        let pb = self.pb();
        let mut x = c.clone();
        (0..n)
            .map(|_| {
                let r = (&x % &pb).to_u64().unwrap();
                x /= &pb;
                r
            })
            .collect()
    }

    fn from_digits(&self, d: &[u64]) -> BigInt {
        d.iter().rev().fold(BigInt::zero(), |acc, &x| acc * self.pb() + BigInt::from(x))
    }

    /// `1/c` as a disc of radius `n − 2s`, for `c = p^s·u ∈ pZ_p` known mod `p^n`.
    fn invert_center(&self, c: &BigInt, n: u32) -> Disc {
        let s = valuation_big(self.p, c).unwrap() as u32;
        let u = c / self.pb().pow(s);
        let u = u.to_biguint().unwrap();
        let w = inv_mod_pn(&u, self.p, n - s);
        Disc {
            center: BigRational::new(BigInt::from(w), self.pb().pow(s)),
            k: n as i64 - 2 * s as i64,
        }
    }

    /// `U_e`.
    pub fn ball(&self, e: EdgeId) -> Ball {
        let path = self.path(e.depth, e.idx);
        let n = e.depth;
        let out = if path[0] < self.p {
            Ball::Finite(Disc { center: BigRational::from_integer(self.from_digits(&path)), k: n as i64 })
        } else {
            let mut d = path.clone();
            d[0] = 0;
            let c = self.from_digits(&d);
            if c.is_zero() {
                Ball::Complement(Disc { center: BigRational::zero(), k: 1 - n as i64 })
            } else {
                Ball::Finite(self.invert_center(&c, n))
            }
        };
        if e.outward {
            out
        } else {
            out.complement()
        }
    }

    /// The edge whose `U_e` is the given ball.
    pub fn edge_of_ball(&self, b: &Ball) -> Result<EdgeId> {
        // edge from the parent disc to the disc, or back
        let (d, down) = match b {
            Ball::Finite(d) => (d, true),
            Ball::Complement(d) => (d, false),
        };
        let parent = self.disc(&d.center, d.k - 1);
        let (dd, dp) = (self.disc_distance(d), self.disc_distance(&parent));
        let outward = if down { dd > dp } else { dp > dd };
        let out_ball = if outward { b.clone() } else { b.complement() };
        let (od, odown) = match &out_ball {
            Ball::Finite(x) => (x, true),
            Ball::Complement(x) => (x, false),
        };
        let vc = valuation_q(self.p, &od.center);
        let path = if odown && od.k >= 1 && vc.is_none_or(|v| v >= 0) {
            self.digits_of(od.center.numer(), od.k as u32)
        } else if !odown {
            // P¹ ∖ p^k Z_p with k ≤ 0 is 1/(p^{1−k} Z_p)
            let n = (1 - od.k) as u32;
            let mut d = vec![0; n as usize];
            d[0] = self.p;
            d
        } else {
            let s = -vc.unwrap();
            let n = (od.k + 2 * s) as u32;
            let w = od.center.numer().to_biguint().unwrap();
            let winv = inv_mod_pn(&w, self.p, n - s as u32);
            let c = BigInt::from(winv) * self.pb().pow(s as u32);
            let mut d = self.digits_of(&c, n);
            d[0] = self.p;
            d
        };
        let depth = path.len() as u32;
        if depth == 0 || depth > self.max_depth() {
            return Err(Error::DepthExceeded(format!("edge of depth {depth}")));
        }
        Ok(EdgeId { depth, idx: self.idx_of_path(&path), outward })
    }

    /// Deepest level whose ids fit in 63 bits.
    pub fn max_depth(&self) -> u32 {
        let mut n = 1;
        while (self.p + 1).checked_mul(self.p.checked_pow(n).unwrap_or(u64::MAX)).is_some_and(|x| x < 1 << 62) {
            n += 1;
        }
        n
    }

    /// The disc of a vertex.
    pub fn vertex_disc(&self, v: VertexId) -> Disc {
        if v.depth == 0 {
            return Disc { center: BigRational::zero(), k: 0 };
        }
        match self.ball(EdgeId { depth: v.depth, idx: v.idx, outward: true }) {
            Ball::Finite(d) => d,
            // target of P¹ ∖ B(0,k) is B(0,k−1)
            Ball::Complement(d) => Disc { center: d.center, k: d.k - 1 },
        }
    }

    /// Normal form `g_e` with `g_e·(pZ_p) = U_e`, as exact rationals.
    pub fn normal_form(&self, e: EdgeId) -> [[BigRational; 2]; 2] {
        let z = BigRational::zero;
        let o = BigRational::one;
        match self.ball(e) {
            Ball::Finite(d) => [[self.ppow(d.k - 1), d.center], [z(), o()]],
            Ball::Complement(d) => [[d.center, self.ppow(d.k)], [o(), z()]],
        }
    }

    /// `g_e·0`: the disc centre, or ∞ for complements.
    pub fn sample_point(&self, e: EdgeId, prec: u32) -> P1Point {
        match self.ball(e) {
            Ball::Finite(d) => P1Point::Finite(Padic::from_rational(self.p, &d.center, prec)),
            Ball::Complement(_) => P1Point::Infinity,
        }
    }

    pub fn contains(&self, b: &Ball, t: &P1Point) -> Result<bool> {
        let (d, finite) = match b {
            Ball::Finite(d) => (d, true),
            Ball::Complement(d) => (d, false),
        };
        let inside = match t {
            P1Point::Infinity => false,
            P1Point::Finite(x) => {
                let c = Padic::from_rational(self.p, &d.center, (d.k.unsigned_abs() + 8) as u32);
                let diff = x.sub(&c);
                if diff.valuation().is_none() && diff.valuation_bound() < d.k {
                    return Err(Error::InsufficientPrecision(format!("membership of {x} in a disc of radius {}", d.k)));
                }
                diff.valuation_bound() >= d.k
            }
        };
        Ok(inside == finite)
    }

    /// Image of a ball under a Möbius transformation.
    pub fn act_ball(&self, g: &Mat2, b: &Ball) -> Result<Ball> {
        let (d, finite) = match b {
            Ball::Finite(d) => (d, true),
            Ball::Complement(d) => (d, false),
        };
        let prec = [&g.m[0][0], &g.m[0][1], &g.m[1][0], &g.m[1][1]]
            .iter()
            .filter_map(|x| x.abs_prec())
            .max()
            .unwrap_or(32)
            .max(0) as u32
            + d.k.unsigned_abs() as u32
            + 4;
        let t = Mat2::new(
            Padic::from_rational(self.p, &self.ppow(d.k - 1), prec),
            Padic::from_rational(self.p, &d.center, prec + 2 * d.k.unsigned_abs() as u32),
            Padic::zero(self.p),
            Padic::one(self.p, prec),
        );
        let m = g.mul(&t);
        let [[a, bb], [c, dd]] = &m.m;
        let det = m.det();
        let Some(vdet) = det.valuation() else {
            return Err(Error::InsufficientPrecision("determinant indistinguishable from zero".into()));
        };
        let image = match (dd.valuation(), c.valuation()) {
            (Some(vd), _) if vd <= c.valuation_bound() => {
                let k = vdet + 1 - 2 * vd;
                Ball::Finite(self.disc_from_padic(&bb.div(dd)?, k)?)
            }
            (_, Some(vc)) if vc < dd.valuation_bound() => {
                let k = vdet - 2 * vc;
                Ball::Complement(self.disc_from_padic(&a.div(c)?, k)?)
            }
            _ => {
                return Err(Error::InsufficientPrecision(format!("cannot certify the pole of {m:?}")));
            }
        };
        Ok(if finite { image } else { image.complement() })
    }

    pub fn act(&self, g: &Mat2, e: EdgeId) -> Result<EdgeId> {
        self.edge_of_ball(&self.act_ball(g, &self.ball(e))?)
    }

    pub fn act_vertex(&self, g: &Mat2, v: VertexId) -> Result<VertexId> {
        if v.depth == 0 {
            return Ok(self.source(self.act(g, self.base_edge())?));
        }
        Ok(self.target(self.act(g, EdgeId { depth: v.depth, idx: v.idx, outward: true })?))
    }

    fn path_string(&self, depth: u32, idx: u64) -> String {
        let sep = if self.p >= 10 { "." } else { "" };
        self.path(depth, idx).iter().map(|d| d.to_string()).collect::<Vec<_>>().join(sep)
    }

    /// `"depth:path+"` for outward edges and `"depth:path-"` for inward ones.
    pub fn edge_label(&self, e: EdgeId) -> String {
        format!("{}:{}{}", e.depth, self.path_string(e.depth, e.idx), if e.outward { '+' } else { '-' })
    }

    pub fn vertex_label(&self, v: VertexId) -> String {
        format!("{}:{}", v.depth, self.path_string(v.depth, v.idx))
    }

    fn parse_path(&self, depth: &str, path: &str) -> Result<(u32, u64)> {
        let bad = || Error::Parse(format!("bad tree id {depth}:{path}"));
        let depth: u32 = depth.parse().map_err(|_| bad())?;
        let digits: Vec<u64> = if depth == 0 {
            Vec::new()
        } else if self.p >= 10 {
            path.split('.').map(|d| d.parse().map_err(|_| bad())).collect::<Result<_>>()?
        } else {
            path.chars().map(|c| c.to_digit(10).map(u64::from).ok_or_else(bad)).collect::<Result<_>>()?
        };
        if digits.len() != depth as usize
            || digits.first().is_some_and(|&d| d > self.p)
            || digits.iter().skip(1).any(|&d| d >= self.p)
            || depth > self.max_depth()
        {
            return Err(bad());
        }
        Ok((depth, if depth == 0 { 0 } else { self.idx_of_path(&digits) }))
    }

    pub fn parse_edge(&self, s: &str) -> Result<EdgeId> {
        let bad = || Error::Parse(format!("bad edge id {s:?}"));
        let (depth, rest) = s.split_once(':').ok_or_else(bad)?;
        let outward = match rest.chars().last() {
            Some('+') => true,
            Some('-') => false,
            _ => return Err(bad()),
        };
        let (depth, idx) = self.parse_path(depth, &rest[..rest.len() - 1])?;
        if depth == 0 {
            return Err(bad());
        }
        Ok(EdgeId { depth, idx, outward })
    }

    pub fn parse_vertex(&self, s: &str) -> Result<VertexId> {
        let (depth, rest) = s.split_once(':').ok_or_else(|| Error::Parse(format!("bad vertex id {s:?}")))?;
        let (depth, idx) = self.parse_path(depth, rest)?;
        Ok(VertexId { depth, idx })
    }

    /// Representatives of P¹(Z/p^N) as points of P¹(Q_p): `x` for
    /// `0 ≤ x < p^N` and `1/(p·y)` for `0 ≤ y < p^{N−1}` (∞ for `y = 0`).
    pub fn residue_points(&self, n: u32, prec: u32) -> Vec<P1Point> {
        let pn = ipow(self.p, n);
        let mut out: Vec<P1Point> = (0..pn).map(|x| P1Point::Finite(Padic::from_i64(self.p, x as i64, prec))).collect();
        out.push(P1Point::Infinity);
        for y in 1..pn / self.p {
            let r = BigRational::new(BigInt::one(), BigInt::from(self.p * y));
            out.push(P1Point::Finite(Padic::from_rational(self.p, &r, prec)));
        }
        out
    }
}

impl fmt::Display for Disc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {})", self.center, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3() -> Tree {
        Tree::new(3)
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn counts() {
        let t = t3();
        assert!(t.edges(0).is_empty());
        assert_eq!(t.outward_level(1).len(), 4);
        assert_eq!(t.outward_level(2).len(), 12);
        assert_eq!(t.edges(2).len(), 32);
        assert_eq!(t.num_edges(2), 32);
        assert_eq!(t.vertices(2).len(), 1 + 4 + 12);
    }

    #[test]
    fn dense_indices_round_trip() {
        let t = t3();
        for (i, e) in t.edges(4).into_iter().enumerate() {
            assert_eq!(t.edge_index(e), i);
            assert_eq!(t.edge_at(i), e);
        }
        for (i, v) in t.vertices(4).into_iter().enumerate() {
            assert_eq!(t.vertex_index(v), i);
        }
    }

    #[test]
    fn base_edge_balls() {
        let t = t3();
        let e0 = t.base_edge();
        assert_eq!(t.ball(e0), Ball::Finite(Disc { center: q(0, 1), k: 1 }));
        assert_eq!(t.ball(e0.opposite()), Ball::Complement(Disc { center: q(0, 1), k: 1 }));
        assert_eq!(t.sample_point(e0, 10), P1Point::Finite(Padic::zero(3)));
    }

    #[test]
    fn translation_of_base_edge() {
        let t = t3();
        let g = Mat2::from_i64(3, [[1, 1], [0, 1]], 20);
        let e = t.act(&g, t.base_edge()).unwrap();
        assert_eq!(t.ball(e), Ball::Finite(Disc { center: q(1, 1), k: 1 }));
        assert_eq!(e.depth, 1);
        assert_eq!(t.sample_point(e, 10), P1Point::Finite(Padic::from_i64(3, 1, 10)));
    }

    #[test]
    fn ball_and_edge_are_inverse() {
        let t = t3();
        for e in t.edges(5) {
            assert_eq!(t.edge_of_ball(&t.ball(e)).unwrap(), e, "{}", t.edge_label(e));
        }
    }

    #[test]
    fn source_target_and_opposite() {
        let t = t3();
        for e in t.edges(4) {
            assert_eq!(t.source(e.opposite()), t.target(e));
            assert_eq!(e.opposite().opposite(), e);
            let far = t.source(e).depth.max(t.target(e).depth);
            assert_eq!(far, e.depth);
        }
    }

    #[test]
    fn star_of_each_vertex_partitions_p1() {
        let t = t3();
        let pts = t.residue_points(5, 12);
        for v in t.vertices(3) {
            let star = t.edges_from(v);
            assert_eq!(star.len(), 4);
            for pt in &pts {
                let hits = star.iter().filter(|e| t.contains(&t.ball(**e), pt).unwrap()).count();
                assert_eq!(hits, 1, "vertex {}", t.vertex_label(v));
            }
            for e in star {
                assert_eq!(t.source(e), v);
            }
        }
    }

    #[test]
    fn outward_levels_partition() {
        let t = t3();
        for m in 1..=4 {
            let pts = t.residue_points(m + 1, 12);
            let balls: Vec<Ball> = t.outward_level(m).into_iter().map(|e| t.ball(e)).collect();
            for pt in &pts {
                let hits = balls.iter().filter(|b| t.contains(b, pt).unwrap()).count();
                assert_eq!(hits, 1, "m = {m}, point {pt:?}");
            }
        }
    }

    #[test]
    fn sample_points_lie_in_their_balls() {
        let t = t3();
        for e in t.edges(4) {
            assert!(t.contains(&t.ball(e), &t.sample_point(e, 16)).unwrap());
        }
    }

    #[test]
    fn vertex_discs_have_matching_distance() {
        let t = t3();
        for v in t.vertices(4) {
            assert_eq!(t.disc_distance(&t.vertex_disc(v)), v.depth as i64);
        }
    }

    #[test]
    fn labels_round_trip() {
        let t = t3();
        for e in t.edges(3) {
            assert_eq!(t.parse_edge(&t.edge_label(e)).unwrap(), e);
        }
        for v in t.vertices(3) {
            assert_eq!(t.parse_vertex(&t.vertex_label(v)).unwrap(), v);
        }
        assert_eq!(t.edge_label(t.base_edge()), "1:0+");
        assert!(t.parse_edge("2:4+").is_err());
    }

    #[test]
    fn act_identity_and_opposite() {
        let t = t3();
        let id = Mat2::identity(3);
        let g = Mat2::from_i64(3, [[2, 7], [3, 5]], 30);
        for e in t.edges(3) {
            assert_eq!(t.act(&id, e).unwrap(), e);
            assert_eq!(t.act(&g, e.opposite()).unwrap(), t.act(&g, e).unwrap().opposite());
        }
    }

    #[test]
    fn atkin_lehner_swaps_base_edge() {
        let t = t3();
        let h = Mat2::from_i64(3, [[0, 3], [1, 0]], 30);
        assert_eq!(t.act(&h, t.base_edge()).unwrap(), t.base_edge().opposite());
    }

    #[test]
    fn insufficient_precision_is_reported() {
        let t = t3();
        let g = Mat2::new(Padic::one(3, 2), Padic::zero(3), Padic::zero(3), Padic::one(3, 2));
        let deep = t.outward_level(6)[100];
        assert!(matches!(t.act(&g, deep), Err(Error::InsufficientPrecision(_))));
    }
}
