//! Making a cocycle's value at the cycle element harmonic.
//!
//! For a cocycle `c` whose values fail to be harmonic, the degenerations
//! `D₁ = φ₁(D)`, `D₂ = φ₂(D)` of a correcting cochain `D` are read off
//! from `c` at transporters. `D` itself is found by solving the sparse
//! system `φ₁(D) = D₁`, `φ₂(D) = D₂` modulo `p^M`, and the output is
//! `c(g*) − (g*⋆D − D)`.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::bttree::{Tree, VertexId};
use crate::cochain::{edge_count, even_edge, undirected, FiniteCochain};
use crate::error::{Error, Result};
use crate::group::Elem;
use crate::shapiro::{base_variant, Cocycle, Fixture, Target};

/// Arithmetic in Z/p^M with representatives in `[0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulus {
    pub p: i64,
    pub k: u32,
    pub n: i64,
}

impl Modulus {
    pub fn new(p: u64, k: u32) -> Self {
        let n = (p as i64).checked_pow(k).filter(|&n| n < 1 << 40).expect("p^M must stay below 2^40");
        Modulus { p: p as i64, k, n }
    }

    pub fn red(&self, x: i64) -> i64 {
        x.rem_euclid(self.n)
    }

    pub fn mul(&self, a: i64, b: i64) -> i64 {
        (i128::from(a) * i128::from(b)).rem_euclid(i128::from(self.n)) as i64
    }

    /// p-adic valuation of a residue (`k` for zero).
    pub fn val(&self, x: i64) -> u32 {
        let mut x = self.red(x);
        if x == 0 {
            return self.k;
        }
        let mut v = 0;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn inv_unit(&self, x: i64) -> Option<i64> {
        let e = self.red(x).extended_gcd(&self.n);
        (e.gcd == 1).then(|| self.red(e.x))
    }

    /// Writes `x = p^v·u` and returns `(v, u⁻¹ mod p^{k−v})`.
    fn split(&self, x: i64) -> (u32, i64) {
        let v = self.val(x);
        let pv = self.p.pow(v);
        let m = Modulus { n: self.n / pv, k: self.k - v, p: self.p };
        (v, m.inv_unit(self.red(x) / pv).unwrap_or(0))
    }
}

/// A linear system over Z/p^M with sparse rows.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub ncols: usize,
    pub rows: Vec<Vec<(u32, i64)>>,
    pub rhs: Vec<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolverStats {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub peak_nnz: usize,
    pub fill_in: usize,
    pub pivots: usize,
    pub nonunit_pivots: usize,
    pub free_vars: usize,
    /// Bytes held by row storage at the peak.
    pub peak_bytes: usize,
    pub millis: u128,
}

impl SparseSystem {
    pub fn new(ncols: usize) -> Self {
        SparseSystem { ncols, rows: Vec::new(), rhs: Vec::new() }
    }

    /// Adds a row, merging repeated columns and dropping zeros.
    pub fn push(&mut self, mut row: Vec<(u32, i64)>, rhs: i64, md: &Modulus) {
        row.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(u32, i64)> = Vec::with_capacity(row.len());
        for (c, a) in row {
            match out.last_mut() {
                Some(l) if l.0 == c => l.1 = md.red(l.1 + a),
                _ => out.push((c, md.red(a))),
            }
        }
        out.retain(|e| e.1 != 0);
        self.rows.push(out);
        self.rhs.push(md.red(rhs));
    }

    pub fn residual(&self, x: &[i64], md: &Modulus) -> Vec<i64> {
        self.rows
            .par_iter()
            .zip(&self.rhs)
            .map(|(r, &b)| md.red(r.iter().fold(-b, |acc, &(c, a)| md.red(acc + md.mul(a, x[c as usize])))))
            .collect()
    }

    pub fn is_solution(&self, x: &[i64], md: &Modulus) -> bool {
        self.residual(x, md).iter().all(|&r| r == 0)
    }

    /// Sparse elimination with Markowitz pivoting on unit entries (fewest
    /// entries in the column, then in the row, then lowest id), falling back
    /// to minimal-valuation pivots. Free variables are set to zero.
    pub fn solve(&self, md: &Modulus) -> Result<(Vec<i64>, SolverStats)> {
        let start = Instant::now();
        let mut rows = self.rows.clone();
        let mut rhs = self.rhs.clone();
        let nr = rows.len();
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut stats = SolverStats { rows: nr, cols: self.ncols, nnz, peak_nnz: nnz, ..Default::default() };
        let mut active = vec![true; nr];
        let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); self.ncols];
        let mut count = vec![0usize; self.ncols];
        for (i, r) in rows.iter().enumerate() {
            for &(c, _) in r {
                col_rows[c as usize].push(i as u32);
                count[c as usize] += 1;
            }
        }
        let mut heap: BinaryHeap<Reverse<(usize, u32)>> =
            (0..self.ncols).filter(|&c| count[c] > 0).map(|c| Reverse((count[c], c as u32))).collect();
        let mut done_col = vec![false; self.ncols];
        // (row, column, pivot coefficient)
        let mut pivots: Vec<(usize, usize, i64)> = Vec::new();
        let mut cur_nnz = nnz;

        let coeff = |r: &Vec<(u32, i64)>, c: u32| r.binary_search_by_key(&c, |e| e.0).ok().map(|k| r[k].1);

        let eliminate = |rows: &mut Vec<Vec<(u32, i64)>>,
                         rhs: &mut Vec<i64>,
                         col_rows: &mut Vec<Vec<u32>>,
                         count: &mut Vec<usize>,
                         heap: &mut BinaryHeap<Reverse<(usize, u32)>>,
                         active: &[bool],
                         cur_nnz: &mut usize,
                         stats: &mut SolverStats,
                         r: usize,
                         c: usize,
                         unit: bool| {
            let prow = rows[r].clone();
            let a_rc = coeff(&prow, c as u32).unwrap();
            let (v, uinv) = md.split(a_rc);
            let pv = md.p.pow(v);
            let targets: Vec<u32> = col_rows[c].clone();
            for &i in &targets {
                let i = i as usize;
                if i == r || !active[i] {
                    continue;
                }
                let Some(a_ic) = coeff(&rows[i], c as u32) else { continue };
                // f·a_rc ≡ a_ic
                let f = if unit { md.mul(a_ic, uinv) } else { md.mul(a_ic / pv, uinv) };
                let old = std::mem::take(&mut rows[i]);
                let mut merged = Vec::with_capacity(old.len() + prow.len());
                let (mut x, mut y) = (0, 0);
                while x < old.len() || y < prow.len() {
                    let take_old = y >= prow.len() || (x < old.len() && old[x].0 < prow[y].0);
                    let take_new = x >= old.len() || (y < prow.len() && prow[y].0 < old[x].0);
                    if take_old {
                        merged.push(old[x]);
                        x += 1;
                    } else if take_new {
                        let (cc, a) = prow[y];
                        let val = md.red(-md.mul(f, a));
                        if val != 0 {
                            merged.push((cc, val));
                            col_rows[cc as usize].push(i as u32);
                            count[cc as usize] += 1;
                            heap.push(Reverse((count[cc as usize], cc)));
                            stats.fill_in += 1;
                        }
                        y += 1;
                    } else {
                        let (cc, a) = prow[y];
                        let val = md.red(old[x].1 - md.mul(f, a));
                        if val != 0 {
                            merged.push((cc, val));
                        } else {
                            count[cc as usize] -= 1;
                            heap.push(Reverse((count[cc as usize], cc)));
                        }
                        x += 1;
                        y += 1;
                    }
                }
                *cur_nnz = *cur_nnz + merged.len() - old.len();
                rows[i] = merged;
                rhs[i] = md.red(rhs[i] - md.mul(f, rhs[r]));
            }
            for &(cc, _) in &prow {
                count[cc as usize] -= 1;
                heap.push(Reverse((count[cc as usize], cc)));
            }
            stats.peak_nnz = stats.peak_nnz.max(*cur_nnz);
        };

        while let Some(Reverse((cnt, c))) = heap.pop() {
            let c = c as usize;
            if done_col[c] || cnt != count[c] || cnt == 0 {
                continue;
            }
            // shortest active row with a unit entry in this column
            let mut best: Option<(usize, usize)> = None;
            for &i in &col_rows[c] {
                let i = i as usize;
                if !active[i] {
                    continue;
                }
                if let Some(a) = coeff(&rows[i], c as u32) {
                    if md.val(a) == 0 && best.is_none_or(|(len, j)| (rows[i].len(), i) < (len, j)) {
                        best = Some((rows[i].len(), i));
                    }
                }
            }
            let Some((_, r)) = best else { continue };
            eliminate(&mut rows, &mut rhs, &mut col_rows, &mut count, &mut heap, &active, &mut cur_nnz, &mut stats, r, c, true);
            active[r] = false;
            done_col[c] = true;
            pivots.push((r, c, coeff(&rows[r], c as u32).unwrap()));
        }

        // columns whose entries are all divisible by p
        loop {
            let mut best: Option<(u32, usize, usize)> = None;
            for i in (0..nr).filter(|&i| active[i]) {
                for &(c, a) in &rows[i] {
                    let key = (md.val(a), c as usize, i);
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
            }
            let Some((_, c, r)) = best else { break };
            eliminate(&mut rows, &mut rhs, &mut col_rows, &mut count, &mut heap, &active, &mut cur_nnz, &mut stats, r, c, false);
            active[r] = false;
            done_col[c] = true;
            stats.nonunit_pivots += 1;
            pivots.push((r, c, coeff(&rows[r], c as u32).unwrap()));
        }

        if let Some(i) = (0..nr).find(|&i| active[i] && rhs[i] != 0) {
            return Err(Error::LiftInconsistent(format!("row {i} reduces to 0 = {}", rhs[i])));
        }

        let mut x = vec![0i64; self.ncols];
        for &(r, c, a) in pivots.iter().rev() {
            let s = rows[r].iter().filter(|e| e.0 as usize != c).fold(rhs[r], |acc, &(cc, b)| md.red(acc - md.mul(b, x[cc as usize])));
            let (v, uinv) = md.split(a);
            let pv = md.p.pow(v);
            if s % pv != 0 {
                return Err(Error::LiftInconsistent(format!("pivot p^{v} does not divide the right-hand side")));
            }
            x[c] = md.mul(s / pv, uinv);
        }
        stats.pivots = pivots.len();
        stats.free_vars = self.ncols - pivots.len();
        stats.peak_bytes = stats.peak_nnz * std::mem::size_of::<(u32, i64)>();
        stats.millis = start.elapsed().as_millis();
        if !self.is_solution(&x, md) {
            return Err(Error::LiftInconsistent("back-substituted vector fails the system".into()));
        }
        Ok((x, stats))
    }

    /// Dense row reduction with minimal-valuation pivots and back
    /// substitution, for cross-checking small systems.
    pub fn solve_dense(&self, md: &Modulus) -> Result<Vec<i64>> {
        let (nr, nc) = (self.rows.len(), self.ncols);
        let mut a = vec![vec![0i64; nc + 1]; nr];
        for (i, r) in self.rows.iter().enumerate() {
            for &(c, v) in r {
                a[i][c as usize] = v;
            }
            a[i][nc] = self.rhs[i];
        }
        let mut piv: Vec<(usize, usize)> = Vec::new();
        let mut row = 0;
        let mut used = vec![false; nc];
        while row < nr {
            let mut best: Option<(u32, usize, usize)> = None;
            for (i, ai) in a.iter().enumerate().skip(row) {
                for (c, &x) in ai.iter().take(nc).enumerate() {
                    if x != 0 && !used[c] && best.is_none_or(|b| (md.val(x), c, i) < b) {
                        best = Some((md.val(x), c, i));
                    }
                }
            }
            let Some((_, c, i)) = best else { break };
            a.swap(row, i);
            let (v, uinv) = md.split(a[row][c]);
            let pv = md.p.pow(v);
            for i in row + 1..nr {
                if a[i][c] != 0 {
                    let f = md.mul(a[i][c] / pv, uinv);
                    for k in 0..=nc {
                        a[i][k] = md.red(a[i][k] - md.mul(f, a[row][k]));
                    }
                }
            }
            used[c] = true;
            piv.push((row, c));
            row += 1;
        }
        if a.iter().skip(row).any(|r| r[nc] != 0) {
            return Err(Error::LiftInconsistent("dense elimination found 0 = nonzero".into()));
        }
        let mut x = vec![0i64; nc];
        for &(r, c) in piv.iter().rev() {
            let s = (0..nc).filter(|&k| k != c).fold(a[r][nc], |acc, k| md.red(acc - md.mul(a[r][k], x[k])));
            let (v, uinv) = md.split(a[r][c]);
            let pv = md.p.pow(v);
            if s % pv != 0 {
                return Err(Error::LiftInconsistent("dense pivot does not divide".into()));
            }
            x[c] = md.mul(s / pv, uinv);
        }
        Ok(x)
    }
}

/// The two degenerations with the four pinned base constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Degenerations {
    pub m: u32,
    /// `D₁(v₁, e₂)` indexed `[vertex_index · n + u]`.
    pub d1: Vec<i64>,
    /// `D₂(e₁, v₂)` indexed `[u · nv + vertex_index]`.
    pub d2: Vec<i64>,
    /// `D₁(v₀, e₀), D₁(v̂, e₀), D₂(e₀, v₀), D₂(e₀, v̂)`.
    pub base: [i64; 4],
}

fn class(tree: &Tree, v: VertexId) -> usize {
    usize::from(!tree.is_even_vertex(v))
}

/// Computes `D₁`, `D₂` from the cocycle at transporters. The constants on
/// the base pairs are fixed by the ν identity `ν₂(D₁) = ν₁(D₂)` together
/// with the convention `D₁(v₀, e₀) = 0`, which removes its one-dimensional
/// kernel.
pub fn compute_degenerations(fx: &Fixture, c: &dyn Cocycle, m: u32, md: &Modulus) -> Result<Degenerations> {
    if m == 0 {
        return Err(Error::DegenerationUnderdetermined("depth 0 has no vertices to harmonize at".into()));
    }
    let tree = fx.tree();
    let e0 = tree.base_edge();
    let (n, nv) = (edge_count(&tree, m), tree.num_vertices(m - 1));
    let verts = tree.vertices(m - 1);
    let known1 = (0..nv * n)
        .into_par_iter()
        .map(|k| {
            let (v, e) = (verts[k / n], even_edge(&tree, k % n));
            let g = fx.transporter(Target::VertexEdge(v, e))?;
            let s = tree.edges_from(base_variant(&tree, v)).into_iter().map(|f| c.eval(&g, f, e0)).sum::<Result<i64>>()?;
            Ok(md.red(s))
        })
        .collect::<Result<Vec<i64>>>()?;
    let known2 = (0..n * nv)
        .into_par_iter()
        .map(|k| {
            let (e, v) = (even_edge(&tree, k / nv), verts[k % nv]);
            let g = fx.transporter(Target::EdgeVertex(e, v))?;
            let s = tree.edges_from(base_variant(&tree, v)).into_iter().map(|f| c.eval(&g, e0, f)).sum::<Result<i64>>()?;
            Ok(md.red(s))
        })
        .collect::<Result<Vec<i64>>>()?;

    // ν equations, grouped by the parity class of (v₁, v₂)
    let p1 = tree.p as i64 + 1;
    let mut rhs_by_class: [[Option<i64>; 2]; 2] = [[None; 2]; 2];
    for (i1, &v1) in verts.iter().enumerate() {
        for (i2, &v2) in verts.iter().enumerate() {
            let nu2: i64 = tree.edges_from(v2).into_iter().map(|e| {
                let (u, s) = undirected(&tree, e);
                s * known1[i1 * n + u]
            }).sum();
            let nu1: i64 = tree.edges_from(v1).into_iter().map(|e| {
                let (u, s) = undirected(&tree, e);
                s * known2[u * nv + i2]
            }).sum();
            let k = md.red(nu1 - nu2);
            let slot = &mut rhs_by_class[class(&tree, v1)][class(&tree, v2)];
            match slot {
                Some(old) if *old != k => {
                    return Err(Error::LiftInconsistent(format!(
                        "degenerations violate the ν identity at ({}, {})",
                        tree.vertex_label(v1),
                        tree.vertex_label(v2)
                    )))
                }
                _ => *slot = Some(k),
            }
        }
    }
    // unknowns x₁, x₂ (D₁ at v₀ and v̂), y₁, y₂ (D₂ at v₀ and v̂)
    let classes_present: Vec<usize> = (0..2).filter(|&k| verts.iter().any(|&v| class(&tree, v) == k)).collect();
    let mut sys = SparseSystem::new(4);
    for &a in &classes_present {
        for &b in &classes_present {
            let (s1, s2) = (if a == 0 { 1 } else { -1 }, if b == 0 { 1 } else { -1 });
            // (p+1)·[s(v₂)·x_a − s(v₁)·y_b] = K
            sys.push(vec![(a as u32, p1 * s2), (2 + b as u32, -p1 * s1)], rhs_by_class[a][b].unwrap(), md);
        }
    }
    let nunk = 2 * classes_present.len();
    let rank = rank_mod_p(&sys, md);
    if rank + 1 < nunk {
        return Err(Error::DegenerationUnderdetermined(format!("ν system has rank {rank} for {nunk} constants")));
    }
    sys.push(vec![(0, 1)], 0, md);
    for k in 0..2 {
        if !classes_present.contains(&k) {
            sys.push(vec![(k as u32, 1)], 0, md);
            sys.push(vec![(2 + k as u32, 1)], 0, md);
        }
    }
    let base: [i64; 4] = sys.solve_dense(md)?.try_into().unwrap();

    let d1 = (0..nv * n).map(|k| md.red(known1[k] + base[class(&tree, verts[k / n])])).collect();
    let d2 = (0..n * nv).map(|k| md.red(known2[k] + base[2 + class(&tree, verts[k % nv])])).collect();
    Ok(Degenerations { m, d1, d2, base })
}

fn rank_mod_p(sys: &SparseSystem, md: &Modulus) -> usize {
    let p = Modulus::new(md.p as u64, 1);
    let mut rows: Vec<Vec<i64>> = sys
        .rows
        .iter()
        .map(|r| {
            let mut d = vec![0; sys.ncols];
            for &(c, a) in r {
                d[c as usize] = p.red(a);
            }
            d
        })
        .collect();
    let mut rank = 0;
    for c in 0..sys.ncols {
        let Some(i) = (rank..rows.len()).find(|&i| rows[i][c] != 0) else { continue };
        rows.swap(rank, i);
        let inv = p.inv_unit(rows[rank][c]).unwrap();
        for i in 0..rows.len() {
            if i != rank && rows[i][c] != 0 {
                let f = p.mul(rows[i][c], inv);
                for k in 0..sys.ncols {
                    rows[i][k] = p.red(rows[i][k] - p.mul(f, rows[rank][k]));
                }
            }
        }
        rank += 1;
    }
    rank
}

/// The system `φ₁(D) = D₁`, `φ₂(D) = D₂` over even pairs of depth ≤ m.
pub fn lift_system(tree: &Tree, deg: &Degenerations, md: &Modulus) -> SparseSystem {
    let m = deg.m;
    let (n, nv) = (edge_count(tree, m), tree.num_vertices(m - 1));
    let stars: Vec<Vec<(usize, i64)>> =
        (0..nv).map(|i| tree.edges_from(tree.vertex_at(i)).into_iter().map(|e| undirected(tree, e)).collect()).collect();
    let mut sys = SparseSystem::new(n * n);
    for (vi, star) in stars.iter().enumerate() {
        for u2 in 0..n {
            sys.push(star.iter().map(|&(u1, s)| ((u1 * n + u2) as u32, s)).collect(), deg.d1[vi * n + u2], md);
        }
    }
    for u1 in 0..n {
        for (vi, star) in stars.iter().enumerate() {
            sys.push(star.iter().map(|&(u2, s)| ((u1 * n + u2) as u32, s)).collect(), deg.d2[u1 * nv + vi], md);
        }
    }
    sys
}

/// Solves for `D` with `φ₁(D) = D₁` and `φ₂(D) = D₂` modulo `p^M`.
pub fn lift(tree: &Tree, deg: &Degenerations, md: &Modulus) -> Result<(FiniteCochain, SolverStats)> {
    let sys = lift_system(tree, deg, md);
    let (x, stats) = sys.solve(md)?;
    Ok((FiniteCochain { tree: *tree, m: deg.m, modulus: Some(md.n), vals: x }, stats))
}

#[derive(Clone, Debug)]
pub struct Harmonized {
    pub cochain: FiniteCochain,
    pub correction: FiniteCochain,
    pub degenerations: Degenerations,
    pub stats: SolverStats,
}

/// `c(g*) − (g*⋆D − D)` at depth `m` modulo `p^prec`, checked harmonic.
pub fn harmonize(fx: &Fixture, c: &dyn Cocycle, g: &Elem, m: u32, prec: u32) -> Result<Harmonized> {
    let tree = fx.tree();
    let md = Modulus::new(tree.p, prec);
    let deg = compute_degenerations(fx, c, m, &md).map_err(|e| e.at("degenerations"))?;
    let (d, stats) = lift(&tree, &deg, &md).map_err(|e| e.at("lift"))?;
    let raw = FiniteCochain::try_from_fn(tree, m, Some(md.n), |a, b| c.eval(g, a, b)).map_err(|e| e.at("cocycle"))?;
    let out = raw.sub(&d.coboundary(&g.local).map_err(|e| e.at("coboundary"))?);
    if !out.is_harmonic() {
        return Err(Error::LiftInconsistent("corrected cochain is not harmonic".into()).at("check"));
    }
    Ok(Harmonized { cochain: out, correction: d, degenerations: deg, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_helpers() {
        let md = Modulus::new(3, 7);
        assert_eq!(md.n, 2187);
        assert_eq!(md.val(0), 7);
        assert_eq!(md.val(18), 2);
        let u = md.inv_unit(5).unwrap();
        assert_eq!(md.mul(u, 5), 1);
        assert!(md.inv_unit(6).is_none());
    }

    #[test]
    fn solves_small_unit_system() {
        let md = Modulus::new(3, 4);
        let mut s = SparseSystem::new(3);
        s.push(vec![(0, 1), (1, 1)], 5, &md);
        s.push(vec![(1, 1), (2, -1)], 7, &md);
        let (x, st) = s.solve(&md).unwrap();
        assert!(s.is_solution(&x, &md));
        assert_eq!(st.free_vars, 1);
        assert!(s.is_solution(&s.solve_dense(&md).unwrap(), &md));
    }

    #[test]
    fn non_unit_pivot_fallback() {
        let md = Modulus::new(3, 4);
        let mut s = SparseSystem::new(2);
        s.push(vec![(0, 3), (1, 6)], 12, &md);
        let (x, st) = s.solve(&md).unwrap();
        assert!(s.is_solution(&x, &md));
        assert_eq!(st.nonunit_pivots, 1);
        let mut bad = SparseSystem::new(1);
        bad.push(vec![(0, 3)], 1, &md);
        assert!(matches!(bad.solve(&md), Err(Error::LiftInconsistent(_))));
        assert!(matches!(bad.solve_dense(&md), Err(Error::LiftInconsistent(_))));
    }

    #[test]
    fn inconsistent_system_is_reported() {
        let md = Modulus::new(3, 2);
        let mut s = SparseSystem::new(2);
        s.push(vec![(0, 1), (1, 1)], 1, &md);
        s.push(vec![(0, 1), (1, 1)], 2, &md);
        assert!(matches!(s.solve(&md), Err(Error::LiftInconsistent(_))));
    }
}
