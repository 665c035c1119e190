//! Elements of E_{p₁} ⊗ E_{p₂} over Q_p in the basis {1, α} ⊗ {1, α}.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::padic::{canonical_nonresidue, Padic, QuadExt};

/// `Σ c[i][j]·(b_i ⊗ b_j)` with `b_0 = 1`, `b_1 = α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TensorValue {
    pub c: [[Padic; 2]; 2],
}

/// One element of the 16-element symmetry group used to compare values
/// that are canonical only up to these choices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symmetry {
    pub negate: bool,
    pub swap: bool,
    pub conj1: bool,
    pub conj2: bool,
}

impl Symmetry {
    pub fn all() -> Vec<Symmetry> {
        (0..16u8)
            .map(|k| Symmetry { negate: k & 1 != 0, swap: k & 2 != 0, conj1: k & 4 != 0, conj2: k & 8 != 0 })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        !(self.negate || self.swap || self.conj1 || self.conj2)
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.negate {
            parts.push("sign");
        }
        if self.swap {
            parts.push("swap");
        }
        if self.conj1 {
            parts.push("conj1");
        }
        if self.conj2 {
            parts.push("conj2");
        }
        if parts.is_empty() {
            write!(f, "identity")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

impl TensorValue {
    pub fn zero(p: u64) -> Self {
        let z = Padic::zero(p);
        TensorValue { c: [[z.clone(), z.clone()], [z.clone(), z]] }
    }

    pub fn from_coords(c00: Padic, c01: Padic, c10: Padic, c11: Padic) -> Self {
        TensorValue { c: [[c00, c01], [c10, c11]] }
    }

    /// `x ⊗ y`.
    pub fn tensor(x: &QuadExt, y: &QuadExt) -> Self {
        let xs = [x.a(), x.b()];
        let ys = [y.a(), y.b()];
        let c = [
            [xs[0].mul(ys[0]), xs[0].mul(ys[1])],
            [xs[1].mul(ys[0]), xs[1].mul(ys[1])],
        ];
        TensorValue { c }
    }

    /// `s·(α ⊗ α)`.
    pub fn alpha_alpha(s: Padic) -> Self {
        let p = s.prime();
        let mut t = Self::zero(p);
        t.c[1][1] = s;
        t
    }

    pub fn prime(&self) -> u64 {
        self.c[0][0].prime()
    }

    fn map(&self, f: impl Fn(&Padic) -> Padic) -> Self {
        TensorValue { c: [[f(&self.c[0][0]), f(&self.c[0][1])], [f(&self.c[1][0]), f(&self.c[1][1])]] }
    }

    fn zip(&self, o: &Self, f: impl Fn(&Padic, &Padic) -> Padic) -> Self {
        let g = |i: usize, j: usize| f(&self.c[i][j], &o.c[i][j]);
        TensorValue { c: [[g(0, 0), g(0, 1)], [g(1, 0), g(1, 1)]] }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, Padic::add)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, Padic::sub)
    }

    pub fn neg(&self) -> Self {
        self.map(Padic::neg)
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self.map(|x| x.mul_int(k))
    }

    pub fn scale(&self, k: &Padic) -> Self {
        self.map(|x| x.mul(k))
    }

    pub fn cap_abs(&self, k: i64) -> Self {
        self.map(|x| x.cap_abs(k))
    }

    /// Frobenius on one tensor factor (`factor` is 0 or 1).
    pub fn frob(&self, factor: usize) -> Self {
        let mut t = self.clone();
        match factor {
            0 => {
                t.c[1][0] = t.c[1][0].neg();
                t.c[1][1] = t.c[1][1].neg();
            }
            1 => {
                t.c[0][1] = t.c[0][1].neg();
                t.c[1][1] = t.c[1][1].neg();
            }
            _ => panic!("tensor factor index must be 0 or 1"),
        }
        t
    }

    /// Exchanges the two factors.
    pub fn swap(&self) -> Self {
        TensorValue {
            c: [
                [self.c[0][0].clone(), self.c[1][0].clone()],
                [self.c[0][1].clone(), self.c[1][1].clone()],
            ],
        }
    }

    pub fn apply(&self, s: Symmetry) -> Self {
        let mut t = self.clone();
        if s.conj1 {
            t = t.frob(0);
        }
        if s.conj2 {
            t = t.frob(1);
        }
        if s.swap {
            t = t.swap();
        }
        if s.negate {
            t = t.neg();
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().flatten().all(Padic::is_zero)
    }

    /// Minimum absolute precision over the coordinates (`None` if all exact).
    pub fn abs_prec(&self) -> Option<i64> {
        self.c.iter().flatten().filter_map(Padic::abs_prec).min()
    }

    /// Digit agreement: the minimum over coordinates of the valuation bound
    /// of the difference.
    pub fn agreement(&self, o: &Self) -> i64 {
        self.sub(o).c.iter().flatten().map(Padic::valuation_bound).min().unwrap()
    }

    /// Best agreement with `o` over the symmetry group, with the symmetry
    /// achieving it (the identity wins ties).
    pub fn agreement_up_to_symmetry(&self, o: &Self) -> (i64, Symmetry) {
        Symmetry::all()
            .into_iter()
            .map(|s| (self.apply(s).agreement(o), s))
            .fold(None, |best: Option<(i64, Symmetry)>, cur| match best {
                Some(b) if b.0 >= cur.0 => Some(b),
                _ => Some(cur),
            })
            .unwrap()
    }

    /// True when only the α⊗α coordinate may be nonzero.
    pub fn is_pure_alpha_alpha(&self) -> bool {
        self.c[0][0].is_zero() && self.c[0][1].is_zero() && self.c[1][0].is_zero()
    }

    pub fn to_strings(&self) -> [String; 4] {
        [
            self.c[0][0].to_string(),
            self.c[0][1].to_string(),
            self.c[1][0].to_string(),
            self.c[1][1].to_string(),
        ]
    }

    pub fn from_strings(s: &[String; 4], p: u64) -> Result<Self> {
        Ok(Self::from_coords(
            Padic::parse(&s[0], p)?,
            Padic::parse(&s[1], p)?,
            Padic::parse(&s[2], p)?,
            Padic::parse(&s[3], p)?,
        ))
    }
}

fn alpha_name(p: u64) -> String {
    format!("√{}", canonical_nonresidue(p)).replace('-', "−")
}

impl fmt::Display for TensorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = alpha_name(self.prime());
        if self.is_pure_alpha_alpha() {
            return write!(f, "({})·({a}⊗{a})", self.c[1][1]);
        }
        let names = [["1⊗1".to_string(), format!("1⊗{a}")], [format!("{a}⊗1"), format!("{a}⊗{a}")]];
        let parts: Vec<String> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| format!("({})·({})", self.c[i][j], names[i][j]))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(a: i64, b: i64) -> QuadExt {
        QuadExt::new(Padic::from_i64(3, a, 10), Padic::from_i64(3, b, 10), -1)
    }

    #[test]
    fn tensor_coordinates() {
        let t = TensorValue::tensor(&x(2, 3), &x(5, 7));
        assert_eq!(t.c[0][0], Padic::from_i64(3, 10, 10));
        assert_eq!(t.c[1][1], Padic::from_i64(3, 21, 10).cap_abs(11));
    }

    #[test]
    fn swap_transposes() {
        let t = TensorValue::tensor(&x(2, 3), &x(5, 7));
        assert_eq!(t.swap(), TensorValue::tensor(&x(5, 7), &x(2, 3)));
        assert_eq!(t.swap().swap(), t);
    }

    #[test]
    fn frob_matches_factorwise_conjugation() {
        let (u, v) = (x(2, 3), x(5, 7));
        let t = TensorValue::tensor(&u, &v);
        assert_eq!(t.frob(0), TensorValue::tensor(&u.frobenius(), &v));
        assert_eq!(t.frob(1), TensorValue::tensor(&u, &v.frobenius()));
    }

    #[test]
    fn symmetry_orbit_recovers_negation() {
        let t = TensorValue::tensor(&x(2, 3), &x(5, 7));
        let (k, s) = t.neg().agreement_up_to_symmetry(&t);
        assert!(k >= 10);
        assert!(s.negate && !s.swap);
        assert_eq!(Symmetry::all().len(), 16);
    }

    #[test]
    fn renders_pure_alpha_alpha() {
        let t = TensorValue::alpha_alpha(Padic::parse("2·3² + 3⁶ + O(3⁷)", 3).unwrap());
        assert_eq!(t.to_string(), "(2·3² + 3⁶ + O(3⁷))·(√−1⊗√−1)");
        let back = TensorValue::from_strings(&t.to_strings(), 3).unwrap();
        assert_eq!(back, t);
    }
}
