//! The punctured-torus representation ρ: F(a,b) → SL₂(Z), its action on the
//! boundary circle P¹(Q), and the orientation cocycle ε.
//!
//! Everything is exact integer arithmetic. ρ(g)·q̄ is evaluated by pushing the
//! primitive vector of q̄ through the letters of g from the right, in `i128`
//! until an overflow forces a switch to `BigInt`.

use std::cmp::Ordering;
use std::fmt;

use dashmap::DashMap;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::word::{Word, LA, LA_INV, LB, LB_INV};

/// A 2×2 integer matrix (p q; r s) with determinant 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MoebiusMatrix {
    pub p: BigInt,
    pub q: BigInt,
    pub r: BigInt,
    pub s: BigInt,
}

impl MoebiusMatrix {
    pub fn new(p: i64, q: i64, r: i64, s: i64) -> Result<Self> {
        Self::from_big(p.into(), q.into(), r.into(), s.into())
    }

    pub fn from_big(p: BigInt, q: BigInt, r: BigInt, s: BigInt) -> Result<Self> {
        let m = MoebiusMatrix { p, q, r, s };
        if m.det() != BigInt::one() {
            return Err(Error::Invalid(format!("matrix {m:?} has determinant != 1")));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        MoebiusMatrix {
            p: BigInt::one(),
            q: BigInt::zero(),
            r: BigInt::zero(),
            s: BigInt::one(),
        }
    }

    pub fn det(&self) -> BigInt {
        &self.p * &self.s - &self.q * &self.r
    }

    pub fn trace(&self) -> BigInt {
        &self.p + &self.s
    }

    pub fn mul(&self, o: &MoebiusMatrix) -> MoebiusMatrix {
        MoebiusMatrix {
            p: &self.p * &o.p + &self.q * &o.r,
            q: &self.p * &o.q + &self.q * &o.s,
            r: &self.r * &o.p + &self.s * &o.r,
            s: &self.r * &o.q + &self.s * &o.s,
        }
    }

    /// Inverse of a determinant-1 matrix.
    pub fn inverse(&self) -> MoebiusMatrix {
        MoebiusMatrix {
            p: self.s.clone(),
            q: -&self.q,
            r: -&self.r,
            s: self.p.clone(),
        }
    }

    fn is_plus_minus_identity(&self) -> bool {
        self.q.is_zero() && self.r.is_zero() && self.p == self.s && self.p.abs().is_one()
    }
}

impl fmt::Debug for MoebiusMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.p, self.q, self.r, self.s)
    }
}

/// A point (x : y) of P¹(Q) with gcd(|x|,|y|) = 1 and y ≥ 0; ∞ is (1 : 0).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoundaryPoint {
    x: BigInt,
    y: BigInt,
}

impl BoundaryPoint {
    /// Normalizes an arbitrary nonzero pair.
    pub fn new(x: BigInt, y: BigInt) -> Result<Self> {
        if x.is_zero() && y.is_zero() {
            return Err(Error::Invalid("(0:0) is not a projective point".into()));
        }
        let g = x.gcd(&y);
        Ok(Self::from_primitive(x / &g, y / &g))
    }

    /// Sign normalization only; the caller guarantees coprimality.
    fn from_primitive(x: BigInt, y: BigInt) -> Self {
        if y.is_negative() || (y.is_zero() && x.is_negative()) {
            BoundaryPoint { x: -x, y: -y }
        } else {
            BoundaryPoint { x, y }
        }
    }

    pub fn infinity() -> Self {
        BoundaryPoint {
            x: BigInt::one(),
            y: BigInt::zero(),
        }
    }

    pub fn finite(n: i64, d: i64) -> Result<Self> {
        Self::new(n.into(), d.into())
    }

    pub fn is_infinity(&self) -> bool {
        self.y.is_zero()
    }

    pub fn coords(&self) -> (&BigInt, &BigInt) {
        (&self.x, &self.y)
    }
}

impl fmt::Debug for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            f.write_str("∞")
        } else {
            write!(f, "({}:{})", self.x, self.y)
        }
    }
}

/// The unique fixed point of a parabolic matrix: (p−s : 2r), or ∞ if r = 0.
pub fn parabolic_fixed_point(m: &MoebiusMatrix) -> Result<BoundaryPoint> {
    let tr = m.trace();
    if tr.abs() != BigInt::from(2) || m.is_plus_minus_identity() {
        return Err(Error::NotParabolic {
            trace: tr.to_string(),
        });
    }
    if m.r.is_zero() {
        return Ok(BoundaryPoint::infinity());
    }
    BoundaryPoint::new(&m.p - &m.s, BigInt::from(2) * &m.r)
}

/// Projective action of a determinant-1 matrix. Such a matrix maps primitive
/// vectors to primitive vectors, so only the sign is renormalized.
pub fn boundary_act(m: &MoebiusMatrix, pt: &BoundaryPoint) -> BoundaryPoint {
    let x = &m.p * &pt.x + &m.q * &pt.y;
    let y = &m.r * &pt.x + &m.s * &pt.y;
    BoundaryPoint::from_primitive(x, y)
}

fn cmp_finite(a: &BoundaryPoint, b: &BoundaryPoint) -> Ordering {
    (&a.x * &b.y).cmp(&(&b.x * &a.y))
}

/// Cyclic orientation of three points of P¹(Q): 0 if two coincide, +1 if the
/// triple is cyclically increasing along R ∪ {∞}, −1 otherwise.
pub fn cyclic_orientation(p0: &BoundaryPoint, p1: &BoundaryPoint, p2: &BoundaryPoint) -> i8 {
    if p0 == p1 || p1 == p2 || p0 == p2 {
        return 0;
    }
    let pts = [p0, p1, p2];
    if let Some(i) = pts.iter().position(|p| p.is_infinity()) {
        let y = pts[(i + 1) % 3];
        let z = pts[(i + 2) % 3];
        return match cmp_finite(y, z) {
            Ordering::Less => 1,
            _ => -1,
        };
    }
    let ascents = (0..3)
        .filter(|&i| cmp_finite(pts[i], pts[(i + 1) % 3]) == Ordering::Less)
        .count();
    if ascents == 2 {
        1
    } else {
        -1
    }
}

/// 2-vector accumulator that starts in i128 and promotes to BigInt on overflow.
enum Vec2 {
    Small(i128, i128),
    Big(BigInt, BigInt),
}

impl Vec2 {
    fn apply(self, m: &[[i64; 2]; 2], mb: &MoebiusMatrix) -> Vec2 {
        match self {
            Vec2::Small(x, y) => {
                let nx = (m[0][0] as i128)
                    .checked_mul(x)
                    .and_then(|a| (m[0][1] as i128).checked_mul(y).and_then(|b| a.checked_add(b)));
                let ny = (m[1][0] as i128)
                    .checked_mul(x)
                    .and_then(|a| (m[1][1] as i128).checked_mul(y).and_then(|b| a.checked_add(b)));
                match (nx, ny) {
                    (Some(nx), Some(ny)) => Vec2::Small(nx, ny),
                    _ => Vec2::Big(BigInt::from(x), BigInt::from(y)).apply(m, mb),
                }
            }
            Vec2::Big(x, y) => Vec2::Big(&mb.p * &x + &mb.q * &y, &mb.r * &x + &mb.s * &y),
        }
    }

    fn into_big(self) -> (BigInt, BigInt) {
        match self {
            Vec2::Small(x, y) => (x.into(), y.into()),
            Vec2::Big(x, y) => (x, y),
        }
    }
}

/// The configured representation ρ with its parabolic fixed point q̄.
#[derive(Debug)]
pub struct Hyperbolization {
    gens: [MoebiusMatrix; 4],
    small: [[[i64; 2]; 2]; 4],
    qbar: BoundaryPoint,
    points: DashMap<Word, BoundaryPoint>,
}

impl Clone for Hyperbolization {
    fn clone(&self) -> Self {
        Hyperbolization::new(self.gens[0].clone(), self.gens[2].clone())
            .expect("already validated")
    }
}

impl Default for Hyperbolization {
    fn default() -> Self {
        Hyperbolization::new(
            MoebiusMatrix::new(1, 1, 1, 2).unwrap(),
            MoebiusMatrix::new(1, -1, -1, 2).unwrap(),
        )
        .expect("default generators pass the self-check")
    }
}

fn to_small(m: &MoebiusMatrix) -> Result<[[i64; 2]; 2]> {
    let c = |x: &BigInt| -> Result<i64> {
        i64::try_from(x).map_err(|_| Error::Invalid("generator entries must fit in i64".into()))
    };
    Ok([[c(&m.p)?, c(&m.q)?], [c(&m.r)?, c(&m.s)?]])
}

impl Hyperbolization {
    /// Builds ρ from ρ(a), ρ(b); fails unless tr ρ([a,b]) = −2.
    pub fn new(rho_a: MoebiusMatrix, rho_b: MoebiusMatrix) -> Result<Self> {
        let gens = [
            rho_a.clone(),
            rho_a.inverse(),
            rho_b.clone(),
            rho_b.inverse(),
        ];
        let small = [
            to_small(&gens[0])?,
            to_small(&gens[1])?,
            to_small(&gens[2])?,
            to_small(&gens[3])?,
        ];
        let comm = gens[1].mul(&gens[3]).mul(&gens[0]).mul(&gens[2]);
        if comm.trace() != BigInt::from(-2) {
            return Err(Error::SelfCheck(format!(
                "tr rho([a,b]) = {} (expected -2)",
                comm.trace()
            )));
        }
        let qbar = parabolic_fixed_point(&comm)?;
        Ok(Hyperbolization {
            gens,
            small,
            qbar,
            points: DashMap::new(),
        })
    }

    pub fn qbar(&self) -> &BoundaryPoint {
        &self.qbar
    }

    pub fn generator(&self, letter: u8) -> &MoebiusMatrix {
        &self.gens[letter as usize]
    }

    /// ρ(w) as the ordered product of letter images.
    pub fn rho(&self, w: &Word) -> MoebiusMatrix {
        fn prod(h: &Hyperbolization, letters: &[u8]) -> MoebiusMatrix {
            match letters.len() {
                0 => MoebiusMatrix::identity(),
                1 => h.gens[letters[0] as usize].clone(),
                n => prod(h, &letters[..n / 2]).mul(&prod(h, &letters[n / 2..])),
            }
        }
        prod(self, w.letters())
    }

    /// ρ(w)·q̄, cached per word.
    pub fn orbit_point(&self, w: &Word) -> BoundaryPoint {
        if let Some(p) = self.points.get(w) {
            return p.clone();
        }
        let (x0, y0) = self.qbar.coords();
        let mut v = Vec2::Small(
            i128::try_from(x0).expect("q̄ is small"),
            i128::try_from(y0).expect("q̄ is small"),
        );
        for &l in w.letters().iter().rev() {
            v = v.apply(&self.small[l as usize], &self.gens[l as usize]);
        }
        let (x, y) = v.into_big();
        let pt = BoundaryPoint::from_primitive(x, y);
        self.points.insert(w.clone(), pt.clone());
        pt
    }

    /// ε on F(a,b)³: the cyclic orientation of (g₀q̄, g₁q̄, g₂q̄).
    pub fn epsilon_words(&self, g0: &Word, g1: &Word, g2: &Word) -> i8 {
        cyclic_orientation(
            &self.orbit_point(g0),
            &self.orbit_point(g1),
            &self.orbit_point(g2),
        )
    }

    /// ε on vertices, through the projection p.
    pub fn epsilon(&self, x0: &Vertex, x1: &Vertex, x2: &Vertex) -> i8 {
        self.epsilon_words(&x0.g.base, &x1.g.base, &x2.g.base)
    }

    pub fn clear_cache(&self) {
        self.points.clear();
    }
}

/// The four generator matrices (a, A, b, B) in letter order.
pub fn letter_order() -> [u8; 4] {
    [LA, LA_INV, LB, LB_INV]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn fricke_commutator_trace(x: &MoebiusMatrix, y: &MoebiusMatrix) -> BigInt {
        let (tx, ty, txy) = (x.trace(), y.trace(), x.mul(y).trace());
        &tx * &tx + &ty * &ty + &txy * &txy - &tx * &ty * &txy - BigInt::from(2)
    }

    #[test]
    fn rho_examples() {
        let h = Hyperbolization::default();
        assert_eq!(h.rho(&w("a")), MoebiusMatrix::new(1, 1, 1, 2).unwrap());
        assert_eq!(h.rho(&w("e")), MoebiusMatrix::identity());
        assert_eq!(h.rho(&Word::reduce([LA, LA_INV])), MoebiusMatrix::identity());
        let comm = h.rho(&Word::commutator());
        let (ra, rb) = (h.rho(&w("a")), h.rho(&w("b")));
        assert_eq!(fricke_commutator_trace(&ra, &rb), BigInt::from(-2));
        assert_eq!(comm.trace(), BigInt::from(-2));
    }

    #[test]
    fn fixed_points() {
        let m = MoebiusMatrix::new(1, 1, 0, 1).unwrap();
        assert!(parabolic_fixed_point(&m).unwrap().is_infinity());
        let m = MoebiusMatrix::new(1, 0, 1, 1).unwrap();
        assert_eq!(
            parabolic_fixed_point(&m).unwrap(),
            BoundaryPoint::finite(0, 1).unwrap()
        );
        let h = Hyperbolization::default();
        let comm = h.rho(&Word::commutator());
        let q = parabolic_fixed_point(&comm).unwrap();
        assert_eq!(&q, h.qbar());
        assert_eq!(boundary_act(&comm, &q), q);
        let hyp = MoebiusMatrix::new(2, 1, 1, 1).unwrap();
        assert!(matches!(
            parabolic_fixed_point(&hyp),
            Err(Error::NotParabolic { .. })
        ));
        assert!(parabolic_fixed_point(&MoebiusMatrix::identity()).is_err());
    }

    #[test]
    fn boundary_action_examples() {
        let p = BoundaryPoint::finite(3, 7).unwrap();
        assert_eq!(boundary_act(&MoebiusMatrix::identity(), &p), p);
        let rot = MoebiusMatrix::new(0, -1, 1, 0).unwrap();
        assert_eq!(
            boundary_act(&rot, &BoundaryPoint::infinity()),
            BoundaryPoint::finite(0, 1).unwrap()
        );
        let m = MoebiusMatrix::new(2, 3, 1, 2).unwrap();
        assert_eq!(boundary_act(&m.inverse(), &boundary_act(&m, &p)), p);
    }

    #[test]
    fn orientation_examples() {
        let f = |n| BoundaryPoint::finite(n, 1).unwrap();
        let inf = BoundaryPoint::infinity();
        assert_eq!(cyclic_orientation(&f(0), &f(1), &f(2)), 1);
        assert_eq!(cyclic_orientation(&f(1), &f(2), &f(0)), 1);
        assert_eq!(cyclic_orientation(&f(1), &f(0), &f(2)), -1);
        assert_eq!(cyclic_orientation(&f(1), &f(1), &f(2)), 0);
        assert_eq!(cyclic_orientation(&inf, &f(0), &f(1)), 1);
        assert_eq!(cyclic_orientation(&f(0), &f(1), &inf), 1);
        assert_eq!(cyclic_orientation(&f(0), &inf, &f(1)), -1);
    }

    #[test]
    fn orbit_point_matches_matrix_action() {
        let h = Hyperbolization::default();
        for s in ["a", "bA", "abABab", "BBaab", "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa"] {
            let word = w(s);
            assert_eq!(h.orbit_point(&word), boundary_act(&h.rho(&word), h.qbar()));
        }
    }

    #[test]
    fn orbit_point_survives_i128_overflow() {
        let h = Hyperbolization::default();
        let long = Word::parse(&"ab".repeat(120)).unwrap();
        assert_eq!(h.orbit_point(&long), boundary_act(&h.rho(&long), h.qbar()));
    }

    #[test]
    fn lemma_triangle_signs() {
        let h = Hyperbolization::default();
        let e = Word::identity();
        assert_eq!(h.epsilon_words(&e, &w("ba"), &w("ab")), 0);
        let s1 = h.epsilon_words(&e, &w("ab"), &w("a"));
        let s2 = h.epsilon_words(&e, &w("b"), &w("ba"));
        assert_eq!(s1, s2);
        assert_eq!(s1.abs(), 1);
    }

    #[test]
    fn rejects_non_parabolic_commutator() {
        let a = MoebiusMatrix::new(2, 1, 1, 1).unwrap();
        let b = MoebiusMatrix::new(1, 1, 0, 1).unwrap();
        assert!(Hyperbolization::new(a, b).is_err());
    }
}
