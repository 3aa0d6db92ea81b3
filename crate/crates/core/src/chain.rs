//! Sparse simplicial chains of the Rips complex with exact rational
//! coefficients, and their reduction to Γ₀-coinvariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{horoball_of, CuspedGraph, Vertex};
use crate::word::{Gamma, GroupElem, Word};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses "p/q" or "p".
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = |msg: String| Error::Parse { pos: 0, msg };
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|e| bad(format!("bad numerator {n:?}: {e}")))?;
    let d: BigInt = d.parse().map_err(|e| bad(format!("bad denominator {d:?}: {e}")))?;
    if d.is_zero() {
        return Err(bad("zero denominator".into()));
    }
    Ok(Q::new(n, d))
}

/// Sorts the vertices by the global vertex order and returns the sign of the
/// sorting permutation, or None when two vertices coincide.
pub fn sort_with_sign(vs: &mut [Vertex]) -> Option<i8> {
    let mut sign = 1i8;
    // insertion sort: the parity is the number of swaps
    for i in 1..vs.len() {
        let mut j = i;
        while j > 0 && vs[j - 1] > vs[j] {
            vs.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if vs.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// minD of a simplex: its least depth if one horoball holds every vertex,
/// otherwise −∞ (None).
pub fn simplex_min_depth(s: &[Vertex]) -> Option<u32> {
    let h = horoball_of(&s[0]);
    if s[1..].iter().all(|v| horoball_of(v) == h) {
        s.iter().map(|v| v.depth).min()
    } else {
        None
    }
}

/// A sparse d-chain keyed by sorted simplices.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct SimplicialChain {
    dim: usize,
    terms: BTreeMap<Vec<Vertex>, Q>,
}

impl SimplicialChain {
    pub fn zero(dim: usize) -> Self {
        SimplicialChain {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// coeff·[v₀, …, v_d], canonicalized; zero if a vertex repeats.
    pub fn simplex(vs: &[Vertex], coeff: Q) -> Self {
        let mut c = SimplicialChain::zero(vs.len() - 1);
        c.add_simplex(vs, coeff);
        c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_simplex(&mut self, vs: &[Vertex], coeff: Q) {
        assert_eq!(vs.len(), self.dim + 1, "simplex of the wrong dimension");
        if coeff.is_zero() {
            return;
        }
        let mut key = vs.to_vec();
        let Some(sign) = sort_with_sign(&mut key) else {
            return;
        };
        let coeff = if sign < 0 { -coeff } else { coeff };
        self.add_sorted(key, coeff);
    }

    fn add_sorted(&mut self, key: Vec<Vertex>, coeff: Q) {
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn add_assign(&mut self, other: &SimplicialChain) {
        if other.terms.is_empty() {
            return;
        }
        assert_eq!(self.dim, other.dim, "adding chains of different dimension");
        for (k, c) in &other.terms {
            self.add_sorted(k.clone(), c.clone());
        }
    }

    pub fn add_scaled(&mut self, other: &SimplicialChain, s: &Q) {
        if other.terms.is_empty() || s.is_zero() {
            return;
        }
        assert_eq!(self.dim, other.dim, "adding chains of different dimension");
        for (k, c) in &other.terms {
            self.add_sorted(k.clone(), c * s);
        }
    }

    pub fn scale(&self, s: &Q) -> SimplicialChain {
        if s.is_zero() {
            return SimplicialChain::zero(self.dim);
        }
        SimplicialChain {
            dim: self.dim,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c * s)).collect(),
        }
    }

    pub fn neg(&self) -> SimplicialChain {
        self.scale(&-Q::one())
    }

    pub fn sub(&self, other: &SimplicialChain) -> SimplicialChain {
        let mut out = self.clone();
        if out.terms.is_empty() {
            out.dim = other.dim;
        }
        out.add_scaled(other, &-Q::one());
        out
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

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Vertex>, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, vs: &[Vertex]) -> Q {
        let mut key = vs.to_vec();
        match sort_with_sign(&mut key) {
            None => Q::zero(),
            Some(s) => self
                .terms
                .get(&key)
                .map(|c| if s < 0 { -c.clone() } else { c.clone() })
                .unwrap_or_else(Q::zero),
        }
    }

    /// ∂[x₀,…,x_d] = Σ (−1)^j [x₀,…,x̂_j,…,x_d].
    pub fn boundary(&self) -> SimplicialChain {
        let mut out = SimplicialChain::zero(self.dim.saturating_sub(1));
        if self.dim == 0 {
            return out;
        }
        for (k, c) in &self.terms {
            for j in 0..k.len() {
                let mut face = k.clone();
                face.remove(j);
                // faces of a sorted simplex are sorted
                let coeff = if j % 2 == 0 { c.clone() } else { -c.clone() };
                out.add_sorted(face, coeff);
            }
        }
        out
    }

    pub fn l1_norm(&self) -> Q {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn support(&self) -> BTreeSet<Vertex> {
        self.terms.keys().flatten().cloned().collect()
    }

    /// (minD, maxD); minD is None for −∞. None for the zero chain.
    pub fn depth_range(&self) -> Option<(Option<u32>, u32)> {
        if self.terms.is_empty() {
            return None;
        }
        let max_d = self.terms.keys().flatten().map(|v| v.depth).max().unwrap_or(0);
        let mut min_d = Some(u32::MAX);
        for k in self.terms.keys() {
            min_d = match (min_d, simplex_min_depth(k)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            };
        }
        Some((min_d, max_d))
    }

    /// γ·c for γ ∈ Γ.
    pub fn translate(&self, gamma: &Gamma, g: &GroupElem) -> Result<SimplicialChain> {
        if g.is_identity() {
            return Ok(self.clone());
        }
        let mut out = SimplicialChain::zero(self.dim);
        for (k, c) in &self.terms {
            let moved = k
                .iter()
                .map(|v| Ok(Vertex::new(gamma.mul(g, &v.g)?, v.depth)))
                .collect::<Result<Vec<_>>>()?;
            out.add_simplex(&moved, c.clone());
        }
        Ok(out)
    }

    /// Checks the Rips condition: every simplex has diameter ≤ κ.
    pub fn validate_rips(&self, graph: &CuspedGraph, kappa: u32) -> Result<()> {
        for k in self.terms.keys() {
            for i in 0..k.len() {
                for j in i + 1..k.len() {
                    if !graph.within(&k[i], &k[j], kappa)? {
                        return Err(Error::Invalid(format!(
                            "simplex {:?} has diameter above kappa {kappa}",
                            k
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.json_terms()).expect("plain data")
    }

    fn json_terms(&self) -> Vec<ChainTerm> {
        self.terms
            .iter()
            .map(|(k, c)| ChainTerm {
                simplex: k.iter().map(|v| v.to_string()).collect(),
                coeff: c.to_string(),
            })
            .collect()
    }

    pub fn from_json(value: &serde_json::Value, dim: usize) -> Result<SimplicialChain> {
        let terms: Vec<ChainTerm> = serde_json::from_value(value.clone())?;
        let mut out = SimplicialChain::zero(dim);
        for t in terms {
            let vs = t
                .simplex
                .iter()
                .map(|s| Vertex::parse(s))
                .collect::<Result<Vec<_>>>()?;
            if vs.len() != dim + 1 {
                return Err(Error::Invalid(format!(
                    "expected {}-simplices, got {} vertices",
                    dim,
                    vs.len()
                )));
            }
            out.add_simplex(&vs, parse_q(&t.coeff)?);
        }
        Ok(out)
    }
}

impl fmt::Debug for SimplicialChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chain{}[", self.dim)?;
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}·{k:?}")?;
        }
        f.write_str("]")
    }
}

#[derive(Serialize, Deserialize)]
struct ChainTerm {
    simplex: Vec<String>,
    coeff: String,
}

/// Permutations of {0, …, n−1} with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i8)> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<(Vec<usize>, i8)>) {
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for x in 0..n {
            if !prefix.contains(&x) {
                prefix.push(x);
                rec(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

/// Orbit-canonical form of a simplex under Γ₀ and reordering: the least
/// tuple among all orderings with the first vertex's Γ₀-part moved to e.
/// Returns the tuple and the sign to absorb, or None if degenerate.
pub fn orbit_canonical(vs: &[Vertex]) -> Option<(Vec<Vertex>, i8)> {
    let mut sorted = vs.to_vec();
    sort_with_sign(&mut sorted)?;
    let mut best: Option<(Vec<Vertex>, i8)> = None;
    for (perm, sign) in permutations(vs.len()) {
        let first = &vs[perm[0]].g.base;
        let shift = first.inverse();
        let tuple: Vec<Vertex> = perm
            .iter()
            .map(|&i| {
                let v = &vs[i];
                Vertex::from_parts(shift.mul(&v.g.base), v.g.texp, v.depth)
            })
            .collect();
        if best.as_ref().is_none_or(|(b, _)| tuple < *b) {
            best = Some((tuple, sign));
        }
    }
    best
}

/// A chain in the Γ₀-coinvariants, stored on orbit-canonical tuples.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct CoinvariantChain {
    dim: usize,
    terms: BTreeMap<Vec<Vertex>, Q>,
}

impl CoinvariantChain {
    pub fn zero(dim: usize) -> Self {
        CoinvariantChain {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_simplex(&mut self, vs: &[Vertex], coeff: Q) {
        if coeff.is_zero() {
            return;
        }
        let Some((key, sign)) = orbit_canonical(vs) else {
            return;
        };
        let coeff = if sign < 0 { -coeff } else { coeff };
        let e = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *e += coeff;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &CoinvariantChain) {
        self.add_scaled(other, &Q::one());
    }

    pub fn add_scaled(&mut self, other: &CoinvariantChain, s: &Q) {
        for (k, c) in &other.terms {
            // keys are already canonical
            let e = self.terms.entry(k.clone()).or_insert_with(Q::zero);
            *e += c * s;
            if e.is_zero() {
                self.terms.remove(k);
            }
        }
    }

    pub fn sub(&self, other: &CoinvariantChain) -> CoinvariantChain {
        let mut out = self.clone();
        out.add_scaled(other, &-Q::one());
        out
    }

    pub fn scale(&self, s: &Q) -> CoinvariantChain {
        let mut out = CoinvariantChain::zero(self.dim);
        out.add_scaled(self, s);
        out
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

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Vertex>, &Q)> {
        self.terms.iter()
    }

    pub fn l1_norm(&self) -> Q {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn boundary(&self) -> CoinvariantChain {
        let mut out = CoinvariantChain::zero(self.dim.saturating_sub(1));
        if self.dim == 0 {
            return out;
        }
        for (k, c) in &self.terms {
            for j in 0..k.len() {
                let mut face = k.clone();
                face.remove(j);
                let coeff = if j % 2 == 0 { c.clone() } else { -c.clone() };
                out.add_simplex(&face, coeff);
            }
        }
        out
    }

    /// Translation by γ ∈ Γ. Only the t-part acts nontrivially on classes.
    pub fn translate(&self, gamma: &Gamma, g: &GroupElem) -> Result<CoinvariantChain> {
        let mut out = CoinvariantChain::zero(self.dim);
        for (k, c) in &self.terms {
            let moved = k
                .iter()
                .map(|v| Ok(Vertex::new(gamma.mul(g, &v.g)?, v.depth)))
                .collect::<Result<Vec<_>>>()?;
            out.add_simplex(&moved, c.clone());
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<ChainTerm> = self
            .terms
            .iter()
            .map(|(k, c)| ChainTerm {
                simplex: k.iter().map(|v| v.to_string()).collect(),
                coeff: c.to_string(),
            })
            .collect();
        serde_json::to_value(terms).expect("plain data")
    }
}

impl fmt::Debug for CoinvariantChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coinv{}[", self.dim)?;
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}·{k:?}")?;
        }
        f.write_str("]")
    }
}

pub fn coinvariant_reduce(c: &SimplicialChain) -> CoinvariantChain {
    let mut out = CoinvariantChain::zero(c.dim());
    for (k, coeff) in c.iter() {
        out.add_simplex(k, coeff.clone());
    }
    out
}

/// Γ₀-elements used to spot-check invariance before pairing.
fn probe_elements() -> [Word; 3] {
    [
        Word::gen_a(),
        Word::parse("bA").expect("literal"),
        Word::parse("abAB").expect("literal"),
    ]
}

/// Pairs a cochain with a coinvariant chain after checking, on up to
/// `sample` terms, that the cochain is Γ₀-invariant and alternating there.
pub fn pair<F>(cochain: F, c: &CoinvariantChain, sample: usize) -> Result<Q>
where
    F: Fn(&[Vertex]) -> Result<Q>,
{
    for (k, _) in c.iter().take(sample) {
        let base = cochain(k)?;
        for g in probe_elements() {
            let moved: Vec<Vertex> = k
                .iter()
                .map(|v| Vertex::from_parts(g.mul(&v.g.base), v.g.texp, v.depth))
                .collect();
            if cochain(&moved)? != base {
                return Err(Error::NotInvariant(format!("translate of {k:?} by {g}")));
            }
        }
        if k.len() >= 2 {
            let mut swapped = k.clone();
            swapped.swap(0, 1);
            if cochain(&swapped)? != -base.clone() {
                return Err(Error::NotInvariant(format!("transposition of {k:?}")));
            }
        }
    }
    let mut total = Q::zero();
    for (k, coeff) in c.iter() {
        total += coeff * cochain(k)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn boundary_of_a_triangle() {
        let (a, b, c) = (v("e@0:0"), v("a@0:0"), v("ab@0:0"));
        let s = SimplicialChain::simplex(&[a.clone(), b.clone(), c.clone()], qi(1));
        let mut expect = SimplicialChain::zero(1);
        expect.add_simplex(&[b.clone(), c.clone()], qi(1));
        expect.add_simplex(&[a.clone(), c.clone()], qi(-1));
        expect.add_simplex(&[a, b], qi(1));
        assert_eq!(s.boundary(), expect);
        assert!(s.boundary().boundary().is_zero());
    }

    #[test]
    fn transposition_flips_sign() {
        let (a, b, c) = (v("e@0:0"), v("a@0:0"), v("b@1:0"));
        let s1 = SimplicialChain::simplex(&[a.clone(), b.clone(), c.clone()], qi(1));
        let s2 = SimplicialChain::simplex(&[b, a, c], qi(1));
        assert_eq!(s1, s2.neg());
        assert!(SimplicialChain::simplex(&[v("e@0:0"), v("e@0:0"), v("a@0:0")], qi(1)).is_zero());
    }

    #[test]
    fn norms_and_depths() {
        let mut c = SimplicialChain::zero(1);
        c.add_simplex(&[v("e@0:0"), v("a@0:0")], q(1, 2));
        c.add_simplex(&[v("e@0:0"), v("b@0:0")], q(-1, 3));
        assert_eq!(c.l1_norm(), q(5, 6));
        assert_eq!(c.depth_range(), Some((None, 0)));
        let k = 3;
        let ak = SimplicialChain::simplex(
            &[Vertex::at_depth(k), Vertex::from_parts(Word::commutator_pow(8), 0, k)],
            q(1, 8),
        );
        assert_eq!(ak.l1_norm(), q(1, 8));
        assert_eq!(ak.depth_range(), Some((Some(3), 3)));
    }

    #[test]
    fn coinvariant_translation_class() {
        let mut x = CoinvariantChain::zero(1);
        x.add_simplex(&[v("b@0:0"), v("ba@0:0")], qi(1));
        let mut y = CoinvariantChain::zero(1);
        y.add_simplex(&[v("e@0:0"), v("a@0:0")], qi(1));
        assert_eq!(x, y);
        let mut z = CoinvariantChain::zero(1);
        z.add_simplex(&[v("a@0:0"), v("e@0:0")], qi(1));
        assert_eq!(z, y.scale(&qi(-1)));
    }

    #[test]
    fn permutation_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|x| x.1 as i32).sum::<i32>(), 0);
        assert_eq!(p[0], (vec![0, 1, 2], 1));
        assert_eq!(p[1], (vec![0, 2, 1], -1));
    }

    #[test]
    fn json_roundtrip() {
        let mut c = SimplicialChain::zero(1);
        c.add_simplex(&[v("e@0:0"), v("ABab@1:2")], q(-3, 4));
        let j = c.to_json();
        assert_eq!(SimplicialChain::from_json(&j, 1).unwrap(), c);
        assert_eq!(parse_q("6/8").unwrap(), q(3, 4));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn pair_rejects_non_invariant() {
        let mut c = CoinvariantChain::zero(1);
        c.add_simplex(&[v("e@0:0"), v("a@0:0")], qi(1));
        let bad = |s: &[Vertex]| Ok(qi(s[0].g.base.len() as i64));
        assert!(matches!(pair(bad, &c, 4), Err(Error::NotInvariant(_))));
        let zero = |_: &[Vertex]| Ok(Q::zero());
        assert_eq!(pair(zero, &c, 4).unwrap(), Q::zero());
    }
}
