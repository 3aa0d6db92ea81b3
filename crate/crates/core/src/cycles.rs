//! The explicit coinvariant 2-chains c, d_m, e_m, A_m and the 1-cycle a_K.

use num_bigint::BigInt;
use num_traits::One;

use crate::chain::{qi, CoinvariantChain, Q};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::word::{Gamma, GroupElem, Word};

/// K_m = ⌊log₂ m⌋ + 1.
pub fn k_m(m: u64) -> Result<u32> {
    if m == 0 {
        return Err(Error::Invalid("K_m is undefined at m = 0".into()));
    }
    Ok(64 - m.leading_zeros())
}

fn dyadic(k: u32) -> Q {
    Q::new(BigInt::one(), BigInt::one() << k as usize)
}

/// (c^e t^k, n) with c = [a,b].
fn hv(e: i64, k: i64, n: u32) -> Vertex {
    Vertex::from_parts(Word::commutator_pow(e), k, n)
}

fn w0(s: &str) -> Vertex {
    Vertex::from_parts(Word::parse(s).expect("literal word"), 0, 0)
}

pub fn build_c() -> CoinvariantChain {
    let mut c = CoinvariantChain::zero(2);
    c.add_simplex(&[w0("e"), w0("b"), w0("ba")], Q::one());
    c.add_simplex(&[w0("e"), w0("ba"), w0("ab")], Q::one());
    c.add_simplex(&[w0("e"), w0("ab"), w0("a")], Q::one());
    c
}

/// The annulus from ∂c down to a_{K_m}.
pub fn build_d(m: u64) -> Result<CoinvariantChain> {
    let k = k_m(m)?;
    let mut d = CoinvariantChain::zero(2);
    for i in 0..k {
        let w = dyadic(i + 1);
        let (p, p2) = (1i64 << i, 1i64 << (i + 1));
        d.add_simplex(&[hv(0, 0, i), hv(0, 0, i + 1), hv(p, 0, i)], w.clone());
        d.add_simplex(&[hv(p, 0, i), hv(0, 0, i + 1), hv(p2, 0, i + 1)], w.clone());
        d.add_simplex(&[hv(p, 0, i), hv(p2, 0, i + 1), hv(p2, 0, i)], w);
    }
    Ok(d)
}

/// The annulus from a_{K_m} to t^m a_{K_m}.
pub fn build_e(m: u64) -> Result<CoinvariantChain> {
    let k = k_m(m)?;
    let t = i64::try_from(m).map_err(|_| Error::Invalid("m too large".into()))?;
    let p = 1i64 << k;
    let w = dyadic(k);
    let mut e = CoinvariantChain::zero(2);
    e.add_simplex(&[hv(0, 0, k), hv(p, t, k), hv(0, t, k)], w.clone());
    e.add_simplex(&[hv(0, 0, k), hv(p, 0, k), hv(p, t, k)], w);
    Ok(e)
}

/// a_K = 2^{−K}((e,K), ([a,b]^{2^K}, K)).
pub fn build_a_k(k: u32) -> CoinvariantChain {
    let mut a = CoinvariantChain::zero(1);
    a.add_simplex(&[hv(0, 0, k), hv(1i64 << k, 0, k)], dyadic(k));
    a
}

/// A_m = t^m·(c + d_m) − (c + d_m) + e_m.
pub fn build_a_m(gamma: &Gamma, m: u64) -> Result<CoinvariantChain> {
    let mut cd = build_c();
    cd.add_assign(&build_d(m)?);
    let t = GroupElem::t_pow(m as i64);
    let mut a = cd.translate(gamma, &t)?;
    a.add_scaled(&cd, &qi(-1));
    a.add_assign(&build_e(m)?);
    Ok(a)
}

/// ‖A_m‖₁ = 12 − 2^{2−K_m}, as expanded termwise.
pub fn a_m_norm_formula(m: u64) -> Result<Q> {
    let k = k_m(m)?;
    Ok(qi(12) - qi(4) * dyadic(k))
}

#[derive(Clone, Debug)]
pub struct CycleReport {
    pub m: u64,
    pub k_m: u32,
    pub c: CoinvariantChain,
    pub d: CoinvariantChain,
    pub e: CoinvariantChain,
    pub a: CoinvariantChain,
    pub boundary_c_ok: bool,
    pub boundary_d_ok: bool,
    pub boundary_e_ok: bool,
    pub boundary_a_ok: bool,
    pub boundary_squared_ok: bool,
    pub norm_a: Q,
    pub norm_formula_ok: bool,
}

impl CycleReport {
    pub fn all_ok(&self) -> bool {
        self.boundary_c_ok
            && self.boundary_d_ok
            && self.boundary_e_ok
            && self.boundary_a_ok
            && self.boundary_squared_ok
            && self.norm_formula_ok
    }
}

/// Builds the cycles for m and checks the four boundary identities and the
/// norm formula exactly.
pub fn cycle_report(gamma: &Gamma, m: u64) -> Result<CycleReport> {
    let k = k_m(m)?;
    let c = build_c();
    let d = build_d(m)?;
    let e = build_e(m)?;
    let a = build_a_m(gamma, m)?;
    let ak = build_a_k(k);
    let t_ak = ak.translate(gamma, &GroupElem::t_pow(m as i64))?;

    let mut dc_expected = CoinvariantChain::zero(1);
    dc_expected.add_simplex(&[hv(0, 0, 0), hv(1, 0, 0)], Q::one());
    let dc = c.boundary();
    let dd_expected = ak.sub(&dc);
    let de_expected = ak.sub(&t_ak);
    let norm_a = a.l1_norm();
    let norm_expected = a_m_norm_formula(m)?;
    Ok(CycleReport {
        m,
        k_m: k,
        boundary_c_ok: dc == dc_expected,
        boundary_d_ok: d.boundary() == dd_expected,
        boundary_e_ok: e.boundary() == de_expected,
        boundary_a_ok: a.boundary().is_zero(),
        boundary_squared_ok: [&c, &d, &e, &a].iter().all(|x| x.boundary().boundary().is_zero()),
        norm_formula_ok: norm_a == norm_expected && norm_a <= qi(12),
        norm_a,
        c,
        d,
        e,
        a,
    })
}
