//! The volume-form cochain F_f, the quasi-cocycles α_f = F_f ∘ φ, and the
//! evaluation, defect and certificate machinery built on them.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::chain::{pair, qi, SimplicialChain, Q};
use crate::cycles::{build_a_m, build_c, build_d, build_e, k_m};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::lipfn::LipFn;
use crate::word::{GroupElem, Word};

/// Half-width of the window on which lip(f_n) is measured beyond ±n.
pub const LIP_WINDOW: i64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stratum {
    /// Depth-0 tuples near a random base point of the Cayley graph.
    Cayley,
    /// Walks through horoballs up to the configured depth.
    Mixed,
    /// Depth-0 points pushed straight up into their own horoballs.
    CrossHoroball,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::Cayley, Stratum::Mixed, Stratum::CrossHoroball];

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Cayley => "cayley",
            Stratum::Mixed => "mixed",
            Stratum::CrossHoroball => "cross-horoball",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSpec {
    pub count: usize,
    /// walk length used for the tuple spread
    pub radius: u32,
    pub max_depth: u32,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            count: 2000,
            radius: 4,
            max_depth: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefectReport {
    pub f: String,
    pub spec: SampleSpec,
    pub seed: u64,
    pub max_abs_delta: Q,
    pub argmax: Option<Vec<Vertex>>,
    pub theta_range: Option<(i64, i64)>,
    pub declared_lip: Q,
    pub lip_on_window: Q,
    /// max |δα_f| / lip-on-window; None when f is constant on the window
    pub ratio_to_lip: Option<Q>,
    /// max |F_f(∂[x₀,…,x₃])| over the same tuples
    pub max_abs_f_boundary: Q,
}

impl DefectReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "f": self.f,
            "count": self.spec.count,
            "radius": self.spec.radius,
            "max_depth": self.spec.max_depth,
            "seed": self.seed,
            "max_abs_delta": self.max_abs_delta.to_string(),
            "argmax": self.argmax.as_ref().map(|t| t.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
            "theta_range": self.theta_range.map(|(a, b)| vec![a, b]),
            "declared_lip": self.declared_lip.to_string(),
            "lip_on_window": self.lip_on_window.to_string(),
            "ratio_to_lip": self.ratio_to_lip.as_ref().map(|r| r.to_string()),
            "max_abs_f_boundary": self.max_abs_f_boundary.to_string(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct VanishingReport {
    pub n: u64,
    pub radius: u32,
    pub triples: usize,
    pub vanishes: bool,
    /// a triple with α_{f_n} ≠ 0 and its value
    pub witness: Option<(Vec<Vertex>, Q)>,
    /// least n with every fill vertex in θ⁻¹([−n, n])
    pub theta_spread: u64,
}

#[derive(Clone, Debug)]
pub struct BahRow {
    pub radius: u32,
    pub n: u64,
    pub lip: Q,
    pub bound: Q,
}

#[derive(Clone, Debug)]
pub struct NontrivialityRow {
    pub m: u64,
    pub value: Q,
    pub norm: Q,
    pub ratio: Q,
}

fn update_range(range: &mut Option<(i64, i64)>, t: i64) {
    *range = Some(match *range {
        None => (t, t),
        Some((lo, hi)) => (lo.min(t), hi.max(t)),
    });
}

/// Free-group ball of radius r in the letters a, b, sorted.
pub fn free_ball(r: u32) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..r {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..4u8 {
                if w.letters().last().is_some_and(|&x| x == crate::word::inv_letter(l)) {
                    continue;
                }
                let mut ls = w.letters().to_vec();
                ls.push(l);
                next.push(Word::from_reduced(ls));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out
}

/// Rank over Q by exact elimination.
pub fn rational_rank(mut rows: Vec<Vec<Q>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && !row[c].is_zero() {
                let f = &row[c] / &pivot[c];
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of the matrix [f_j(m_i) − f_j(0)].
pub fn independence_rank(fs: &[LipFn], ms: &[i64]) -> Result<usize> {
    if fs.is_empty() || ms.is_empty() {
        return Err(Error::Invalid("independence_rank needs nonempty lists".into()));
    }
    let rows = ms
        .iter()
        .map(|&m| fs.iter().map(|f| f.value(m) - f.value(0)).collect())
        .collect();
    Ok(rational_rank(rows))
}

fn as_triple(s: &[Vertex]) -> Result<[Vertex; 3]> {
    s.to_vec()
        .try_into()
        .map_err(|_| Error::Invalid("2-simplex expected".into()))
}

impl Engine {
    /// F_f(σ) = ε(x₀,x₁,x₂)·Σ f(θ(xᵢ))/3.
    pub fn f_f(&self, f: &LipFn, s: &[Vertex]) -> Q {
        self.f_f_shifted(f, s, 0)
    }

    /// F_f(t^shift·σ), using ε(t·σ) = ε(σ).
    fn f_f_shifted(&self, f: &LipFn, s: &[Vertex], shift: i64) -> Q {
        let e = self.rho.epsilon(&s[0], &s[1], &s[2]);
        if e == 0 {
            return Q::zero();
        }
        let total: Q = s.iter().map(|v| f.value(v.g.texp + shift)).sum();
        total * qi(e as i64) / qi(3)
    }

    pub fn f_on_chain(&self, f: &LipFn, c: &SimplicialChain) -> Q {
        self.f_on_chain_shifted(f, c, 0)
    }

    fn f_on_chain_shifted(&self, f: &LipFn, c: &SimplicialChain, shift: i64) -> Q {
        c.iter().map(|(s, k)| k * self.f_f_shifted(f, s, shift)).sum()
    }

    /// ε(e, ab, a), the common sign of the fundamental class.
    pub fn epsilon_ab(&self) -> i8 {
        let w = |s: &str| Word::parse(s).expect("literal");
        self.rho.epsilon_words(&w("e"), &w("ab"), &w("a"))
    }

    /// α_f(x₀,x₁,x₂) = F_f(φ(x₀,x₁,x₂)).
    pub fn alpha(&self, f: &LipFn, x: &[Vertex; 3]) -> Result<Q> {
        Ok(self.f_on_chain(f, &self.phi(x)?))
    }

    fn alpha_ranged(&self, f: &LipFn, x: &[Vertex; 3], range: &mut Option<(i64, i64)>) -> Result<Q> {
        let phi = self.phi(x)?;
        for v in phi.support() {
            update_range(range, v.g.texp);
        }
        Ok(self.f_on_chain(f, &phi))
    }

    /// δα_f(x₀,…,x₃) = Σᵢ (−1)ⁱ α_f(face_i).
    pub fn delta_alpha(&self, f: &LipFn, x: &[Vertex; 4]) -> Result<Q> {
        let mut range = None;
        self.delta_alpha_ranged(f, x, &mut range)
    }

    fn delta_alpha_ranged(
        &self,
        f: &LipFn,
        x: &[Vertex; 4],
        range: &mut Option<(i64, i64)>,
    ) -> Result<Q> {
        let mut total = Q::zero();
        for i in 0..4 {
            let face: Vec<Vertex> = (0..4).filter(|&j| j != i).map(|j| x[j].clone()).collect();
            let face: [Vertex; 3] = face.try_into().expect("three vertices");
            let a = self.alpha_ranged(f, &face, range)?;
            if i % 2 == 0 {
                total += a;
            } else {
                total -= a;
            }
        }
        Ok(total)
    }

    /// ⟨α_f, A_m⟩. The t^m·(c + d_m) half goes through equivariance,
    /// α_f(t^m σ) = F_f(t^m·φ(σ)) = F_{f(·+m)}(φ(σ)) since ε is t-invariant,
    /// so ψ^m of the vertex words (Fib(2m) letters) is never built.
    pub fn evaluate_on_am(&self, f: &LipFn, m: u64) -> Result<Q> {
        k_m(m)?;
        let shift = i64::try_from(m).map_err(|_| Error::Invalid("m too large".into()))?;
        if m > self.gamma().power_cap() as u64 {
            return Err(Error::PsiPowerCap {
                power: shift,
                cap: self.gamma().power_cap(),
            });
        }
        let mut cd = build_c();
        cd.add_assign(&build_d(m)?);
        let mut total = Q::zero();
        for (s, k) in cd.iter() {
            let phi = self.phi(&as_triple(s)?)?;
            total += k * (self.f_on_chain_shifted(f, &phi, shift) - self.f_on_chain(f, &phi));
        }
        for (s, k) in build_e(m)?.iter() {
            total += k * self.alpha(f, &as_triple(s)?)?;
        }
        Ok(total)
    }

    /// ⟨α_f, A_m⟩ on the explicit chain, translates included; the cost grows
    /// like Fib(2m), so this is a cross-check for small m.
    pub fn evaluate_on_am_direct(&self, f: &LipFn, m: u64) -> Result<Q> {
        let a = build_a_m(self.gamma(), m)?;
        let cochain = |s: &[Vertex]| -> Result<Q> { self.alpha(f, &as_triple(s)?) };
        pair(cochain, &a, a.len())
    }

    /// 2·ε(e,ab,a)·(f(m) − f(0)).
    pub fn expected_on_am(&self, f: &LipFn, m: u64) -> Q {
        qi(2 * self.epsilon_ab() as i64) * (f.value(m as i64) - f.value(0))
    }

    /// A sampled tuple of k vertices from one stratum; the generator is
    /// seeded by (seed, index) alone.
    pub fn sample_tuple(
        &self,
        stratum: Stratum,
        k: usize,
        spec: &SampleSpec,
        seed: u64,
        index: u64,
    ) -> Result<Vec<Vertex>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let g = &self.graph;
        let r = spec.radius;
        let base = g.random_walk(&Vertex::origin(), r, 0, &mut rng)?;
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let steps = rng.random_range(0..=r);
            let v = match stratum {
                Stratum::Cayley => g.random_walk(&base, steps, 0, &mut rng)?,
                Stratum::Mixed => g.random_walk(&base, steps, spec.max_depth, &mut rng)?,
                Stratum::CrossHoroball => {
                    let v = g.random_walk(&base, steps, 0, &mut rng)?;
                    let up = rng.random_range(1..=spec.max_depth.max(1));
                    Vertex::new(v.g, up)
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    pub fn sample_quadruple(&self, spec: &SampleSpec, seed: u64, index: u64) -> Result<[Vertex; 4]> {
        let s = Stratum::ALL[(index % 3) as usize];
        let v = self.sample_tuple(s, 4, spec, seed, index)?;
        Ok(v.try_into().expect("four vertices"))
    }

    pub fn sample_triple(&self, spec: &SampleSpec, seed: u64, index: u64) -> Result<[Vertex; 3]> {
        let s = Stratum::ALL[(index % 3) as usize];
        let v = self.sample_tuple(s, 3, spec, seed, index)?;
        Ok(v.try_into().expect("three vertices"))
    }

    /// max |δα_f| over `spec.count` stratified quadruples.
    pub fn defect_scan(&self, f: &LipFn, spec: &SampleSpec, seed: u64) -> Result<DefectReport> {
        let mut best = Q::zero();
        let mut argmax = None;
        let mut range = None;
        let mut best_fb = Q::zero();
        for i in 0..spec.count as u64 {
            let x = self.sample_quadruple(spec, seed, i)?;
            let d = self.delta_alpha_ranged(f, &x, &mut range)?.abs();
            if d > best {
                best = d;
                argmax = Some(x.to_vec());
            }
            let mut bd = SimplicialChain::simplex(&x, Q::one()).boundary();
            if bd.is_zero() {
                bd = SimplicialChain::zero(2);
            }
            let fb = self.f_on_chain(f, &bd).abs();
            if fb > best_fb {
                best_fb = fb;
            }
        }
        let (lo, hi) = range.unwrap_or((0, 0));
        f.check_window(lo, hi)?;
        let lip = f.lip_on_window(lo, hi);
        let ratio = if lip.is_zero() {
            if best.is_zero() {
                None
            } else {
                return Err(Error::Invalid(format!(
                    "nonzero defect {best} for a function constant on [{lo}, {hi}]"
                )));
            }
        } else {
            Some(&best / &lip)
        };
        Ok(DefectReport {
            f: f.to_string(),
            spec: spec.clone(),
            seed,
            max_abs_delta: best,
            argmax,
            theta_range: range,
            declared_lip: f.declared_lip(),
            lip_on_window: lip,
            ratio_to_lip: ratio,
            max_abs_f_boundary: best_fb,
        })
    }

    /// Fills of all triples of distinct points of S_i at depth 0, as
    /// (triple, fill) pairs in a fixed order.
    fn ball_fills(&self, radius: u32) -> Result<Vec<([Vertex; 3], SimplicialChain)>> {
        let pts: Vec<Vertex> = free_ball(radius)
            .into_iter()
            .map(|w| Vertex::from_parts(w, 0, 0))
            .collect();
        let mut out = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                for k in j + 1..pts.len() {
                    let x = [pts[i].clone(), pts[j].clone(), pts[k].clone()];
                    let phi = self.phi(&x)?;
                    out.push((x, phi));
                }
            }
        }
        Ok(out)
    }

    /// Does α_{f_n} vanish on every triple of S_i at depth 0?
    pub fn vanishing_certificate(&self, f: &LipFn, n: u64, radius: u32) -> Result<VanishingReport> {
        let fills = self.ball_fills(radius)?;
        self.vanishing_on(&fills, f, n, radius)
    }

    fn vanishing_on(
        &self,
        fills: &[([Vertex; 3], SimplicialChain)],
        f: &LipFn,
        n: u64,
        radius: u32,
    ) -> Result<VanishingReport> {
        let fnn = f.truncate(n);
        let mut witness = None;
        let mut spread = 0u64;
        for (x, phi) in fills {
            for v in phi.support() {
                spread = spread.max(v.g.texp.unsigned_abs());
            }
            if witness.is_none() {
                let val = self.f_on_chain(&fnn, phi);
                if !val.is_zero() {
                    witness = Some((x.to_vec(), val));
                }
            }
        }
        Ok(VanishingReport {
            n,
            radius,
            triples: fills.len(),
            vanishes: witness.is_none(),
            witness,
            theta_spread: spread,
        })
    }

    /// Least n with α_{f_n} ≡ 0 on S_i³ (searching up to the θ-spread, at
    /// which vanishing is automatic).
    pub fn least_vanishing_n(&self, f: &LipFn, radius: u32) -> Result<VanishingReport> {
        let fills = self.ball_fills(radius)?;
        let first = self.vanishing_on(&fills, f, 0, radius)?;
        if first.vanishes {
            return Ok(first);
        }
        for n in 1..=first.theta_spread {
            let r = self.vanishing_on(&fills, f, n, radius)?;
            if r.vanishes {
                return Ok(r);
            }
        }
        Err(Error::Invalid(format!(
            "no vanishing truncation up to the theta spread {}",
            first.theta_spread
        )))
    }

    /// For each radius i, a truncation level n_i at which α_{f_{n_i}}
    /// vanishes on S_i³ and the bound K̂·lip(f_{n_i}). The levels are made
    /// strictly increasing, which keeps vanishing (f_n ≡ 0 on a larger
    /// interval kills the same fill vertices).
    pub fn bah_certificate(&self, f: &LipFn, radii: &[u32], khat: &Q) -> Result<Vec<BahRow>> {
        let mut rows: Vec<BahRow> = Vec::new();
        for &i in radii {
            let least = self.least_vanishing_n(f, i)?.n;
            let n = match rows.last() {
                Some(prev) => least.max(prev.n + 1),
                None => least,
            };
            let check = self.vanishing_certificate(f, n, i)?;
            if !check.vanishes {
                return Err(Error::Invalid(format!("f_{n} does not vanish on S_{i}")));
            }
            let fnn = f.truncate(n);
            let w = n as i64 + LIP_WINDOW;
            let lip = fnn.lip_on_window(-w, w);
            rows.push(BahRow {
                radius: i,
                n,
                bound: khat * &lip,
                lip,
            });
        }
        Ok(rows)
    }

    /// |α_f(A_m)| / ‖A_m‖₁ for each m: a lower bound for ‖β‖∞ over bounded
    /// invariant primitives β of δα_f.
    pub fn nontriviality_certificate(&self, f: &LipFn, ms: &[u64]) -> Result<Vec<NontrivialityRow>> {
        ms.iter()
            .map(|&m| {
                k_m(m)?;
                let value = self.evaluate_on_am(f, m)?;
                let norm = build_a_m(self.gamma(), m)?.l1_norm();
                let ratio = value.abs() / &norm;
                Ok(NontrivialityRow { m, value, norm, ratio })
            })
            .collect()
    }

    /// Γ₀-translate helper for invariance checks.
    pub fn translate_all(&self, g: &GroupElem, x: &[Vertex]) -> Result<Vec<Vertex>> {
        x.iter().map(|v| self.graph.translate(g, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::q;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn f_f_on_fundamental_simplex() {
        let e = Engine::default();
        let f = LipFn::linear(qi(3)).affine(qi(1), qi(2));
        let s = [v("e@0:0"), v("ab@0:0"), v("a@0:0")];
        assert_eq!(e.f_f(&f, &s), qi(2 * e.epsilon_ab() as i64));
        assert_eq!(e.epsilon_ab().abs(), 1);
    }

    #[test]
    fn horoball_simplex_has_zero_f() {
        let e = Engine::default();
        let s = [v("e@0:1"), v("ABab@1:1"), v("e@1:2")];
        assert_eq!(e.f_f(&LipFn::identity(), &s), qi(0));
        assert_eq!(e.alpha(&LipFn::identity(), &s).unwrap(), qi(0));
    }

    #[test]
    fn am_small() {
        let e = Engine::default();
        for m in 1..=4 {
            let f = LipFn::identity();
            assert_eq!(e.evaluate_on_am(&f, m).unwrap(), e.expected_on_am(&f, m));
        }
        assert_eq!(e.evaluate_on_am(&LipFn::identity(), 5).unwrap().abs(), qi(10));
    }

    #[test]
    fn am_shortcut_matches_direct_pairing() {
        let e = Engine::default();
        let fs = [
            LipFn::identity(),
            LipFn::power_floor(1, 2).unwrap(),
            LipFn::periodic(vec![qi(0), qi(3), qi(-1)]).unwrap(),
        ];
        for f in &fs {
            for m in 1..=7 {
                assert_eq!(e.evaluate_on_am(f, m).unwrap(), e.evaluate_on_am_direct(f, m).unwrap(), "{f} m={m}");
            }
        }
    }

    #[test]
    fn rank_examples() {
        let fs = [
            LipFn::power_floor(1, 2).unwrap(),
            LipFn::power_floor(2, 3).unwrap(),
            LipFn::power_floor(3, 4).unwrap(),
        ];
        assert_eq!(independence_rank(&fs, &[4, 9, 16]).unwrap(), 3);
        let dup = [fs[0].clone(), fs[0].clone()];
        assert_eq!(independence_rank(&dup, &[4, 9, 16]).unwrap(), 1);
        assert_eq!(rational_rank(vec![vec![q(1, 2), qi(1)], vec![qi(1), qi(2)]]), 1);
    }

    #[test]
    fn free_ball_sizes() {
        assert_eq!(free_ball(1).len(), 5);
        assert_eq!(free_ball(2).len(), 17);
        assert_eq!(free_ball(3).len(), 53);
    }

    #[test]
    fn small_defect_scan_is_linear() {
        let e = Engine::default();
        let spec = SampleSpec { count: 30, radius: 3, max_depth: 2 };
        let f = LipFn::identity();
        let a = e.defect_scan(&f, &spec, 7).unwrap();
        let b = e.defect_scan(&f.scaled(qi(3)), &spec, 7).unwrap();
        assert_eq!(a.ratio_to_lip, b.ratio_to_lip);
        assert_eq!(b.max_abs_delta, qi(3) * &a.max_abs_delta);
        let c = e.defect_scan(&LipFn::constant(qi(5)), &spec, 7).unwrap();
        assert_eq!(c.max_abs_delta, qi(0));
    }
}
