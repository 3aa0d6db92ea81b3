//! The bicombing Q, triangle cycles, and the Γ-equivariant alternating
//! triangle filling φ: X³ → C₂ of the Rips complex.
//!
//! Q(u, v) is the Rips edge [u, v] when d(u, v) ≤ κ and the edge chain of the
//! canonical geodesic otherwise. φ returns the simplex itself for triples of
//! diameter ≤ κ. Larger triples are canonicalized (reordered and translated
//! to the least anchored tuple), and the longest side is split at the midpoint
//! of its geodesic; the two bigons that appear are filled by a cone or by a
//! ladder of simplices.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::chain::{permutations, qi, SimplicialChain, Q};
use crate::engine::{Engine, FillerKind};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::lp::{fill_cycle_over, window_simplices, LpFill};
use crate::word::GroupElem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillMethod {
    UnitSimplex,
    ConeSplit,
    Lp,
}

impl FillMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FillMethod::UnitSimplex => "unit-simplex",
            FillMethod::ConeSplit => "cone-split",
            FillMethod::Lp => "lp",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FillResult {
    pub chain: SimplicialChain,
    pub method: FillMethod,
    pub norm: Q,
}

#[derive(Clone, Debug)]
pub struct RelativeFill {
    pub cycle: SimplicialChain,
    pub chain: SimplicialChain,
    pub norm: Q,
}

/// A triple translated so that its first vertex has trivial Γ-part.
struct CanonicalTriple {
    key: Vec<Vertex>,
    sign: i8,
    shift: GroupElem,
}

fn edge(u: &Vertex, v: &Vertex) -> SimplicialChain {
    SimplicialChain::simplex(&[u.clone(), v.clone()], Q::one())
}

fn path_chain(p: &[Vertex]) -> SimplicialChain {
    let mut c = SimplicialChain::zero(1);
    for e in p.windows(2) {
        c.add_simplex(e, Q::one());
    }
    c
}

impl Engine {
    pub fn canonical_geodesic(&self, u: &Vertex, v: &Vertex) -> Result<Vec<Vertex>> {
        self.graph.canonical_geodesic(u, v)
    }

    /// Q(u, v) as a 1-chain with boundary v − u.
    pub fn bicombing(&self, u: &Vertex, v: &Vertex) -> Result<SimplicialChain> {
        if u == v {
            return Ok(SimplicialChain::zero(1));
        }
        if self.graph.within(u, v, self.kappa())? {
            return Ok(edge(u, v));
        }
        Ok(path_chain(&self.graph.canonical_geodesic(u, v)?))
    }

    /// Q(x₀,x₁) + Q(x₁,x₂) + Q(x₂,x₀).
    pub fn triangle_cycle(&self, x: &[Vertex; 3]) -> Result<SimplicialChain> {
        let mut z = self.bicombing(&x[0], &x[1])?;
        z.add_assign(&self.bicombing(&x[1], &x[2])?);
        z.add_assign(&self.bicombing(&x[2], &x[0])?);
        Ok(z)
    }

    fn small_triple(&self, x: &[Vertex]) -> Result<bool> {
        let k = self.kappa();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                if !self.graph.within(&x[i], &x[j], k)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn canonical_triple(&self, x: &[Vertex; 3]) -> Result<CanonicalTriple> {
        let gamma = self.gamma();
        let mut rel: [[Option<GroupElem>; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    rel[i][j] = Some(gamma.left_div(&x[i].g, &x[j].g)?);
                }
            }
        }
        let mut best: Option<(Vec<Vertex>, i8, usize)> = None;
        for (perm, sign) in permutations(3) {
            let f = perm[0];
            let tuple = vec![
                Vertex::at_depth(x[f].depth),
                Vertex::new(rel[f][perm[1]].clone().expect("i != j"), x[perm[1]].depth),
                Vertex::new(rel[f][perm[2]].clone().expect("i != j"), x[perm[2]].depth),
            ];
            if best.as_ref().is_none_or(|(b, _, _)| tuple < *b) {
                best = Some((tuple, sign, f));
            }
        }
        let (key, sign, f) = best.expect("six orderings");
        Ok(CanonicalTriple {
            key,
            sign,
            shift: x[f].g.clone(),
        })
    }

    /// φ(x₀, x₁, x₂) with the method that produced it.
    pub fn fill_triangle(&self, x: &[Vertex; 3]) -> Result<FillResult> {
        let chain = self.phi_at(x, 0)?;
        let method = if chain.is_zero() || self.small_triple(x)? {
            FillMethod::UnitSimplex
        } else if self.fill.filler == FillerKind::Lp {
            FillMethod::Lp
        } else {
            FillMethod::ConeSplit
        };
        let norm = chain.l1_norm();
        Ok(FillResult { chain, method, norm })
    }

    /// φ as a bare chain.
    pub fn phi(&self, x: &[Vertex; 3]) -> Result<SimplicialChain> {
        self.phi_at(x, 0)
    }

    fn phi_at(&self, x: &[Vertex; 3], depth: u32) -> Result<SimplicialChain> {
        if x[0] == x[1] || x[1] == x[2] || x[0] == x[2] {
            return Ok(SimplicialChain::zero(2));
        }
        if self.small_triple(x)? {
            return Ok(SimplicialChain::simplex(x, Q::one()));
        }
        if depth >= self.fill.recursion_cap {
            return Err(Error::FillDepthExceeded {
                cap: self.fill.recursion_cap,
            });
        }
        let canon = self.canonical_triple(x)?;
        let cached = self.phi_cache.get(&canon.key).map(|c| c.clone());
        let base = match cached {
            Some(c) => c,
            None => {
                let key: [Vertex; 3] = canon.key.clone().try_into().expect("triple");
                let c = Arc::new(match self.fill.filler {
                    FillerKind::Cone => self.cone_split(&key, depth)?,
                    FillerKind::Lp => self.lp_triangle(&key)?.chain,
                });
                self.phi_cache.insert(canon.key.clone(), c.clone());
                c
            }
        };
        let moved = base.translate(self.gamma(), &canon.shift)?;
        Ok(moved.scale(&qi(canon.sign as i64)))
    }

    /// Recursive midpoint split of the longest side of an anchored triple.
    fn cone_split(&self, y: &[Vertex; 3], depth: u32) -> Result<SimplicialChain> {
        let cap = self.graph.dist_cap();
        let d01 = self.graph.distance(&y[0], &y[1], cap)?;
        let d12 = self.graph.distance(&y[1], &y[2], cap)?;
        let d02 = self.graph.distance(&y[0], &y[2], cap)?;
        // (u, v, w) has the orientation of y up to the sign s
        let (u, v, w, s) = if d01 >= d12 && d01 >= d02 {
            (&y[0], &y[1], &y[2], 1)
        } else if d12 >= d02 {
            (&y[1], &y[2], &y[0], 1)
        } else {
            (&y[0], &y[2], &y[1], -1)
        };
        let path = self.graph.canonical_geodesic(u, v)?;
        let h = (path.len() - 1) / 2;
        let m = &path[h];
        let mut out = self.phi_at(&[u.clone(), m.clone(), w.clone()], depth + 1)?;
        out.add_assign(&self.phi_at(&[m.clone(), v.clone(), w.clone()], depth + 1)?);
        out.add_assign(&self.fill_bigon(&path[..=h])?);
        out.add_assign(&self.fill_bigon(&path[h..])?);
        Ok(out.scale(&qi(s)))
    }

    /// A 2-chain with boundary seg − Q(seg₀, seg_last), where seg is a
    /// geodesic segment.
    fn fill_bigon(&self, seg: &[Vertex]) -> Result<SimplicialChain> {
        let mut out = SimplicialChain::zero(2);
        let len = seg.len() - 1;
        if len <= 1 {
            return Ok(out);
        }
        let k = self.kappa();
        if len as u32 <= k {
            for i in 1..len {
                out.add_simplex(&[seg[0].clone(), seg[i].clone(), seg[i + 1].clone()], Q::one());
            }
            return Ok(out);
        }
        let other = self.graph.canonical_geodesic(&seg[0], &seg[len])?;
        if other == seg {
            return Ok(out);
        }
        let (p, r) = (seg, &other[..]);
        for i in 0..len {
            for (a, b) in [(&p[i], &r[i]), (&p[i], &r[i + 1]), (&p[i + 1], &r[i + 1])] {
                if !self.graph.within(a, b, k)? {
                    let length = self.graph.dist(a, b).unwrap_or(self.graph.dist_cap() + 1);
                    return Err(Error::LadderTooWide { length, kappa: k });
                }
            }
            out.add_simplex(&[p[i].clone(), p[i + 1].clone(), r[i + 1].clone()], Q::one());
            out.add_simplex(&[p[i].clone(), r[i + 1].clone(), r[i].clone()], Q::one());
        }
        Ok(out)
    }

    /// The cone-split fill and the window it lives in, for LP comparisons.
    pub fn lp_window_for(&self, x: &[Vertex; 3], radius: u32) -> Result<BTreeSet<Vertex>> {
        let z = self.triangle_cycle(x)?;
        let mut window: BTreeSet<Vertex> = z.support();
        window.extend(x.iter().cloned());
        let cone = self.cone_only(x)?;
        window.extend(cone.support());
        if radius > 0 {
            let seeds: Vec<Vertex> = window.iter().cloned().collect();
            for s in seeds {
                window.extend(self.graph.ball(&s, radius)?);
            }
        }
        Ok(window)
    }

    fn cone_only(&self, x: &[Vertex; 3]) -> Result<SimplicialChain> {
        if self.fill.filler == FillerKind::Cone {
            return self.phi(x);
        }
        let mut e = self.clone();
        e.fill.filler = FillerKind::Cone;
        e.phi(x)
    }

    fn lp_triangle(&self, x: &[Vertex; 3]) -> Result<LpFill> {
        let window = self.lp_window_for(x, self.fill.lp_window_radius)?;
        let z = self.triangle_cycle(x)?;
        self.fill_cycle_lp_in(&z, &window)
    }

    /// ℓ¹-minimal filling of a cycle over the Rips simplices spanned by the
    /// window.
    pub fn fill_cycle_lp_in(&self, z: &SimplicialChain, window: &BTreeSet<Vertex>) -> Result<LpFill> {
        if z.is_zero() {
            return fill_cycle_over(z, &[], self.fill.lp_exact_limit);
        }
        let cands = window_simplices(
            &self.graph,
            window,
            self.kappa(),
            z.dim(),
            self.fill.lp_simplex_cap,
        )?;
        fill_cycle_over(z, &cands, self.fill.lp_exact_limit)
    }

    /// fill_cycle_lp with the window made of the vertices within
    /// `window_radius` of the support of z.
    pub fn fill_cycle_lp(&self, z: &SimplicialChain, window_radius: u32) -> Result<LpFill> {
        let mut window = z.support();
        if window_radius > 0 {
            let seeds: Vec<Vertex> = window.iter().cloned().collect();
            for s in seeds {
                window.extend(self.graph.ball(&s, window_radius)?);
            }
        }
        self.fill_cycle_lp_in(z, &window)
    }

    /// Cone-split and LP norms of φ on the same instance and window.
    pub fn compare_lp_cone(&self, x: &[Vertex; 3]) -> Result<(Q, LpFill)> {
        let cone = self.cone_only(x)?;
        let window = self.lp_window_for(x, self.fill.lp_window_radius)?;
        let z = self.triangle_cycle(x)?;
        let lp = self.fill_cycle_lp_in(&z, &window)?;
        Ok((cone.l1_norm(), lp))
    }

    /// Σ(−1)ⁱ φ(face_i), a 2-cycle, and an ℓ¹-minimal 3-chain filling it.
    pub fn relative_fill_check(&self, x: &[Vertex; 4]) -> Result<RelativeFill> {
        let mut cycle = SimplicialChain::zero(2);
        for i in 0..4 {
            let face: Vec<Vertex> = (0..4).filter(|&j| j != i).map(|j| x[j].clone()).collect();
            let face: [Vertex; 3] = face.try_into().expect("three vertices");
            let f = self.phi(&face)?;
            cycle.add_scaled(&f, &qi(if i % 2 == 0 { 1 } else { -1 }));
        }
        if cycle.is_zero() {
            return Ok(RelativeFill {
                cycle,
                chain: SimplicialChain::zero(3),
                norm: Q::zero(),
            });
        }
        let mut window = cycle.support();
        window.extend(x.iter().cloned());
        let lp = self.fill_cycle_lp_in(&cycle, &window)?;
        Ok(RelativeFill {
            cycle,
            norm: lp.norm.clone(),
            chain: lp.chain,
        })
    }

    /// Checks ∂φ(x) = triangle_cycle(x).
    pub fn check_fill_boundary(&self, x: &[Vertex; 3]) -> Result<bool> {
        let phi = self.phi(x)?;
        Ok(phi.boundary() == self.triangle_cycle(x)?)
    }
}

/// θ-range of a chain's support.
pub fn theta_range(c: &SimplicialChain) -> Option<(i64, i64)> {
    let mut it = c.support().into_iter().map(|v| v.g.texp);
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Word;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn adjacent_pair_is_a_single_edge() {
        let e = Engine::default();
        let (a, b) = (v("e@0:0"), v("a@0:0"));
        assert_eq!(e.canonical_geodesic(&a, &b).unwrap(), vec![a.clone(), b.clone()]);
        assert_eq!(e.bicombing(&a, &b).unwrap(), edge(&a, &b));
        assert!(e.bicombing(&a, &a).unwrap().is_zero());
    }

    #[test]
    fn class_c_simplices_fill_as_themselves() {
        let e = Engine::default();
        for t in [["e", "b", "ba"], ["e", "ba", "ab"], ["e", "ab", "a"]] {
            let x = t.map(|s| Vertex::from_parts(Word::parse(s).unwrap(), 0, 0));
            let r = e.fill_triangle(&x).unwrap();
            assert_eq!(r.method, FillMethod::UnitSimplex);
            assert_eq!(r.chain, SimplicialChain::simplex(&x, Q::one()));
        }
    }

    #[test]
    fn degenerate_triple_is_zero() {
        let e = Engine::default();
        let x = [v("a@0:0"), v("a@0:0"), v("b@0:0")];
        assert!(e.phi(&x).unwrap().is_zero());
        assert!(e.triangle_cycle(&x).unwrap().boundary().is_zero());
    }

    #[test]
    fn small_kappa_forces_cone_split() {
        let e = Engine::with_kappa(2);
        let x = [v("e@0:0"), v("abab@0:0"), v("BBB@0:0")];
        let r = e.fill_triangle(&x).unwrap();
        assert_eq!(r.method, FillMethod::ConeSplit);
        assert_eq!(r.chain.boundary(), e.triangle_cycle(&x).unwrap());
        r.chain.validate_rips(&e.graph, 2).unwrap();
    }

    #[test]
    fn alternation_and_equivariance_small_kappa() {
        let e = Engine::with_kappa(2);
        let x = [v("e@0:0"), v("abab@0:0"), v("BBB@1:0")];
        let base = e.phi(&x).unwrap();
        let swapped = e.phi(&[x[1].clone(), x[0].clone(), x[2].clone()]).unwrap();
        assert_eq!(swapped, base.neg());
        let g = GroupElem::parse("bA@2").unwrap();
        let moved: [Vertex; 3] = x.clone().map(|y| e.graph.translate(&g, &y).unwrap());
        assert_eq!(
            e.phi(&moved).unwrap(),
            base.translate(e.gamma(), &g).unwrap()
        );
    }
}
