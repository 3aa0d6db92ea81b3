//! The cusped graph X of (Γ, H): the Cayley graph of Γ with respect to
//! {a, b, [a,b], t} with a combinatorial horoball glued along every coset gH.
//!
//! Distances are computed by a capped bidirectional BFS between anchored pairs
//! (the first vertex translated to the identity), and cached by the anchored
//! key, so every query is Γ-equivariant by construction.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::word::{coset_rep_word, Gamma, GroupElem, Word, LA, LA_INV, LB, LB_INV};

/// A vertex (g, n) of X: a group element and a depth.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Vertex {
    pub g: GroupElem,
    pub depth: u32,
}

impl Vertex {
    pub fn new(g: GroupElem, depth: u32) -> Self {
        Vertex { g, depth }
    }

    pub fn from_parts(base: Word, texp: i64, depth: u32) -> Self {
        Vertex {
            g: GroupElem::new(base, texp),
            depth,
        }
    }

    /// The base point (e, 0).
    pub fn origin() -> Self {
        Vertex::default()
    }

    pub fn at_depth(depth: u32) -> Self {
        Vertex {
            g: GroupElem::identity(),
            depth,
        }
    }

    pub fn base(&self) -> &Word {
        &self.g.base
    }

    pub fn texp(&self) -> i64 {
        self.g.texp
    }

    /// Parses `<word>@<k>:<n>`.
    pub fn parse(s: &str) -> Result<Vertex> {
        let s = s.trim();
        let (g, n) = s.rsplit_once(':').ok_or_else(|| Error::Parse {
            pos: s.len(),
            msg: "vertex needs a ':<depth>' suffix".into(),
        })?;
        let depth = n.trim().parse::<u32>().map_err(|e| Error::Parse {
            pos: g.len() + 1,
            msg: format!("bad depth {n:?}: {e}"),
        })?;
        Ok(Vertex::new(GroupElem::parse(g)?, depth))
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.depth
            .cmp(&other.depth)
            .then_with(|| self.g.base.cmp(&other.g.base))
            .then_with(|| self.g.texp.cmp(&other.g.texp))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.g, self.depth)
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{}", self.g, self.depth)
    }
}

/// Identifies the horoball glued along a coset gH.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HoroballId(pub Word);

pub fn horoball_of(v: &Vertex) -> HoroballId {
    HoroballId(coset_rep_word(&v.g.base))
}

/// Number of horizontal neighbours at depth n ≥ 1: |{h : 0 < |h| ≤ 2ⁿ}|.
pub fn horizontal_degree(n: u32) -> u64 {
    let r = 1u64 << n;
    2 * r * (r + 1)
}

/// An anchored pair: (n_u, u⁻¹v, n_v).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct PairKey {
    from_depth: u32,
    to: Vertex,
}

#[derive(Clone, Copy, Debug)]
enum DistEntry {
    Exact(u32),
    Beyond(u32),
}

pub const DEFAULT_DEPTH_CAP: u32 = 12;
pub const DEFAULT_DIST_CAP: u32 = 24;

/// The cusped graph with its distance and geodesic caches.
#[derive(Debug)]
pub struct CuspedGraph {
    gamma: Gamma,
    depth_cap: u32,
    dist_cap: u32,
    dist_cache: DashMap<PairKey, DistEntry>,
    geo_cache: DashMap<PairKey, Arc<Vec<Vertex>>>,
}

impl Clone for CuspedGraph {
    fn clone(&self) -> Self {
        CuspedGraph::new(self.gamma.clone(), self.depth_cap, self.dist_cap)
    }
}

impl Default for CuspedGraph {
    fn default() -> Self {
        CuspedGraph::new(Gamma::default(), DEFAULT_DEPTH_CAP, DEFAULT_DIST_CAP)
    }
}

struct Side {
    dist: FxHashMap<Vertex, u32>,
    layers: Vec<Vec<Vertex>>,
}

impl Side {
    fn new(start: Vertex) -> Side {
        let mut dist = FxHashMap::default();
        dist.insert(start.clone(), 0);
        Side {
            dist,
            layers: vec![vec![start]],
        }
    }

    fn radius(&self) -> u32 {
        self.layers.len() as u32 - 1
    }

    fn frontier_len(&self) -> usize {
        self.layers.last().map_or(0, Vec::len)
    }
}

impl CuspedGraph {
    pub fn new(gamma: Gamma, depth_cap: u32, dist_cap: u32) -> Self {
        CuspedGraph {
            gamma,
            depth_cap,
            dist_cap,
            dist_cache: DashMap::new(),
            geo_cache: DashMap::new(),
        }
    }

    pub fn gamma(&self) -> &Gamma {
        &self.gamma
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    pub fn dist_cap(&self) -> u32 {
        self.dist_cap
    }

    pub fn clear_caches(&self) {
        self.dist_cache.clear();
        self.geo_cache.clear();
    }

    /// γ·v for γ ∈ Γ.
    pub fn translate(&self, gamma: &GroupElem, v: &Vertex) -> Result<Vertex> {
        Ok(Vertex::new(self.gamma.mul(gamma, &v.g)?, v.depth))
    }

    /// All neighbours of v, without duplicates or loops.
    pub fn neighbors(&self, v: &Vertex) -> Result<Vec<Vertex>> {
        let mut out = Vec::new();
        self.for_each_neighbor(v, |w| out.push(w))?;
        Ok(out)
    }

    fn for_each_neighbor(&self, v: &Vertex, mut emit: impl FnMut(Vertex)) -> Result<()> {
        let n = v.depth;
        if n > self.depth_cap {
            return Err(Error::DegreeOverflow {
                depth: n,
                cap: self.depth_cap,
            });
        }
        let (g0, k) = (&v.g.base, v.g.texp);
        emit(Vertex::from_parts(g0.clone(), k, n + 1));
        if n == 0 {
            for l in [LA, LA_INV, LB, LB_INV] {
                let s = self.gamma.psi_letter(k, l)?;
                emit(Vertex::from_parts(g0.mul(&s), k, 0));
            }
            for alpha in [1, -1] {
                emit(Vertex::from_parts(
                    g0.mul(&Word::commutator_pow(alpha)),
                    k,
                    0,
                ));
            }
            emit(Vertex::from_parts(g0.clone(), k + 1, 0));
            emit(Vertex::from_parts(g0.clone(), k - 1, 0));
            return Ok(());
        }
        emit(Vertex::from_parts(g0.clone(), k, n - 1));
        // ψ fixes [a,b], so g·[a,b]^α t^β = g₀[a,b]^α t^{k+β}.
        let r: i64 = 1 << n;
        for alpha in -r..=r {
            let moved = g0.mul(&Word::commutator_pow(alpha));
            let rest = r - alpha.abs();
            for beta in -rest..=rest {
                if alpha == 0 && beta == 0 {
                    continue;
                }
                emit(Vertex::from_parts(moved.clone(), k + beta, n));
            }
        }
        Ok(())
    }

    /// Cheap adjacency test through u⁻¹v.
    pub fn adjacent(&self, u: &Vertex, v: &Vertex) -> Result<bool> {
        let rel = self.gamma.left_div(&u.g, &v.g)?;
        Ok(rel_adjacent(u.depth, &rel, v.depth))
    }

    fn anchor(&self, u: &Vertex, v: &Vertex) -> Result<PairKey> {
        Ok(PairKey {
            from_depth: u.depth,
            to: Vertex::new(self.gamma.left_div(&u.g, &v.g)?, v.depth),
        })
    }

    /// The anchored key of (u, v) and whether it is the primary direction.
    fn primary_key(&self, u: &Vertex, v: &Vertex) -> Result<(PairKey, bool)> {
        let fwd = self.anchor(u, v)?;
        let bwd = self.anchor(v, u)?;
        let fwd_first = (fwd.from_depth, &fwd.to) <= (bwd.from_depth, &bwd.to);
        Ok(if fwd_first { (fwd, true) } else { (bwd, false) })
    }

    /// Exact distance if it is at most `cap`, else `Exceeded`.
    pub fn distance(&self, u: &Vertex, v: &Vertex, cap: u32) -> Result<u32> {
        if cap > self.dist_cap {
            return Err(Error::Invalid(format!(
                "distance cap {cap} above the configured maximum {}",
                self.dist_cap
            )));
        }
        if u == v {
            return Ok(0);
        }
        if u.depth.abs_diff(v.depth) > cap {
            return Err(Error::Exceeded { cap });
        }
        let (key, _) = self.primary_key(u, v)?;
        let mut from = 0;
        if let Some(e) = self.dist_cache.get(&key).map(|e| *e) {
            match e {
                DistEntry::Exact(d) if d <= cap => return Ok(d),
                DistEntry::Exact(_) => return Err(Error::Exceeded { cap }),
                DistEntry::Beyond(c) if cap <= c => return Err(Error::Exceeded { cap }),
                DistEntry::Beyond(c) => from = c + 1,
            }
        }
        let start = Vertex::at_depth(key.from_depth);
        match self.search_deepening(&start, &key.to, from, cap)? {
            Some((d, _, _)) => {
                self.dist_cache.insert(key, DistEntry::Exact(d));
                Ok(d)
            }
            None => {
                self.dist_cache.insert(key, DistEntry::Beyond(cap));
                Err(Error::Exceeded { cap })
            }
        }
    }

    /// Distance with the configured maximum cap.
    pub fn dist(&self, u: &Vertex, v: &Vertex) -> Result<u32> {
        self.distance(u, v, self.dist_cap)
    }

    /// d(u, v) ≤ r.
    pub fn within(&self, u: &Vertex, v: &Vertex, r: u32) -> Result<bool> {
        match self.distance(u, v, r.min(self.dist_cap)) {
            Ok(_) => Ok(true),
            Err(Error::Exceeded { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Is x⁻¹t in H? Since t commutes with [a,b], this holds iff x₀⁻¹t₀
    /// is a power of [a,b].
    fn same_coset(&self, x: &Vertex, t: &Vertex) -> Result<bool> {
        let rel = x.g.base.inverse().mul(&t.g.base);
        Ok(commutator_exponent(&rel).is_some())
    }

    /// Lower bound for d(y, t), where y is a neighbour of a vertex whose
    /// horoball does (`same`) or does not contain t. Leaving a horoball
    /// costs its depth plus at least one Cayley edge.
    fn depth_bound(y: &Vertex, t: &Vertex, same: bool) -> u32 {
        if y.depth == 0 {
            t.depth
        } else if same {
            y.depth.abs_diff(t.depth)
        } else {
            y.depth + t.depth + 1
        }
    }

    /// Lower bound for d(u, v) before any search.
    fn lower_bound(&self, u: &Vertex, v: &Vertex) -> Result<u32> {
        if u == v {
            return Ok(0);
        }
        if u.depth == 0 && v.depth == 0 {
            return Ok(1);
        }
        let same = self.same_coset(u, v)?;
        Ok(if same {
            u.depth.abs_diff(v.depth).max(1)
        } else {
            u.depth + v.depth + 1
        })
    }

    /// Bidirectional BFS for paths of length ≤ `bound`, always growing the
    /// smaller frontier and dropping vertices whose depth bound rules them
    /// out. Every vertex of every path of length ≤ bound survives with its
    /// true distances, so the result is exact. Returns the distance and
    /// both balls once they meet.
    fn search(&self, u: &Vertex, v: &Vertex, bound: u32) -> Result<Option<(u32, Side, Side)>> {
        let mut a = Side::new(u.clone());
        let mut b = Side::new(v.clone());
        if u == v {
            return Ok(Some((0, a, b)));
        }
        while a.radius() + b.radius() < bound {
            let grow_a = a.frontier_len() <= b.frontier_len();
            let (side, other, target) = if grow_a { (&mut a, &b, v) } else { (&mut b, &a, u) };
            let r = side.radius() + 1;
            let mut next = Vec::new();
            let mut met = false;
            for x in side.layers.last().expect("nonempty") {
                let same = self.same_coset(x, target)?;
                self.for_each_neighbor(x, |y| {
                    if side.dist.contains_key(&y) {
                        return;
                    }
                    if r + Self::depth_bound(&y, target, same) > bound {
                        return;
                    }
                    if other.dist.contains_key(&y) {
                        met = true;
                    }
                    side.dist.insert(y.clone(), r);
                    next.push(y);
                })?;
            }
            if next.is_empty() {
                return Ok(None);
            }
            side.layers.push(next);
            if met {
                let d = a.radius() + b.radius();
                return Ok(Some((d, a, b)));
            }
        }
        Ok(None)
    }

    /// Iterative deepening over the bound; the first bound that admits a
    /// path is the distance.
    fn search_deepening(
        &self,
        u: &Vertex,
        v: &Vertex,
        from: u32,
        cap: u32,
    ) -> Result<Option<(u32, Side, Side)>> {
        let mut bound = from.max(self.lower_bound(u, v)?);
        while bound <= cap {
            if let Some(found) = self.search(u, v, bound)? {
                return Ok(Some(found));
            }
            bound += 1;
        }
        Ok(None)
    }

    /// Lex-least geodesic from (e, n_u) to `to`, as a vertex path.
    fn anchored_geodesic(&self, from_depth: u32, to: &Vertex, cap: u32) -> Result<Vec<Vertex>> {
        let u = Vertex::at_depth(from_depth);
        let d = self.distance(&u, to, cap)?;
        let (len, a, b) = self
            .search(&u, to, d)?
            .ok_or(Error::Exceeded { cap })?;
        let ra = a.radius();
        let rb = b.radius();
        let mut good: Vec<FxHashSet<Vertex>> = vec![FxHashSet::default(); ra as usize + 1];
        good[ra as usize] = a.layers[ra as usize]
            .iter()
            .filter(|w| b.dist.get(*w) == Some(&rb))
            .cloned()
            .collect();
        for i in (0..ra).rev() {
            let mut layer = FxHashSet::default();
            for x in &good[i as usize + 1] {
                self.for_each_neighbor(x, |y| {
                    if a.dist.get(&y) == Some(&i) {
                        layer.insert(y);
                    }
                })?;
            }
            good[i as usize] = layer;
        }
        let mut path = Vec::with_capacity(len as usize + 1);
        let mut cur = u;
        path.push(cur.clone());
        for i in 1..=len {
            let mut best: Option<Vertex> = None;
            self.for_each_neighbor(&cur, |y| {
                let ok = if i <= ra {
                    good[i as usize].contains(&y)
                } else {
                    b.dist.get(&y) == Some(&(len - i))
                };
                if ok && best.as_ref().is_none_or(|bst| y < *bst) {
                    best = Some(y);
                }
            })?;
            cur = best.expect("a geodesic continues through every good vertex");
            path.push(cur.clone());
        }
        Ok(path)
    }

    /// Deterministic geodesic from u to v: the lex-least vertex path for the
    /// primary direction of the pair, reversed for the other direction.
    pub fn canonical_geodesic(&self, u: &Vertex, v: &Vertex) -> Result<Vec<Vertex>> {
        if u == v {
            return Ok(vec![u.clone()]);
        }
        let (key, forward) = self.primary_key(u, v)?;
        let anchored = match self.geo_cache.get(&key).map(|p| p.clone()) {
            Some(p) => p,
            None => {
                let p = Arc::new(self.anchored_geodesic(key.from_depth, &key.to, self.dist_cap)?);
                self.dist_cache
                    .insert(key.clone(), DistEntry::Exact(p.len() as u32 - 1));
                self.geo_cache.insert(key, p.clone());
                p
            }
        };
        let base = if forward { &u.g } else { &v.g };
        let mut path = anchored
            .iter()
            .map(|w| self.translate(base, w))
            .collect::<Result<Vec<_>>>()?;
        if !forward {
            path.reverse();
        }
        Ok(path)
    }

    /// All vertices within distance r of the centre, sorted.
    pub fn ball(&self, center: &Vertex, r: u32) -> Result<Vec<Vertex>> {
        let mut seen: FxHashSet<Vertex> = FxHashSet::default();
        seen.insert(center.clone());
        let mut frontier = vec![center.clone()];
        for _ in 0..r {
            let mut next = Vec::new();
            for x in &frontier {
                self.for_each_neighbor(x, |y| {
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                })?;
            }
            frontier = next;
        }
        let mut out: Vec<Vertex> = seen.into_iter().collect();
        out.sort();
        Ok(out)
    }

    /// One step of the sampling walk: up, down or sideways, with the depth
    /// kept at most `max_depth`.
    pub fn random_step<R: Rng>(&self, v: &Vertex, max_depth: u32, rng: &mut R) -> Result<Vertex> {
        let (g0, k, n) = (&v.g.base, v.g.texp, v.depth);
        let choice = rng.random_range(0..if n == 0 { 9 } else { 3 });
        if n == 0 {
            return Ok(match choice {
                0..=3 => {
                    let l = [LA, LA_INV, LB, LB_INV][choice as usize];
                    Vertex::from_parts(g0.mul(&self.gamma.psi_letter(k, l)?), k, 0)
                }
                4 => Vertex::from_parts(g0.mul(&Word::commutator_pow(1)), k, 0),
                5 => Vertex::from_parts(g0.mul(&Word::commutator_pow(-1)), k, 0),
                6 => Vertex::from_parts(g0.clone(), k + 1, 0),
                7 => Vertex::from_parts(g0.clone(), k - 1, 0),
                _ if max_depth > 0 => Vertex::from_parts(g0.clone(), k, 1),
                _ => Vertex::from_parts(g0.clone(), k + 1, 0),
            });
        }
        Ok(match choice {
            0 if n < max_depth => Vertex::from_parts(g0.clone(), k, n + 1),
            0 | 1 => Vertex::from_parts(g0.clone(), k, n - 1),
            _ => {
                let r: i64 = 1 << n;
                loop {
                    let alpha = rng.random_range(-r..=r);
                    let beta = rng.random_range(-r..=r);
                    if (alpha, beta) != (0, 0) && alpha.abs() + beta.abs() <= r {
                        break Vertex::from_parts(
                            g0.mul(&Word::commutator_pow(alpha)),
                            k + beta,
                            n,
                        );
                    }
                }
            }
        })
    }

    pub fn random_walk<R: Rng>(
        &self,
        start: &Vertex,
        steps: u32,
        max_depth: u32,
        rng: &mut R,
    ) -> Result<Vertex> {
        let mut v = start.clone();
        for _ in 0..steps {
            v = self.random_step(&v, max_depth, rng)?;
        }
        Ok(v)
    }

    /// Empirical four-point hyperbolicity defect over quadruples of walk
    /// endpoints of length ≤ radius from (e, 0). Half-integral, so exact.
    pub fn estimate_delta(&self, sample_size: usize, radius: u32, seed: u64) -> Result<BigRational> {
        if 2 * radius > self.dist_cap {
            return Err(Error::Invalid(format!(
                "radius {radius} needs distance cap {}",
                2 * radius
            )));
        }
        let mut best = 0i64;
        for i in 0..sample_size {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut pts = Vec::with_capacity(4);
            for _ in 0..4 {
                let steps = rng.random_range(0..=radius);
                pts.push(self.random_walk(&Vertex::origin(), steps, 2, &mut rng)?);
            }
            let d = |i: usize, j: usize| self.dist(&pts[i], &pts[j]).map(|x| x as i64);
            let s = [
                d(0, 1)? + d(2, 3)?,
                d(0, 2)? + d(1, 3)?,
                d(0, 3)? + d(1, 2)?,
            ];
            best = best.max(four_point_defect(s));
        }
        let two = num_bigint::BigInt::from(2);
        if best == 0 {
            return Ok(BigRational::zero());
        }
        Ok(BigRational::new(best.into(), two))
    }
}

/// Twice the four-point defect: largest minus second-largest pair sum.
pub fn four_point_defect(mut s: [i64; 3]) -> i64 {
    s.sort_unstable();
    s[2] - s[1]
}

/// Is (e, n) adjacent to (rel, m)?
fn rel_adjacent(n: u32, rel: &GroupElem, m: u32) -> bool {
    if n.abs_diff(m) == 1 {
        return rel.is_identity();
    }
    if n != m {
        return false;
    }
    if n == 0 {
        let w = rel.base.letters();
        return match rel.texp {
            0 => w.len() == 1 || commutator_exponent(&rel.base).is_some_and(|a| a.abs() == 1),
            1 | -1 => w.is_empty(),
            _ => false,
        };
    }
    match commutator_exponent(&rel.base) {
        Some(alpha) => {
            let l1 = alpha.unsigned_abs() + rel.texp.unsigned_abs();
            l1 > 0 && l1 <= 1u64 << n
        }
        None => false,
    }
}

/// α if w = [a,b]^α.
pub fn commutator_exponent(w: &Word) -> Option<i64> {
    let n = w.len();
    if n % 4 != 0 {
        return None;
    }
    let alpha = (n / 4) as i64;
    if *w == Word::commutator_pow(alpha) {
        Some(alpha)
    } else if *w == Word::commutator_pow(-alpha) {
        Some(-alpha)
    } else {
        None
    }
}
