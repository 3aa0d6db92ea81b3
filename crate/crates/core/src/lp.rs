//! ℓ¹-minimal fillings by linear programming.
//!
//! minimize Σ|b_σ| subject to ∂b = z, over the Rips simplices of a finite
//! window, with b = p − n and p, n ≥ 0. A floating-point simplex finds an
//! optimal basis; the solution is then rebuilt exactly on its support, ∂b = z
//! is re-verified in rationals, and optimality is certified with rationalized
//! duals. If certification fails on a small window the exact rational simplex
//! is run instead.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::chain::{sort_with_sign, Q, SimplicialChain};
use crate::error::{Error, Result};
use crate::graph::{CuspedGraph, Vertex};

trait Field: Clone + std::fmt::Debug {
    fn f_zero() -> Self;
    fn f_one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn pos(&self) -> bool;
    fn neg_(&self) -> bool;
    fn nonzero(&self) -> bool {
        self.pos() || self.neg_()
    }
    fn lt(&self, o: &Self) -> bool;
}

const EPS: f64 = 1e-9;

impl Field for f64 {
    fn f_zero() -> Self {
        0.0
    }
    fn f_one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn pos(&self) -> bool {
        *self > EPS
    }
    fn neg_(&self) -> bool {
        *self < -EPS
    }
    fn lt(&self, o: &Self) -> bool {
        *self < o - EPS
    }
}

impl Field for BigRational {
    fn f_zero() -> Self {
        Zero::zero()
    }
    fn f_one() -> Self {
        One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn pos(&self) -> bool {
        self.is_positive()
    }
    fn neg_(&self) -> bool {
        self.is_negative()
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
}

/// Equality-form LP: rows·x = rhs (rhs ≥ 0), x ≥ 0, minimize cost·x.
/// Columns are sparse lists of (row, value).
struct Problem<F> {
    rows: usize,
    cols: Vec<Vec<(usize, F)>>,
    rhs: Vec<F>,
    cost: Vec<F>,
}

struct Solution<F> {
    x: Vec<F>,
    /// y with yᵀA ≤ c at optimum, in the original row signs
    duals: Vec<F>,
}

/// Dense two-phase tableau simplex. Dantzig pricing, switching to Bland's
/// rule after a run of degenerate pivots.
fn simplex<F: Field>(p: &Problem<F>, max_pivots: usize) -> Result<Solution<F>> {
    let m = p.rows;
    let n = p.cols.len();
    let width = n + m + 1;
    let mut t: Vec<Vec<F>> = vec![vec![F::f_zero(); width]; m];
    for (j, col) in p.cols.iter().enumerate() {
        for (i, v) in col {
            t[*i][j] = t[*i][j].add(v);
        }
    }
    for i in 0..m {
        t[i][n + i] = F::f_one();
        t[i][width - 1] = p.rhs[i].clone();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut phase_cost = vec![F::f_zero(); n + m];
    for c in phase_cost.iter_mut().skip(n) {
        *c = F::f_one();
    }
    run_phase(&mut t, &mut basis, &phase_cost, n + m, max_pivots)?;
    let infeas = objective(&t, &basis, &phase_cost);
    if infeas.pos() {
        return Err(Error::Infeasible);
    }
    // drive zero-level artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].nonzero()) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut cost2 = p.cost.clone();
    cost2.extend(std::iter::repeat_n(F::f_zero(), m));
    run_phase(&mut t, &mut basis, &cost2, n, max_pivots)?;

    let mut x = vec![F::f_zero(); n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1].clone();
        }
    }
    // reduced cost of artificial column i is 0 − yᵢ
    let duals = (0..m)
        .map(|i| F::f_zero().sub(&reduced_cost(&t, &basis, &cost2, n + i)))
        .collect();
    Ok(Solution { x, duals })
}

fn objective<F: Field>(t: &[Vec<F>], basis: &[usize], cost: &[F]) -> F {
    let w = t[0].len() - 1;
    let mut s = F::f_zero();
    for (i, &b) in basis.iter().enumerate() {
        s = s.add(&cost[b].mul(&t[i][w]));
    }
    s
}

fn reduced_cost<F: Field>(t: &[Vec<F>], basis: &[usize], cost: &[F], j: usize) -> F {
    let mut r = cost[j].clone();
    for (i, &b) in basis.iter().enumerate() {
        if t[i][j].nonzero() {
            r = r.sub(&cost[b].mul(&t[i][j]));
        }
    }
    r
}

fn pivot<F: Field>(t: &mut [Vec<F>], basis: &mut [usize], r: usize, c: usize) {
    let piv = t[r][c].clone();
    let w = t[r].len();
    for k in 0..w {
        if t[r][k].nonzero() {
            t[r][k] = t[r][k].div(&piv);
        }
    }
    let prow = t[r].clone();
    let nz: Vec<usize> = (0..w).filter(|&k| prow[k].nonzero()).collect();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || !row[c].nonzero() {
            continue;
        }
        let f = row[c].clone();
        for &k in &nz {
            row[k] = row[k].sub(&f.mul(&prow[k]));
        }
    }
    basis[r] = c;
}

/// Columns ≥ `enter_limit` may not enter the basis.
fn run_phase<F: Field>(
    t: &mut [Vec<F>],
    basis: &mut [usize],
    cost: &[F],
    enter_limit: usize,
    max_pivots: usize,
) -> Result<()> {
    let m = t.len();
    let w = t[0].len() - 1;
    let mut degenerate_run = 0usize;
    for _ in 0..max_pivots {
        // reduced costs via the dual row
        let mut y_row = vec![F::f_zero(); w];
        for i in 0..m {
            let cb = &cost[basis[i]];
            if cb.nonzero() {
                for (k, v) in t[i].iter().enumerate().take(w) {
                    if v.nonzero() {
                        y_row[k] = y_row[k].add(&cb.mul(v));
                    }
                }
            }
        }
        let bland = degenerate_run > 50;
        let mut enter: Option<(usize, F)> = None;
        for j in 0..enter_limit {
            if basis.contains(&j) {
                continue;
            }
            let rc = cost[j].sub(&y_row[j]);
            if rc.neg_() {
                if bland {
                    enter = Some((j, rc));
                    break;
                }
                if enter.as_ref().is_none_or(|(_, best)| rc.lt(best)) {
                    enter = Some((j, rc));
                }
            }
        }
        let Some((c, _)) = enter else {
            return Ok(());
        };
        let mut leave: Option<(usize, F)> = None;
        for i in 0..m {
            if t[i][c].pos() {
                let ratio = t[i][w].div(&t[i][c]);
                let better = match &leave {
                    None => true,
                    Some((li, best)) => {
                        ratio.lt(best) || (!best.lt(&ratio) && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::Invalid("unbounded LP (cannot happen for ℓ¹ costs)".into()));
        };
        degenerate_run = if ratio.pos() { 0 } else { degenerate_run + 1 };
        pivot(t, basis, r, c);
    }
    Err(Error::Invalid(format!("simplex did not converge in {max_pivots} pivots")))
}

/// Continued-fraction rationalization with bounded denominator.
fn rationalize(x: f64, max_den: i64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a as f64;
        if frac.abs() < 1e-12 || ((p1 as f64 / q1 as f64) - x).abs() < 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    Some(Q::new(BigInt::from(p1), BigInt::from(q1)))
}

/// Solves A_S x = z exactly for the columns in S (assumed independent).
fn solve_on_support(rows: usize, cols: &[Vec<(usize, i64)>], rhs: &[Q]) -> Option<Vec<Q>> {
    let k = cols.len();
    let mut a: Vec<Vec<Q>> = vec![vec![Q::zero(); k + 1]; rows];
    for (j, col) in cols.iter().enumerate() {
        for &(i, v) in col {
            a[i][j] += Q::from_integer(BigInt::from(v));
        }
    }
    for i in 0..rows {
        a[i][k] = rhs[i].clone();
    }
    let mut piv_row = vec![usize::MAX; k];
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            return None;
        };
        a.swap(r, p);
        let pv = a[r][c].clone();
        for x in a[r].iter_mut() {
            *x = &*x / &pv;
        }
        let prow = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, pvx) in row.iter_mut().zip(&prow) {
                    if !pvx.is_zero() {
                        *x -= &f * pvx;
                    }
                }
            }
        }
        piv_row[c] = r;
        r += 1;
    }
    if a[r..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    Some((0..k).map(|c| a[piv_row[c]][k].clone()).collect())
}

#[derive(Clone, Debug)]
pub struct LpFill {
    pub chain: SimplicialChain,
    pub norm: Q,
    /// an exact dual certificate proves optimality within the window
    pub certified_optimal: bool,
    pub exact_simplex: bool,
    pub window_simplices: usize,
}

/// All (d+1)-simplices of the Rips complex on the window.
pub fn window_simplices(
    graph: &CuspedGraph,
    window: &BTreeSet<Vertex>,
    kappa: u32,
    dim: usize,
    cap: usize,
) -> Result<Vec<Vec<Vertex>>> {
    let vs: Vec<Vertex> = window.iter().cloned().collect();
    let n = vs.len();
    let mut close = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = graph.within(&vs[i], &vs[j], kappa)?;
            close[i][j] = c;
            close[j][i] = c;
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(
        start: usize,
        need: usize,
        stack: &mut Vec<usize>,
        close: &[Vec<bool>],
        vs: &[Vertex],
        out: &mut Vec<Vec<Vertex>>,
        cap: usize,
    ) -> Result<()> {
        if stack.len() == need {
            if out.len() >= cap {
                return Err(Error::WindowTooLarge {
                    count: out.len() + 1,
                    cap,
                });
            }
            out.push(stack.iter().map(|&i| vs[i].clone()).collect());
            return Ok(());
        }
        for i in start..vs.len() {
            if stack.iter().all(|&s| close[s][i]) {
                stack.push(i);
                rec(i + 1, need, stack, close, vs, out, cap)?;
                stack.pop();
            }
        }
        Ok(())
    }
    rec(0, dim + 2, &mut stack, &close, &vs, &mut out, cap)?;
    Ok(out)
}

/// ℓ¹-minimal b with ∂b = z over the given candidate simplices.
pub fn fill_cycle_over(
    z: &SimplicialChain,
    simplices: &[Vec<Vertex>],
    exact_limit: usize,
) -> Result<LpFill> {
    let dim = z.dim() + 1;
    if z.is_zero() {
        return Ok(LpFill {
            chain: SimplicialChain::zero(dim),
            norm: Q::zero(),
            certified_optimal: true,
            exact_simplex: false,
            window_simplices: simplices.len(),
        });
    }
    // rows: faces of candidates, plus the support of z
    let mut row_of: BTreeMap<Vec<Vertex>, usize> = BTreeMap::new();
    for (k, _) in z.iter() {
        let l = row_of.len();
        row_of.entry(k.clone()).or_insert(l);
    }
    let mut cols: Vec<Vec<(usize, i64)>> = Vec::with_capacity(simplices.len());
    for s in simplices {
        let mut col = Vec::with_capacity(s.len());
        for j in 0..s.len() {
            let mut face = s.clone();
            face.remove(j);
            let Some(sign) = sort_with_sign(&mut face) else {
                continue;
            };
            let l = row_of.len();
            let r = *row_of.entry(face).or_insert(l);
            col.push((r, if j % 2 == 0 { sign as i64 } else { -(sign as i64) }));
        }
        cols.push(col);
    }
    let rows = row_of.len();
    let mut rhs = vec![Q::zero(); rows];
    for (k, c) in z.iter() {
        rhs[row_of[k]] = c.clone();
    }
    let flip: Vec<bool> = rhs.iter().map(|r| r.is_negative()).collect();

    let signed = |i: usize, v: i64| if flip[i] { -v } else { v };
    let mut fcols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(2 * cols.len());
    for col in &cols {
        fcols.push(col.iter().map(|&(i, v)| (i, signed(i, v) as f64)).collect());
        fcols.push(col.iter().map(|&(i, v)| (i, -signed(i, v) as f64)).collect());
    }
    let frhs: Vec<f64> = rhs
        .iter()
        .map(|r| r.abs().to_f64().unwrap_or(f64::NAN))
        .collect();
    let fp = Problem {
        rows,
        cols: fcols,
        rhs: frhs,
        cost: vec![1.0; 2 * cols.len()],
    };
    let max_pivots = 50 * (rows + 2 * cols.len()) + 1000;
    let sol = simplex(&fp, max_pivots);

    let verified = match &sol {
        Ok(sol) => exact_from_float(z, simplices, &cols, &rhs, &flip, sol),
        Err(_) => None,
    };
    match verified {
        Some(fill) if fill.certified_optimal => Ok(fill),
        _ if simplices.len() <= exact_limit => exact_solve(z, simplices, &cols, &rhs, &flip),
        Some(fill) => Ok(fill),
        None => match sol {
            Err(e) => Err(e),
            Ok(_) => Err(Error::Invalid(
                "floating-point LP solution failed exact re-verification".into(),
            )),
        },
    }
}

fn exact_from_float(
    z: &SimplicialChain,
    simplices: &[Vec<Vertex>],
    cols: &[Vec<(usize, i64)>],
    rhs: &[Q],
    flip: &[bool],
    sol: &Solution<f64>,
) -> Option<LpFill> {
    let rows = rhs.len();
    let support: Vec<usize> = (0..sol.x.len()).filter(|&j| sol.x[j] > 1e-9).collect();
    let scols: Vec<Vec<(usize, i64)>> = support
        .iter()
        .map(|&j| {
            let s = if j % 2 == 0 { 1 } else { -1 };
            cols[j / 2].iter().map(|&(i, v)| (i, s * v)).collect()
        })
        .collect();
    let vals = solve_on_support(rows, &scols, rhs)?;
    if vals.iter().any(|v| v.is_negative()) {
        return None;
    }
    let mut chain = SimplicialChain::zero(z.dim() + 1);
    for (&j, v) in support.iter().zip(&vals) {
        let s = if j % 2 == 0 { v.clone() } else { -v.clone() };
        chain.add_simplex(&simplices[j / 2], s);
    }
    if chain.boundary() != *z {
        return None;
    }
    let norm = chain.l1_norm();
    // dual certificate: |yᵀA_σ| ≤ 1 for every σ and yᵀz = ‖b‖₁
    let y: Option<Vec<Q>> = sol
        .duals
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let q = rationalize(d, 1 << 16)?;
            Some(if flip[i] { -q } else { q })
        })
        .collect();
    let certified = y.is_some_and(|y| {
        let yz: Q = (0..rows).map(|i| &y[i] * &rhs[i]).sum();
        yz == norm
            && cols.iter().all(|col| {
                let s: Q = col
                    .iter()
                    .map(|&(i, v)| &y[i] * Q::from_integer(BigInt::from(v)))
                    .sum();
                s.abs() <= Q::one()
            })
    });
    Some(LpFill {
        chain,
        norm,
        certified_optimal: certified,
        exact_simplex: false,
        window_simplices: simplices.len(),
    })
}

fn exact_solve(
    z: &SimplicialChain,
    simplices: &[Vec<Vertex>],
    cols: &[Vec<(usize, i64)>],
    rhs: &[Q],
    flip: &[bool],
) -> Result<LpFill> {
    let signed = |i: usize, v: i64| if flip[i] { -v } else { v };
    let mut qcols: Vec<Vec<(usize, Q)>> = Vec::with_capacity(2 * cols.len());
    for col in cols {
        qcols.push(col.iter().map(|&(i, v)| (i, Q::from_integer(signed(i, v).into()))).collect());
        qcols.push(col.iter().map(|&(i, v)| (i, Q::from_integer((-signed(i, v)).into()))).collect());
    }
    let p = Problem {
        rows: rhs.len(),
        cols: qcols,
        rhs: rhs.iter().map(|r| r.abs()).collect(),
        cost: vec![Q::one(); 2 * cols.len()],
    };
    let max_pivots = 200 * (rhs.len() + 2 * cols.len()) + 1000;
    let sol = simplex(&p, max_pivots)?;
    let mut chain = SimplicialChain::zero(z.dim() + 1);
    for (j, v) in sol.x.iter().enumerate() {
        if !v.is_zero() {
            let s = if j % 2 == 0 { v.clone() } else { -v.clone() };
            chain.add_simplex(&simplices[j / 2], s);
        }
    }
    if chain.boundary() != *z {
        return Err(Error::Invalid("exact LP solution failed ∂b = z".into()));
    }
    let norm = chain.l1_norm();
    Ok(LpFill {
        chain,
        norm,
        certified_optimal: true,
        exact_simplex: true,
        window_simplices: simplices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::qi;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn rationalize_small_fractions() {
        assert_eq!(rationalize(0.5, 100), Some(crate::chain::q(1, 2)));
        assert_eq!(rationalize(-2.0 / 3.0, 100), Some(crate::chain::q(-2, 3)));
        assert_eq!(rationalize(0.0, 100), Some(Q::zero()));
    }

    #[test]
    fn single_simplex_boundary_is_filled_by_itself() {
        let s = vec![v("e@0:0"), v("a@0:0"), v("ab@0:0")];
        let z = SimplicialChain::simplex(&s, qi(1)).boundary();
        let fill = fill_cycle_over(&z, &[s.clone()], 2000).unwrap();
        assert_eq!(fill.norm, qi(1));
        assert_eq!(fill.chain.boundary(), z);
    }

    #[test]
    fn square_needs_two_triangles() {
        let (p0, p1, p2, p3) = (v("e@0:0"), v("a@0:0"), v("ab@0:0"), v("b@0:0"));
        let mut z = SimplicialChain::zero(1);
        z.add_simplex(&[p0.clone(), p1.clone()], qi(1));
        z.add_simplex(&[p1.clone(), p2.clone()], qi(1));
        z.add_simplex(&[p2.clone(), p3.clone()], qi(1));
        z.add_simplex(&[p3.clone(), p0.clone()], qi(1));
        let cands = vec![
            vec![p0.clone(), p1.clone(), p2.clone()],
            vec![p0.clone(), p2.clone(), p3.clone()],
            vec![p0.clone(), p1.clone(), p3.clone()],
            vec![p1.clone(), p2.clone(), p3.clone()],
        ];
        let fill = fill_cycle_over(&z, &cands, 2000).unwrap();
        assert_eq!(fill.norm, qi(2));
        assert_eq!(fill.chain.boundary(), z);
        assert!(fill.certified_optimal);
    }

    #[test]
    fn exact_simplex_agrees_with_float_path() {
        let (p0, p1, p2, p3) = (v("e@0:0"), v("a@0:0"), v("ab@0:0"), v("b@0:0"));
        let s1 = vec![p0.clone(), p1.clone(), p2.clone()];
        let z = SimplicialChain::simplex(&s1, qi(2)).boundary();
        let cands = vec![
            s1.clone(),
            vec![p0.clone(), p2.clone(), p3.clone()],
            vec![p1.clone(), p2.clone(), p3.clone()],
            vec![p0.clone(), p1.clone(), p3.clone()],
        ];
        let float = fill_cycle_over(&z, &cands, 0).unwrap();
        let mut rows = BTreeMap::new();
        let mut cols = Vec::new();
        for (k, _) in z.iter() {
            let l = rows.len();
            rows.insert(k.clone(), l);
        }
        for s in &cands {
            let mut col = Vec::new();
            for j in 0..3 {
                let mut face = s.clone();
                face.remove(j);
                let l = rows.len();
                let r = *rows.entry(face).or_insert(l);
                col.push((r, if j % 2 == 0 { 1 } else { -1 }));
            }
            cols.push(col);
        }
        let mut rhs = vec![Q::zero(); rows.len()];
        for (k, c) in z.iter() {
            rhs[rows[k]] = c.clone();
        }
        let flip: Vec<bool> = rhs.iter().map(|r| r.is_negative()).collect();
        let exact = exact_solve(&z, &cands, &cols, &rhs, &flip).unwrap();
        assert_eq!(exact.norm, qi(2));
        assert_eq!(float.norm, exact.norm);
        assert!(exact.exact_simplex);
    }

    #[test]
    fn infeasible_window() {
        let s = vec![v("e@0:0"), v("a@0:0"), v("ab@0:0")];
        let z = SimplicialChain::simplex(&s, qi(1)).boundary();
        let other = vec![v("e@0:0"), v("b@0:0"), v("ab@0:0")];
        assert!(matches!(
            fill_cycle_over(&z, &[other], 2000),
            Err(Error::Infeasible)
        ));
    }
}
