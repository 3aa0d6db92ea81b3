//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cuspform::chain::{permutations, q, qi, Q};
use cuspform::config::RunConfig;
use cuspform::cycles::cycle_report;
use cuspform::engine::Engine;
use cuspform::graph::Vertex;
use cuspform::lipfn::LipFn;
use cuspform::quasicocycle::{independence_rank, SampleSpec};
use cuspform::word::{GroupElem, Word};

const DEFECT_SEED: u64 = 7;
const FILL_SEED: u64 = 11;
/// max |δα_id| / lip over the 2000 default quadruples at DEFECT_SEED
const K_HAT: (i64, i64) = (7, 3);
/// max ‖φ‖₁ over 1000 default triples at FILL_SEED
const T2_HAT: i64 = 24;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---- oracles ----------------------------------------------------------------

/// Free reduction over the alphabet aAbB by a stack.
fn reduce_str(s: &str) -> String {
    let mut st: Vec<char> = Vec::new();
    for c in s.chars().filter(|&c| c != 'e') {
        let inv = if c.is_ascii_lowercase() {
            c.to_ascii_uppercase()
        } else {
            c.to_ascii_lowercase()
        };
        if st.last() == Some(&inv) {
            st.pop();
        } else {
            st.push(c);
        }
    }
    st.into_iter().collect()
}

fn invert_str(s: &str) -> String {
    s.chars()
        .rev()
        .map(|c| {
            if c.is_ascii_lowercase() {
                c.to_ascii_uppercase()
            } else {
                c.to_ascii_lowercase()
            }
        })
        .collect()
}

fn substitute(s: &str, a: &str, b: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            'a' => out.push_str(a),
            'A' => out.push_str(&invert_str(a)),
            'b' => out.push_str(b),
            'B' => out.push_str(&invert_str(b)),
            _ => {}
        }
    }
    reduce_str(&out)
}

type M2 = [[i128; 2]; 2];

fn mmul(x: &M2, y: &M2) -> M2 {
    let mut z = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    z
}

fn minv(x: &M2) -> M2 {
    [[x[1][1], -x[0][1]], [-x[1][0], x[0][0]]]
}

/// Boundary point as None = ∞ or Some(rational).
type Pt = Option<BigRational>;

fn act(m: &M2, p: &Pt) -> Pt {
    let b = |v: i128| BigRational::from_integer(BigInt::from(v));
    match p {
        None => {
            if m[1][0] == 0 {
                None
            } else {
                Some(b(m[0][0]) / b(m[1][0]))
            }
        }
        Some(x) => {
            let den = b(m[1][0]) * x + b(m[1][1]);
            if den.is_zero() {
                None
            } else {
                Some((b(m[0][0]) * x + b(m[0][1])) / den)
            }
        }
    }
}

fn oracle_point(w: &Word) -> Pt {
    let ra: M2 = [[1, 1], [1, 2]];
    let rb: M2 = [[1, -1], [-1, 2]];
    let gens = [ra, minv(&ra), rb, minv(&rb)];
    let mut p: Pt = None;
    for &l in w.letters().iter().rev() {
        p = act(&gens[l as usize], &p);
    }
    p
}

/// Cyclic orientation by the sign of (x₁−x₀)(x₂−x₁)(x₂−x₀), ∞ read as +∞.
fn oracle_orientation(p: [&Pt; 3]) -> i8 {
    if p[0] == p[1] || p[1] == p[2] || p[0] == p[2] {
        return 0;
    }
    let sgn = |a: &Pt, b: &Pt| -> i8 {
        match (a, b) {
            (None, _) => -1,
            (_, None) => 1,
            (Some(x), Some(y)) => {
                if x < y {
                    1
                } else {
                    -1
                }
            }
        }
    };
    sgn(p[0], p[1]) * sgn(p[1], p[2]) * sgn(p[0], p[2])
}

fn oracle_epsilon(g: [&Word; 3]) -> i8 {
    let pts = g.map(oracle_point);
    oracle_orientation([&pts[0], &pts[1], &pts[2]])
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let len = rng.random_range(0..=max_len);
    let mut ls: Vec<u8> = Vec::with_capacity(len);
    while ls.len() < len {
        let l = rng.random_range(0..4u8);
        if ls.last().is_some_and(|&x| x == l ^ 1) {
            continue;
        }
        ls.push(l);
    }
    Word::from_reduced(ls)
}

fn random_vertex(rng: &mut ChaCha8Rng, max_len: usize) -> Vertex {
    let w = random_word(rng, max_len);
    let k = rng.random_range(-3..=3);
    let n = rng.random_range(0..=3);
    Vertex::from_parts(w, k, n)
}

// ---- criteria -------------------------------------------------------------

fn c1() -> Outcome {
    let cfg = RunConfig::default();
    let checks = cfg.self_checks();
    check(checks.iter().all(|c| c.ok), || format!("{checks:?}"))?;
    cfg.build().map_err(err)?;
    let (pa, pb) = ("ba", "bab");
    let (ia, ib) = ("Baa", "Ab");
    check(substitute("ABab", pa, pb) == "ABab", || "oracle: psi([a,b]) != [a,b]".into())?;
    for g in ["a", "b"] {
        let back = substitute(&substitute(g, ia, ib), pa, pb);
        check(back == g, || format!("oracle: psi(psi^-1({g})) = {back}"))?;
    }
    let ra: M2 = [[1, 1], [1, 2]];
    let rb: M2 = [[1, -1], [-1, 2]];
    let comm = mmul(&mmul(&minv(&ra), &minv(&rb)), &mmul(&ra, &rb));
    let tr = comm[0][0] + comm[1][1];
    check(tr == -2, || format!("oracle trace {tr}"))?;
    Ok("psi fixes [a,b]; psi o psi^-1 = id; tr = -2".into())
}

fn c2() -> Outcome {
    let e = Engine::default();
    let rho = &e.rho;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut nonzero = 0;
    for i in 0..10_000 {
        let x: Vec<Vertex> = (0..4).map(|_| random_vertex(&mut rng, 32)).collect();
        let mut total = 0i32;
        for j in 0..4 {
            let f: Vec<&Vertex> = (0..4).filter(|&k| k != j).map(|k| &x[k]).collect();
            let s = rho.epsilon(f[0], f[1], f[2]) as i32;
            total += if j % 2 == 0 { s } else { -s };
            if s != 0 {
                nonzero += 1;
            }
        }
        check(total == 0, || format!("delta eps != 0 at sample {i}: {x:?}"))?;
    }
    let mut agree = 0;
    for i in 0..1000 {
        let x: Vec<Vertex> = (0..3).map(|_| random_vertex(&mut rng, 32)).collect();
        let g = GroupElem::from_word(random_word(&mut rng, 32));
        let gx = e.translate_all(&g, &x).map_err(err)?;
        let before = rho.epsilon(&x[0], &x[1], &x[2]);
        check(before == rho.epsilon(&gx[0], &gx[1], &gx[2]), || {
            format!("Gamma_0-invariance fails at sample {i}")
        })?;
        let oracle = oracle_epsilon([&x[0].g.base, &x[1].g.base, &x[2].g.base]);
        check(oracle == before, || format!("oracle disagrees at sample {i}"))?;
        agree += 1;
        check(rho.epsilon(&x[0], &x[1], &x[0]) == 0, || "eps with a repeated vertex".into())?;
    }
    let t = GroupElem::t_pow(1);
    for i in 0..1000 {
        let x: Vec<Vertex> = (0..3).map(|_| random_vertex(&mut rng, 64)).collect();
        let tx = e.translate_all(&t, &x).map_err(err)?;
        check(
            rho.epsilon(&x[0], &x[1], &x[2]) == rho.epsilon(&tx[0], &tx[1], &tx[2]),
            || format!("t-invariance fails at sample {i}"),
        )?;
    }
    Ok(format!(
        "10^4 cocycle tuples ({nonzero} nonzero faces), {agree} invariance/oracle samples, 10^3 t-samples"
    ))
}

fn c3() -> Outcome {
    let e = Engine::default();
    let w = |s: &str| Word::parse(s).unwrap();
    let z = e.rho.epsilon_words(&w("e"), &w("ba"), &w("ab"));
    let x = e.rho.epsilon_words(&w("e"), &w("ab"), &w("a"));
    let y = e.rho.epsilon_words(&w("e"), &w("b"), &w("ba"));
    check(z == 0, || format!("eps(e,ba,ab) = {z}"))?;
    check(x == y && x.abs() == 1, || format!("eps(e,ab,a) = {x}, eps(e,b,ba) = {y}"))?;
    let ox = oracle_epsilon([&w("e"), &w("ab"), &w("a")]);
    check(ox == x, || format!("oracle gives {ox}"))?;
    Ok(format!("eps(e,ba,ab) = 0, eps(e,ab,a) = eps(e,b,ba) = {x}"))
}

fn c4() -> Outcome {
    let e = Engine::default();
    for m in 1..=16u64 {
        let r = cycle_report(e.gamma(), m).map_err(err)?;
        let k = 64 - m.leading_zeros();
        let expected = qi(12) - q(4, 1 << k);
        check(r.all_ok(), || format!("m = {m}: {r:?}"))?;
        check(r.k_m == k, || format!("K_{m} = {}", r.k_m))?;
        check(r.norm_a == expected && r.norm_a <= qi(12), || {
            format!("||A_{m}|| = {}", r.norm_a)
        })?;
    }
    Ok("all boundary identities exact for m = 1..16; ||A_16|| = 191/16".into())
}

fn c5() -> Outcome {
    let e = Engine::default();
    let table = LipFn::parse_spec("table:{\"0\": 0, \"3\": 2, \"6\": -1, \"10\": 1}").map_err(err)?;
    let fs = [
        LipFn::linear(qi(1)),
        LipFn::linear(qi(-2)),
        LipFn::power_floor(1, 2).map_err(err)?,
        table,
    ];
    let mut sign: Option<Q> = None;
    let mut evaluated = 0;
    for f in &fs {
        for m in 1..=16u64 {
            let v = e.evaluate_on_am(f, m).map_err(err)?;
            let diff = qi(2) * (f.value(m as i64) - f.value(0));
            if diff.is_zero() {
                check(v.is_zero(), || format!("{f}, m = {m}: {v} for zero difference"))?;
                continue;
            }
            let s = &v / &diff;
            check(s.abs() == Q::one(), || format!("{f}, m = {m}: value {v} vs {diff}"))?;
            match &sign {
                None => sign = Some(s),
                Some(prev) => check(*prev == s, || format!("sign flips at {f}, m = {m}"))?,
            }
            evaluated += 1;
        }
    }
    let s = sign.ok_or("no nonzero evaluation")?;
    Ok(format!("{evaluated} evaluations, alpha_f(A_m) = {s}*2(f(m)-f(0))"))
}

fn c6(e: &Engine) -> Outcome {
    let spec = SampleSpec::default();
    let id = LipFn::identity();
    let base = e.defect_scan(&id, &spec, DEFECT_SEED).map_err(err)?;
    let khat = Q::new(K_HAT.0.into(), K_HAT.1.into());
    let r = base.ratio_to_lip.clone().ok_or("identity has no ratio")?;
    check(r == khat, || format!("K-hat {r} differs from the pin {khat}"))?;
    let again = e.defect_scan(&id, &spec, DEFECT_SEED).map_err(err)?;
    check(again.to_json().to_string() == base.to_json().to_string(), || "rerun differs".into())?;
    let triple = e.defect_scan(&id.scaled(qi(3)), &spec, DEFECT_SEED).map_err(err)?;
    check(triple.ratio_to_lip.as_ref() == Some(&r), || {
        format!("ratio(3f) = {:?}", triple.ratio_to_lip)
    })?;
    let shifted = e.defect_scan(&id.affine(qi(1), q(17, 5)), &spec, DEFECT_SEED).map_err(err)?;
    check(shifted.ratio_to_lip.as_ref() == Some(&r), || {
        format!("ratio(f + c) = {:?}", shifted.ratio_to_lip)
    })?;
    let c = e.defect_scan(&LipFn::constant(qi(5)), &spec, DEFECT_SEED).map_err(err)?;
    check(c.max_abs_delta.is_zero(), || format!("constant defect {}", c.max_abs_delta))?;
    Ok(format!(
        "K-hat = {r} over {} tuples, theta range {:?}, {} cached fills",
        spec.count,
        base.theta_range,
        e.fill_cache_len()
    ))
}

fn c7(e: &Engine) -> Outcome {
    let spec = SampleSpec {
        count: 1000,
        ..SampleSpec::default()
    };
    let bounded = [
        LipFn::periodic(vec![qi(0), qi(1), qi(-1), qi(2)]).map_err(err)?,
        LipFn::parse_spec("table:{\"-4\": 3, \"0\": 0, \"5\": -2}").map_err(err)?,
    ];
    let mut t2 = Q::zero();
    let mut maxes = vec![Q::zero(); bounded.len()];
    for i in 0..spec.count as u64 {
        let x = e.sample_triple(&spec, FILL_SEED, i).map_err(err)?;
        let phi = e.phi(&x).map_err(err)?;
        t2 = t2.max(phi.l1_norm());
        for (f, m) in bounded.iter().zip(maxes.iter_mut()) {
            *m = m.clone().max(e.f_on_chain(f, &phi).abs());
        }
    }
    check(t2 == qi(T2_HAT), || format!("T2-hat {t2} differs from the pin {T2_HAT}"))?;
    for (f, m) in bounded.iter().zip(&maxes) {
        let sup = f.sup_norm().ok_or("bounded f without sup norm")?;
        check(*m <= &t2 * &sup, || format!("{f}: max |alpha| {m} > {t2} * {sup}"))?;
    }
    let ms = [2u64, 4, 8, 16];
    let rows = e.nontriviality_certificate(&LipFn::identity(), &ms).map_err(err)?;
    for w in rows.windows(2) {
        check(w[0].ratio < w[1].ratio, || format!("ratio not increasing at m = {}", w[1].m))?;
    }
    for row in &rows {
        let k = 64 - row.m.leading_zeros();
        let expected = qi(2 * row.m as i64) / (qi(12) - q(4, 1 << k));
        check(row.ratio == expected, || format!("m = {}: ratio {}", row.m, row.ratio))?;
        check(row.ratio >= q(row.m as i64, 6), || format!("m = {}: below m/6", row.m))?;
    }
    let ratios: Vec<String> = rows.iter().map(|r| r.ratio.to_string()).collect();
    let maxes: Vec<String> = maxes.iter().map(|m| m.to_string()).collect();
    Ok(format!(
        "T2-hat = {t2}; bounded maxima [{}]; id ratios [{}]",
        maxes.join(", "),
        ratios.join(", ")
    ))
}

fn c8(e: &Engine) -> Outcome {
    let khat = Q::new(K_HAT.0.into(), K_HAT.1.into());
    let radii = [1u32, 2, 3];
    let f = LipFn::power_floor(1, 2).map_err(err)?;
    let rows = e.bah_certificate(&f, &radii, &khat).map_err(err)?;
    for row in &rows {
        let v = e.vanishing_certificate(&f, row.n, row.radius).map_err(err)?;
        check(v.vanishes, || format!("f_{} does not vanish on S_{}", row.n, row.radius))?;
    }
    for w in rows.windows(2) {
        check(w[1].bound < w[0].bound, || {
            format!("bound not decreasing: {} then {}", w[0].bound, w[1].bound)
        })?;
    }
    let id_rows = e.bah_certificate(&LipFn::identity(), &radii, &khat).map_err(err)?;
    check(id_rows.iter().all(|r| r.bound == id_rows[0].bound), || {
        "identity bound column is not constant".into()
    })?;
    let cells: Vec<String> = rows.iter().map(|r| format!("(i={}, n={}, {})", r.radius, r.n, r.bound)).collect();
    Ok(format!("powfloor(1,2): {}; id: {}", cells.join(" "), id_rows[0].bound))
}

fn c9() -> Outcome {
    let fs = [
        LipFn::power_floor(1, 2).map_err(err)?,
        LipFn::power_floor(2, 3).map_err(err)?,
        LipFn::power_floor(3, 4).map_err(err)?,
    ];
    let r = independence_rank(&fs, &[4, 9, 16]).map_err(err)?;
    check(r == 3, || format!("rank {r}"))?;
    Ok("rank 3".into())
}

fn c10(e: &Engine) -> Outcome {
    let spec = SampleSpec {
        count: 1000,
        ..SampleSpec::default()
    };
    for i in 0..spec.count as u64 {
        let x = e.sample_triple(&spec, FILL_SEED, i).map_err(err)?;
        check(e.check_fill_boundary(&x).map_err(err)?, || format!("boundary fails at {i}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..200u64 {
        let x = e.sample_triple(&spec, FILL_SEED, i).map_err(err)?;
        let phi = e.phi(&x).map_err(err)?;
        let g = GroupElem::new(random_word(&mut rng, 6), rng.random_range(-3..=3));
        let gx: [Vertex; 3] = e.translate_all(&g, &x).map_err(err)?.try_into().unwrap();
        let lhs = e.phi(&gx).map_err(err)?;
        check(lhs == phi.translate(e.gamma(), &g).map_err(err)?, || {
            format!("equivariance fails at {i}")
        })?;
        for (p, s) in permutations(3) {
            let y = [x[p[0]].clone(), x[p[1]].clone(), x[p[2]].clone()];
            let lhs = e.phi(&y).map_err(err)?;
            check(lhs == phi.scale(&qi(s as i64)), || format!("alternation fails at {i}"))?;
        }
    }
    // at kappa 3 cone-split recurses, so the comparison is not vacuous
    let small = Engine::with_kappa(3);
    let lp_spec = SampleSpec {
        count: 200,
        radius: 3,
        max_depth: 1,
    };
    let (mut strict, mut compared) = (0, 0);
    for (eng, sp, label) in [(e, &spec, "kappa 8"), (&small, &lp_spec, "kappa 3")] {
        for i in 0..200u64 {
            let x = eng.sample_triple(sp, FILL_SEED, i).map_err(err)?;
            let (cone, lp) = eng.compare_lp_cone(&x).map_err(err)?;
            let z = eng.triangle_cycle(&x).map_err(err)?;
            check(lp.chain.boundary() == z, || format!("{label}: LP boundary wrong at {i}"))?;
            check(lp.chain.l1_norm() == lp.norm, || format!("{label}: LP norm misreported at {i}"))?;
            check(lp.norm <= cone, || format!("{label}: LP {} > cone {cone} at {i}", lp.norm))?;
            if lp.norm < cone {
                strict += 1;
            }
            compared += 1;
        }
    }
    Ok(format!(
        "10^3 boundary checks, 200 equivariance/alternation samples, {compared} LP comparisons ({strict} strictly smaller)"
    ))
}

fn main() {
    let shared = Engine::default();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "startup self-checks", Duration::from_secs(1), Box::new(c1)),
        (2, "epsilon is an invariant alternating cocycle", Duration::from_secs(300), Box::new(c2)),
        (3, "epsilon on the fundamental triangles", Duration::from_secs(1), Box::new(c3)),
        (4, "cycle identities for m = 1..16", Duration::from_secs(60), Box::new(c4)),
        (5, "evaluation on A_m", Duration::from_secs(600), Box::new(c5)),
        (6, "defect suite", Duration::from_secs(1800), Box::new(|| c6(&shared))),
        (7, "boundedness dichotomy", Duration::from_secs(600), Box::new(|| c7(&shared))),
        (8, "vanishing-seminorm certificate", Duration::from_secs(1800), Box::new(|| c8(&shared))),
        (9, "independence rank", Duration::from_secs(1), Box::new(c9)),
        (10, "fill-engine contracts", Duration::from_secs(1800), Box::new(|| c10(&shared))),
    ];
    let mut failed = 0;
    for (n, name, limit, f) in &criteria {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let dt = t.elapsed();
        let out = match out {
            Ok(msg) if dt > *limit => Err(format!("{msg}; took {dt:.1?}, limit {limit:?}")),
            o => o,
        };
        match out {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg} [{dt:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {msg} [{dt:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
