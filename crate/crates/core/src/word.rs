//! Exact arithmetic in the free group F(a, b), the automorphism ψ fixing the
//! commutator, and the semidirect product Γ = F(a, b) ⋊_ψ Z.
//!
//! Letters are encoded as bytes `0 = a`, `1 = A = a⁻¹`, `2 = b`, `3 = B = b⁻¹`,
//! so inversion is `x ^ 1`. Elements of Γ are kept in the normal form `g₀ t^k`
//! with `g₀` freely reduced; multiplication follows `t g t⁻¹ = ψ(g)`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use dashmap::DashMap;

use crate::error::{Error, Result};

pub const LA: u8 = 0;
pub const LA_INV: u8 = 1;
pub const LB: u8 = 2;
pub const LB_INV: u8 = 3;

#[inline]
pub fn inv_letter(l: u8) -> u8 {
    l ^ 1
}

pub fn letter_char(l: u8) -> char {
    match l {
        LA => 'a',
        LA_INV => 'A',
        LB => 'b',
        _ => 'B',
    }
}

/// A freely reduced word over {a, A, b, B}.
///
/// Ordering is shortlex: length first, then lexicographic with `a < A < b < B`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = u8>>(letters: I) -> Self {
        let mut out: Vec<u8> = Vec::new();
        for l in letters {
            debug_assert!(l < 4);
            if out.last() == Some(&inv_letter(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Wraps letters that are already reduced. Checked in debug builds.
    pub fn from_reduced(letters: Vec<u8>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != inv_letter(w[1])));
        Word(letters)
    }

    pub fn gen_a() -> Self {
        Word(vec![LA])
    }

    pub fn gen_b() -> Self {
        Word(vec![LB])
    }

    /// The commutator [a, b] = a⁻¹b⁻¹ab.
    pub fn commutator() -> Self {
        Word(vec![LA_INV, LB_INV, LA, LB])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|&l| inv_letter(l)).collect())
    }

    /// Product of two reduced words: cancel the overlap, then concatenate.
    pub fn mul(&self, other: &Word) -> Word {
        let (u, v) = (&self.0, &other.0);
        let mut k = 0;
        while k < u.len() && k < v.len() && u[u.len() - 1 - k] == inv_letter(v[k]) {
            k += 1;
        }
        let mut out = Vec::with_capacity(u.len() + v.len() - 2 * k);
        out.extend_from_slice(&u[..u.len() - k]);
        out.extend_from_slice(&v[k..]);
        Word(out)
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Word::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    /// `[a,b]^n`; the commutator is cyclically reduced so no cancellation occurs.
    pub fn commutator_pow(n: i64) -> Word {
        let unit = if n >= 0 {
            [LA_INV, LB_INV, LA, LB]
        } else {
            [LB_INV, LA_INV, LB, LA]
        };
        let mut v = Vec::with_capacity(4 * n.unsigned_abs() as usize);
        for _ in 0..n.unsigned_abs() {
            v.extend_from_slice(&unit);
        }
        Word(v)
    }

    pub fn parse(s: &str) -> Result<Word> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Word::identity());
        }
        let mut letters = Vec::with_capacity(s.len());
        for (pos, ch) in s.chars().enumerate() {
            letters.push(match ch {
                'a' => LA,
                'A' => LA_INV,
                'b' => LB,
                'B' => LB_INV,
                _ => {
                    return Err(Error::Parse {
                        pos,
                        msg: format!("unexpected character {ch:?} in word"),
                    })
                }
            });
        }
        Ok(Word::reduce(letters))
    }

    /// Exponent sums (a, b) in the abelianization Z².
    pub fn abelianize(&self) -> (i64, i64) {
        let mut v = (0, 0);
        for &l in &self.0 {
            match l {
                LA => v.0 += 1,
                LA_INV => v.0 -= 1,
                LB => v.1 += 1,
                _ => v.1 -= 1,
            }
        }
        v
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        let s: String = self.0.iter().map(|&l| letter_char(l)).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() > 64 {
            write!(f, "Word(<{} letters>)", self.len())
        } else {
            write!(f, "Word({self})")
        }
    }
}

/// An automorphism of F(a, b) given by the images of a and b, together with
/// the images of a and b under its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    forward: [Word; 2],
    backward: [Word; 2],
}

impl Automorphism {
    /// ψ(a) = ba, ψ(b) = bab; ψ⁻¹(a) = b⁻¹a², ψ⁻¹(b) = a⁻¹b.
    pub fn default_psi() -> Self {
        Automorphism {
            forward: [Word(vec![LB, LA]), Word(vec![LB, LA, LB])],
            backward: [Word(vec![LB_INV, LA, LA]), Word(vec![LA_INV, LB])],
        }
    }

    /// Builds a configured automorphism and runs the startup checks: it must
    /// fix [a, b] and the two halves must be mutually inverse on generators.
    pub fn new(a: Word, b: Word, a_inv: Word, b_inv: Word) -> Result<Self> {
        let psi = Automorphism {
            forward: [a, b],
            backward: [a_inv, b_inv],
        };
        psi.self_check()?;
        Ok(psi)
    }

    /// Same as `new` without the checks, for reporting on a bad config.
    pub fn new_unchecked(a: Word, b: Word, a_inv: Word, b_inv: Word) -> Self {
        Automorphism {
            forward: [a, b],
            backward: [a_inv, b_inv],
        }
    }

    pub fn self_check(&self) -> Result<()> {
        let c = Word::commutator();
        if self.apply_once(&c, true) != c {
            return Err(Error::SelfCheck("psi([a,b]) != [a,b]".into()));
        }
        for g in [Word::gen_a(), Word::gen_b()] {
            let there = self.apply_once(&self.apply_once(&g, false), true);
            let back = self.apply_once(&self.apply_once(&g, true), false);
            if there != g || back != g {
                return Err(Error::SelfCheck(format!(
                    "psi and psi^-1 are not inverse on {g}"
                )));
            }
        }
        Ok(())
    }

    fn letter_image(&self, l: u8, forward: bool) -> Word {
        let imgs = if forward { &self.forward } else { &self.backward };
        let w = &imgs[(l >> 1) as usize];
        if l & 1 == 0 {
            w.clone()
        } else {
            w.inverse()
        }
    }

    /// One application of ψ (forward) or ψ⁻¹ (backward), with reduction.
    pub fn apply_once(&self, w: &Word, forward: bool) -> Word {
        let imgs: [Word; 4] = [
            self.letter_image(LA, forward),
            self.letter_image(LA_INV, forward),
            self.letter_image(LB, forward),
            self.letter_image(LB_INV, forward),
        ];
        Word::reduce(
            w.0.iter()
                .flat_map(|&l| imgs[l as usize].0.iter().copied()),
        )
    }

    /// Integer matrix of the induced map on Z² (columns are images of a, b).
    pub fn abelianization(&self) -> [[i64; 2]; 2] {
        let (aa, ab) = self.forward[0].abelianize();
        let (ba, bb) = self.forward[1].abelianize();
        [[aa, ba], [ab, bb]]
    }

    pub fn images(&self) -> (&Word, &Word) {
        (&self.forward[0], &self.forward[1])
    }

    pub fn inverse_images(&self) -> (&Word, &Word) {
        (&self.backward[0], &self.backward[1])
    }
}

/// An element g₀ t^k of Γ, with g₀ ∈ F(a, b) freely reduced.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GroupElem {
    pub base: Word,
    pub texp: i64,
}

impl GroupElem {
    pub fn new(base: Word, texp: i64) -> Self {
        GroupElem { base, texp }
    }

    pub fn identity() -> Self {
        GroupElem::default()
    }

    pub fn from_word(base: Word) -> Self {
        GroupElem { base, texp: 0 }
    }

    pub fn t_pow(k: i64) -> Self {
        GroupElem {
            base: Word::identity(),
            texp: k,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.texp == 0 && self.base.is_empty()
    }

    /// Parses `<word>@<k>`; a bare word means k = 0.
    pub fn parse(s: &str) -> Result<GroupElem> {
        let s = s.trim();
        match s.split_once('@') {
            Some((w, k)) => {
                let texp = k.trim().parse::<i64>().map_err(|e| Error::Parse {
                    pos: w.len() + 1,
                    msg: format!("bad t-exponent {k:?}: {e}"),
                })?;
                Ok(GroupElem::new(Word::parse(w)?, texp))
            }
            None => Ok(GroupElem::from_word(Word::parse(s)?)),
        }
    }
}

impl fmt::Display for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.base, self.texp)
    }
}

impl fmt::Debug for GroupElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@{}", self.base, self.texp)
    }
}

/// theta(g₀ t^k) = k.
pub fn theta(g: &GroupElem) -> i64 {
    g.texp
}

/// p(g₀ t^k) = g₀.
pub fn proj_p(g: &GroupElem) -> &Word {
    &g.base
}

/// Coordinates of h = [a,b]^alpha t^beta in the peripheral subgroup H ≅ Z².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HCoord {
    pub alpha: i64,
    pub beta: i64,
}

impl HCoord {
    pub fn new(alpha: i64, beta: i64) -> Self {
        HCoord { alpha, beta }
    }

    pub fn to_elem(self) -> GroupElem {
        GroupElem::new(Word::commutator_pow(self.alpha), self.beta)
    }
}

/// Word metric on H with generators [a,b] and t.
pub fn h_distance(u: HCoord, v: HCoord) -> u64 {
    u.alpha.abs_diff(v.alpha) + u.beta.abs_diff(v.beta)
}

/// Default cap on |k| for ψ^k. Word length grows like 2.618^k, so k = 18
/// already means words of ~4·10⁷ letters.
pub const DEFAULT_PSI_POWER_CAP: u32 = 18;

/// Γ = F(a, b) ⋊_ψ Z with a configured ψ and a cache of ψ^k on letters.
#[derive(Debug)]
pub struct Gamma {
    psi: Automorphism,
    power_cap: u32,
    letter_powers: DashMap<i64, Arc<[Word; 4]>>,
}

impl Clone for Gamma {
    fn clone(&self) -> Self {
        Gamma::new(self.psi.clone(), self.power_cap)
    }
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::new(Automorphism::default_psi(), DEFAULT_PSI_POWER_CAP)
    }
}

/// Words at most this long are pushed through ψ^k letter by letter via the
/// cached letter images; longer words use stepwise application.
const TABLE_WORD_LIMIT: usize = 64;

impl Gamma {
    pub fn new(psi: Automorphism, power_cap: u32) -> Self {
        Gamma {
            psi,
            power_cap,
            letter_powers: DashMap::new(),
        }
    }

    pub fn psi(&self) -> &Automorphism {
        &self.psi
    }

    pub fn power_cap(&self) -> u32 {
        self.power_cap
    }

    fn check_power(&self, power: i64) -> Result<()> {
        if power.unsigned_abs() > self.power_cap as u64 {
            Err(Error::PsiPowerCap {
                power,
                cap: self.power_cap,
            })
        } else {
            Ok(())
        }
    }

    /// ψ^power(w), computed by |power|-fold application with reduction after
    /// every step.
    pub fn apply_psi(&self, w: &Word, power: i64) -> Result<Word> {
        self.check_power(power)?;
        let mut cur = w.clone();
        for _ in 0..power.unsigned_abs() {
            cur = self.psi.apply_once(&cur, power > 0);
        }
        Ok(cur)
    }

    fn letter_table(&self, power: i64) -> Result<Arc<[Word; 4]>> {
        if let Some(t) = self.letter_powers.get(&power) {
            return Ok(t.clone());
        }
        let a = self.apply_psi(&Word::gen_a(), power)?;
        let b = self.apply_psi(&Word::gen_b(), power)?;
        let t = Arc::new([a.clone(), a.inverse(), b.clone(), b.inverse()]);
        self.letter_powers.insert(power, t.clone());
        Ok(t)
    }

    /// ψ^power(w), choosing the letter-image table for short words.
    pub fn psi_pow(&self, w: &Word, power: i64) -> Result<Word> {
        if power == 0 || w.is_empty() {
            return Ok(w.clone());
        }
        if w.len() > TABLE_WORD_LIMIT {
            return self.apply_psi(w, power);
        }
        self.check_power(power)?;
        let table = self.letter_table(power)?;
        Ok(Word::reduce(
            w.letters()
                .iter()
                .flat_map(|&l| table[l as usize].letters().iter().copied()),
        ))
    }

    /// ψ^power of a single letter, shared from the cache.
    pub fn psi_letter(&self, power: i64, letter: u8) -> Result<Word> {
        Ok(self.letter_table(power)?[letter as usize].clone())
    }

    /// (g₀t^k)(h₀t^l) = (g₀ ψ^k(h₀)) t^{k+l}.
    pub fn mul(&self, g: &GroupElem, h: &GroupElem) -> Result<GroupElem> {
        let moved = self.psi_pow(&h.base, g.texp)?;
        Ok(GroupElem::new(g.base.mul(&moved), g.texp + h.texp))
    }

    /// (g₀t^k)⁻¹ = ψ^{-k}(g₀⁻¹) t^{-k}.
    pub fn inverse(&self, g: &GroupElem) -> Result<GroupElem> {
        Ok(GroupElem::new(
            self.apply_psi(&g.base.inverse(), -g.texp)?,
            -g.texp,
        ))
    }

    /// g⁻¹h, computed as ψ^{-k}(g₀⁻¹h₀) t^{l-k} so that long words that
    /// cancel are reduced before ψ is applied.
    pub fn left_div(&self, g: &GroupElem, h: &GroupElem) -> Result<GroupElem> {
        let rel = g.base.inverse().mul(&h.base);
        let base = if rel.len() > TABLE_WORD_LIMIT {
            self.apply_psi(&rel, -g.texp)?
        } else {
            self.psi_pow(&rel, -g.texp)?
        };
        Ok(GroupElem::new(base, h.texp - g.texp))
    }

    /// Canonical representative of the left coset g H, as an element of F(a,b):
    /// the shortest word among g₀[a,b]^α for |α| ≤ |g₀| + 1, ties broken
    /// lexicographically.
    pub fn coset_rep(&self, g: &GroupElem) -> Word {
        coset_rep_word(&g.base)
    }
}

/// Canonical representative of g₀⟨[a,b]⟩ in F(a, b).
pub fn coset_rep_word(g0: &Word) -> Word {
    let window = g0.len() as i64 + 1;
    let mut best: Option<Word> = None;
    for alpha in -window..=window {
        let cand = g0.mul(&Word::commutator_pow(alpha));
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.expect("window is nonempty")
}
