//! Rational-valued Lipschitz functions on Z and their truncations f_n.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::{parse_q, qi, Q};
use crate::error::{Error, Result};

pub const DEFAULT_FRAC_BITS: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LipFn {
    Linear { slope: Q },
    /// x ↦ sign(x)·⌊|x|^{num/den}·2^bits⌋ / 2^bits
    PowerFloor { num: u32, den: u32, frac_bits: u32 },
    /// Piecewise linear through the given points, constant beyond the ends.
    Table { values: BTreeMap<i64, Q> },
    BoundedPeriodic { values: Vec<Q> },
    Truncated { n: u64, inner: Box<LipFn> },
    Affine { scale: Q, shift: Q, inner: Box<LipFn> },
}

impl LipFn {
    pub fn linear(slope: Q) -> Self {
        LipFn::Linear { slope }
    }

    pub fn identity() -> Self {
        LipFn::linear(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        LipFn::Affine {
            scale: Q::zero(),
            shift: c,
            inner: Box::new(LipFn::identity()),
        }
    }

    pub fn power_floor(num: u32, den: u32) -> Result<Self> {
        LipFn::power_floor_bits(num, den, DEFAULT_FRAC_BITS)
    }

    pub fn power_floor_bits(num: u32, den: u32, frac_bits: u32) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::Invalid(format!(
                "power_floor exponent {num}/{den} must lie in [0, 1]"
            )));
        }
        if frac_bits > 256 {
            return Err(Error::Invalid("frac_bits above 256".into()));
        }
        Ok(LipFn::PowerFloor { num, den, frac_bits })
    }

    pub fn table(values: BTreeMap<i64, Q>) -> Self {
        LipFn::Table { values }
    }

    pub fn periodic(values: Vec<Q>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("periodic function needs at least one value".into()));
        }
        Ok(LipFn::BoundedPeriodic { values })
    }

    /// λf + c.
    pub fn affine(&self, scale: Q, shift: Q) -> Self {
        LipFn::Affine {
            scale,
            shift,
            inner: Box::new(self.clone()),
        }
    }

    pub fn scaled(&self, s: Q) -> Self {
        self.affine(s, Q::zero())
    }

    pub fn value(&self, x: i64) -> Q {
        match self {
            LipFn::Linear { slope } => slope * qi(x),
            LipFn::PowerFloor { num, den, frac_bits } => {
                if x == 0 {
                    return Q::zero();
                }
                let n = BigInt::from(x.unsigned_abs()).pow(*num) << (*frac_bits as usize * *den as usize);
                let r = n.nth_root(*den);
                let v = Q::new(r, BigInt::one() << *frac_bits as usize);
                if x < 0 { -v } else { v }
            }
            LipFn::Table { values } => table_value(values, x),
            LipFn::BoundedPeriodic { values } => {
                values[x.rem_euclid(values.len() as i64) as usize].clone()
            }
            LipFn::Truncated { n, inner } => {
                let n = *n as i64;
                if x >= n {
                    inner.value(x) - inner.value(n)
                } else if x <= -n {
                    inner.value(x) - inner.value(-n)
                } else {
                    Q::zero()
                }
            }
            LipFn::Affine { scale, shift, inner } => {
                if scale.is_zero() {
                    shift.clone()
                } else {
                    scale * inner.value(x) + shift
                }
            }
        }
    }

    /// An upper bound for lip(f) over all of Z.
    pub fn declared_lip(&self) -> Q {
        match self {
            LipFn::Linear { slope } => slope.abs(),
            LipFn::PowerFloor { .. } => Q::one(),
            LipFn::Table { values } => {
                let pts: Vec<(&i64, &Q)> = values.iter().collect();
                pts.windows(2)
                    .map(|w| ((w[1].1 - w[0].1) / qi(w[1].0 - w[0].0)).abs())
                    .max()
                    .unwrap_or_else(Q::zero)
            }
            LipFn::BoundedPeriodic { values } => {
                let n = values.len();
                (0..n)
                    .map(|i| (&values[(i + 1) % n] - &values[i]).abs())
                    .max()
                    .unwrap_or_else(Q::zero)
            }
            LipFn::Truncated { inner, .. } => inner.declared_lip(),
            LipFn::Affine { scale, inner, .. } => {
                if scale.is_zero() {
                    Q::zero()
                } else {
                    scale.abs() * inner.declared_lip()
                }
            }
        }
    }

    /// max |f(x+1) − f(x)| for lo ≤ x < hi.
    pub fn lip_on_window(&self, lo: i64, hi: i64) -> Q {
        let mut best = Q::zero();
        let mut prev = self.value(lo);
        for x in lo..hi {
            let next = self.value(x + 1);
            let d = (&next - &prev).abs();
            if d > best {
                best = d;
            }
            prev = next;
        }
        best
    }

    /// Checks the declared bound on consecutive points of [lo, hi].
    pub fn check_window(&self, lo: i64, hi: i64) -> Result<()> {
        let lip = self.declared_lip();
        let mut prev = self.value(lo);
        for x in lo..hi {
            let next = self.value(x + 1);
            if (&next - &prev).abs() > lip {
                return Err(Error::LipViolation {
                    x,
                    y: x + 1,
                    lip: lip.to_string(),
                });
            }
            prev = next;
        }
        Ok(())
    }

    /// f_n: zero on [−n, n], f − f(±n) beyond.
    pub fn truncate(&self, n: u64) -> LipFn {
        LipFn::Truncated {
            n,
            inner: Box::new(self.clone()),
        }
    }

    /// (inf, sup) of f over Z when f is bounded.
    pub fn bounds(&self) -> Option<(Q, Q)> {
        let minmax = |vals: &mut dyn Iterator<Item = Q>| {
            let mut lo: Option<Q> = None;
            let mut hi: Option<Q> = None;
            for v in vals {
                if lo.as_ref().is_none_or(|l| v < *l) {
                    lo = Some(v.clone());
                }
                if hi.as_ref().is_none_or(|h| v > *h) {
                    hi = Some(v);
                }
            }
            Some((lo.unwrap_or_else(Q::zero), hi.unwrap_or_else(Q::zero)))
        };
        match self {
            LipFn::Linear { slope } if slope.is_zero() => Some((Q::zero(), Q::zero())),
            LipFn::PowerFloor { num: 0, .. } => Some((-Q::one(), Q::one())),
            LipFn::Table { values } => minmax(&mut values.values().cloned()),
            LipFn::BoundedPeriodic { values } => minmax(&mut values.iter().cloned()),
            LipFn::Truncated { n, inner } => {
                let (lo, hi) = inner.bounds()?;
                let n = *n as i64;
                let offsets = [inner.value(n), inner.value(-n)];
                let lo2 = offsets.iter().map(|o| &lo - o).min().expect("two");
                let hi2 = offsets.iter().map(|o| &hi - o).max().expect("two");
                Some((lo2.min(Q::zero()), hi2.max(Q::zero())))
            }
            LipFn::Affine { scale, shift, inner } => {
                if scale.is_zero() {
                    return Some((shift.clone(), shift.clone()));
                }
                let (lo, hi) = inner.bounds()?;
                let (a, b) = (scale * lo + shift, scale * hi + shift);
                Some(if a <= b { (a, b) } else { (b, a) })
            }
            _ => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.bounds().is_some()
    }

    /// ‖f‖∞ for bounded f.
    pub fn sup_norm(&self) -> Option<Q> {
        self.bounds().map(|(lo, hi)| lo.abs().max(hi.abs()))
    }

    /// sup f − inf f for bounded f.
    pub fn oscillation(&self) -> Option<Q> {
        self.bounds().map(|(lo, hi)| hi - lo)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(Repr::from(self)).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<LipFn> {
        let r: Repr = serde_json::from_value(v.clone())?;
        r.try_into()
    }

    /// Parses `linear:<slope>`, `powfloor:<num>/<den>[@bits]`,
    /// `const:<c>`, `table:<path or inline JSON map>`,
    /// `periodic:<path or inline JSON list>`, or a JSON object.
    pub fn parse_spec(s: &str) -> Result<LipFn> {
        let s = s.trim();
        if s.starts_with('{') && s.contains("\"kind\"") {
            return LipFn::from_json(&serde_json::from_str(s)?);
        }
        let (kind, arg) = s.split_once(':').ok_or(Error::Parse {
            pos: 0,
            msg: format!("expected <kind>:<arg>, got {s:?}"),
        })?;
        let off = kind.len() + 1;
        let at = |e: Error| match e {
            Error::Parse { pos, msg } => Error::Parse { pos: pos + off, msg },
            other => other,
        };
        match kind {
            "linear" => Ok(LipFn::linear(parse_q(arg).map_err(at)?)),
            "const" => Ok(LipFn::constant(parse_q(arg).map_err(at)?)),
            "powfloor" => {
                let (exp, bits) = match arg.split_once('@') {
                    Some((e, b)) => (e, b.parse::<u32>().map_err(|e| Error::Parse {
                        pos: off + arg.find('@').unwrap_or(0) + 1,
                        msg: e.to_string(),
                    })?),
                    None => (arg, DEFAULT_FRAC_BITS),
                };
                let (n, d) = exp.split_once('/').ok_or(Error::Parse {
                    pos: off,
                    msg: "expected <num>/<den>".into(),
                })?;
                let num = n.parse::<u32>().map_err(|e| Error::Parse { pos: off, msg: e.to_string() })?;
                let den = d.parse::<u32>().map_err(|e| Error::Parse {
                    pos: off + n.len() + 1,
                    msg: e.to_string(),
                })?;
                LipFn::power_floor_bits(num, den, bits)
            }
            "table" => {
                let text = inline_or_file(arg, '{')?;
                let raw: BTreeMap<i64, RatRepr> = serde_json::from_str(&text)?;
                let mut values = BTreeMap::new();
                for (k, v) in raw {
                    values.insert(k, v.to_q()?);
                }
                Ok(LipFn::table(values))
            }
            "periodic" => {
                let text = inline_or_file(arg, '[')?;
                let raw: Vec<RatRepr> = serde_json::from_str(&text)?;
                LipFn::periodic(raw.iter().map(RatRepr::to_q).collect::<Result<_>>()?)
            }
            other => Err(Error::Parse {
                pos: 0,
                msg: format!("unknown function kind {other:?}"),
            }),
        }
    }
}

fn inline_or_file(arg: &str, open: char) -> Result<String> {
    if arg.trim_start().starts_with(open) {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(Error::from)
    }
}

fn table_value(values: &BTreeMap<i64, Q>, x: i64) -> Q {
    if let Some(v) = values.get(&x) {
        return v.clone();
    }
    let below = values.range(..x).next_back();
    let above = values.range(x..).next();
    match (below, above) {
        (None, None) => Q::zero(),
        (Some((_, v)), None) | (None, Some((_, v))) => v.clone(),
        (Some((x0, v0)), Some((x1, v1))) => v0 + (v1 - v0) * qi(x - x0) / qi(x1 - x0),
    }
}

impl fmt::Display for LipFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LipFn::Linear { slope } => write!(f, "linear:{slope}"),
            LipFn::PowerFloor { num, den, frac_bits } => {
                write!(f, "powfloor:{num}/{den}")?;
                if *frac_bits != DEFAULT_FRAC_BITS {
                    write!(f, "@{frac_bits}")?;
                }
                Ok(())
            }
            LipFn::Table { values } => write!(f, "table[{} points]", values.len()),
            LipFn::BoundedPeriodic { values } => write!(f, "periodic[{}]", values.len()),
            LipFn::Truncated { n, inner } => write!(f, "({inner})_{n}"),
            LipFn::Affine { scale, shift, inner } => {
                if scale.is_zero() {
                    write!(f, "const:{shift}")
                } else {
                    write!(f, "{scale}*({inner})+{shift}")
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RatRepr {
    Int(i64),
    Str(String),
}

impl RatRepr {
    fn to_q(&self) -> Result<Q> {
        match self {
            RatRepr::Int(n) => Ok(qi(*n)),
            RatRepr::Str(s) => parse_q(s),
        }
    }
}

impl From<&Q> for RatRepr {
    fn from(q: &Q) -> Self {
        RatRepr::Str(q.to_string())
    }
}

fn default_bits() -> u32 {
    DEFAULT_FRAC_BITS
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Repr {
    Linear {
        slope: RatRepr,
    },
    PowerFloor {
        num: u32,
        den: u32,
        #[serde(default = "default_bits")]
        frac_bits: u32,
    },
    Table {
        values: BTreeMap<i64, RatRepr>,
    },
    BoundedPeriodic {
        values: Vec<RatRepr>,
    },
    Truncated {
        n: u64,
        inner: Box<Repr>,
    },
    Affine {
        scale: RatRepr,
        shift: RatRepr,
        inner: Box<Repr>,
    },
}

impl From<&LipFn> for Repr {
    fn from(f: &LipFn) -> Self {
        match f {
            LipFn::Linear { slope } => Repr::Linear { slope: slope.into() },
            LipFn::PowerFloor { num, den, frac_bits } => Repr::PowerFloor {
                num: *num,
                den: *den,
                frac_bits: *frac_bits,
            },
            LipFn::Table { values } => Repr::Table {
                values: values.iter().map(|(k, v)| (*k, v.into())).collect(),
            },
            LipFn::BoundedPeriodic { values } => Repr::BoundedPeriodic {
                values: values.iter().map(RatRepr::from).collect(),
            },
            LipFn::Truncated { n, inner } => Repr::Truncated {
                n: *n,
                inner: Box::new(Repr::from(inner.as_ref())),
            },
            LipFn::Affine { scale, shift, inner } => Repr::Affine {
                scale: scale.into(),
                shift: shift.into(),
                inner: Box::new(Repr::from(inner.as_ref())),
            },
        }
    }
}

impl TryFrom<Repr> for LipFn {
    type Error = Error;

    fn try_from(r: Repr) -> Result<LipFn> {
        Ok(match r {
            Repr::Linear { slope } => LipFn::linear(slope.to_q()?),
            Repr::PowerFloor { num, den, frac_bits } => LipFn::power_floor_bits(num, den, frac_bits)?,
            Repr::Table { values } => LipFn::table(
                values
                    .into_iter()
                    .map(|(k, v)| Ok((k, v.to_q()?)))
                    .collect::<Result<_>>()?,
            ),
            Repr::BoundedPeriodic { values } => {
                LipFn::periodic(values.iter().map(RatRepr::to_q).collect::<Result<_>>()?)?
            }
            Repr::Truncated { n, inner } => LipFn::try_from(*inner)?.truncate(n),
            Repr::Affine { scale, shift, inner } => {
                LipFn::try_from(*inner)?.affine(scale.to_q()?, shift.to_q()?)
            }
        })
    }
}
