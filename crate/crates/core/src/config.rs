//! Run configuration: a plain `key = value` file, overridable key by key.

use std::fmt::Write as _;
use std::path::Path;

use crate::engine::{Engine, FillSettings, FillerKind};
use crate::error::{Error, Result};
use crate::graph::{CuspedGraph, DEFAULT_DEPTH_CAP, DEFAULT_DIST_CAP};
use crate::hyperbolization::{Hyperbolization, MoebiusMatrix};
use crate::word::{Automorphism, Gamma, Word, DEFAULT_PSI_POWER_CAP};

pub const KEYS: [&str; 17] = [
    "kappa",
    "bfs_cap",
    "depth_cap",
    "psi_power_cap",
    "fill_recursion_cap",
    "lp_window_radius",
    "lp_simplex_cap",
    "lp_exact_limit",
    "filler",
    "validate_rips",
    "rng_seed",
    "psi_a",
    "psi_b",
    "psi_inv_a",
    "psi_inv_b",
    "rho_a",
    "rho_b",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub kappa: u32,
    pub bfs_cap: u32,
    pub depth_cap: u32,
    pub psi_power_cap: u32,
    pub fill_recursion_cap: u32,
    pub lp_window_radius: u32,
    pub lp_simplex_cap: usize,
    pub lp_exact_limit: usize,
    pub filler: FillerKind,
    pub validate_rips: bool,
    pub rng_seed: u64,
    /// ψ(a), ψ(b), ψ⁻¹(a), ψ⁻¹(b)
    pub psi: [String; 4],
    /// row-major entries of ρ(a) and ρ(b)
    pub rho_a: [i64; 4],
    pub rho_b: [i64; 4],
}

impl Default for RunConfig {
    fn default() -> Self {
        let fill = FillSettings::default();
        RunConfig {
            kappa: fill.kappa,
            bfs_cap: DEFAULT_DIST_CAP,
            depth_cap: DEFAULT_DEPTH_CAP,
            psi_power_cap: DEFAULT_PSI_POWER_CAP,
            fill_recursion_cap: fill.recursion_cap,
            lp_window_radius: fill.lp_window_radius,
            lp_simplex_cap: fill.lp_simplex_cap,
            lp_exact_limit: fill.lp_exact_limit,
            filler: fill.filler,
            validate_rips: fill.validate_rips,
            rng_seed: 7,
            psi: ["ba".into(), "bab".into(), "Baa".into(), "Ab".into()],
            rho_a: [1, 1, 1, 2],
            rho_b: [1, -1, -1, 2],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Invalid(format!("{key}: cannot parse {v:?}")))
}

fn matrix(key: &str, v: &str) -> Result<[i64; 4]> {
    let xs: Vec<i64> = v
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect::<Result<_>>()?;
    xs.try_into()
        .map_err(|_| Error::Invalid(format!("{key}: expected four integers")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let body = line.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                let Some((k, v)) = body.split_once('=') else {
                    return Err(Error::Parse {
                        pos: offset,
                        msg: format!("expected `key = value`, got {body:?}"),
                    });
                };
                cfg.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                    pos: offset,
                    msg: e.to_string(),
                })?;
            }
            offset += line.len();
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "kappa" => self.kappa = num(key, v)?,
            "bfs_cap" => self.bfs_cap = num(key, v)?,
            "depth_cap" => self.depth_cap = num(key, v)?,
            "psi_power_cap" => self.psi_power_cap = num(key, v)?,
            "fill_recursion_cap" => self.fill_recursion_cap = num(key, v)?,
            "lp_window_radius" => self.lp_window_radius = num(key, v)?,
            "lp_simplex_cap" => self.lp_simplex_cap = num(key, v)?,
            "lp_exact_limit" => self.lp_exact_limit = num(key, v)?,
            "filler" => self.filler = v.parse()?,
            "validate_rips" => self.validate_rips = num(key, v)?,
            "rng_seed" => self.rng_seed = num(key, v)?,
            "psi_a" => self.psi[0] = v.to_string(),
            "psi_b" => self.psi[1] = v.to_string(),
            "psi_inv_a" => self.psi[2] = v.to_string(),
            "psi_inv_b" => self.psi[3] = v.to_string(),
            "rho_a" => self.rho_a = matrix(key, v)?,
            "rho_b" => self.rho_b = matrix(key, v)?,
            _ => return Err(Error::Invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// `key=value` override as given on the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn to_text(&self) -> String {
        let m = |x: &[i64; 4]| format!("{} {} {} {}", x[0], x[1], x[2], x[3]);
        let filler = match self.filler {
            FillerKind::Cone => "cone",
            FillerKind::Lp => "lp",
        };
        let mut s = String::new();
        let rows: [(&str, String); 17] = [
            ("kappa", self.kappa.to_string()),
            ("bfs_cap", self.bfs_cap.to_string()),
            ("depth_cap", self.depth_cap.to_string()),
            ("psi_power_cap", self.psi_power_cap.to_string()),
            ("fill_recursion_cap", self.fill_recursion_cap.to_string()),
            ("lp_window_radius", self.lp_window_radius.to_string()),
            ("lp_simplex_cap", self.lp_simplex_cap.to_string()),
            ("lp_exact_limit", self.lp_exact_limit.to_string()),
            ("filler", filler.to_string()),
            ("validate_rips", self.validate_rips.to_string()),
            ("rng_seed", self.rng_seed.to_string()),
            ("psi_a", self.psi[0].clone()),
            ("psi_b", self.psi[1].clone()),
            ("psi_inv_a", self.psi[2].clone()),
            ("psi_inv_b", self.psi[3].clone()),
            ("rho_a", m(&self.rho_a)),
            ("rho_b", m(&self.rho_b)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    fn validate_caps(&self) -> Result<()> {
        let caps = [
            ("kappa", self.kappa as usize),
            ("bfs_cap", self.bfs_cap as usize),
            ("depth_cap", self.depth_cap as usize),
            ("psi_power_cap", self.psi_power_cap as usize),
            ("fill_recursion_cap", self.fill_recursion_cap as usize),
            ("lp_simplex_cap", self.lp_simplex_cap),
            ("lp_exact_limit", self.lp_exact_limit),
        ];
        for (k, v) in caps {
            if v == 0 {
                return Err(Error::Invalid(format!("{k} must be positive")));
            }
        }
        Ok(())
    }

    fn psi_words(&self) -> Result<[Word; 4]> {
        let ws: Vec<Word> = self.psi.iter().map(|s| Word::parse(s)).collect::<Result<_>>()?;
        Ok(ws.try_into().expect("four words"))
    }

    fn rho_matrices(&self) -> Result<(MoebiusMatrix, MoebiusMatrix)> {
        let [p, q, r, s] = self.rho_a;
        let a = MoebiusMatrix::new(p, q, r, s)?;
        let [p, q, r, s] = self.rho_b;
        Ok((a, MoebiusMatrix::new(p, q, r, s)?))
    }

    /// The three startup checks, each reported separately.
    pub fn self_checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        match self.psi_words() {
            Ok([a, b, ai, bi]) => {
                let psi = Automorphism::new(a.clone(), b.clone(), ai.clone(), bi.clone());
                let c = Word::commutator();
                let raw = Automorphism::new_unchecked(a, b, ai, bi);
                let fixes = raw.apply_once(&c, true) == c;
                out.push(Check {
                    name: "psi_fixes_commutator",
                    ok: fixes,
                    detail: format!("psi([a,b]) = {}", raw.apply_once(&c, true)),
                });
                let inverse_ok = [Word::gen_a(), Word::gen_b()].iter().all(|g| {
                    raw.apply_once(&raw.apply_once(g, false), true) == *g
                        && raw.apply_once(&raw.apply_once(g, true), false) == *g
                });
                out.push(Check {
                    name: "psi_inverse",
                    ok: inverse_ok && psi.is_ok(),
                    detail: "psi(psi^-1(x)) = x on a, b".into(),
                });
            }
            Err(e) => {
                for name in ["psi_fixes_commutator", "psi_inverse"] {
                    out.push(Check {
                        name,
                        ok: false,
                        detail: e.to_string(),
                    });
                }
            }
        }
        let rho = self.rho_matrices().and_then(|(a, b)| Hyperbolization::new(a, b));
        out.push(Check {
            name: "rho_commutator_trace",
            ok: rho.is_ok(),
            detail: match rho {
                Ok(_) => "tr rho([a,b]) = -2".into(),
                Err(e) => e.to_string(),
            },
        });
        out
    }

    /// Validates the caps, runs the startup checks and builds the engine.
    pub fn build(&self) -> Result<Engine> {
        self.validate_caps()?;
        let [a, b, ai, bi] = self.psi_words()?;
        let psi = Automorphism::new(a, b, ai, bi)?;
        let (ra, rb) = self.rho_matrices()?;
        let rho = Hyperbolization::new(ra, rb)?;
        let gamma = Gamma::new(psi, self.psi_power_cap);
        let graph = CuspedGraph::new(gamma, self.depth_cap, self.bfs_cap);
        let fill = FillSettings {
            kappa: self.kappa,
            recursion_cap: self.fill_recursion_cap,
            lp_window_radius: self.lp_window_radius,
            lp_simplex_cap: self.lp_simplex_cap,
            lp_exact_limit: self.lp_exact_limit,
            filler: self.filler,
            validate_rips: self.validate_rips,
        };
        Ok(Engine::new(graph, rho, fill))
    }
}
