//! The `cuspform` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_traits::Signed;
use serde_json::json;

use crate::chain::{parse_q, Q};
use crate::config::RunConfig;
use crate::cycles::cycle_report;
use crate::engine::Engine;
use crate::error::Result;
use crate::graph::Vertex;
use crate::lipfn::LipFn;
use crate::quasicocycle::{independence_rank, SampleSpec};
use crate::report::{Report, Table};

#[derive(Debug, Parser)]
#[command(name = "cuspform", version, about = "Volume-form quasi-cocycles on a cusped graph")]
pub struct Cli {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// override one config key, `key=value`; repeatable
    #[arg(long = "set", global = true)]
    pub overrides: Vec<String>,
    /// Rips parameter for fills
    #[arg(long, global = true)]
    pub kappa: Option<u32>,
    /// RNG seed (overrides rng_seed)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// cone or lp
    #[arg(long, global = true)]
    pub filler: Option<String>,
    /// also write the tabular part of the report here
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distances, balls and thin-triangle estimates in the cusped graph.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// The orientation cocycle.
    #[command(subcommand)]
    Eps(EpsCmd),
    /// The quasi-cocycles α_f.
    #[command(subcommand)]
    Alpha(AlphaCmd),
    /// The chains c, d_m, e_m, A_m with their boundary identities.
    Cycles {
        #[arg(long)]
        m: u64,
        /// include the chains themselves
        #[arg(long)]
        chains: bool,
    },
    /// Startup self-checks only.
    Selfcheck,
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    Dist {
        u: String,
        v: String,
        #[arg(long)]
        cap: Option<u32>,
    },
    Ball {
        center: String,
        #[arg(long)]
        r: u32,
    },
    Delta {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        radius: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum EpsCmd {
    /// ε on a triple of vertices
    Eval { x0: String, x1: String, x2: String },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub radius: u32,
    #[arg(long, default_value_t = 2)]
    pub depth: u32,
}

impl SampleArgs {
    fn spec(&self) -> SampleSpec {
        SampleSpec {
            count: self.n,
            radius: self.radius,
            max_depth: self.depth,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum AlphaCmd {
    /// α_f on a triple
    Eval {
        #[arg(long)]
        f: String,
        x0: String,
        x1: String,
        x2: String,
    },
    /// max |δα_f| over sampled quadruples
    Defect {
        #[arg(long)]
        f: String,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// α_f(A_m) against 2(f(m) − f(0))
    Am {
        #[arg(long)]
        f: String,
        /// one or more m, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
    },
    /// vanishing-seminorm and nontriviality certificates
    Certify {
        #[arg(long)]
        f: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        radii: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        ms: Vec<u64>,
        /// defect constant; estimated from a defect scan of f = id if absent
        #[arg(long)]
        khat: Option<String>,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// rank of the evaluation matrix [α_{f_i}(A_m)]
    Rank {
        /// repeatable
        #[arg(long, required = true)]
        f: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "4,9,16")]
        ms: Vec<i64>,
        /// assert this rank
        #[arg(long)]
        expect: Option<usize>,
    },
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(k) = cli.kappa {
        cfg.kappa = k;
    }
    if let Some(s) = cli.seed {
        cfg.rng_seed = s;
    }
    if let Some(f) = &cli.filler {
        cfg.filler = f.parse()?;
    }
    Ok(cfg)
}

fn vertex(s: &str) -> Result<Vertex> {
    Vertex::parse(s)
}

fn triple(a: &str, b: &str, c: &str) -> Result<[Vertex; 3]> {
    Ok([vertex(a)?, vertex(b)?, vertex(c)?])
}

fn strs(vs: &[Vertex]) -> Vec<String> {
    vs.iter().map(|v| v.to_string()).collect()
}

fn qs(x: &Q) -> String {
    x.to_string()
}

pub fn execute(cfg: &RunConfig, command: &Command) -> Result<Report> {
    if let Command::Selfcheck = command {
        let mut r = Report::default();
        let mut t = Table::new(["check", "ok", "detail"]);
        for c in cfg.self_checks() {
            r.assert(c.ok);
            r.push(json!({"check": c.name, "ok": c.ok, "detail": c.detail}));
            t.push(vec![c.name.into(), c.ok.to_string(), c.detail]);
        }
        r.table = Some(t);
        return Ok(r);
    }
    let engine = cfg.build()?;
    match command {
        Command::Selfcheck => unreachable!(),
        Command::Graph(g) => graph_cmd(&engine, cfg, g),
        Command::Eps(EpsCmd::Eval { x0, x1, x2 }) => {
            let x = triple(x0, x1, x2)?;
            let e = engine.rho.epsilon(&x[0], &x[1], &x[2]);
            Ok(Report::single(json!({"x": strs(&x), "epsilon": e})))
        }
        Command::Alpha(a) => alpha_cmd(&engine, cfg, a),
        Command::Cycles { m, chains } => {
            let c = cycle_report(engine.gamma(), *m)?;
            let mut r = Report::default();
            r.assert(c.all_ok());
            let mut rec = json!({
                "m": c.m,
                "k_m": c.k_m,
                "boundary_c": c.boundary_c_ok,
                "boundary_d": c.boundary_d_ok,
                "boundary_e": c.boundary_e_ok,
                "boundary_a": c.boundary_a_ok,
                "boundary_squared": c.boundary_squared_ok,
                "norm_c": qs(&c.c.l1_norm()),
                "norm_d": qs(&c.d.l1_norm()),
                "norm_e": qs(&c.e.l1_norm()),
                "norm_a": qs(&c.norm_a),
                "norm_formula": c.norm_formula_ok,
                "ok": c.all_ok(),
            });
            if *chains {
                rec["chains"] = json!({
                    "c": c.c.to_json(),
                    "d": c.d.to_json(),
                    "e": c.e.to_json(),
                    "a": c.a.to_json(),
                });
            }
            r.push(rec);
            let mut t = Table::new(["m", "k_m", "norm_a", "ok"]);
            t.push(vec![c.m.to_string(), c.k_m.to_string(), qs(&c.norm_a), c.all_ok().to_string()]);
            r.table = Some(t);
            Ok(r)
        }
    }
}

fn graph_cmd(engine: &Engine, cfg: &RunConfig, g: &GraphCmd) -> Result<Report> {
    let graph = &engine.graph;
    match g {
        GraphCmd::Dist { u, v, cap } => {
            let (u, v) = (vertex(u)?, vertex(v)?);
            let d = graph.distance(&u, &v, cap.unwrap_or(cfg.bfs_cap))?;
            Ok(Report::single(json!({"u": u.to_string(), "v": v.to_string(), "d": d})))
        }
        GraphCmd::Ball { center, r } => {
            let c = vertex(center)?;
            let ball = graph.ball(&c, *r)?;
            let mut t = Table::new(["vertex"]);
            for v in &ball {
                t.push(vec![v.to_string()]);
            }
            let mut rep = Report::single(json!({
                "center": c.to_string(),
                "r": r,
                "size": ball.len(),
                "vertices": strs(&ball),
            }));
            rep.table = Some(t);
            Ok(rep)
        }
        GraphCmd::Delta { samples, radius } => {
            let d = graph.estimate_delta(*samples, *radius, cfg.rng_seed)?;
            Ok(Report::single(json!({
                "samples": samples,
                "radius": radius,
                "seed": cfg.rng_seed,
                "delta_hat": d.to_string(),
            })))
        }
    }
}

fn alpha_cmd(engine: &Engine, cfg: &RunConfig, a: &AlphaCmd) -> Result<Report> {
    match a {
        AlphaCmd::Eval { f, x0, x1, x2 } => {
            let f = LipFn::parse_spec(f)?;
            let x = triple(x0, x1, x2)?;
            let fill = engine.fill_triangle(&x)?;
            let value = engine.f_on_chain(&f, &fill.chain);
            Ok(Report::single(json!({
                "f": f.to_string(),
                "x": strs(&x),
                "value": qs(&value),
                "fill_norm": qs(&fill.norm),
                "method": fill.method.as_str(),
            })))
        }
        AlphaCmd::Defect { f, sample } => {
            let f = LipFn::parse_spec(f)?;
            let d = engine.defect_scan(&f, &sample.spec(), cfg.rng_seed)?;
            let mut t = Table::new(["f", "seed", "max_abs_delta", "lip_on_window", "ratio_to_lip"]);
            t.push(vec![
                d.f.clone(),
                d.seed.to_string(),
                qs(&d.max_abs_delta),
                qs(&d.lip_on_window),
                d.ratio_to_lip.as_ref().map(qs).unwrap_or_default(),
            ]);
            let mut r = Report::single(d.to_json());
            r.table = Some(t);
            Ok(r)
        }
        AlphaCmd::Am { f, m } => {
            let f = LipFn::parse_spec(f)?;
            let mut r = Report::default();
            let mut t = Table::new(["m", "value", "expected_abs", "ok"]);
            for &m in m {
                let value = engine.evaluate_on_am(&f, m)?;
                let expected = engine.expected_on_am(&f, m);
                let ok = r.assert(value == expected);
                r.push(json!({
                    "m": m,
                    "value": qs(&value),
                    "expected_abs": qs(&expected.abs()),
                    "ok": ok,
                }));
                t.push(vec![m.to_string(), qs(&value), qs(&expected.abs()), ok.to_string()]);
            }
            r.table = Some(t);
            Ok(r)
        }
        AlphaCmd::Certify { f, radii, ms, khat, sample } => {
            let f = LipFn::parse_spec(f)?;
            let mut r = Report::default();
            let khat = match khat {
                Some(k) => parse_q(k)?,
                None => {
                    let d = engine.defect_scan(&LipFn::identity(), &sample.spec(), cfg.rng_seed)?;
                    d.ratio_to_lip.unwrap_or_default()
                }
            };
            r.push(json!({"f": f.to_string(), "khat": qs(&khat)}));
            let mut t = Table::new(["kind", "index", "n_or_value", "lip_or_norm", "bound_or_ratio"]);
            let rows = engine.bah_certificate(&f, radii, &khat)?;
            for row in &rows {
                r.push(json!({
                    "kind": "bah",
                    "radius": row.radius,
                    "n": row.n,
                    "lip": qs(&row.lip),
                    "bound": qs(&row.bound),
                }));
                t.push(vec![
                    "bah".into(),
                    row.radius.to_string(),
                    row.n.to_string(),
                    qs(&row.lip),
                    qs(&row.bound),
                ]);
            }
            let nt = engine.nontriviality_certificate(&f, ms)?;
            for row in &nt {
                let ok = r.assert(row.value == engine.expected_on_am(&f, row.m));
                r.push(json!({
                    "kind": "nontriviality",
                    "m": row.m,
                    "value": qs(&row.value),
                    "norm": qs(&row.norm),
                    "ratio": qs(&row.ratio),
                    "ok": ok,
                }));
                t.push(vec![
                    "nontriviality".into(),
                    row.m.to_string(),
                    qs(&row.value),
                    qs(&row.norm),
                    qs(&row.ratio),
                ]);
            }
            r.table = Some(t);
            Ok(r)
        }
        AlphaCmd::Rank { f, ms, expect } => {
            let fs: Vec<LipFn> = f.iter().map(|s| LipFn::parse_spec(s)).collect::<Result<_>>()?;
            let rank = independence_rank(&fs, ms)?;
            let mut r = Report::default();
            let ok = r.assert(expect.is_none_or(|e| e == rank));
            r.push(json!({
                "f": fs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "ms": ms,
                "rank": rank,
                "ok": ok,
            }));
            Ok(r)
        }
    }
}

/// Parses arguments, runs the command and writes JSON lines to `out`.
/// Returns the process exit code: 0 when every asserted check holds, 1 when
/// one fails or an error is reported, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| {
        let rep = execute(&cfg, &cli.command)?;
        rep.write_json_lines(out)?;
        if let Some(p) = &cli.csv {
            rep.write_csv(p)?;
        }
        Ok(rep.ok)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(out, "{}", Report::failure(&e));
            1
        }
    }
}
