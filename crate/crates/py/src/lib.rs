//! Python bindings: `import cuspform_py`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;

use cuspform::chain::{SimplicialChain, Q};
use cuspform::config::RunConfig;
use cuspform::cycles::cycle_report;
use cuspform::engine;
use cuspform::graph;
use cuspform::lipfn;
use cuspform::quasicocycle::{independence_rank, SampleSpec};

fn to_py(e: cuspform::Error) -> PyErr {
    match e {
        cuspform::Error::Parse { .. } | cuspform::Error::Invalid(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(format!("{}: {e}", e.kind())),
    }
}

fn fraction<'py>(py: Python<'py>, q: &Q) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((q.to_string(),))
}

fn json<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn chain_to_py<'py>(py: Python<'py>, c: &SimplicialChain) -> PyResult<Bound<'py, PyList>> {
    let out = PyList::empty(py);
    for (s, k) in c.iter() {
        let verts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        out.append((verts, fraction(py, k)?))?;
    }
    Ok(out)
}

fn triple(x: Vec<String>) -> PyResult<[graph::Vertex; 3]> {
    let vs: Vec<graph::Vertex> = x.iter().map(|s| graph::Vertex::parse(s)).collect::<Result<_, _>>().map_err(to_py)?;
    vs.try_into().map_err(|_| PyValueError::new_err("expected three vertices"))
}

fn quadruple(x: Vec<String>) -> PyResult<[graph::Vertex; 4]> {
    let vs: Vec<graph::Vertex> = x.iter().map(|s| graph::Vertex::parse(s)).collect::<Result<_, _>>().map_err(to_py)?;
    vs.try_into().map_err(|_| PyValueError::new_err("expected four vertices"))
}

/// A cusped-graph vertex `<word>@<k>:<n>`.
#[pyclass(frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct Vertex(graph::Vertex);

#[pymethods]
impl Vertex {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        graph::Vertex::parse(text).map(Vertex).map_err(to_py)
    }

    #[getter]
    fn word(&self) -> String {
        self.0.base().to_string()
    }

    #[getter]
    fn texp(&self) -> i64 {
        self.0.texp()
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.0.depth
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Vertex('{}')", self.0)
    }
}

/// A Lipschitz function Z → Q from a spec such as `linear:1` or `powfloor:1/2`.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct LipFn(lipfn::LipFn);

#[pymethods]
impl LipFn {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        lipfn::LipFn::parse_spec(spec).map(LipFn).map_err(to_py)
    }

    fn value<'py>(&self, py: Python<'py>, x: i64) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.value(x))
    }

    fn declared_lip<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.declared_lip())
    }

    fn truncate(&self, n: u64) -> LipFn {
        LipFn(self.0.truncate(n))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("LipFn('{}')", self.0)
    }
}

/// The computation context. Built from a `key = value` config text (empty
/// for the defaults); the startup self-checks run here.
#[pyclass(frozen)]
struct Engine(engine::Engine);

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (config = "", kappa = None))]
    fn new(config: &str, kappa: Option<u32>) -> PyResult<Self> {
        let mut cfg = RunConfig::parse(config).map_err(to_py)?;
        if let Some(k) = kappa {
            cfg.kappa = k;
        }
        cfg.build().map(Engine).map_err(to_py)
    }

    #[getter]
    fn kappa(&self) -> u32 {
        self.0.kappa()
    }

    fn distance(&self, py: Python<'_>, u: &Vertex, v: &Vertex) -> PyResult<u32> {
        py.detach(|| self.0.graph.dist(&u.0, &v.0)).map_err(to_py)
    }

    fn ball(&self, center: &Vertex, r: u32) -> PyResult<Vec<Vertex>> {
        let b = self.0.graph.ball(&center.0, r).map_err(to_py)?;
        Ok(b.into_iter().map(Vertex).collect())
    }

    fn epsilon(&self, x0: &Vertex, x1: &Vertex, x2: &Vertex) -> i8 {
        self.0.rho.epsilon(&x0.0, &x1.0, &x2.0)
    }

    /// φ(x) as a list of (vertices, coefficient).
    fn phi<'py>(&self, py: Python<'py>, x: Vec<String>) -> PyResult<Bound<'py, PyList>> {
        let x = triple(x)?;
        let c = py.detach(|| self.0.phi(&x)).map_err(to_py)?;
        chain_to_py(py, &c)
    }

    fn alpha<'py>(&self, py: Python<'py>, f: &LipFn, x: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        let x = triple(x)?;
        let v = py.detach(|| self.0.alpha(&f.0, &x)).map_err(to_py)?;
        fraction(py, &v)
    }

    fn delta_alpha<'py>(&self, py: Python<'py>, f: &LipFn, x: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        let x = quadruple(x)?;
        let v = py.detach(|| self.0.delta_alpha(&f.0, &x)).map_err(to_py)?;
        fraction(py, &v)
    }

    fn evaluate_on_am<'py>(&self, py: Python<'py>, f: &LipFn, m: u64) -> PyResult<Bound<'py, PyAny>> {
        let v = py.detach(|| self.0.evaluate_on_am(&f.0, m)).map_err(to_py)?;
        fraction(py, &v)
    }

    fn expected_on_am<'py>(&self, py: Python<'py>, f: &LipFn, m: u64) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.expected_on_am(&f.0, m))
    }

    #[pyo3(signature = (f, count = 2000, radius = 4, max_depth = 2, seed = 7))]
    fn defect_scan<'py>(
        &self,
        py: Python<'py>,
        f: &LipFn,
        count: usize,
        radius: u32,
        max_depth: u32,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let spec = SampleSpec {
            count,
            radius,
            max_depth,
        };
        let r = py.detach(|| self.0.defect_scan(&f.0, &spec, seed)).map_err(to_py)?;
        json(py, &r.to_json())
    }

    fn cycles<'py>(&self, py: Python<'py>, m: u64) -> PyResult<Bound<'py, PyAny>> {
        let r = cycle_report(self.0.gamma(), m).map_err(to_py)?;
        let v = serde_json::json!({
            "m": r.m,
            "k_m": r.k_m,
            "ok": r.all_ok(),
            "norm_a": r.norm_a.to_string(),
            "a": r.a.to_json(),
        });
        json(py, &v)
    }
}

#[pyfunction]
fn rank(fs: Vec<PyRef<'_, LipFn>>, ms: Vec<i64>) -> PyResult<usize> {
    let fs: Vec<lipfn::LipFn> = fs.iter().map(|f| f.0.clone()).collect();
    independence_rank(&fs, &ms).map_err(to_py)
}

/// Runs the command line in-process; returns (exit code, stdout).
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("cuspform".to_string()).chain(args);
    let code = cuspform::cli::run(argv, &mut out);
    (code, String::from_utf8_lossy(&out).into_owned())
}

#[pymodule]
fn cuspform_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Vertex>()?;
    m.add_class::<LipFn>()?;
    m.add_class::<Engine>()?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
