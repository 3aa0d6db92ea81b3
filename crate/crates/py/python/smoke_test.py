"""Smoke test for the cuspform_py extension.

Install with `pip install --no-build-isolation crates/py`, or build with
    cargo build --release -p cuspform-py --features extension-module
and the script loads target/release/libcuspform_py.so directly.
"""

import importlib.util
import json
import os
import shutil
import sys
import tempfile
from fractions import Fraction

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.abspath(os.path.join(HERE, "..", "..", ".."))


def load():
    try:
        import cuspform_py  # installed copy

        return cuspform_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libcuspform_py.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            dst = os.path.join(tmp, "cuspform_py.so")
            shutil.copy(lib, dst)
            spec = importlib.util.spec_from_file_location("cuspform_py", dst)
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod
    sys.exit("libcuspform_py.so not found; build the extension first")


def main():
    cf = load()
    eng = cf.Engine()
    assert eng.kappa == 8

    e, c2 = cf.Vertex("e@0:0"), cf.Vertex("ABabABab@0:0")
    assert eng.distance(e, c2) == 2
    assert eng.distance(cf.Vertex("e@0:1"), cf.Vertex("ABabABab@0:1")) == 1
    assert len(eng.ball(e, 1)) == 10

    x = ["e@0:0", "ab@0:0", "a@0:0"]
    eps = eng.epsilon(*map(cf.Vertex, x))
    assert eps in (-1, 1)
    assert eng.epsilon(cf.Vertex("e@0:0"), cf.Vertex("ba@0:0"), cf.Vertex("ab@0:0")) == 0

    phi = eng.phi(x)
    assert phi == [(x, Fraction(1))] or len(phi) == 1

    f = cf.LipFn("linear:1")
    for m in (1, 5):
        v = eng.evaluate_on_am(f, m)
        assert v == eng.expected_on_am(f, m) and abs(v) == 2 * m, v

    pf = cf.LipFn("powfloor:1/2")
    assert pf.value(4) == 2 and pf.declared_lip() == 1

    fs = [cf.LipFn(s) for s in ("powfloor:1/2", "powfloor:2/3", "powfloor:3/4")]
    assert cf.rank(fs, [4, 9, 16]) == 3

    rep = eng.cycles(8)
    assert rep["ok"] and Fraction(rep["norm_a"]) == Fraction(47, 4)

    d = eng.defect_scan(f, count=30)
    assert d["count"] == 30 and d["ratio_to_lip"] is not None

    code, out = cf.run_cli(["graph", "dist", "e@0:1", "ABabABab@0:1"])
    assert code == 0 and json.loads(out)["d"] == 1

    try:
        cf.Vertex("nope@0")
    except ValueError:
        pass
    else:
        raise AssertionError("bad vertex accepted")

    try:
        cf.Engine("rho_b = 1 0 0 1")
    except RuntimeError as err:
        assert "self_check" in str(err)
    else:
        raise AssertionError("bad rho accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
