import numpy as np
import pytest

from intdiff import _backend, _fallback
from intdiff.sde import SdeModel, make_cir_model, make_ou_model, run_euler

core = _backend.compiled()
needs_core = pytest.mark.skipif(core is None, reason="compiled extension not built")


def _affine_args(model):
    k, th, s, sq = model.affine
    return k, th, s, sq, model.positivity_scheme == "full_truncation"


@needs_core
@pytest.mark.parametrize("make, x0", [(lambda: make_cir_model(2.0, 0.05, 0.9), 0.0), (lambda: make_ou_model(0.5, -2.75, 0.43), -2.0)])
@pytest.mark.parametrize("trap", [False, True])
def test_euler_bitwise_equal(make, x0, trap):
    model = make()
    z = np.random.default_rng(1).standard_normal(5000)
    a = core.euler_affine(x0, *_affine_args(model), 0.001, z, trap)
    b = _fallback.euler_affine(x0, *_affine_args(model), 0.001, z, trap)
    assert a[2] == b[2] == -1
    assert a[0].tobytes() == b[0].tobytes()
    assert a[1].tobytes() == b[1].tobytes()


def test_generic_path_matches_affine_path():
    # same model through the callable-based loop and the specialised stepper
    cir = make_cir_model(2.0, 0.05, 0.9)
    generic = SdeModel(cir.drift, cir.diffusion, 0.0, np.inf, "full_truncation", "generic")
    z = np.random.default_rng(4).standard_normal(3000)
    x1, y1 = run_euler(cir, 0.01, 0.002, z)
    x2, y2 = run_euler(generic, 0.01, 0.002, z)
    assert x1.tobytes() == x2.tobytes() and y1.tobytes() == y2.tobytes()


@needs_core
@pytest.mark.parametrize("code", [0, 1, 2])
def test_nw_sums_agree(code):
    rng = np.random.default_rng(code)
    w = rng.normal(0, 1, 4000)
    r = rng.normal(0, 1, 4000) ** 2
    pts = np.linspace(-1, 1, 25)
    n1, d1 = core.nw_sums(w, r, pts, 0.2, code)
    n2, d2 = _fallback.nw_sums(w, r, pts, 0.2, code)
    np.testing.assert_allclose(n1, n2, rtol=1e-14)
    np.testing.assert_allclose(d1, d2, rtol=1e-14)


def test_backend_name():
    assert _backend.NAME in ("compiled", "python")
    if core is not None:
        assert _backend.NAME == "compiled" or __import__("os").environ.get("INTDIFF_BACKEND") == "python"


def test_forced_fallback_runs_experiment(tmp_path):
    import json
    import os
    import subprocess
    import sys

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "ou", "deltas": [0.01], "bandwidths": [0.6091], "ns": [200], "L": 3}))
    env = dict(os.environ, INTDIFF_BACKEND="python")
    outs = {}
    for name, e in (("py", env), ("native", dict(os.environ, INTDIFF_BACKEND=""))):
        code = "import sys; from intdiff.cli import main; sys.exit(main(sys.argv[1:]))"
        subprocess.run([sys.executable, "-c", code, "experiment", str(cfg), "-o", str(tmp_path / name)], env=e, check=True)
        outs[name] = np.loadtxt(tmp_path / name / "maae.csv", delimiter=",", skiprows=1, usecols=[6])
    probe = subprocess.run([sys.executable, "-c", "import intdiff; print(intdiff.BACKEND)"], env=env,
                           capture_output=True, text=True, check=True)
    assert probe.stdout.strip() == "python"
    np.testing.assert_allclose(outs["py"], outs["native"], rtol=1e-12)
