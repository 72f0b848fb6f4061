"""The pure-numpy fallback must agree with the compiled kernels."""
import json
import os
import subprocess
import sys

import numpy as np

from lame_spectra import _kernels
from lame_spectra._backend import HAVE_NUMBA, backend_name

_PROBE = """
import json, numpy as np
from lame_spectra._backend import backend_name
from lame_spectra.spectral import eigensolve
from lame_spectra.assembly import gagliardo_gram
from lame_spectra.experiments import mode_seminorm_sq
from lame_spectra.mesh import build_unit_square_mesh
A = np.random.default_rng(0).standard_normal((15, 15))
lam = eigensolve(A).eigenvalues
G = gagliardo_gram(build_unit_square_mesh(3), 0.4)
print(json.dumps({"backend": backend_name(), "re": lam.real.tolist(), "im": lam.imag.tolist(),
                  "g": float(G.sum(axis=0) @ np.arange(16) + np.trace(G)), "mode": mode_seminorm_sq(3, 0.6)}))
"""


def _probe(no_numba: bool) -> dict:
    env = dict(os.environ)
    env.pop("LAME_SPECTRA_NO_NUMBA", None)
    if no_numba:
        env["LAME_SPECTRA_NO_NUMBA"] = "1"
    r = subprocess.run([sys.executable, "-c", _PROBE], capture_output=True, text=True, env=env, timeout=600)
    assert r.returncode == 0, r.stderr
    return json.loads(r.stdout.strip().splitlines()[-1])


def test_backend_name_reflects_flag():
    assert backend_name() == ("numba" if HAVE_NUMBA else "numpy")


def test_fallback_matches_compiled():
    slow = _probe(True)
    fast = _probe(False)
    assert slow["backend"] == "numpy"
    assert np.allclose(slow["re"], fast["re"], atol=1e-10)
    assert np.allclose(slow["im"], fast["im"], atol=1e-10)
    assert abs(slow["g"] - fast["g"]) <= 1e-10 * abs(fast["g"])
    assert abs(slow["mode"] - fast["mode"]) <= 1e-12 * fast["mode"]


def test_numpy_mode_kernel_matches_direct_call():
    delta = np.array([1e-6, 0.1, 0.9])
    x, w = np.polynomial.legendre.leggauss(40)
    nodes = np.tile(0.5 * np.pi * (x + 1), (3, 1))
    wts = np.tile(0.5 * np.pi * w, (3, 1))
    a = _kernels._mode_angular_numpy(4.0, delta, 1.3, False, nodes, wts)
    b = _kernels.mode_angular(4.0, delta, 1.3, False, nodes, wts)
    assert np.allclose(a, b, rtol=1e-13)
