import json
import os
import subprocess
import sys

import numpy as np
import pytest

from g2sym import _jit
from g2sym import fhn_structure as fhn
from g2sym import tracer as tr

SCRIPT = """
import json
from g2sym import _jit, fhn_structure as fhn, tracer as tr
sol = fhn.bryant_salamon_solution(c=1.0, r_max=2.0)
(curve,) = tr.trace_associative(sol, 4.0)
print(json.dumps({"numba": _jit.NUMBA_ACTIVE, "t_max": sol.t_max, "a_end": float(sol.ys[-1, 0]),
                  "eta": float(sol._eta_prefix[-1]), "n": len(curve.points),
                  "mid": [float(x) for x in curve.points[len(curve.points) // 2]]}))
"""


def _run(disable):
    env = dict(os.environ)
    env["G2SYM_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True,
                          timeout=600, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.slow
def test_fallback_matches_compiled():
    plain = _run(True)
    assert plain["numba"] is False
    sol = fhn.bryant_salamon_solution(c=1.0, r_max=2.0)
    (curve,) = tr.trace_associative(sol, 4.0)
    assert plain["t_max"] == pytest.approx(sol.t_max, rel=1e-12)
    assert plain["a_end"] == pytest.approx(float(sol.ys[-1, 0]), rel=1e-12)
    assert plain["eta"] == pytest.approx(float(sol._eta_prefix[-1]), rel=1e-12)
    assert plain["n"] == len(curve.points)
    np.testing.assert_allclose(plain["mid"], curve.points[len(curve.points) // 2], rtol=1e-10)


def test_flag_parsing():
    assert _jit.DISABLED == (os.environ.get("G2SYM_DISABLE_NUMBA", "") not in ("", "0"))
    if not _jit.NUMBA_ACTIVE:
        def f(x):
            return x
        assert _jit.njit(f) is f
