import os
import subprocess
import sys

import numpy as np
import pytest

from shotnoise_sbd import sheriff, sheriffz
from shotnoise_sbd._backend import BACKEND, compiled_available, get_kernels
from shotnoise_sbd.domain import PairOracle, PointSet, sample_poisson_initial, sample_rain

needs_compiled = pytest.mark.skipif(not compiled_available(), reason="extension not built")


@needs_compiled
@pytest.mark.parametrize("variant", ["single", "double"])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_sheriff_parity(window, rf, variant, seed):
    rain = sample_rain(window, 1.0, 0.0, 8.0, seed)
    prep = sheriff.prepare(rain, PairOracle(seed + 100, rf, window), 8.0, variant)
    for ordering in ("canonical", ("shuffled", seed)):
        a = prep.run(ordering, backend="python")
        b = prep.run(ordering, backend="compiled")
        assert a.death.tobytes() == b.death.tobytes()
        assert a.killer.tobytes() == b.killer.tobytes()


@needs_compiled
def test_coupled_parity(window, rf):
    rain = sample_rain(window, 1.0, 0.0, 6.0, 5)
    z0 = sample_poisson_initial(window, 0.56, 0.0, 6)
    pts = PointSet.concat(rain, z0).canonical()
    pairs = PairOracle(7, rf, window).pairs(pts, t_max=6.0)
    a = sheriffz.resolve_coupled_pairs(pts, pairs, 6.0, backend="python")
    b = sheriffz.resolve_coupled_pairs(pts, pairs, 6.0, backend="compiled")
    for name in ("e", "e_aug", "family"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_default_backend_prefers_compiled():
    assert BACKEND == ("compiled" if compiled_available() and
                       os.environ.get("SHOTNOISE_SBD_BACKEND", "auto") != "python" else "python")


def test_env_forces_python_fallback():
    env = dict(os.environ, SHOTNOISE_SBD_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from shotnoise_sbd._backend import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend_name():
    with pytest.raises(ValueError):
        get_kernels("fortran")
