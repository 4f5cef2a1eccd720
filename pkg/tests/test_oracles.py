"""The frozen reference constants match an independent mpmath recomputation."""
import importlib.util
from pathlib import Path

import pytest

pytest.importorskip("mpmath")

import test_acceptance as acc  # noqa: E402


def _tool():
    path = Path(__file__).resolve().parents[1] / "tools" / "oracles.py"
    spec = importlib.util.spec_from_file_location("oracles", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def test_frozen_constants_match_mpmath():
    o = _tool()
    mp = o.mp
    funcs = {
        "cos(x0)": mp.cos,
        "1/(1+x0^2)": lambda x: 1 / (1 + x * x),
        "atan(x0)+0.3": lambda x: mp.atan(x) + mp.mpf("0.3"),
        "exp(-abs(x0))": lambda x: mp.e ** (-abs(x)),
        "indicator(x0 >= 0.5)": lambda x: 1 if x >= 0.5 else 0,
    }
    for name, f in funcs.items():
        assert float(o.gaussian_mean(f)) == pytest.approx(acc.GAUSSIAN_MEANS[name], abs=1e-14)
    for n, v in acc.HOMOLOGY_DISC.items():
        assert float(o.disc_mean(n + 1)) == pytest.approx(v, abs=1e-11)
