import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shellvar import io
from shellvar.calculus import random_displacement
from shellvar.errors import ConfigError
from shellvar.surface import Torus


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_doubles(x):
    assert float(io.fmt(x)) == x


def test_fmt_nonfinite():
    assert [io.fmt(v) for v in (math.nan, math.inf, -math.inf)] == ["nan", "inf", "-inf"]


def test_json_numbers():
    text = io.dumps_json({"a": 0.1, "b": np.float64(1 / 3), "c": [math.nan, math.inf, -math.inf],
                          "d": np.arange(2), "e": np.bool_(True), "f": None})
    back = json.loads(text)
    assert back["a"] == 0.1 and back["b"] == 1 / 3
    assert math.isnan(back["c"][0]) and back["c"][1:] == [math.inf, -math.inf]
    assert back["d"] == [0, 1] and back["e"] is True and back["f"] is None
    assert "NaN" in text and "Infinity" in text
    with pytest.raises(TypeError):
        io.dumps_json({"x": object()})


def test_csv_writes_full_precision(tmp_path):
    p = io.write_csv(tmp_path / "t.csv", ("a", "b"), [[1 / 3, "x"], [2, True]])
    assert p.read_text() == "a,b\n0.33333333333333331,x\n2,True\n"


@pytest.fixture
def domain():
    return Torus().natural_domain(8, 6)


def test_displacement_csv_roundtrip(tmp_path, domain):
    disp = random_displacement(domain, 3)
    p = io.write_displacement_csv(tmp_path / "d.csv", disp)
    back = io.load_displacement_csv(p, domain)
    assert np.array_equal(back.grid_values(), disp.grid_values())


def test_displacement_csv_errors(tmp_path, domain):
    with pytest.raises(ConfigError):
        io.load_displacement_csv(tmp_path / "missing.csv", domain)
    p = io.write_displacement_csv(tmp_path / "d.csv", random_displacement(domain, 3))
    with pytest.raises(ConfigError, match="rows"):
        io.load_displacement_csv(p, Torus().natural_domain(8, 8))
    with pytest.raises(ConfigError, match="coordinates"):
        io.load_displacement_csv(p, Torus().natural_domain(6, 8))
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha,beta,u,v,w\n")
    with pytest.raises(ConfigError, match="columns"):
        io.load_displacement_csv(bad, domain)
