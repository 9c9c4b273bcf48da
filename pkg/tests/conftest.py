import json
from fractions import Fraction

import fsspec
import pytest

from frpoisson.ciliated_graph import (
    annulus_marked,
    disk2,
    polygon_path,
    sigma_n,
    three_marked_disk,
)
from frpoisson.group_numerics import NumericsConfig
from frpoisson.lie_core import builtin_algebra
from frpoisson.r_matrix import RMatrix, builtin_r_matrix, conjugate

# Corrupted sl2 control: ½ e∧f + e∧h + h∧f, defect 8·h∧e∧f
CORRUPTED_LAMBDA = [[1, 2, "1/2"], [0, 1, -1], [0, 2, 1]]
SL2_S = [[0, 0, "1/4"], [1, 2, "1/2"], [2, 1, "1/2"]]


@pytest.fixture(scope="session")
def sl2():
    return builtin_algebra("sl2")


@pytest.fixture(scope="session")
def gl2():
    return builtin_algebra("gl(2)")


@pytest.fixture(scope="session")
def abelian2():
    return builtin_algebra("abelian(2)")


@pytest.fixture(scope="session")
def sl2_r():
    """The standard r-matrix e⊗f + ¼ h⊗h."""
    return builtin_r_matrix("sl2_standard")


@pytest.fixture(scope="session")
def sl2_r_conj(sl2_r):
    return conjugate(sl2_r)


@pytest.fixture(scope="session")
def corrupted_r(sl2, sl2_r):
    antisym = sl2_r.antisym + sl2.alt({("e", "h"): 1, ("h", "f"): 1})
    return RMatrix(sl2, sl2_r.sym, antisym, name="sl2_corrupted")


@pytest.fixture(scope="session")
def half():
    return Fraction(1, 2)


@pytest.fixture(scope="session")
def test_skeletons():
    """The named test graphs of the acceptance sweep."""
    return {
        "disk2": disk2(),
        "annulus_marked(1)": annulus_marked(1),
        "sigma_n(3)": sigma_n(3),
        "polygon_path(3)": polygon_path(3),
        "three_marked_disk": three_marked_disk(),
    }


@pytest.fixture(scope="session")
def config():
    return NumericsConfig(tol=1e-8, samples=8, seed=0, scale=0.5)


@pytest.fixture(scope="function")
def memory_fs():
    """A clean fsspec memory filesystem."""
    fs = fsspec.filesystem("memory")
    fs.store.clear()
    fs.pseudo_dirs.clear()
    fs.pseudo_dirs.append("")
    yield fs
    fs.store.clear()


@pytest.fixture(scope="function")
def write_scenario(memory_fs):
    """Write a scenario document to ``memory://scenarios/<name>.json``."""

    def _write(doc: dict, name: str = "scenario") -> str:
        url = f"memory://scenarios/{name}.json"
        with fsspec.open(url, "w", encoding="utf-8") as f:
            f.write(json.dumps(doc))
        return url

    return _write
