import math
from pathlib import Path

import numpy as np
import pytest

import condenser

SMALL = """
seed = 1

[domain]
kind = "half_space"
alpha = 2.0

[a1]
shape = "disc_series"
count = 2
nodes = 120

[a2]
nodes = 500

[constraint]
shape = "disc_series"
"""


@pytest.fixture(scope="module")
def solved():
    problem = condenser.Problem.from_toml(SMALL)
    return problem, problem.solve()


def test_problem_shapes(solved):
    problem, _ = solved
    n = len(problem.a1_rows) + len(problem.a2_rows)
    assert problem.points.shape == (n, 3)
    assert len(problem.cell_radius) == n
    assert problem.xi.sum() > 1.0
    assert problem.alpha == 2.0


def test_solution_is_admissible_and_frostman_passes(solved):
    problem, sol = solved
    assert sol.weight_plus.sum() == pytest.approx(1.0, abs=1e-8)
    a1 = np.asarray(problem.a1_rows)
    assert np.all(sol.weight_plus[a1] <= problem.xi[a1] + 1e-10)
    report = sol.frostman()
    assert report["pass"]
    assert sol.perturbed_frostman()["pass"] is False
    assert sol.support()["boundary_mass_fraction"] >= 0.98


def test_bridge_and_direct_agree(solved):
    problem, sol = solved
    direct = problem.solve("direct")
    assert direct.objective_riesz == pytest.approx(sol.objective_green, rel=0.02)


def test_duality(solved):
    _, sol = solved
    report = sol.duality()
    assert report["theta_mass"] == pytest.approx(1.0, abs=1e-8)
    assert report["pass"]


def test_disc_capacity_is_two_over_pi():
    assert condenser.disc_capacity(1.0, 1200) == pytest.approx(2 / math.pi, rel=0.01)


def test_counterexample_small():
    report = condenser.counterexample(terms=3, nodes_per_disc=60)
    assert max(report["green_partial_sums"]) <= 1.1
    assert report["pass"]


def test_config_errors_raise():
    with pytest.raises(condenser.CondenserError, match="unknown key"):
        condenser.Problem.from_toml(SMALL + "\n[extra]\nx = 1\n")


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parents[2]
    for name in ("example8_1.toml", "example8_2.toml"):
        text = (root / "configs" / name).read_text()
        assert len(condenser.config_hash(text)) == 64
