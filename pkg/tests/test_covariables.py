import numpy as np
import pytest

from solitonlab.covariables import (carrier_consistency_check, conjugacy_check, equivalence_check, random_config,
                                    residual_csv)
from solitonlab.paths import SystemConfig
from solitonlab.variables import VariableMap, carrier_to_K_vars, site_to_K_vars

SYSTEMS = ["bbs", "udkdv", "dkdv", "udtoda", "dtoda"]


def test_variable_examples():
    assert site_to_K_vars("udkdv", 1, 0.5, L=2) == 1
    assert carrier_to_K_vars("udkdv", 1, 1, L=2) == 0
    assert site_to_K_vars("bbs", 1, 0) == 1 and site_to_K_vars("bbs", 1, 1) == -1
    assert site_to_K_vars("dkdv", 1, 1.0, delta=1.0) == 0 and carrier_to_K_vars("dkdv", 1, 1.0, delta=1.0) == 0


@pytest.mark.parametrize("system", SYSTEMS)
def test_variable_inverses(system, rng):
    vm = VariableMap(system, 2.0, 0.5)
    for n in range(-3, 4):
        z = rng.integers(0, 2) if system == "bbs" else (np.exp(rng.normal()) if system in ("dkdv", "dtoda")
                                                         else rng.normal())
        assert vm.A_inv(n, vm.A(n, z)) == pytest.approx(z, rel=1e-12)


@pytest.mark.parametrize("system", SYSTEMS)
def test_conjugacy(system):
    rep = conjugacy_check(system, 10_000, seed=7)
    assert rep.passed, rep.to_text()
    if system == "bbs":
        assert rep.subtests[0].statistic == 0


def test_equivalence_bbs_example():
    rep = equivalence_check(SystemConfig("bbs", [1, 1, 0, 1, 0, 0]), 5)
    assert rep.passed and rep.subtests[0].statistic == 0


@pytest.mark.parametrize("system", SYSTEMS)
def test_equivalence_vacuum(system):
    cfg = random_config(system, 10, np.random.default_rng(0))
    vac = cfg.replace(cfg.sites[:0])
    assert equivalence_check(vac, 3).passed


def test_equivalence_udkdv_random(rng):
    cfg = random_config("udkdv", 50, rng)
    rep = equivalence_check(cfg, 10, tol=1e-10)
    assert rep.passed


@pytest.mark.parametrize("system", SYSTEMS)
def test_carrier_consistency(system, rng):
    for _ in range(10):
        rep = carrier_consistency_check(random_config(system, 30, rng))
        assert rep.passed, rep.to_text()


def test_residual_csv_shape(rng):
    text = residual_csv(random_config("bbs", 20, rng), 2)
    lines = text.splitlines()
    assert lines[0] == "t,n,residual"
    assert all(float(l.split(",")[2]) == 0 for l in lines[1:])


def test_disagreement_is_reported():
    # a negative tolerance makes any step disagree, exercising the report path
    rep = equivalence_check(SystemConfig("dkdv", [2.0, 0.5], 1.0, delta=0.5), 2, tol=-1.0)
    assert not rep.passed and "first disagreement" in rep.notes[0]
