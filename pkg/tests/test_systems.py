import math

import numpy as np
import pytest

from solitonlab.paths import SystemConfig
from solitonlab.pitman import Variant
from solitonlab.systems import (LocalMapSpec, WindowCapExceeded, carrier_sweep, conservation_residual, dtoda_half,
                                dtoda_half_inverse, evolve, local_F, local_K, local_K_inverse, spacetime_diagram,
                                toda_map, trajectory_csv, udtoda_full, udtoda_half, udtoda_half_inverse)
from solitonlab.variables import DomainError

VARIANTS = list(Variant)


def test_local_F_examples():
    assert local_F(LocalMapSpec("bbs"), 1, 0) == (0, 1)
    assert local_F(LocalMapSpec("udkdv", L=2), 1.5, 0.2) == (0.2, 1.5)
    assert toda_map("udtoda", 1, 2, 3) == (2, 1, 2)
    assert udtoda_full(1, 2, 3) == (2, 1, 2)


def test_toda_composed_matches_printed(rng):
    a, b, c = rng.uniform(0.1, 5, (3, 1000))
    from solitonlab.systems import dtoda_full
    for x, y, z in zip(a, b, c):
        assert np.allclose(toda_map("dtoda", x, y, z), dtoda_full(x, y, z), rtol=1e-12)
        assert toda_map("udtoda", x, y, z) == pytest.approx(udtoda_full(x, y, z), abs=1e-12)


def test_half_map_inverses(rng):
    for b, c in rng.uniform(-5, 5, (10_000, 2)):
        z, w = udtoda_half(b, c)
        assert udtoda_half_inverse(z, w) == pytest.approx((b, c), abs=1e-12)
    for b, c in np.exp(rng.normal(0, 1, (10_000, 2))):
        z, w = dtoda_half(b, c)
        bb, cc = dtoda_half_inverse(z, w)
        assert abs(bb / b - 1) < 1e-12 and abs(cc / c - 1) < 1e-12


def test_local_K_examples():
    assert tuple(map(float, local_K("maxavg", 0, 0))) == (0.0, 0.0)
    assert tuple(map(float, local_K("maxavg", 1, 2))) == (-1.0, 1.0)
    a, b = local_K("logsumavg", 0, 0)
    assert a == pytest.approx(2 * math.log(2), abs=1e-15) and b == pytest.approx(math.log(2), abs=1e-15)
    assert abs(conservation_residual("logsumavg", 0, 0)) < 1e-15


@pytest.mark.parametrize("variant", ["maxeven", "logsumeven"])
def test_even_K_inverse(variant, rng):
    a, b = rng.uniform(-20, 20, (2, 1000))
    x, u = local_K(variant, a, b)
    aa, bb = local_K_inverse(variant, x, u)
    assert np.allclose(aa, a, atol=1e-9) and np.allclose(bb, b, atol=1e-9)


def test_bbs_sweep_hand_trace():
    nxt, w = carrier_sweep(SystemConfig("bbs", [1, 1, 0, 1, 0, 0]))
    assert nxt.values_between(1, 7).tolist() == [0, 0, 1, 0, 1, 1]
    assert [w.at(n) for n in range(1, 7)] == [1, 2, 1, 2, 1, 0]


def test_vacuum_sweeps():
    for cfg in [SystemConfig("bbs", [0] * 5), SystemConfig("udkdv", [0.25] * 4, 0.25, L=2),
                SystemConfig("dkdv", [1.0] * 3, 1.0, delta=0.5), SystemConfig("udtoda", [[0.25, 1]] * 3, (0.25, 1)),
                SystemConfig("dtoda", [[1.5, 0.5]] * 3, (1.5, 0.5))]:
        nxt, _ = carrier_sweep(cfg)
        if cfg.system == "dtoda":
            assert nxt.max_abs_diff(cfg.replace(cfg.sites[:0])) < 1e-12
        else:
            assert nxt.trimmed().size == 0


def _runs(row):
    out, k = [], 0
    for v in list(row) + [0]:
        if v:
            k += 1
        elif k:
            out.append(k)
            k = 0
    return out


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_soliton_speed(k):
    traj = evolve(SystemConfig("bbs", [1] * k), 20)
    for t, c in enumerate(traj):
        assert c.start == 1 + k * t and c.size == k and c.sites.sum() == k


def test_two_soliton_collision():
    traj = evolve(SystemConfig("bbs", [1, 1, 1, 0, 0, 0, 1]), 10)
    assert _runs(traj[-1].values_between(traj[-1].start, traj[-1].stop)) == [1, 3] or \
        sorted(_runs(traj[-1].values_between(traj[-1].start, traj[-1].stop))) == [1, 3]
    assert all(int(c.sites.sum()) == 4 for c in traj)
    # the large soliton overtakes and both keep their speed afterwards
    last = traj[-1].values_between(traj[-1].start, traj[-1].stop).tolist()
    assert last[-3:] == [1, 1, 1]


def test_evolve_zero_steps_identity():
    c = SystemConfig("udkdv", [0.5, 1.0], 0.0, L=2)
    assert evolve(c, 0) == [c]


def test_udkdv_mass_conservation(rng):
    cfg = SystemConfig("udkdv", rng.integers(0, 9, 40) / 4, 0.25, L=2.0)
    nxt, w = carrier_sweep(cfg, lead=True)
    for n in range(cfg.start, cfg.stop):
        eta, eta1 = cfg.values_between(n, n + 1)[0], nxt.values_between(n, n + 1)[0]
        u_prev = w.seed if n == w.n_lo else w.at(n - 1)
        assert eta + u_prev == eta1 + w.at(n)


def test_dkdv_log_mass_conservation(rng):
    cfg = SystemConfig("dkdv", np.exp(rng.normal(0, 0.7, 40)), 1.0, delta=0.5)
    nxt, w = carrier_sweep(cfg)
    for n in range(cfg.start, cfg.stop):
        om, om1 = cfg.values_between(n, n + 1)[0], nxt.values_between(n, n + 1)[0]
        u_prev = w.seed if n == w.n_lo else w.at(n - 1)
        assert abs(math.log(om) + math.log(u_prev) - math.log(om1) - math.log(w.at(n))) < 1e-12


def test_domain_error_mid_sweep():
    with pytest.raises(DomainError):
        local_F(LocalMapSpec("dkdv", delta=1.0), -1.0, 1.0, 3)


def test_window_cap():
    with pytest.raises(WindowCapExceeded):
        evolve(SystemConfig("bbs", [1] * 50), 3, max_sites=20)


def test_diagram_and_csv():
    traj = evolve(SystemConfig("bbs", [1, 1, 0, 1, 0, 0]), 1)
    assert spacetime_diagram(traj, 1, 7) == "oo.o..\n..o.oo\n"
    csv = trajectory_csv(traj, 1, 3)
    assert csv == "t,n,value\n0,1,1\n0,2,1\n1,1,0\n1,2,0\n"
