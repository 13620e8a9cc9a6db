"""Change of variables between lattice dynamics and path transforms, and the
equivalence harness comparing the two evolutions.

Indexing convention for Toda systems: pair ``k`` of ``(Q, E)`` (or ``(I, J)``)
sits at lattice sites ``2k - 1`` and ``2k``; the half map ``F*`` acts at even
sites, its inverse at odd sites, and the updated lattice is read off one site
to the left (``m = 1``).
"""
from __future__ import annotations

import io

import numpy as np

from .measures import rng_for
from .paths import SystemConfig, decode, encode
from .pitman import OperatorVariant, Variant, as_operator, carrier_process, iterate
from .systems import LocalMapSpec, carrier_sweep, local_F, local_K, local_K_inverse
from .variables import (SYSTEMS, VariableMap, check_system, carrier_to_K_vars, K_to_carrier_vars,
                        K_to_site_vars, site_to_K_vars)
from .verify import TestReport

__all__ = ["VariableMap", "site_to_K_vars", "K_to_site_vars", "carrier_to_K_vars", "K_to_carrier_vars",
           "SYSTEM_OPERATOR", "K_VARIANT", "operator_for", "conjugacy_check", "equivalence_check",
           "carrier_consistency_check", "random_config", "DEFAULT_TOL"]

K_VARIANT = {
    "bbs": Variant.MAX_PAST,
    "udkdv": Variant.MAX_AVG_PAST,
    "dkdv": Variant.LOG_SUM_AVG,
    "udtoda": Variant.MAX_EVEN_PAST,
    "dtoda": Variant.LOG_SUM_EVEN,
}

SYSTEM_OPERATOR = {s: OperatorVariant(v, v.is_even) for s, v in K_VARIANT.items()}

# exact for min-plus systems on exactly representable inputs
DEFAULT_TOL = {"bbs": 0.0, "udkdv": 0.0, "dkdv": 1e-10, "udtoda": 0.0, "dtoda": 1e-10}


def operator_for(system: str) -> OperatorVariant:
    return SYSTEM_OPERATOR[check_system(system)]


def _random_inputs(system, rng, n, L):
    if system == "bbs":
        return rng.integers(0, 2, n), rng.integers(0, 30, n)
    if system == "udkdv":
        return rng.uniform(-L, 2 * L, n), rng.uniform(-L, 3 * L, n)
    if system == "udtoda":
        return rng.uniform(-3, 3, n), rng.uniform(-3, 3, n)
    return np.exp(rng.normal(0, 1.5, n)), np.exp(rng.normal(0, 1.5, n))


def conjugacy_check(system: str, n_samples: int = 10_000, seed: int = 0, tol: float | None = None,
                    L: float = 3.0, delta: float = 0.5) -> TestReport:
    """Check ``K_n = (A_{n-m} x B_n) o F_n o (A_n x B_{n-1})^-1`` and the conservation
    law ``A_{n-m}(z') - 2 B_n(w') = A_n(z) - 2 B_{n-1}(w)`` on random inputs."""
    system = check_system(system)
    if tol is None:
        tol = {"bbs": 0.0, "udkdv": 1e-12, "udtoda": 1e-12}.get(system, 1e-10)
    rng = rng_for(seed)
    vm = VariableMap(system, L, delta)
    spec = LocalMapSpec(system, L, delta)
    z, w = _random_inputs(system, rng, n_samples, L)
    ns = rng.integers(-50, 50, n_samples)
    m = vm.m
    tag = K_VARIANT[system]
    conj, cons = 0.0, 0.0
    for zi, wi, n in zip(z.tolist(), w.tolist(), ns.tolist()):
        z1, w1 = local_F(spec, zi, wi, n)
        a, b = vm.A(n, zi), vm.B(n - 1, wi)
        if vm.m and n % 2:
            ka, kb = local_K_inverse(tag, a, b)
        else:
            ka, kb = local_K(tag, a, b)
        x1, u1 = vm.A(n - m, z1), vm.B(n, w1)
        conj = max(conj, abs(float(ka) - x1), abs(float(kb) - u1))
        cons = max(cons, abs((x1 - 2 * u1) - (a - 2 * b)))
    rep = TestReport("conjugacy", system, (), n_samples, seed)
    rep.add("conjugacy_max_residual", conj, conj <= tol, threshold=tol)
    rep.add("conservation_max_residual", cons, cons <= tol, threshold=tol)
    return rep


def _first_difference(a: SystemConfig, b: SystemConfig, tol: float):
    lo, hi = min(a.start, b.start), max(a.stop, b.stop)
    if hi <= lo:
        return None
    d = np.abs(a.values_between(lo, hi).astype(float) - b.values_between(lo, hi).astype(float))
    if d.ndim == 2:
        d = d.max(axis=1)
    bad = np.flatnonzero(d > tol)
    return None if bad.size == 0 else (lo + int(bad[0]), float(d[bad[0]]))


def equivalence_check(config: SystemConfig, t_steps: int, tol: float | None = None,
                      seed: int = 0) -> TestReport:
    """Evolve ``config`` by repeated carrier sweeps and by iterating the path
    operator on its encoding; report the largest site-wise difference."""
    system = config.system
    tol = DEFAULT_TOL[system] if tol is None else tol
    op = operator_for(system)
    rep = TestReport("equivalence", system, (), config.size, seed)
    sweep = config
    path = encode(config)
    worst = 0.0
    for t in range(1, t_steps + 1):
        sweep, _ = carrier_sweep(sweep)
        sweep = sweep.trimmed()
        path = iterate(path, op, 1)
        via_path = decode(path, system, config.L, config.delta)
        diff = sweep.max_abs_diff(via_path)
        worst = max(worst, diff)
        if diff > tol:
            site, d = _first_difference(sweep, via_path, tol)
            rep.notes.append(f"first disagreement at step {t}, site {site}: |diff|={d!r}")
            break
    rep.add("max_abs_diff", worst, worst <= tol, threshold=tol)
    return rep


def carrier_consistency_check(config: SystemConfig, tol: float | None = None) -> TestReport:
    """Sweep carrier mapped through ``B_n`` against ``M(S) - S`` of the unshifted
    transform, compared in path variables."""
    system = config.system
    tol = DEFAULT_TOL[system] if tol is None else tol
    _, sweep_w = carrier_sweep(config)
    path = encode(config)
    pc = carrier_process(path, K_VARIANT[system])
    vm = config.variable_map
    lo = max(sweep_w.n_lo, pc.n_lo)
    hi = min(sweep_w.n_hi, pc.n_hi)
    diff = 0.0
    for n in range(lo, hi + 1):
        diff = max(diff, abs(float(vm.B(n, sweep_w.at(n))) - float(pc.at(n))))
    rep = TestReport("carrier-consistency", system, (), hi - lo + 1, 0)
    rep.add("max_abs_diff", diff, diff <= tol, threshold=tol)
    return rep


def random_config(system: str, n_sites: int, rng: np.random.Generator) -> SystemConfig:
    """Random perturbation of a background.  Min-plus values are multiples of 1/4
    so every operation stays exact in floating point."""
    system = check_system(system)
    if system == "bbs":
        return SystemConfig("bbs", rng.integers(0, 2, n_sites), 0, start=int(rng.integers(-5, 5)))
    if system == "udkdv":
        return SystemConfig("udkdv", rng.integers(0, 9, n_sites) / 4, 0.25, start=int(rng.integers(-5, 5)), L=2.0)
    if system == "dkdv":
        return SystemConfig("dkdv", np.exp(rng.normal(0, 0.7, n_sites)), 1.0,
                            start=int(rng.integers(-5, 5)), delta=0.5)
    if system == "udtoda":
        return SystemConfig("udtoda", rng.integers(0, 9, (n_sites // 2, 2)) / 4, (0.25, 1.0),
                            start=int(rng.integers(-3, 3)))
    return SystemConfig("dtoda", np.exp(rng.normal(0, 0.7, (n_sites // 2, 2))), (1.5, 0.5),
                        start=int(rng.integers(-3, 3)))


def residual_csv(config: SystemConfig, t_steps: int) -> str:
    """Per-site differences between the two pipelines, as ``t,n,residual`` rows."""
    op = operator_for(config.system)
    buf = io.StringIO()
    buf.write("t,n,residual\n")
    sweep, path = config, encode(config)
    for t in range(1, t_steps + 1):
        sweep = carrier_sweep(sweep)[0].trimmed()
        path = iterate(path, op, 1)
        other = decode(path, config.system, config.L, config.delta)
        lo, hi = min(sweep.start, other.start), max(sweep.stop, other.stop)
        d = np.abs(sweep.values_between(lo, hi).astype(float) - other.values_between(lo, hi).astype(float))
        if d.ndim == 2:
            d = d.max(axis=1)
        for n, v in zip(range(lo, hi), d):
            buf.write(f"{t},{n},{float(v)!r}\n")
    return buf.getvalue()
