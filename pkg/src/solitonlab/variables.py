"""Per-system change of variables between lattice values and path increments.

Each system has a site map ``A_n`` (configuration value -> path increment)
and a carrier map ``B_n`` (carrier value -> Pitman carrier ``M - S``).  The
Toda maps depend on the parity of the lattice index ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SYSTEMS = ("bbs", "udkdv", "dkdv", "udtoda", "dtoda")
TODA_SYSTEMS = frozenset({"udtoda", "dtoda"})
LOG_SYSTEMS = frozenset({"dkdv", "dtoda"})


class DomainError(ValueError):
    """A value fell outside the domain of a lattice map."""

    def __init__(self, message: str, site=None, step=None):
        where = []
        if step is not None:
            where.append(f"step {step}")
        if site is not None:
            where.append(f"site {site}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.site = site
        self.step = step


def check_system(system: str) -> str:
    system = system.lower()
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}; expected one of {', '.join(SYSTEMS)}")
    return system


def _parity_sign(n):
    """(-1)**n for integer or integer-array n."""
    return np.where(np.asarray(n) % 2 == 0, 1, -1) if np.ndim(n) else (1 if n % 2 == 0 else -1)


def _require_positive(values, what):
    arr = np.asarray(values, dtype=float)
    if np.any(~(arr > 0)):
        bad = int(np.flatnonzero(~(arr.ravel() > 0))[0]) if arr.ndim else None
        raise DomainError(f"{what} must be strictly positive", site=bad)


@dataclass(frozen=True)
class VariableMap:
    """Site and carrier maps for one system.

    ``L`` is the udKdV box capacity, ``delta`` the dKdV parameter; other
    systems ignore them.
    """

    system: str
    L: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "system", check_system(self.system))
        if self.system == "dkdv" and not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def m(self) -> int:
        """Spatial shift of the lattice update."""
        return 1 if self.system in TODA_SYSTEMS else 0

    # site map A_n and its inverse
    def A(self, n, z):
        s = self.system
        if s == "bbs":
            z = np.asarray(z)
            if np.any((z != 0) & (z != 1)):
                raise DomainError("BBS site values must be 0 or 1")
            return 1 - 2 * z.astype(np.int64) if z.ndim else int(1 - 2 * int(z))
        if s == "udkdv":
            return self.L - 2 * np.asarray(z, dtype=float) if np.ndim(z) else self.L - 2 * float(z)
        if s == "dkdv":
            _require_positive(z, "dKdV site values")
            return -math.log(self.delta) - 2 * np.log(z)
        if s == "udtoda":
            return _parity_sign(n) * np.asarray(z, dtype=float) if np.ndim(z) else _parity_sign(n) * float(z)
        _require_positive(z, "dToda site values")
        return -_parity_sign(n) * np.log(z)

    def A_inv(self, n, x):
        s = self.system
        if s == "bbs":
            x = np.asarray(x)
            if np.any((x != 1) & (x != -1)):
                raise DomainError("BBS path increments must be +1 or -1")
            z = ((1 - x) // 2).astype(np.int8) if x.ndim else int((1 - int(x)) // 2)
            return z
        if s == "udkdv":
            return (self.L - np.asarray(x, dtype=float)) / 2 if np.ndim(x) else (self.L - float(x)) / 2
        if s == "dkdv":
            return np.exp((-math.log(self.delta) - np.asarray(x, dtype=float)) / 2)
        if s == "udtoda":
            return _parity_sign(n) * np.asarray(x, dtype=float) if np.ndim(x) else _parity_sign(n) * float(x)
        return np.exp(-_parity_sign(n) * np.asarray(x, dtype=float))

    # carrier map B_n and its inverse
    def B(self, n, w):
        s = self.system
        if s in ("bbs", "udtoda"):
            return w
        if s == "udkdv":
            return np.asarray(w, dtype=float) - self.L / 2 if np.ndim(w) else float(w) - self.L / 2
        _require_positive(w, "carrier values")
        if s == "dkdv":
            return np.log(w) + math.log(self.delta) / 2
        return -np.log(w)

    def B_inv(self, n, u):
        s = self.system
        if s in ("bbs", "udtoda"):
            return u
        if s == "udkdv":
            return np.asarray(u, dtype=float) + self.L / 2 if np.ndim(u) else float(u) + self.L / 2
        if s == "dkdv":
            return np.exp(np.asarray(u, dtype=float) - math.log(self.delta) / 2)
        return np.exp(-np.asarray(u, dtype=float))


def site_to_K_vars(system, n, z, L=1.0, delta=1.0):
    return VariableMap(system, L, delta).A(n, z)


def K_to_site_vars(system, n, x, L=1.0, delta=1.0):
    return VariableMap(system, L, delta).A_inv(n, x)


def carrier_to_K_vars(system, n, w, L=1.0, delta=1.0):
    return VariableMap(system, L, delta).B(n, w)


def K_to_carrier_vars(system, n, u, L=1.0, delta=1.0):
    return VariableMap(system, L, delta).B_inv(n, u)
