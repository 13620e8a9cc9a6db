"""Two-sided paths on finite windows, path encodings, shift and reflection.

A :class:`PathWindow` stores the increments ``x_n = S_n - S_{n-1}`` for
``n_lo < n <= n_hi`` and, outside the window, a periodic background pattern
on each side.  Background patterns are indexed by ``n % period``, so a
period-2 pattern ``(a, b)`` means ``x_n = a`` for even ``n`` and ``b`` for odd
``n``.  Storing increments rather than values keeps encode/decode round trips
exact; ``S`` is rebuilt with ``S_0 = 0``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .variables import TODA_SYSTEMS, DomainError, VariableMap, check_system

FINITE = "finite"
PERIODIC = "periodic"


def _as_pattern(bg) -> tuple:
    if np.ndim(bg) == 0:
        bg = (bg,)
    pattern = tuple(v.item() if isinstance(v, np.generic) else v for v in bg)
    if not pattern:
        raise ValueError("background pattern must be non-empty")
    return pattern


def _reduce_pattern(pattern: tuple) -> tuple:
    p = len(pattern)
    for q in range(1, p):
        if p % q == 0 and all(pattern[i] == pattern[i % q] for i in range(p)):
            return pattern[:q]
    return pattern


def _pattern_at(pattern: tuple, n):
    p = len(pattern)
    if np.ndim(n) == 0:
        return pattern[n % p]
    return np.asarray(pattern)[np.asarray(n) % p]


@dataclass(frozen=True, eq=False)
class PathWindow:
    n_lo: int
    n_hi: int
    increments: np.ndarray
    left_bg: tuple
    right_bg: tuple
    mode: str = FINITE

    def __post_init__(self):
        n_lo, n_hi = int(self.n_lo), int(self.n_hi)
        if not n_lo <= 0 <= n_hi:
            raise ValueError(f"window [{n_lo}, {n_hi}] must contain 0")
        inc = np.array(self.increments)
        if inc.ndim != 1 or inc.size != n_hi - n_lo:
            raise ValueError("need exactly n_hi - n_lo increments")
        if inc.dtype.kind not in "if":
            inc = inc.astype(float)
        inc.setflags(write=False)
        object.__setattr__(self, "n_lo", n_lo)
        object.__setattr__(self, "n_hi", n_hi)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "left_bg", _as_pattern(self.left_bg))
        object.__setattr__(self, "right_bg", _as_pattern(self.right_bg))
        if self.mode not in (FINITE, PERIODIC):
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_increments(cls, increments, left_bg, right_bg=None, n_lo: int = 0):
        """Path whose window starts at ``n_lo`` and carries ``increments``."""
        increments = np.asarray(increments)
        right_bg = left_bg if right_bg is None else right_bg
        return cls(n_lo, n_lo + increments.size, increments, left_bg, right_bg)

    @classmethod
    def periodic(cls, increments):
        """Fully periodic path repeating ``increments`` (x_1, ..., x_P)."""
        inc = np.asarray(increments)
        P = inc.size
        pattern = tuple(inc[(j - 1) % P] for j in range(P))
        return cls(0, P, inc, pattern, pattern, PERIODIC)

    @property
    def dtype(self):
        return np.result_type(self.increments, *self.left_bg, *self.right_bg)

    @cached_property
    def values(self) -> np.ndarray:
        """``S_n`` for ``n`` in ``[n_lo, n_hi]``."""
        inc = self.increments.astype(self.dtype)
        k0 = -self.n_lo
        right = np.cumsum(inc[k0:])
        left = -np.cumsum(inc[:k0][::-1])[::-1]
        out = np.concatenate([left, np.zeros(1, dtype=self.dtype), right])
        out.setflags(write=False)
        return out

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def increment(self, n):
        """``x_n`` for an arbitrary index or index array."""
        n_arr = np.asarray(n)
        if n_arr.ndim == 0:
            n = int(n)
            if n <= self.n_lo:
                return self.left_bg[n % len(self.left_bg)]
            if n > self.n_hi:
                return self.right_bg[n % len(self.right_bg)]
            return self.increments[n - self.n_lo - 1].item()
        out = np.empty(n_arr.shape, dtype=self.dtype)
        lo = n_arr <= self.n_lo
        hi = n_arr > self.n_hi
        mid = ~(lo | hi)
        out[lo] = _pattern_at(self.left_bg, n_arr[lo])
        out[hi] = _pattern_at(self.right_bg, n_arr[hi])
        out[mid] = self.increments[n_arr[mid] - self.n_lo - 1]
        return out

    def extended(self, lo: int, hi: int) -> "PathWindow":
        """Same path on the window ``[min(n_lo, lo), max(n_hi, hi)]``."""
        new_lo, new_hi = min(self.n_lo, lo), max(self.n_hi, hi)
        if new_lo == self.n_lo and new_hi == self.n_hi:
            return self
        inc = self.increment(np.arange(new_lo + 1, new_hi + 1))
        return PathWindow(new_lo, new_hi, inc, self.left_bg, self.right_bg, self.mode)

    def value(self, n: int):
        if not self.n_lo <= n <= self.n_hi:
            return self.extended(n, n).value(n)
        return self.values[n - self.n_lo].item()

    def value_range(self, a: int, b: int) -> np.ndarray:
        """``S_n`` for ``n`` in ``[a, b]``."""
        ext = self.extended(a, b)
        return ext.values[a - ext.n_lo: b - ext.n_lo + 1]

    def canonical(self) -> "PathWindow":
        """Trim background-equal increments at both ends and reduce patterns."""
        left = _reduce_pattern(self.left_bg)
        right = _reduce_pattern(self.right_bg)
        if self.mode == PERIODIC:
            return PathWindow(self.n_lo, self.n_hi, self.increments, left, right, PERIODIC)
        inc = self.increments
        ns = np.arange(self.n_lo + 1, self.n_hi + 1)
        lo_i, hi_i = 0, inc.size
        # keep increments at n >= 1 and n <= 0 as needed so the window holds 0
        while lo_i < hi_i and ns[lo_i] <= 0 and inc[lo_i] == _pattern_at(left, int(ns[lo_i])):
            lo_i += 1
        while hi_i > lo_i and ns[hi_i - 1] > 0 and inc[hi_i - 1] == _pattern_at(right, int(ns[hi_i - 1])):
            hi_i -= 1
        new_lo = self.n_lo + lo_i
        new_hi = self.n_lo + hi_i
        return PathWindow(new_lo, new_hi, inc[lo_i:hi_i], left, right, FINITE)

    def equals(self, other: "PathWindow") -> bool:
        """Exact equality as paths on all of Z."""
        a, b = self.canonical(), other.canonical()
        return (
            a.n_lo == b.n_lo
            and a.n_hi == b.n_hi
            and a.left_bg == b.left_bg
            and a.right_bg == b.right_bg
            and np.array_equal(a.increments, b.increments)
        )

    def max_abs_diff(self, other: "PathWindow") -> float:
        """Largest increment difference over a window covering both, incl. backgrounds."""
        p = math.lcm(len(self.left_bg), len(other.left_bg), len(self.right_bg), len(other.right_bg))
        lo = min(self.n_lo, other.n_lo) - p
        hi = max(self.n_hi, other.n_hi) + p
        ns = np.arange(lo + 1, hi + 1)
        return float(np.max(np.abs(np.asarray(self.increment(ns), float) - np.asarray(other.increment(ns), float))))

    def __repr__(self):
        return (f"PathWindow(n_lo={self.n_lo}, n_hi={self.n_hi}, increments={self.increments!r}, "
                f"left_bg={self.left_bg}, right_bg={self.right_bg}, mode={self.mode!r})")


@dataclass(frozen=True, eq=False)
class CarrierSeq:
    """Carrier values ``w_n`` for ``n = n_lo, ..., n_lo + len(values) - 1``.

    ``seed`` is the carrier entering from the left (index ``n_lo - 1``) and
    ``tail`` the value just right of the window, when known.
    """

    n_lo: int
    values: np.ndarray
    seed: float | int | None = None
    tail: float | int | None = None

    def __post_init__(self):
        vals = np.array(self.values)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_hi(self) -> int:
        return self.n_lo + self.values.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def at(self, n: int):
        return self.values[n - self.n_lo].item()


def shift(path: PathWindow, k: int) -> PathWindow:
    """Left shift renormalised through the origin: ``S_{n+k} - S_k``."""
    k = int(k)
    if k == 0:
        return path
    ext = path.extended(k, k)
    rot = lambda pat: tuple(pat[(j + k) % len(pat)] for j in range(len(pat)))
    return PathWindow(ext.n_lo - k, ext.n_hi - k, ext.increments, rot(ext.left_bg), rot(ext.right_bg), ext.mode)


def reflect(path: PathWindow) -> PathWindow:
    """``R(S)_n = -S_{-n}``; backgrounds swap sides."""
    flip = lambda pat: tuple(pat[(1 - j) % len(pat)] for j in range(len(pat)))
    return PathWindow(-path.n_hi, -path.n_lo, path.increments[::-1], flip(path.right_bg),
                      flip(path.left_bg), path.mode)


def reflect_carrier(w: CarrierSeq) -> CarrierSeq:
    """``W_n -> W_{-n}``."""
    return CarrierSeq(-w.n_hi, w.values[::-1], seed=w.tail, tail=w.seed)


def check_slin(path: PathWindow) -> bool:
    """True iff the mean background increment is strictly positive on both sides."""
    return bool(sum(path.left_bg) > 0 and sum(path.right_bg) > 0)


# --- configurations ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Finite perturbation of a constant background for one of the five systems.

    For KdV-type systems ``sites[i]`` sits at lattice index ``start + i``.  For
    Toda-type systems ``sites`` has shape ``(N, 2)`` holding ``(Q, E)`` or
    ``(I, J)`` pairs and ``start`` is the index of the first pair; pair ``k``
    occupies lattice sites ``2k - 1`` and ``2k``.
    """

    system: str
    sites: np.ndarray
    background: object = 0
    start: int = 1
    L: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        system = check_system(self.system)
        object.__setattr__(self, "system", system)
        toda = system in TODA_SYSTEMS
        if system == "bbs":
            sites = np.asarray(self.sites, dtype=np.int8).reshape(-1)
            if np.any((sites != 0) & (sites != 1)):
                raise DomainError("BBS site values must be 0 or 1")
            bg = int(self.background)
            if bg != 0:
                raise DomainError("BBS background must be empty (0) for positive drift")
        elif toda:
            sites = np.asarray(self.sites, dtype=float).reshape(-1, 2)
            bg = tuple(float(v) for v in self.background)
            if len(bg) != 2:
                raise ValueError("Toda background must be a pair")
        else:
            sites = np.asarray(self.sites, dtype=float).reshape(-1)
            bg = float(self.background)
        if system in ("dkdv", "dtoda"):
            if np.any(~(sites > 0)):
                raise DomainError("site values must be strictly positive",
                                  site=int(np.flatnonzero(~(sites.ravel() > 0))[0]))
            if np.any(~(np.asarray(bg) > 0)):
                raise DomainError("background values must be strictly positive")
        if system == "udkdv" and not bg < self.L / 2:
            raise DomainError(f"udKdV background {bg} must be below L/2 = {self.L / 2}")
        if system == "dkdv" and not self.delta > 0:
            raise DomainError("delta must be positive")
        sites.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "background", bg)
        object.__setattr__(self, "start", int(self.start))

    @property
    def is_toda(self) -> bool:
        return self.system in TODA_SYSTEMS

    @property
    def variable_map(self) -> VariableMap:
        return VariableMap(self.system, self.L, self.delta)

    @property
    def size(self) -> int:
        return self.sites.shape[0]

    @property
    def stop(self) -> int:
        """Index one past the last site (or pair)."""
        return self.start + self.size

    def replace(self, sites, start=None, background=None) -> "SystemConfig":
        return SystemConfig(self.system, sites, self.background if background is None else background,
                            self.start if start is None else start, self.L, self.delta)

    def values_between(self, lo: int, hi: int) -> np.ndarray:
        """Site values (pairs for Toda) for site indices ``lo..hi-1``, background-filled."""
        n = hi - lo
        shape = (n, 2) if self.is_toda else (n,)
        out = np.empty(shape, dtype=self.sites.dtype)
        out[...] = self.background
        a, b = max(lo, self.start), min(hi, self.stop)
        if a < b:
            out[a - lo:b - lo] = self.sites[a - self.start:b - self.start]
        return out

    def trimmed(self) -> "SystemConfig":
        """Drop leading and trailing sites equal to the background."""
        bg = np.asarray(self.background)
        if self.is_toda:
            same = np.all(self.sites == bg, axis=1)
        else:
            same = self.sites == bg
        keep = np.flatnonzero(~same)
        if keep.size == 0:
            return self.replace(self.sites[:0], start=self.start)
        return self.replace(self.sites[keep[0]:keep[-1] + 1], start=self.start + int(keep[0]))

    def max_abs_diff(self, other: "SystemConfig") -> float:
        """Largest site-wise difference over the union of both windows."""
        lo = min(self.start, other.start)
        hi = max(self.stop, other.stop)
        if hi <= lo:
            return float(np.max(np.abs(np.asarray(self.background, float) - np.asarray(other.background, float))))
        a = self.values_between(lo, hi).astype(float)
        b = other.values_between(lo, hi).astype(float)
        d = np.abs(a - b)
        bgd = np.abs(np.asarray(self.background, float) - np.asarray(other.background, float))
        return float(max(d.max(), np.max(bgd)))

    def equals(self, other: "SystemConfig") -> bool:
        return self.system == other.system and self.max_abs_diff(other) == 0.0


def _lattice_indices(config: SystemConfig) -> np.ndarray:
    if config.is_toda:
        return np.arange(2 * config.start - 1, 2 * config.stop - 1)
    return np.arange(config.start, config.stop)


def encode(config: SystemConfig) -> PathWindow:
    """Path with ``S_0 = 0`` whose increments are ``A_n`` of the site values."""
    vm = config.variable_map
    ns = _lattice_indices(config)
    z = config.sites.reshape(-1)
    x = vm.A(ns, z) if ns.size else np.zeros(0, dtype=np.int64 if config.system == "bbs" else float)
    if config.is_toda:
        q_bg, e_bg = config.background
        bg = (vm.A(0, e_bg), vm.A(1, q_bg))
    else:
        bg = (vm.A(0, config.background),)
    bg = tuple(v.item() if isinstance(v, np.generic) else v for v in bg)
    first = int(ns[0]) - 1 if ns.size else 0
    path = PathWindow(first, first + ns.size, x, bg, bg) if first <= 0 <= first + ns.size else None
    if path is None:
        lo, hi = min(first, 0), max(first + ns.size, 0)
        inc = np.empty(hi - lo, dtype=np.result_type(x, *bg))
        idx = np.arange(lo + 1, hi + 1)
        inc[:] = _pattern_at(bg, idx)
        inc[first - lo:first - lo + ns.size] = x
        path = PathWindow(lo, hi, inc, bg, bg)
    return path


def decode(path: PathWindow, system: str, L: float = 1.0, delta: float = 1.0) -> SystemConfig:
    """Inverse of :func:`encode`; requires matching left and right backgrounds."""
    system = check_system(system)
    vm = VariableMap(system, L, delta)
    left, right = _reduce_pattern(path.left_bg), _reduce_pattern(path.right_bg)
    if left != right:
        raise DomainError(f"left background {left} differs from right background {right}")
    if system in TODA_SYSTEMS:
        lo = path.n_lo - 1 if path.n_lo % 2 else path.n_lo
        hi = path.n_hi + (path.n_hi % 2)
        path = path.extended(lo, hi)
        ns = np.arange(path.n_lo + 1, path.n_hi + 1)
        z = vm.A_inv(ns, path.increments).reshape(-1, 2)
        bg = (float(vm.A_inv(1, _pattern_at(left, 1))), float(vm.A_inv(0, _pattern_at(left, 0))))
        return SystemConfig(system, z, bg, (path.n_lo + 2) // 2, L, delta)
    if len(left) != 1:
        raise DomainError(f"{system} paths need a period-1 background, got {left}")
    ns = np.arange(path.n_lo + 1, path.n_hi + 1)
    z = vm.A_inv(ns, path.increments) if ns.size else np.zeros(0)
    bg = vm.A_inv(0, left[0])
    bg = bg.item() if isinstance(bg, np.generic) else bg
    return SystemConfig(system, z, bg, path.n_lo + 1, L, delta)


# --- serialisation -------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _parse_num(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def write_path_csv(path: PathWindow, fh=None) -> str:
    """One ``n,S_n`` row per window index after ``#key=value`` header lines."""
    buf = io.StringIO()
    buf.write(f"# n_lo={path.n_lo}\n# n_hi={path.n_hi}\n# mode={path.mode}\n")
    buf.write(f"# left_bg={';'.join(_fmt(v) for v in path.left_bg)}\n")
    buf.write(f"# right_bg={';'.join(_fmt(v) for v in path.right_bg)}\n")
    buf.write("n,S\n")
    for n, s in zip(path.indices, path.values):
        buf.write(f"{n},{_fmt(s)}\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_path_csv(text_or_fh) -> PathWindow:
    text = text_or_fh if isinstance(text_or_fh, str) else text_or_fh.read()
    meta, rows = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        elif line and line[0] != "n":
            n, s = line.split(",")
            rows.append((int(n), _parse_num(s)))
    vals = np.array([s for _, s in rows])
    left = tuple(_parse_num(t) for t in meta["left_bg"].split(";"))
    right = tuple(_parse_num(t) for t in meta["right_bg"].split(";"))
    return PathWindow(int(meta["n_lo"]), int(meta["n_hi"]), np.diff(vals), left, right, meta["mode"])
