"""Pitman-type transforms ``T S = 2 M(S) - S - 2 M(S)_0`` on representable paths.

Five functionals ``M`` are supported.  All of them are running aggregates
``R_n = agg_{m <= n, m in I} g_m`` of a per-index term ``g``:

===============  ==========================  ===========  ========
variant          g_m                         I            agg
===============  ==========================  ===========  ========
MAX_PAST         S_m                         all m        max
MAX_AVG_PAST     (S_m + S_{m-1}) / 2         all m        max
LOG_SUM_AVG      (S_m + S_{m-1}) / 2         all m        logsumexp
MAX_EVEN_PAST    S_m                         even m       max
LOG_SUM_EVEN     S_m                         even m       logsumexp
===============  ==========================  ===========  ========

For the even variants ``M_n = R_n`` at odd ``n`` and ``M_n = (R_n + R_{n-1})/2``
at even ``n``.  The infinite left tail is a periodic background with positive
ascent ``D`` per period, so its aggregate is exact: the max is attained in the
last period, and the sum is the last period's sum divided by ``1 - exp(-D)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .paths import PERIODIC, CarrierSeq, PathWindow, _pattern_at, _reduce_pattern, check_slin, reflect, shift

_EPS = np.finfo(float).eps


class Variant(str, Enum):
    MAX_PAST = "maxpast"
    MAX_AVG_PAST = "maxavg"
    LOG_SUM_AVG = "logsumavg"
    MAX_EVEN_PAST = "maxeven"
    LOG_SUM_EVEN = "logsumeven"

    @property
    def is_sum(self) -> bool:
        return self in (Variant.LOG_SUM_AVG, Variant.LOG_SUM_EVEN)

    @property
    def is_even(self) -> bool:
        return self in (Variant.MAX_EVEN_PAST, Variant.LOG_SUM_EVEN)

    @property
    def is_avg(self) -> bool:
        return self in (Variant.MAX_AVG_PAST, Variant.LOG_SUM_AVG)


@dataclass(frozen=True)
class OperatorVariant:
    tag: Variant
    shifted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tag", Variant(self.tag))
        if self.shifted and not self.tag.is_even:
            raise ValueError(f"the shifted form is only defined for even variants, not {self.tag.value}")

    def __str__(self):
        return self.tag.value + ("+shift" if self.shifted else "")


def as_operator(variant, shifted: bool | None = None) -> OperatorVariant:
    if isinstance(variant, OperatorVariant):
        if shifted is None or shifted == variant.shifted:
            return variant
        return OperatorVariant(variant.tag, shifted)
    if isinstance(variant, str) and variant.endswith("+shift"):
        return OperatorVariant(Variant(variant[:-6]), True)
    return OperatorVariant(Variant(variant), bool(shifted))


def _period(pattern: tuple, tag: Variant) -> int:
    return math.lcm(len(pattern), 2 if tag.is_even else 1)


def _terms(S: np.ndarray, ns: np.ndarray, tag: Variant) -> np.ndarray:
    """g_m for m in ns, given S on [ns[0] - 1, ns[-1]]."""
    if tag.is_avg:
        return (S[1:] + S[:-1]) / 2
    g = S[1:]
    if tag.is_even:
        g = np.where(ns % 2 == 0, g.astype(float), -np.inf)
    return g


def _local_aggregate(g: np.ndarray, S: np.ndarray, P: int, tag: Variant) -> np.ndarray:
    """Aggregate of the last ``P`` terms, extended to the whole periodic past.

    ``g[i]`` and ``S[i]`` are aligned; entry ``i >= P`` of the result is valid.
    """
    n = g.size
    out = np.full(n, np.nan)
    if n <= P:
        return out
    stack = np.stack([g[P - j:n - j] for j in range(P)])
    if tag.is_sum:
        D = (S[P:] - S[:-P]).astype(float)
        top = np.max(stack, axis=0)
        lse = top + np.log(np.sum(np.exp(stack - top), axis=0))
        out = out.astype(float)
        out[P:] = lse - np.log(-np.expm1(-D))
    else:
        out = out.astype(np.result_type(g, float))
        out[P:] = np.max(stack, axis=0)
    return out


def _aggregate(first, g: np.ndarray, tag: Variant) -> np.ndarray:
    seq = np.concatenate([np.asarray([first], dtype=np.result_type(first, g)), g])
    if tag.is_sum:
        return np.logaddexp.accumulate(seq.astype(float))[1:]
    return np.maximum.accumulate(seq)[1:]


def _run(path: PathWindow, tag: Variant, max_extension: int = 1 << 22):
    """M and S over ``[n_lo, n_end]`` where ``n_end >= n_hi`` is far enough right
    that the carrier has settled onto the right background's stationary value."""
    if not check_slin(path):
        raise ValueError("path is not asymptotically linear with positive slopes (background drift <= 0)")
    PL = _period(path.left_bg, tag)
    PR = _period(path.right_bg, tag)
    t0 = path.n_lo - 1
    # tail aggregate at t0 and t0 - 1 from the last left-background period
    ns_tail = np.arange(t0 - PL - 1, t0 + 1)
    S_tail = path.value_range(int(ns_tail[0]) - 1, t0)
    g_tail = _terms(S_tail, ns_tail, tag)
    R_tail = _local_aggregate(g_tail, S_tail[1:], PL, tag)
    r_prev, r_t0 = R_tail[-2], R_tail[-1]
    ext = max(16, path.n_hi - path.n_lo)
    while True:
        n_end = path.n_hi + PR + 1 + ext
        ns = np.arange(t0 + 1, n_end + 1)
        S = path.value_range(t0, n_end)
        g = _terms(S, ns, tag)
        R = _aggregate(r_t0, g, tag)
        # settle check on the right background
        k0 = path.n_hi - t0  # position of n_hi in ns-based arrays
        loc = _local_aggregate(g[k0:], S[k0 + 1:], PR, tag)
        tail_R = R[k0:]
        if tag.is_sum:
            ok = np.abs(tail_R - loc) <= 64 * _EPS * np.maximum(1.0, np.abs(tail_R))
        else:
            ok = tail_R == loc
        ok[:PR] = False
        both = ok[1:] & ok[:-1]
        hits = np.flatnonzero(both)
        if hits.size:
            cut = k0 + int(hits[0]) + 1  # index into ns of the settled point
            break
        if ext > max_extension:
            raise RuntimeError("carrier did not settle on the right background")
        ext *= 4
    R = R[:cut + 1]
    ns = ns[:cut + 1]
    S_out = S[1:cut + 2]
    R_full = np.concatenate([[r_t0], R])  # R at t0 .. n_end
    if tag.is_even:
        M = np.where(ns % 2 == 1, R_full[1:], (R_full[1:] + R_full[:-1]) / 2)
    else:
        M = R
    # window starts at n_lo = t0 + 1
    return path.n_lo, int(ns[-1]), M, S_out, (r_prev, r_t0)


def max_functional(path: PathWindow, variant) -> np.ndarray:
    """``M(S)_n`` for every ``n`` in the path's window."""
    op = as_operator(variant)
    lo, _, M, _, _ = _run(path, op.tag)
    return M[: path.n_hi - lo + 1]


def _background_transform(pattern: tuple, tag: Variant) -> tuple:
    """Increments of ``T`` applied to the pure periodic path with this pattern."""
    P = _period(pattern, tag)
    pure = PathWindow(0, 0, np.zeros(0, dtype=np.result_type(*pattern)), pattern, pattern)
    lo = -3 * P - 2
    ns = np.arange(lo + 1, P + 1)
    S = pure.value_range(lo, P)
    g = _terms(S, ns, tag)
    R = _local_aggregate(g, S[1:], P, tag)
    idx = np.arange(ns.size)
    valid = idx >= P
    R, ns_v, S_v = R[valid], ns[valid], S[1:][valid]
    if tag.is_even:
        M = np.where(ns_v[1:] % 2 == 1, R[1:], (R[1:] + R[:-1]) / 2)
        ns_v, S_v = ns_v[1:], S_v[1:]
    else:
        M = R
    x_new = 2 * np.diff(M) - np.diff(S_v)
    ns_x = ns_v[1:]
    out = [None] * P
    for n, v in zip(ns_x, x_new):
        if out[n % P] is None:
            out[n % P] = v.item()
    if tag is Variant.MAX_PAST and all(isinstance(p, int) for p in pattern):
        out = [int(v) for v in out]
    return _reduce_pattern(tuple(out))


def _transform_unshifted(path: PathWindow, tag: Variant) -> PathWindow:
    lo, hi, M, S, _ = _run(path, tag)
    M0 = M[-lo]
    TS = 2 * M - S - 2 * M0
    inc = np.diff(TS)
    if tag is Variant.MAX_PAST and np.issubdtype(path.dtype, np.integer):
        inc = inc.astype(np.int64)
    left = _background_transform(path.left_bg, tag)
    right = _background_transform(path.right_bg, tag)
    return PathWindow(lo, hi, inc, left, right)


def transform(path: PathWindow, variant) -> PathWindow:
    """Apply ``T`` (or its shifted form ``theta T - (theta T)_0``) to ``path``."""
    op = as_operator(variant)
    out = _transform_unshifted(path, op.tag)
    if op.shifted:
        out = shift(out, 1)
    out = out.canonical()
    if path.mode == PERIODIC:
        pat = out.right_bg
        P = len(pat)
        out = PathWindow.periodic([pat[n % P] for n in range(1, P + 1)])
    return out


def inverse_transform(path: PathWindow, variant) -> PathWindow:
    """Inverse realised by conjugation with the reflection ``R``.

    For the shifted form the unit shift is undone first, since ``R T R``
    inverts ``T`` but ``R theta R`` is ``theta^{-1}`` on the other side.
    """
    op = as_operator(variant)
    if op.shifted:
        path = shift(path, -1)
    return reflect(transform(reflect(path), op.tag)).canonical()


def iterate(path: PathWindow, variant, steps: int) -> PathWindow:
    op = as_operator(variant)
    fn = transform if steps >= 0 else inverse_transform
    for _ in range(abs(steps)):
        path = fn(path, op)
    return path


def carrier_process(path: PathWindow, variant, system: str | None = None,
                    L: float = 1.0, delta: float = 1.0) -> CarrierSeq:
    """``W_n = M(S)_n - S_n`` over the window.

    With ``system`` given, values are mapped back to that system's carrier
    variables (e.g. ``U = W + L/2`` for udKdV).
    """
    op = as_operator(variant)
    lo, hi, M, S, (r_prev, r_t0) = _run(path, op.tag)
    W = M - S
    size = path.n_hi - lo + 1
    # left seed W_{n_lo-1}: stationary background value
    t0 = lo - 1
    if op.tag.is_even:
        m_seed = r_t0 if t0 % 2 else (r_t0 + r_prev) / 2
    else:
        m_seed = r_t0
    seed = m_seed - path.value(t0)
    tail = W[size] if size < W.size else None
    vals = W[:size]
    if system is not None:
        from .variables import VariableMap

        vm = VariableMap(system, L, delta)
        idx = np.arange(lo, lo + size)
        vals = np.asarray(vm.B_inv(idx, vals))
        seed = vm.B_inv(t0, seed)
        tail = None if tail is None else vm.B_inv(lo + size, tail)
    scalar = lambda v: v.item() if isinstance(v, np.generic) else v
    return CarrierSeq(lo, vals, scalar(seed), scalar(tail))
