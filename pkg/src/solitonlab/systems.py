"""Locally-defined dynamics: per-site F maps, K maps, carrier sweeps, evolution."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .paths import CarrierSeq, SystemConfig
from .pitman import Variant
from .variables import TODA_SYSTEMS, DomainError, check_system

_EPS = np.finfo(float).eps


class WindowCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class LocalMapSpec:
    """Which local map to apply.  Toda systems alternate the half map ``F*`` at
    even lattice sites with its inverse at odd sites and shift outputs by one."""

    system: str
    L: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "system", check_system(self.system))

    @property
    def m(self) -> int:
        return 1 if self.system in TODA_SYSTEMS else 0

    @classmethod
    def of(cls, config: SystemConfig) -> "LocalMapSpec":
        return cls(config.system, config.L, config.delta)


# --- KdV-type local maps --------------------------------------------------


def _f_bbs(eta: int, W: int):
    if eta:
        return 0, W + 1
    if W > 0:
        return 1, W - 1
    return 0, 0


def _f_udkdv(eta: float, U: float, L: float):
    room = L - eta
    if U <= room:
        return U, eta
    return room, eta + U - room


def _f_dkdv_log(p: float, q: float, log_delta: float):
    """dKdV map on (log omega, log U)."""
    a, b = log_delta + p, -q
    p_new = -(a + math.log1p(math.exp(b - a)) if a > b else b + math.log1p(math.exp(a - b)))
    return p_new, p + q - p_new


# --- Toda half maps -------------------------------------------------------


def udtoda_half(b: float, c: float):
    """``F_udT*``: (E, U) -> (new Q, even-site carrier)."""
    lo = b if b < c else c
    return lo, c - b / 2 - lo / 2


def udtoda_half_inverse(z: float, w: float):
    """Inverse of :func:`udtoda_half`; applied at odd sites to (Q, carrier)."""
    if w >= 0:
        return z, z + w
    return z - 2 * w, z


def dtoda_half(b: float, c: float):
    """``F_dT*``: (J, U) -> (new I, even-site carrier)."""
    s = b + c
    return s, c / math.sqrt(b * s)


def dtoda_half_inverse(z: float, w: float):
    r = math.sqrt(w * w + 4) + w
    return 4 * z / (r * r), 2 * z * w / r


def udtoda_full(a: float, b: float, c: float):
    """``(Q_{n+1}, E_n, U_n) -> (Q_n', E_n', U_{n+1})`` as printed, without halves."""
    q_new = min(c, b)
    return q_new, a + b - q_new, c + a - q_new


def dtoda_full(a: float, b: float, c: float):
    """``(I_{n+1}, J_n, U_n) -> (I_n', J_n', U_{n+1})``."""
    i_new = b + c
    return i_new, a * b / i_new, a * c / i_new


_HALF = {"udtoda": (udtoda_half, udtoda_half_inverse), "dtoda": (dtoda_half, dtoda_half_inverse)}


def local_F(spec: LocalMapSpec, z, w, n: int | None = None):
    """One application of the local map: ``(z, w_in) -> (z_next, w_out)``.

    For Toda systems the lattice index ``n`` selects ``F*`` (even) or its
    inverse (odd); ``n=None`` means ``F*``.
    """
    s = spec.system
    if s == "bbs":
        if z not in (0, 1) or int(w) != w or w < 0:
            raise DomainError("BBS map needs eta in {0,1} and an integer carrier >= 0", site=n)
        return _f_bbs(int(z), int(w))
    if s == "udkdv":
        return _f_udkdv(float(z), float(w), spec.L)
    if s == "dkdv":
        if not (z > 0 and w > 0):
            raise DomainError("dKdV map needs positive inputs", site=n)
        p, q = _f_dkdv_log(math.log(z), math.log(w), math.log(spec.delta))
        return math.exp(p), math.exp(q)
    if s == "dtoda" and not (z > 0 and w > 0):
        raise DomainError("dToda map needs positive inputs", site=n)
    fwd, inv = _HALF[s]
    if n is None or n % 2 == 0:
        return fwd(float(z), float(w))
    return inv(float(z), float(w))


def toda_map(system: str, a, b, c):
    """The three-in/three-out Toda map composed from its two half maps."""
    fwd, inv = _HALF[check_system(system)]
    q_new, v = fwd(b, c)
    e_new, u_next = inv(a, v)
    return q_new, e_new, u_next


# --- K maps ---------------------------------------------------------------


def _lae(x, y):
    return np.logaddexp(x, y)


def local_K(variant, a, b):
    """The five conservative maps on path variables; arrays broadcast."""
    v = Variant(variant)
    a = np.asarray(a)
    b = np.asarray(b)
    if v is Variant.MAX_PAST:
        m = np.minimum(a, 2 * b - 1)
        if np.issubdtype(np.result_type(a, b), np.integer):
            return -m, b - (a + m) // 2
        return -m, b - a / 2 - m / 2
    if v is Variant.MAX_AVG_PAST:
        m = np.minimum(a, 2 * b)
        return -m, b - a / 2 - m / 2
    if v is Variant.LOG_SUM_AVG:
        s = _lae(-a / 2, -b)
        return 2 * s, b - a / 2 + s
    if v is Variant.MAX_EVEN_PAST:
        m = np.minimum(a, b)
        return -m, b - a / 2 - m / 2
    s = _lae(-a, -b)
    return s, b - a / 2 + s / 2


def local_K_inverse(variant, x, u):
    """Inverse of the even-type K maps (used at odd lattice sites)."""
    v = Variant(variant)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if v is Variant.MAX_EVEN_PAST:
        pos = u >= 0
        return np.where(pos, -x, -x - 2 * u), np.where(pos, u - x, -x)
    if v is Variant.LOG_SUM_EVEN:
        # asinh(e^{-u}/2), written to stay finite for very negative u
        t = np.where(u > -600, np.arcsinh(np.exp(-np.maximum(u, -600)) / 2), -u)
        return -x + 2 * t, -x + u + t
    raise ValueError(f"no inverse K map is used for {v.value}")


def conservation_residual(variant, a, b):
    """``K1(a,b) - 2 K2(a,b) - (a - 2b)``; zero up to rounding for every variant."""
    k1, k2 = local_K(variant, a, b)
    return k1 - 2 * k2 - (np.asarray(a) - 2 * np.asarray(b))


# --- stationary background carriers --------------------------------------


def background_carrier(config: SystemConfig):
    """Carrier fixed point of the background recursion (original variables).

    For Toda systems returns ``(odd-site carrier U, even-site carrier)``.
    """
    s = config.system
    bg = config.background
    if s == "bbs":
        return 0
    if s == "udkdv":
        return bg
    if s == "dkdv":
        return bg / (1 - config.delta * bg * bg)
    q, e = bg
    if s == "udtoda":
        return q, (q - e) / 2
    return q - e, (q - e) / math.sqrt(q * e)


def _settled(w: float, w_star: float, exact: bool) -> bool:
    if exact:
        return w == w_star
    return abs(w - w_star) <= 64 * _EPS * max(abs(w_star), 1e-300)


# --- sweeps ---------------------------------------------------------------


def _sweep_kdv(config: SystemConfig, seed, extend: bool, max_sites: int):
    s = config.system
    L, log_delta = config.L, math.log(config.delta)
    w_star = background_carrier(config)
    bg = config.background
    exact = s != "dkdv"
    sites = config.sites.tolist()
    out, carriers = [], []
    if s == "dkdv":
        f = lambda z, w: _f_dkdv_log(z, w, log_delta)
        sites = [math.log(v) for v in sites]
        bg_in, w = math.log(bg), math.log(seed)
        w_star_cmp = math.log(w_star)
    elif s == "bbs":
        f, bg_in, w, w_star_cmp = _f_bbs, 0, int(seed), 0
    else:
        f = lambda z, w: _f_udkdv(z, w, L)
        bg_in, w, w_star_cmp = bg, float(seed), w_star
    for k, z in enumerate(sites):
        z_new, w = f(z, w)
        out.append(z_new)
        carriers.append(w)
    if extend:
        chunk = max(16, len(sites))
        n_extra = 0
        while not _settled(w, w_star_cmp, exact):
            for _ in range(chunk):
                z_new, w = f(bg_in, w)
                out.append(z_new)
                carriers.append(w)
                n_extra += 1
                if _settled(w, w_star_cmp, exact):
                    break
            if len(out) > max_sites:
                raise WindowCapExceeded(f"window grew beyond {max_sites} sites")
    if s == "dkdv":
        out = np.exp(out)
        carriers = np.exp(carriers)
        seed_out = seed
    else:
        seed_out = seed
    new = config.replace(np.asarray(out, dtype=config.sites.dtype) if s == "bbs" else np.asarray(out, float))
    tail = w_star if extend else None
    return new, CarrierSeq(config.start, np.asarray(carriers), seed_out, tail)


def _sweep_toda(config: SystemConfig, seed, extend: bool, max_sites: int, lead: bool = True):
    fwd, inv = _HALF[config.system]
    U_star, v_star = background_carrier(config)
    exact = config.system == "udtoda"
    q_bg, e_bg = config.background
    sites = config.sites
    N = sites.shape[0]
    U = float(seed)
    pairs, carriers = [], []
    # pair k = start-1+i uses E_k and Q_{k+1}; i = 0 is the background pair left of the window
    i = 0 if lead else 1
    while True:
        j = i - 1  # index into sites of pair k
        e = sites[j, 1] if 0 <= j < N else e_bg
        q_next = sites[j + 1, 0] if 0 <= j + 1 < N else q_bg
        q_new, v = fwd(float(e), U)
        e_new, U = inv(float(q_next), v)
        pairs.append((q_new, e_new))
        carriers.append(v)
        carriers.append(U)
        i += 1
        if i > N:
            if not extend:
                break
            if _settled(U, U_star, exact) and _settled(v, v_star, exact):
                break
            if i > max_sites:
                raise WindowCapExceeded(f"window grew beyond {max_sites} pairs")
    first = config.start - 1 if lead else config.start
    new = config.replace(np.asarray(pairs, float).reshape(-1, 2), start=first)
    lattice_lo = 2 * first
    return new, CarrierSeq(lattice_lo, np.asarray(carriers), float(seed), U_star if extend else None)


def carrier_sweep(config: SystemConfig, w_seed=None, extend: bool = True, max_sites: int = 10**7,
                  lead: bool = True):
    """One left-to-right pass producing the next configuration and the carrier.

    ``w_seed`` is the carrier entering the window (default: the background
    fixed point).  With ``extend`` the pass continues into the right background
    until the carrier has returned to its background value, so the returned
    configuration is exact on all of Z.  Toda outputs start one pair further
    left because of the unit spatial shift; ``lead=False`` skips that leading
    background pair so ``w_seed`` enters the first window pair directly.
    """
    if config.is_toda:
        seed = background_carrier(config)[0] if w_seed is None else w_seed
        return _sweep_toda(config, seed, extend, max_sites, lead)
    seed = background_carrier(config) if w_seed is None else w_seed
    return _sweep_kdv(config, seed, extend, max_sites)


def evolve(config: SystemConfig, t_steps: int, max_sites: int = 10**6) -> list[SystemConfig]:
    """Trajectory ``[config, F(config), ...]`` of length ``t_steps + 1``."""
    if t_steps < 0:
        raise ValueError("t_steps must be >= 0")
    traj = [config]
    cur = config
    for t in range(t_steps):
        try:
            cur, _ = carrier_sweep(cur, max_sites=max_sites)
        except DomainError as exc:
            raise DomainError(str(exc), site=exc.site, step=t) from None
        except WindowCapExceeded as exc:
            raise WindowCapExceeded(f"{exc} at step {t + 1}") from None
        cur = cur.trimmed()
        if cur.size > max_sites:
            raise WindowCapExceeded(f"window grew beyond {max_sites} sites at step {t + 1}")
        traj.append(cur)
    return traj


# --- output formats -------------------------------------------------------


def _span(traj, lo, hi):
    if lo is None:
        lo = min(c.start for c in traj)
    if hi is None:
        hi = max(c.stop for c in traj)
    return lo, max(lo, hi)


def spacetime_diagram(traj: list[SystemConfig], lo: int | None = None, hi: int | None = None,
                      glyphs: str = ".o") -> str:
    """Text diagram for a BBS trajectory: one row per time step."""
    if traj and traj[0].system != "bbs":
        raise ValueError("spacetime diagrams are defined for the box-ball system only")
    lo, hi = _span(traj, lo, hi)
    rows = []
    for c in traj:
        vals = c.values_between(lo, hi)
        rows.append("".join(glyphs[int(v)] for v in vals))
    return "\n".join(rows) + "\n"


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trajectory_csv(traj: list[SystemConfig], lo: int | None = None, hi: int | None = None) -> str:
    """CSV with columns ``t,n,value`` (``t,n,Q,E`` / ``t,n,I,J`` for Toda)."""
    lo, hi = _span(traj, lo, hi)
    buf = io.StringIO()
    sys0 = traj[0].system
    header = {"udtoda": "t,n,Q,E", "dtoda": "t,n,I,J"}.get(sys0, "t,n,value")
    buf.write(header + "\n")
    for t, c in enumerate(traj):
        vals = c.values_between(lo, hi)
        for n, v in zip(range(lo, hi), vals):
            if c.is_toda:
                buf.write(f"{t},{n},{_fmt(v[0])},{_fmt(v[1])}\n")
            else:
                buf.write(f"{t},{n},{_fmt(v.item())}\n")
    return buf.getvalue()
