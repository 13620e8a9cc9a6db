"""Invariant laws: spec literals, samplers, densities, normalisers and builders.

Every family is expressed through a handful of one-dimensional component
laws (``_ExpInterval``, ``_GeomGrid``, ``_Atoms``, ``_GIG``, ``_Cosh``,
``_LogGamma``).  Pair families (alternating walks) have two components,
``(even, odd)``.

Random numbers come from numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=(stream,))``, so a ``(seed, stream)`` pair fully
determines every draw.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special, stats

from .paths import PathWindow, SystemConfig, check_slin, encode
from .variables import check_system


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


# --- component laws -------------------------------------------------------


class _Component:
    discrete = False
    lo = -math.inf
    hi = math.inf

    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class _ExpInterval(_Component):
    """Density proportional to ``exp(beta x)`` on ``[lo, hi]``."""

    beta: float
    lo: float
    hi: float

    def log_normalizer(self):
        b, lo, hi = self.beta, self.lo, self.hi
        if b == 0:
            return math.log(hi - lo)
        w = hi - lo
        if b > 0:
            return b * hi + math.log(-math.expm1(-b * w)) - math.log(b)
        return b * lo + math.log(-math.expm1(b * w)) - math.log(-b)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, self.beta * np.where(inside, x, 0) - self.log_normalizer(), -np.inf)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        b = self.beta
        if b == 0:
            return (x - self.lo) / (self.hi - self.lo)
        if b < 0:
            num = -np.expm1(b * (x - self.lo))
            den = -math.expm1(b * (self.hi - self.lo))
            return num / den
        num = -np.expm1(-b * (self.hi - x))
        den = -math.expm1(-b * (self.hi - self.lo))
        return 1 - num / den

    def sample(self, rng, n):
        u = rng.random(n)
        b, w = self.beta, self.hi - self.lo
        if b == 0:
            return self.lo + w * u
        if b < 0:
            tail = math.exp(b * w) if math.isfinite(w) else 0.0
            return self.lo + np.log(u + (1 - u) * tail) / b
        tail = math.exp(-b * w) if math.isfinite(w) else 0.0
        return self.hi + np.log(u + (1 - u) * tail) / b

    def mean(self):
        b, lo, hi = self.beta, self.lo, self.hi
        if b == 0:
            return (lo + hi) / 2
        if not math.isfinite(hi):
            return lo - 1 / b
        if not math.isfinite(lo):
            return hi - 1 / b
        w = hi - lo
        if b > 0:
            r = math.exp(-b * w)
            return (hi - lo * r) / (1 - r) - 1 / b
        r = math.exp(b * w)
        return (hi * r - lo) / (r - 1) - 1 / b


@dataclass(frozen=True)
class _GeomGrid(_Component):
    """``P(X = h (m + offset)) proportional to exp(beta m)`` for integers ``m_lo <= m <= m_hi``."""

    beta: float
    h: float
    m_lo: float
    m_hi: float
    offset: float = 0.0
    discrete = True

    @property
    def lo(self):
        return self.h * (self.m_lo + self.offset) if math.isfinite(self.m_lo) else -math.inf

    @property
    def hi(self):
        return self.h * (self.m_hi + self.offset) if math.isfinite(self.m_hi) else math.inf

    def log_normalizer(self):
        b = self.beta
        if math.isfinite(self.m_lo) and math.isfinite(self.m_hi):
            ms = np.arange(self.m_lo, self.m_hi + 1)
            return float(special.logsumexp(b * ms))
        if b < 0:
            return b * self.m_lo - math.log(-math.expm1(b))
        return b * self.m_hi - math.log(-math.expm1(-b))

    def index(self, x):
        return np.rint(np.asarray(x, dtype=float) / self.h - self.offset)

    def log_pmf_m(self, m):
        m = np.asarray(m, dtype=float)
        ok = (m >= self.m_lo) & (m <= self.m_hi)
        return np.where(ok, self.beta * np.where(ok, m, 0) - self.log_normalizer(), -np.inf)

    def log_density(self, x):
        m = self.index(x)
        # computed path increments carry rounding from the irrational background tail
        on_grid = np.abs(self.h * (m + self.offset) - np.asarray(x, dtype=float)) <= 1e-9 * self.h
        return np.where(on_grid, self.log_pmf_m(m), -np.inf)

    def sample_m(self, rng, n):
        b = self.beta
        if math.isfinite(self.m_lo) and math.isfinite(self.m_hi):
            ms = np.arange(self.m_lo, self.m_hi + 1)
            p = np.exp(self.log_pmf_m(ms))
            return ms[np.minimum(np.searchsorted(np.cumsum(p), rng.random(n) * p.sum(), side="right"), ms.size - 1)]
        k = np.floor(rng.exponential(1.0, n) / abs(b))
        return self.m_lo + k if b < 0 else self.m_hi - k

    def sample(self, rng, n):
        return self.h * (self.sample_m(rng, n) + self.offset)

    def mean(self):
        b = self.beta
        if math.isfinite(self.m_lo) and math.isfinite(self.m_hi):
            ms = np.arange(self.m_lo, self.m_hi + 1)
            return float(self.h * (np.sum(ms * np.exp(self.log_pmf_m(ms))) + self.offset))
        r = math.exp(-abs(b))
        g = r / (1 - r)
        m = self.m_lo + g if b < 0 else self.m_hi - g
        return self.h * (m + self.offset)


@dataclass(frozen=True)
class _Atoms(_Component):
    values: tuple
    probs: tuple
    discrete = True

    @property
    def lo(self):
        return min(self.values)

    @property
    def hi(self):
        return max(self.values)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, -np.inf)
        for v, p in zip(self.values, self.probs):
            if p > 0:
                out = np.where(x == v, math.log(p), out)
        return out

    def log_normalizer(self):
        return 0.0

    def sample(self, rng, n):
        idx = np.searchsorted(np.cumsum(self.probs), rng.random(n), side="right")
        return np.asarray(self.values, dtype=float)[np.minimum(idx, len(self.values) - 1)]

    def mean(self):
        return float(np.dot(self.values, self.probs))


@dataclass(frozen=True)
class _GIG(_Component):
    """Density proportional to ``x^(p-1) exp(-(a x + b / x) / 2)`` on ``(0, inf)``."""

    p: float
    a: float
    b: float
    lo = 0.0

    def log_normalizer(self):
        p, a, b = self.p, self.a, self.b
        if b == 0:
            return special.gammaln(p) - p * math.log(a / 2)
        if a == 0:
            return special.gammaln(-p) + p * math.log(b / 2)
        z = math.sqrt(a * b)
        return math.log(2) + (p / 2) * math.log(b / a) + math.log(special.kve(p, z)) - z

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        v = (self.p - 1) * np.log(xs) - (self.a * xs + self.b / xs) / 2 - self.log_normalizer()
        return np.where(pos, v, -np.inf)

    def sample(self, rng, n):
        p, a, b = self.p, self.a, self.b
        if b == 0:
            return rng.gamma(p, 2 / a, n)
        if a == 0:
            return (b / 2) / rng.gamma(-p, 1.0, n)
        return stats.geninvgauss.rvs(p, math.sqrt(a * b), scale=math.sqrt(b / a), size=n, random_state=rng)

    def mean(self):
        p, a, b = self.p, self.a, self.b
        if b == 0:
            return 2 * p / a
        if a == 0:
            return (b / 2) / (-p - 1) if -p > 1 else math.inf
        z = math.sqrt(a * b)
        return math.sqrt(b / a) * special.kve(p + 1, z) / special.kve(p, z)


@dataclass(frozen=True)
class _Cosh(_Component):
    """Density proportional to ``exp(lam x - a cosh(s x))``; ``s = 1/2`` by default."""

    lam: float
    a: float
    s: float = 0.5

    def log_normalizer(self):
        nu = self.lam / self.s
        return math.log(2 / self.s) + math.log(special.kve(nu, self.a)) - self.a

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return self.lam * x - self.a * np.cosh(self.s * x) - self.log_normalizer()

    def sample(self, rng, n):
        # y = exp(s x) has density y^(lam/s - 1) exp(-a (y + 1/y) / 2)
        y = _GIG(self.lam / self.s, self.a, self.a).sample(rng, n)
        return np.log(y) / self.s

    def mean(self):
        nu, a = self.lam / self.s, self.a
        dnu = 1e-6
        d = (math.log(special.kve(nu + dnu, a)) - math.log(special.kve(nu - dnu, a))) / (2 * dnu)
        return d / self.s


@dataclass(frozen=True)
class _LogGamma(_Component):
    """``sign * log G`` with ``G ~ Gamma(shape, rate)``: density ``exp(sign*shape*x - rate*exp(sign*x))``."""

    shape: float
    rate: float
    sign: int = 1

    def log_normalizer(self):
        return special.gammaln(self.shape) - self.shape * math.log(self.rate)

    def log_density(self, x):
        y = self.sign * np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return self.shape * y - self.rate * np.exp(y) - self.log_normalizer()

    def sample(self, rng, n):
        g = rng.gamma(self.shape, 1 / self.rate, n)
        return self.sign * np.log(g)

    def mean(self):
        return self.sign * (special.digamma(self.shape) - math.log(self.rate))


def _numeric_cdf(comp: _Component, xs: np.ndarray) -> np.ndarray:
    """CDF from the component's own normalised density, by quadrature on a grid."""
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs)
    srt = xs[order]
    f = lambda t: float(np.exp(comp.log_density(t)))
    # nodes follow the sample's own quantiles so heavy tails do not starve the bulk
    nodes = np.unique(np.concatenate([np.quantile(srt, np.linspace(0, 1, 2001)),
                                      np.linspace(srt[0], srt[-1], 2001)]))
    lo = comp.lo
    first = integrate.quad(f, lo, nodes[0], limit=200)[0] if nodes[0] > lo else 0.0
    pieces = [integrate.quad(f, a, b, limit=50)[0] for a, b in zip(nodes[:-1], nodes[1:])]
    cum = first + np.concatenate([[0.0], np.cumsum(pieces)])
    out = np.empty_like(xs)
    out[order] = np.interp(srt, nodes, cum)
    return np.clip(out, 0.0, 1.0)


def component_cdf(comp: _Component, x):
    if isinstance(comp, _ExpInterval):
        return comp.cdf(x)
    if isinstance(comp, _GeomGrid):
        m = np.floor(np.asarray(x, dtype=float) / comp.h - comp.offset + 1e-9)
        if math.isfinite(comp.m_lo) and math.isfinite(comp.m_hi):
            ms = np.arange(comp.m_lo, comp.m_hi + 1)
            c = np.cumsum(np.exp(comp.log_pmf_m(ms)))
            idx = np.clip(m - comp.m_lo, -1, ms.size - 1).astype(int)
            return np.where(idx < 0, 0.0, c[np.maximum(idx, 0)])
        r = math.exp(-abs(comp.beta))
        if comp.beta < 0:
            k = m - comp.m_lo
            return np.where(k < 0, 0.0, 1 - r ** (np.maximum(k, 0) + 1))
        k = comp.m_hi - m
        return np.where(k <= 0, 1.0, r ** np.maximum(k, 0))
    if isinstance(comp, _Atoms):
        x = np.asarray(x, dtype=float)
        return sum(p * (x >= v) for v, p in zip(comp.values, comp.probs))
    return _numeric_cdf(comp, x)


def component_mass(comp: _Component) -> float:
    """Total mass of ``exp(log_density)``: quadrature or full summation."""
    if isinstance(comp, _Atoms):
        return float(sum(comp.probs))
    if isinstance(comp, _GeomGrid):
        lo = comp.m_lo if math.isfinite(comp.m_lo) else comp.m_hi - 2000
        hi = comp.m_hi if math.isfinite(comp.m_hi) else comp.m_lo + 2000
        ms = np.arange(lo, hi + 1)
        return float(np.sum(np.exp(comp.log_pmf_m(ms))))
    f = lambda t: float(np.exp(comp.log_density(t)))
    centre = comp.mean()
    if not math.isfinite(centre):
        centre = comp.lo + 1.0
    pts = [comp.lo if math.isfinite(comp.lo) else -np.inf, centre, comp.hi if math.isfinite(comp.hi) else np.inf]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if a < b:
            total += integrate.quad(f, a, b, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    return total


# --- families and the spec grammar ---------------------------------------


@dataclass(frozen=True)
class _Family:
    params: tuple
    defaults: dict
    check: object
    build: object
    doc: str


def _pos(*names):
    def chk(p):
        for n in names:
            if not p[n] > 0:
                raise ValueError(f"{n} must be > 0")
    return chk


def _int(p, *names):
    for n in names:
        if p[n] != int(p[n]):
            raise ValueError(f"{n} must be an integer")


def _check_truncexp(p):
    _pos("lambda")(p)
    if not p["c"] < p["L"] / 2:
        raise ValueError("truncexp needs c < L/2")


def _check_truncgeom(p):
    _pos("lambda", "h")(p)
    _int(p, "k", "l")
    if not p["k"] < p["l"] / 2:
        raise ValueError("truncgeom needs k < l/2")


def _check_bernoullistep(p):
    _pos("a", "b")(p)
    if not (0 <= p["q"] < p["p"] <= 1 and p["p"] + p["q"] <= 1):
        raise ValueError("bernoullistep needs 0 <= q < p <= 1 and p + q <= 1")


def _check_symgeom(p):
    _pos("lambda", "h")(p)
    _int(p, "k", "half")
    if p["k"] < 1 or p["half"] not in (0, 1):
        raise ValueError("symgeom needs k >= 1 and half in {0, 1}")


def _check_pair(p):
    _pos("lambda1", "lambda2")(p)
    if not p["lambda1"] < p["lambda2"]:
        raise ValueError("needs 0 < lambda1 < lambda2")


def _check_onesidedgeom(p):
    _check_pair(p)
    _pos("h")(p)
    _int(p, "k")


def _check_loggammapair(p):
    _pos("lambda1", "lambda2", "a", "a2")(p)
    if not p["lambda2"] < p["lambda1"]:
        raise ValueError("loggammapair needs 0 < lambda2 < lambda1")


def _check_geometric(p):
    if not 0 < p["r"] < 1:
        raise ValueError("geometric needs 0 < r < 1")


def _check_bernoulli(p):
    if not 0 <= p["p"] <= 1:
        raise ValueError("bernoulli needs 0 <= p <= 1")


_INF = math.inf

FAMILIES: dict[str, _Family] = {
    "truncexp": _Family(("lambda", "c", "L"), {}, _check_truncexp,
                        lambda p: (_ExpInterval(-p["lambda"], p["c"], p["L"] - p["c"]),),
                        "exp(-lambda x) on [c, L-c]"),
    "truncgeom": _Family(("lambda", "h", "k", "l"), {}, _check_truncgeom,
                         lambda p: (_GeomGrid(-p["lambda"], p["h"], p["k"], p["l"] - p["k"]),),
                         "P(h m) ~ exp(-lambda m), m in {k..l-k}"),
    "gig": _Family(("lambda", "c", "delta"), {}, _pos("lambda", "c", "delta"),
                   lambda p: (_GIG(-p["lambda"], 2 * p["c"] * p["delta"], 2 * p["c"]),),
                   "exp(-c/x - c delta x) x^(-lambda-1) on (0, inf)"),
    "shiftexp": _Family(("lambda", "c"), {"c": 0.0}, _pos("lambda"),
                        lambda p: (_ExpInterval(-p["lambda"], p["c"], _INF),),
                        "exp(-lambda x) on [c, inf)"),
    "shiftgeom": _Family(("lambda", "h", "k"), {"k": 0}, lambda p: (_pos("lambda", "h")(p), _int(p, "k")),
                         lambda p: (_GeomGrid(-p["lambda"], p["h"], p["k"], _INF),),
                         "P(h m) ~ exp(-lambda m), m >= k"),
    "gamma": _Family(("lambda", "c"), {}, _pos("lambda", "c"),
                     lambda p: (_GIG(p["lambda"], 2 * p["c"], 0.0),),
                     "x^(lambda-1) exp(-c x) on (0, inf)"),
    "bernoullistep": _Family(("p", "q", "a", "b"), {"b": None}, _check_bernoullistep,
                             lambda p: (_Atoms((p["a"], 0.0, -p["b"]), (p["p"], 1 - p["p"] - p["q"], p["q"])),),
                             "a w.p. p, 0 w.p. 1-p-q, -b w.p. q (b defaults to a)"),
    "truncexpsym": _Family(("lambda", "a", "b"), {"b": None}, _pos("lambda", "a", "b"),
                           lambda p: (_ExpInterval(p["lambda"], -p["b"], p["a"]),),
                           "exp(lambda x) on [-b, a] (b defaults to a)"),
    "symgeom": _Family(("lambda", "h", "k", "half"), {"half": 0}, _check_symgeom,
                       lambda p: (_GeomGrid(p["lambda"], p["h"], -p["k"], p["k"] - p["half"],
                                            0.5 * p["half"]),),
                       "P(h m) ~ exp(lambda m), m in {-k..k} (half=1: half-integers)"),
    "cosh": _Family(("lambda", "a", "s"), {"s": 0.5}, _pos("lambda", "a", "s"),
                    lambda p: (_Cosh(p["lambda"], p["a"], p["s"]),),
                    "exp(lambda x - a cosh(s x)), s defaults to 1/2"),
    "onesidedexp": _Family(("lambda1", "lambda2", "a", "b"), {"b": None}, _check_pair,
                           lambda p: (_ExpInterval(-p["lambda1"], p["a"], _INF),
                                      _ExpInterval(p["lambda2"], -_INF, -p["b"])),
                           "pair: even exp(-lambda1 x) on (a, inf), odd exp(lambda2 x) on (-inf, -b)"),
    "onesidedgeom": _Family(("lambda1", "lambda2", "h", "k", "k2"), {"k2": None}, _check_onesidedgeom,
                            lambda p: (_GeomGrid(-p["lambda1"], p["h"], p["k"], _INF),
                                       _GeomGrid(p["lambda2"], p["h"], -_INF, -p["k2"])),
                            "pair on h Z: even m >= k, odd m <= -k2"),
    "loggammapair": _Family(("lambda1", "lambda2", "a", "a2"), {"a2": None}, _check_loggammapair,
                            lambda p: (_LogGamma(p["lambda2"], p["a2"], -1), _LogGamma(p["lambda1"], p["a"], 1)),
                            "pair: even exp(-lambda2 x - a2 e^-x), odd exp(lambda1 x - a e^x)"),
    "geometric": _Family(("r",), {}, _check_geometric,
                         lambda p: (_GeomGrid(math.log(p["r"]), 1.0, 0, _INF),),
                         "P(k) = (1-r) r^k, k >= 0"),
    "exponential": _Family(("rate", "loc"), {"loc": 0.0}, _pos("rate"),
                           lambda p: (_ExpInterval(-p["rate"], p["loc"], _INF),),
                           "rate exp(-rate (x - loc)) on [loc, inf)"),
    "invgamma": _Family(("shape", "scale"), {}, _pos("shape", "scale"),
                        lambda p: (_GIG(-p["shape"], 0.0, 2 * p["scale"]),),
                        "x^(-shape-1) exp(-scale/x) on (0, inf)"),
    "loginvgamma": _Family(("shape", "scale"), {}, _pos("shape", "scale"),
                           lambda p: (_LogGamma(p["shape"], p["scale"], -1),),
                           "log Y, Y ~ invgamma(shape, scale)"),
    "bernoulli": _Family(("p",), {}, _check_bernoulli,
                         lambda p: (_Atoms((0.0, 1.0), (1 - p["p"], p["p"])),),
                         "1 w.p. p, else 0"),
}

_ALIAS_DEFAULTS = {"b": "a", "a2": "a", "k2": "k"}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: tuple = field(default=())

    def __post_init__(self):
        fam = FAMILIES.get(self.family)
        if fam is None:
            raise SpecError(f"unknown family {self.family!r}")
        given = dict(self.params)
        unknown = set(given) - set(fam.params)
        if unknown:
            raise SpecError(f"{self.family}: unknown parameter(s) {', '.join(sorted(unknown))}")
        full = {}
        for name in fam.params:
            if name in given:
                full[name] = float(given[name])
            elif name in fam.defaults and fam.defaults[name] is not None:
                full[name] = float(fam.defaults[name])
            elif name in fam.defaults:
                full[name] = None
            else:
                raise SpecError(f"{self.family}: missing parameter {name}")
        for name, v in full.items():
            if v is None:
                full[name] = full[_ALIAS_DEFAULTS[name]]
        try:
            fam.check(full)
        except ValueError as exc:
            raise SpecError(f"{self.family}: {exc}") from None
        object.__setattr__(self, "params", tuple((n, full[n]) for n in fam.params))

    @classmethod
    def of(cls, family: str, **params) -> "DistributionSpec":
        return cls(family, tuple(params.items()))

    def __getitem__(self, name):
        return dict(self.params)[name]

    def __str__(self):
        return f"{self.family}(" + ",".join(f"{n}={_num(v)}" for n, v in self.params) + ")"

    @cached_property
    def components(self) -> tuple:
        return FAMILIES[self.family].build(dict(self.params))

    @property
    def is_pair(self) -> bool:
        return len(self.components) == 2

    @property
    def discrete(self) -> bool:
        return all(c.discrete for c in self.components)


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(v)


_LITERAL = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$")


def parse_spec(text: str) -> DistributionSpec:
    """Parse ``family(name=value, ...)``; positional values follow the family's order."""
    m = _LITERAL.match(text)
    if not m:
        raise SpecError(f"malformed spec literal {text!r}")
    family, body = m.group(1).lower(), m.group(2).strip()
    if family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}")
    names = FAMILIES[family].params
    params = {}
    if body:
        for i, tok in enumerate(body.split(",")):
            tok = tok.strip()
            if "=" in tok:
                k, v = (s.strip() for s in tok.split("=", 1))
            elif i < len(names):
                k, v = names[i], tok
            else:
                raise SpecError(f"too many values in {text!r}")
            if k in params:
                raise SpecError(f"duplicate parameter {k!r} in {text!r}")
            try:
                params[k] = float(v)
            except ValueError:
                raise SpecError(f"bad number {v!r} in {text!r}") from None
    return DistributionSpec(family, tuple(params.items()))


def as_spec(spec) -> DistributionSpec:
    return spec if isinstance(spec, DistributionSpec) else parse_spec(spec)


def grammar_help() -> str:
    lines = ["spec literal grammar: family(name=value,...)  (values may also be positional)", ""]
    for name, fam in FAMILIES.items():
        sig = ",".join(p if p not in fam.defaults else f"{p}={_default_text(fam.defaults[p], p)}" for p in fam.params)
        lines.append(f"  {name}({sig})  {fam.doc}")
    return "\n".join(lines)


def _default_text(v, name):
    return _ALIAS_DEFAULTS[name] if v is None else _num(v)


# --- operations ----------------------------------------------------------


def sample(spec, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """``n`` i.i.d. draws; pair families return shape ``(n, 2)`` as (even, odd)."""
    spec = as_spec(spec)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng_for(seed, stream)
    cols = [c.sample(rng, n) for c in spec.components]
    return cols[0] if len(cols) == 1 else np.column_stack(cols)


def log_normalizer(spec, component: int = 0) -> float:
    """Log of the normalising constant of the unnormalised density as written."""
    return float(as_spec(spec).components[component].log_normalizer())


def log_density(spec, x, component: int = 0):
    """Normalised log density (log pmf on grids); ``-inf`` outside the support."""
    return as_spec(spec).components[component].log_density(x)


def cdf(spec, x, component: int = 0):
    return component_cdf(as_spec(spec).components[component], x)


def total_mass(spec, component: int = 0) -> float:
    return component_mass(as_spec(spec).components[component])


def mean(spec, component: int = 0) -> float:
    return float(as_spec(spec).components[component].mean())


# --- builders ------------------------------------------------------------


def _site_specs(system, specs):
    specs = [as_spec(s) for s in (specs if isinstance(specs, (list, tuple)) else [specs])]
    toda = system in ("udtoda", "dtoda")
    if toda and len(specs) != 2:
        raise SpecError(f"{system} needs two specs (first and second pair component)")
    if not toda and len(specs) != 1:
        raise SpecError(f"{system} takes a single spec")
    return specs


_SITE_FAMILIES = {
    "bbs": ("bernoulli",),
    "udkdv": ("truncexp", "truncgeom"),
    "dkdv": ("gig",),
    "udtoda": ("shiftexp", "shiftgeom"),
    "dtoda": ("gamma",),
}


def check_hypotheses(system: str, specs, L: float = 1.0, delta: float = 1.0) -> None:
    """Raise ``SpecError`` unless ``specs`` meet the invariance hypotheses for ``system``."""
    system = check_system(system)
    specs = _site_specs(system, specs)
    fams = _SITE_FAMILIES[system]
    for s in specs:
        if s.family not in fams:
            raise SpecError(f"{s.family} is not an invariant family for {system} (expected {', '.join(fams)})")
    s = specs[0]
    if system == "bbs" and not s["p"] < 0.5:
        raise SpecError("bbs needs ball density p < 1/2")
    if system == "udkdv":
        size = s["L"] if s.family == "truncexp" else s["h"] * s["l"]
        if not math.isclose(size, L, rel_tol=1e-12):
            raise SpecError(f"spec support is set for L={size}, system has L={L}")
    if system == "dkdv" and not math.isclose(s["delta"], delta, rel_tol=1e-12):
        raise SpecError(f"spec delta={s['delta']} differs from system delta={delta}")
    if system in ("udtoda", "dtoda"):
        q, e = specs
        if q.family != e.family:
            raise SpecError("both pair components must come from the same family")
        if not e["lambda"] < q["lambda"]:
            raise SpecError("needs 0 < lambda2 < lambda1 (second component lambda below the first)")
        shared = {"shiftexp": ("c",), "shiftgeom": ("h", "k"), "gamma": ("c",)}[q.family]
        for name in shared:
            if q[name] != e[name]:
                raise SpecError(f"both components must share {name}")


def build_iid_config(system: str, specs, n_sites: int, seed: int, start: int = 1,
                     L: float = 1.0, delta: float = 1.0, strict: bool = True) -> SystemConfig:
    """i.i.d. configuration on ``n_sites`` sites (pairs for Toda).

    The background outside the window is the law's mean (empty for BBS), so
    the encoded path has the same drift as the interior.  ``strict=False``
    skips the hypothesis checks (used for falsification controls), but the
    drift condition is still enforced.
    """
    system = check_system(system)
    specs = _site_specs(system, specs)
    if strict:
        check_hypotheses(system, specs, L, delta)
    cols = [sample(s, n_sites, seed, stream=i) for i, s in enumerate(specs)]
    if system == "bbs":
        sites, bg = cols[0].astype(np.int8), 0
    elif len(cols) == 2:
        sites, bg = np.column_stack(cols), (mean(specs[0]), mean(specs[1]))
    else:
        sites, bg = cols[0], mean(specs[0])
    if system == "dkdv":
        # background with zero log-fluctuation keeps the drift of the interior
        bg = math.exp(float(np.mean(np.log(cols[0]))))
    if system == "dtoda":
        bg = tuple(math.exp(float(np.mean(np.log(c)))) for c in cols)
    config = SystemConfig(system, sites, bg, start, L, delta)
    if not check_slin(encode(config.replace(config.sites[:0]))):
        raise SpecError("background drift is not positive for this spec")
    return config


def build_random_walk(variant, specs, n: int, seed: int) -> PathWindow:
    """Random walk with ``S_0 = 0`` and increments on ``1..n``.

    A pair spec (or two specs) gives an alternating walk; those are only
    meaningful for the even-type operators.  Background increments are the
    component means.
    """
    from .pitman import as_operator

    op = as_operator(variant)
    specs = [as_spec(s) for s in (specs if isinstance(specs, (list, tuple)) else [specs])]
    if len(specs) == 1 and specs[0].is_pair:
        comps = list(specs[0].components)
        draws = sample(specs[0], (n + 1) // 2 + 1, seed)
        cols = [draws[:, 0], draws[:, 1]]
    elif len(specs) == 2:
        comps = [specs[0].components[0], specs[1].components[0]]
        cols = [sample(specs[0], (n + 1) // 2 + 1, seed, 0), sample(specs[1], (n + 1) // 2 + 1, seed, 1)]
    else:
        comps = None
    if comps is not None:
        if not op.tag.is_even:
            raise SpecError(f"alternating walks need an even-type operator, not {op}")
        idx = np.arange(1, n + 1)
        inc = np.where(idx % 2 == 0, cols[0][idx // 2], cols[1][idx // 2])
        bg = (comps[0].mean(), comps[1].mean())
    else:
        inc = sample(specs[0], n, seed)
        bg = (specs[0].components[0].mean(),)
    path = PathWindow(0, n, np.asarray(inc, dtype=float), bg, bg)
    if not check_slin(path):
        raise SpecError("walk drift is not positive for this spec")
    return path


# --- carrier laws --------------------------------------------------------


def carrier_law(system: str, specs) -> DistributionSpec | None:
    """Stationary law of the carrier entering each site, in original variables.

    For Toda systems this is the carrier at odd lattice sites.  Returns
    ``None`` when no law is known for the given specs.
    """
    system = check_system(system)
    try:
        specs = _site_specs(system, specs)
    except SpecError:
        return None
    s = specs[0]
    if system == "bbs" and s.family == "bernoulli" and s["p"] < 0.5:
        return DistributionSpec.of("geometric", r=s["p"] / (1 - s["p"]))
    if system == "udkdv" and s.family == "truncexp":
        return DistributionSpec.of("shiftexp", **{"lambda": s["lambda"], "c": s["c"]})
    if system == "udkdv" and s.family == "truncgeom":
        return DistributionSpec.of("shiftgeom", **{"lambda": s["lambda"], "h": s["h"], "k": s["k"]})
    if system == "dkdv" and s.family == "gig":
        return DistributionSpec.of("invgamma", shape=s["lambda"], scale=s["c"])
    if system in ("udtoda", "dtoda"):
        q, e = specs
        if q.family != e.family or not e["lambda"] < q["lambda"]:
            return None
        lam = q["lambda"] - e["lambda"]
        if q.family == "shiftexp" and q["c"] == e["c"]:
            return DistributionSpec.of("shiftexp", **{"lambda": lam, "c": q["c"]})
        if q.family == "shiftgeom" and q["h"] == e["h"] and q["k"] == e["k"]:
            return DistributionSpec.of("shiftgeom", **{"lambda": lam, "h": q["h"], "k": q["k"]})
        if q.family == "gamma" and q["c"] == e["c"]:
            return DistributionSpec.of("gamma", **{"lambda": lam, "c": q["c"]})
    return None
