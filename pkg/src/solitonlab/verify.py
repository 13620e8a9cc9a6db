"""Statistical checks of invariant measures: detailed balance, invariance under
the dynamics, carrier reversibility and carrier stationary laws.

Every test returns a :class:`TestReport` whose statistics are a deterministic
function of the seed.  The significance level is 0.01 throughout.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import measures
from .measures import DistributionSpec, as_spec, carrier_law, rng_for
from .paths import SystemConfig
from .pitman import as_operator, transform
from .systems import _HALF, carrier_sweep, local_F, LocalMapSpec
from .variables import VariableMap, check_system

ALPHA = 0.01


def _r(v):
    """Stable text for report values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class SubResult:
    name: str
    statistic: float
    passed: bool
    pvalue: float | None = None
    threshold: float | None = None
    note: str = ""


@dataclass
class TestReport:
    name: str
    target: str
    specs: tuple
    n: int
    seed: int
    subtests: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    __test__ = False  # not a pytest class

    @property
    def passed(self) -> bool:
        return bool(self.subtests) and all(s.passed for s in self.subtests)

    def add(self, name, statistic, passed, pvalue=None, threshold=None, note=""):
        self.subtests.append(SubResult(name, float(statistic), bool(passed),
                                       None if pvalue is None else float(pvalue),
                                       None if threshold is None else float(threshold), note))

    def add_p(self, name, statistic, pvalue, note=""):
        self.add(name, statistic, pvalue > ALPHA, pvalue=pvalue, threshold=ALPHA, note=note)

    def to_text(self) -> str:
        lines = [f"name={self.name}", f"target={self.target}",
                 f"specs={';'.join(str(s) for s in self.specs)}", f"n={self.n}", f"seed={self.seed}",
                 f"passed={_r(self.passed)}"]
        for s in self.subtests:
            pre = f"sub.{s.name}"
            lines.append(f"{pre}.statistic={_r(s.statistic)}")
            if s.pvalue is not None:
                lines.append(f"{pre}.pvalue={_r(s.pvalue)}")
            if s.threshold is not None:
                lines.append(f"{pre}.threshold={_r(s.threshold)}")
            lines.append(f"{pre}.passed={_r(s.passed)}")
            if s.note:
                lines.append(f"{pre}.note={s.note}")
        lines += [f"note={n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def csv_rows(self):
        for s in self.subtests:
            yield [self.name, self.target, s.name, _r(s.statistic), _r(s.pvalue), _r(s.threshold),
                   _r(s.passed), self.n, self.seed]


CSV_HEADER = ["test", "target", "subtest", "statistic", "pvalue", "threshold", "passed", "n", "seed"]


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerows(r.csv_rows())
    return buf.getvalue()


# --- basic statistics ----------------------------------------------------


def _merge_counts(expected: np.ndarray, observed: list[np.ndarray], min_expected: float = 5.0):
    """Merge adjacent categories until every merged expected count is >= min_expected."""
    groups, cur = [], []
    acc = 0.0
    for i, e in enumerate(expected):
        cur.append(i)
        acc += e
        if acc >= min_expected:
            groups.append(cur)
            cur, acc = [], 0.0
    if cur:
        if groups:
            groups[-1].extend(cur)
        else:
            groups.append(cur)
    merge = lambda a: np.array([a[g].sum() for g in groups])
    return merge(expected), [merge(o) for o in observed]


def two_sample_test(xs, ys, kind: str = "ks", bins: int | None = None):
    """Two-sample KS (asymptotic p-value) or chi-square homogeneity test.

    For chi-square, discrete samples use their distinct values as categories
    and continuous samples use ``bins`` pooled-quantile bins; sparse
    categories are merged.  Returns ``(statistic, pvalue)``.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size == 0 or ys.size == 0:
        raise ValueError("samples must be nonempty")
    if kind == "ks":
        if np.all(xs == xs[0]) and np.all(ys == ys[0]):
            return (0.0, 1.0) if xs[0] == ys[0] else (1.0, 0.0)
        res = stats.ks_2samp(xs, ys, method="asymp")
        return float(res.statistic), float(res.pvalue)
    if kind != "chi2":
        raise ValueError(f"unknown test kind {kind!r}")
    pooled = np.concatenate([xs, ys])
    if bins is None:
        cats = np.unique(pooled)
        cx = np.searchsorted(cats, xs)
        cy = np.searchsorted(cats, ys)
    else:
        edges = np.unique(np.quantile(pooled, np.linspace(0, 1, bins + 1))[1:-1])
        cats = np.arange(edges.size + 1)
        cx = np.searchsorted(edges, xs, side="right")
        cy = np.searchsorted(edges, ys, side="right")
    ox = np.bincount(cx, minlength=cats.size).astype(float)
    oy = np.bincount(cy, minlength=cats.size).astype(float)
    tot = ox + oy
    exp_min = tot * min(xs.size, ys.size) / pooled.size
    _, (ox, oy) = _merge_counts(exp_min, [ox, oy])
    if ox.size < 2:
        return 0.0, 1.0
    stat, p, _, _ = stats.chi2_contingency(np.vstack([ox, oy]), correction=False)
    return float(stat), float(p)


def gof_test(x, spec, component: int = 0):
    """One-sample goodness of fit of ``x`` against a normalised density.

    KS for continuous components, chi-square (merged categories) on grids.
    Returns ``(kind, statistic, pvalue)``.
    """
    spec = as_spec(spec)
    comp = spec.components[component]
    x = np.asarray(x, dtype=float)
    if comp.discrete:
        vals, cnt = np.unique(x, return_counts=True)
        logp = measures.log_density(spec, vals, component)
        if np.any(~np.isfinite(logp)):
            return "chi2", math.inf, 0.0
        if hasattr(comp, "m_lo"):
            lo = comp.m_lo if math.isfinite(comp.m_lo) else np.min(comp.index(vals))
            hi = comp.m_hi if math.isfinite(comp.m_hi) else np.max(comp.index(vals))
            ms = np.arange(lo, hi + 1)
            support = comp.h * (ms + comp.offset)
            probs = np.exp(comp.log_pmf_m(ms))
            # fold the unobserved tails into the end categories
            if not math.isfinite(comp.m_hi):
                probs[-1] += max(0.0, 1 - probs.sum())
            if not math.isfinite(comp.m_lo):
                probs[0] += max(0.0, 1 - probs.sum())
            idx = np.rint(comp.index(x) - lo).astype(int)
        else:
            support = np.asarray(comp.values, dtype=float)
            probs = np.asarray(comp.probs, dtype=float)
            keep = probs > 0
            support, probs = support[keep], probs[keep]
            idx = np.searchsorted(support, x) if np.all(np.diff(support) > 0) else None
            if idx is None:
                order = np.argsort(support)
                support, probs = support[order], probs[order]
                idx = np.searchsorted(support, x)
        obs = np.bincount(idx, minlength=support.size).astype(float)
        expct = probs * x.size
        expct, (obs,) = _merge_counts(expct, [obs])
        if obs.size < 2:
            return "chi2", 0.0, 1.0
        expct = expct * obs.sum() / expct.sum()
        stat, p = stats.chisquare(obs, expct)
        return "chi2", float(stat), float(p)
    res = stats.kstest(x, lambda v: measures.component_cdf(comp, v))
    return "ks", float(res.statistic), float(res.pvalue)


def _lag_corr(x, lag):
    x = np.asarray(x, dtype=float)
    if x.size <= lag + 2 or np.std(x) == 0:
        return 0.0
    return float(np.corrcoef(x[:-lag], x[lag:])[0, 1])


def _add_lags(report, name, x):
    thr = 3 / math.sqrt(len(x))
    for lag in (1, 2):
        c = _lag_corr(x, lag)
        report.add(f"{name}.lag{lag}", c, abs(c) < thr, threshold=thr)


def _independence(a, b, bins: int = 6):
    """Chi-square independence test on quantile-binned (or categorical) pairs."""
    def codes(v):
        u = np.unique(v)
        if u.size <= bins:
            return np.searchsorted(u, v)
        edges = np.unique(np.quantile(v, np.linspace(0, 1, bins + 1))[1:-1])
        return np.searchsorted(edges, v, side="right")
    ca, cb = codes(np.asarray(a, float)), codes(np.asarray(b, float))
    table = np.zeros((ca.max() + 1, cb.max() + 1))
    np.add.at(table, (ca, cb), 1)
    table = table[table.sum(1) > 0][:, table.sum(0) > 0]
    if min(table.shape) < 2:
        return 0.0, 1.0
    stat, p, _, _ = stats.chi2_contingency(table, correction=False)
    return float(stat), float(p)


def _compare(report, name, x, spec, component=0):
    kind, stat, p = gof_test(x, spec, component)
    report.add_p(f"{name}.{kind}", stat, p)


# --- detailed balance ----------------------------------------------------


def bbs_balance_imbalance(p: float, r: float, w_max: int = 60) -> float:
    """Total-variation imbalance between ``F(mu x nu)`` and ``mu x nu`` for the BBS
    site map, with ``mu = Bernoulli(p)`` and ``nu = Geometric(r)`` on ``w <= w_max``.

    The map is a bijection and every state with ``w' < w_max`` has its
    preimage inside the truncated support, so those states are compared exactly.
    """
    mass = {}
    for eta in (0, 1):
        pe = p if eta else 1 - p
        for w in range(w_max + 1):
            key = local_F(LocalMapSpec("bbs"), eta, w)
            mass[key] = mass.get(key, 0.0) + pe * (1 - r) * r ** w
    tv = 0.0
    for eta in (0, 1):
        pe = p if eta else 1 - p
        for w in range(w_max):
            tv += abs(mass.get((eta, w), 0.0) - pe * (1 - r) * r ** w)
    return tv / 2


def bbs_exact_balance_test(p: float, r: float | None = None, w_max: int = 60, tol: float = 1e-12) -> TestReport:
    derived = r is None
    r = p / (1 - p) if derived else r
    rep = TestReport("balance-exact", "bbs", (f"bernoulli(p={p})", f"geometric(r={r})"), 2 * (w_max + 1), 0)
    tv = bbs_balance_imbalance(p, r, w_max)
    rep.add("tv_imbalance", tv, tv < tol, threshold=tol)
    if derived:
        rep.notes.append("carrier ratio r = p/(1-p) derived from p nu(k-1) = (1-p) nu(k)")
    return rep


def _specs(specs):
    return [as_spec(s) for s in (specs if isinstance(specs, (list, tuple)) else [specs])]


def detailed_balance_test(system: str, mu, nu, n: int, seed: int, L: float = 1.0,
                          delta: float = 1.0) -> TestReport:
    """Sampled check of ``F(mu x nu) = mu x nu``.

    ``mu`` is one spec, or the two pair component specs for Toda systems.
    For Toda the starred half map takes ``(E, U)`` to ``(Q', v)``; its output
    is checked for ``Q' ~ mu_Q`` and independence, then the inverse half map
    is applied to a fresh ``Q`` and the produced ``v`` and checked against
    ``mu_E x nu``.
    """
    system = check_system(system)
    mus = _specs(mu)
    nu = as_spec(nu)
    rep = TestReport("balance", system, tuple(mus) + (nu,), n, seed)
    spec = LocalMapSpec(system, L, delta)
    if system in ("udtoda", "dtoda"):
        fwd, inv = _HALF[system]
        q_spec, e_spec = mus
        E = measures.sample(e_spec, n, seed, 0)
        U = measures.sample(nu, n, seed, 1)
        out = np.array([fwd(e, u) for e, u in zip(E, U)])
        _compare(rep, "fwd.first", out[:, 0], q_spec)
        s, p = _independence(out[:, 0], out[:, 1])
        rep.add_p("fwd.indep", s, p)
        Q = measures.sample(q_spec, n, seed, 2)
        back = np.array([inv(q, v) for q, v in zip(Q, out[:, 1])])
        _compare(rep, "inv.second", back[:, 0], e_spec)
        _compare(rep, "inv.carrier", back[:, 1], nu)
        s, p = _independence(back[:, 0], back[:, 1])
        rep.add_p("inv.indep", s, p)
        return rep
    (m,) = mus
    Z = measures.sample(m, n, seed, 0)
    W = measures.sample(nu, n, seed, 1)
    if system == "bbs":
        Z, W = Z.astype(int), W.astype(int)
    out = np.array([local_F(spec, z, w) for z, w in zip(Z.tolist(), W.tolist())], dtype=float)
    _compare(rep, "site", out[:, 0], m)
    _compare(rep, "carrier", out[:, 1], nu)
    s, p = _independence(out[:, 0], out[:, 1])
    rep.add_p("indep", s, p)
    return rep


# --- invariance under the dynamics ---------------------------------------


def _stationary_step(config: SystemConfig, law: DistributionSpec, seed: int, stream: int):
    w0 = float(measures.sample(law, 1, seed, stream)[0])
    if config.system == "bbs":
        w0 = int(w0)
    new, carrier = carrier_sweep(config, w0, extend=False, lead=False)
    if config.is_toda:
        # the last output pair used a background value on its right
        new = new.replace(new.sites[:-1])
    return new, carrier


def _components(config: SystemConfig, lo: int | None = None, hi: int | None = None):
    sites = config.sites[lo:hi]
    if config.is_toda:
        return [sites[:, 0], sites[:, 1]]
    return [sites.astype(float)]


def invariance_test(system: str, specs, n_sites: int, t_steps: int, seed: int, L: float = 1.0,
                    delta: float = 1.0, protocol: str = "stationary", strict: bool = True) -> TestReport:
    """Evolve an i.i.d. configuration and test that its law is unchanged.

    ``protocol="stationary"`` seeds each sweep with a fresh carrier drawn from
    the stationary carrier law, so under the hypotheses the output is exactly
    i.i.d. with the input law.  ``protocol="burnin"`` uses the deterministic
    background carrier and discards the first ``ceil(n_sites/10)`` sites.
    """
    system = check_system(system)
    specs = _specs(specs)
    rep = TestReport(f"invariance-{protocol}", system, tuple(specs), n_sites, seed)
    config = measures.build_iid_config(system, specs, n_sites, seed, start=1, L=L, delta=delta, strict=strict)
    law = carrier_law(system, specs) if strict else None
    if protocol == "stationary" and law is None:
        rep.notes.append("no stationary carrier law known; using burn-in protocol")
        protocol = "burnin"
    cur = config
    if protocol == "stationary":
        rep.notes.append(f"carrier seeded from {law}")
        for t in range(t_steps):
            cur, _ = _stationary_step(cur, law, seed, 1000 + t)
        cols = _components(cur)
    elif protocol == "burnin":
        burn = math.ceil(n_sites / 10)
        for t in range(t_steps):
            cur, _ = carrier_sweep(cur)
        # sites right of the original window (less the Toda drift) saw the background
        lo = config.start + burn - cur.start
        hi = config.stop - cur.start - (t_steps if cur.is_toda else 0)
        cols = _components(cur, lo, hi)
        rep.notes.append(f"burn-in margin {burn} sites")
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    names = ["first", "second"] if len(cols) == 2 else ["site"]
    for name, col, spec in zip(names, cols, specs if len(specs) == len(cols) else specs * len(cols)):
        _compare(rep, name, col, spec)
        _add_lags(rep, name, col)
    if system == "bbs":
        drift = abs(float(np.mean(cols[0])) - specs[0]["p"])
        rep.add("density_drift", drift, drift < 0.005, threshold=0.005)
    if system == "bbs" and t_steps > 0:
        before, after = int(config.sites.sum()), int(cur.sites.sum())
        if protocol == "burnin":
            rep.add("ball_count_delta", after - before, after == before, threshold=0)
    return rep


def walk_invariance_test(variant, specs, n: int, t_steps: int, seed: int) -> TestReport:
    """Apply the path operator ``t_steps`` times to a random walk and compare
    increment laws (per parity for alternating walks)."""
    op = as_operator(variant)
    specs = _specs(specs)
    rep = TestReport("walk", str(op), tuple(specs), n, seed)
    path = measures.build_random_walk(op, specs, n, seed)
    for _ in range(t_steps):
        path = transform(path, op)
    burn = math.ceil(n / 10)
    lo, hi = burn, n - 2 * t_steps
    idx = np.arange(lo + 1, hi + 1)
    inc = path.increment(idx).astype(float)
    alternating = len(specs) == 2 or specs[0].is_pair
    rep.notes.append(f"burn-in margin {burn} indices")
    if alternating:
        comps = [(specs[0], 0), (specs[0], 1)] if len(specs) == 1 else [(specs[0], 0), (specs[1], 0)]
        for name, par, (sp, c) in (("even", 0, comps[0]), ("odd", 1, comps[1])):
            x = inc[idx % 2 == par]
            _compare(rep, name, x, sp, c)
            _add_lags(rep, name, x)
    else:
        _compare(rep, "increment", inc, specs[0])
        _add_lags(rep, "increment", inc)
    return rep


# --- carrier tests -------------------------------------------------------


def _burnin_carrier(system, specs, n, seed, L, delta, w_seed=None):
    """Carrier of one sweep over an i.i.d. configuration, on odd sites for Toda."""
    config = measures.build_iid_config(system, specs, n, seed, L=L, delta=delta)
    _, carrier = carrier_sweep(config, w_seed, extend=False)
    w = np.asarray(carrier.values, dtype=float)
    if config.is_toda:
        # lattice values from 2(start-1): even-site carriers first, U on odd sites
        w = w[1::2][1:]
    return w


def _path_carrier(system, w, L, delta):
    """Carrier in path variables (``B`` applied), at odd sites for Toda."""
    return np.asarray(VariableMap(system, L, delta).B(1, w), dtype=float)


def carrier_reversibility_test(system: str, specs, n: int, seed: int, L: float = 1.0, delta: float = 1.0,
                               w_seed=None, lo: int | None = None, hi: int | None = None,
                               stride: int = 10, bins: int = 6) -> TestReport:
    """Bowker symmetry test of consecutive carrier pairs ``(W_k, W_{k+1})``.

    Pairs are taken every ``stride`` sites to weaken dependence, binned on
    common quantile edges, and the table is tested for symmetry.  By default
    the first ``ceil(n/10)`` carriers are discarded.
    """
    system = check_system(system)
    specs = _specs(specs)
    rep = TestReport("carrier-reversibility", system, tuple(specs), n, seed)
    w = _burnin_carrier(system, specs, n, seed, L, delta, w_seed)
    lo = math.ceil(w.size / 10) if lo is None else lo
    seg = w[lo:hi]
    a, b = seg[:-1:stride], seg[1::stride]
    m = min(a.size, b.size)
    a, b = a[:m], b[:m]
    stat, p, df = bowker_test(a, b, bins)
    rep.add_p("bowker", stat, p, note=f"df={df} pairs={m}")
    # swapping a pair flips the sign of its difference
    d = b - a
    up, down = int(np.sum(d > 0)), int(np.sum(d < 0))
    p_sign = float(stats.binomtest(up, up + down, 0.5).pvalue) if up + down else 1.0
    rep.add_p("sign", up - down, p_sign, note=f"up={up} down={down}")
    rep.notes.append("with i.i.d. increments the path is reflection invariant in law, so carrier "
                     "reversibility plus that symmetry implies invariance under the transform")
    return rep


def bowker_test(a, b, bins: int = 6):
    pooled = np.concatenate([a, b])
    u = np.unique(pooled)
    if u.size <= 50:
        # discrete carriers: one category per value, sparse upper tail lumped
        top = np.quantile(pooled, 0.97)
        u = u[u <= top]
        ca, cb = np.searchsorted(u, np.minimum(a, top)), np.searchsorted(u, np.minimum(b, top))
        k = u.size
    else:
        edges = np.unique(np.quantile(pooled, np.linspace(0, 1, bins + 1))[1:-1])
        ca = np.searchsorted(edges, a, side="right")
        cb = np.searchsorted(edges, b, side="right")
        k = edges.size + 1
    t = np.zeros((k, k))
    np.add.at(t, (ca, cb), 1)
    iu = np.triu_indices(k, 1)
    num = (t[iu] - t.T[iu]) ** 2
    den = t[iu] + t.T[iu]
    ok = den > 0
    stat = float(np.sum(num[ok] / den[ok]))
    df = int(ok.sum())
    p = float(stats.chi2.sf(stat, df)) if df else 1.0
    return stat, p, df


def carrier_stationary_test(system: str, specs, n: int, seed: int, L: float = 1.0, delta: float = 1.0,
                            stride: int = 10) -> TestReport:
    """Compare the carrier marginal (after a burn-in) with its stationary family.

    BBS uses the total-variation distance to Geometric(p/(1-p)) over all
    carriers.  Other systems use one-sample tests on every ``stride``-th
    carrier: first with family parameters fitted by maximum likelihood
    (flagged), then with the derived stationary law.
    """
    system = check_system(system)
    specs = _specs(specs)
    rep = TestReport("carrier-stationary", system, tuple(specs), n, seed)
    w = _burnin_carrier(system, specs, n, seed, L, delta)
    w = w[math.ceil(w.size / 10):]
    law = carrier_law(system, specs)
    if system == "bbs":
        r = law["r"]
        vals = w.astype(int)
        k = np.arange(vals.max() + 1)
        emp = np.bincount(vals) / vals.size
        ref = (1 - r) * r ** k
        tv = 0.5 * (np.sum(np.abs(emp - ref)) + (1 - ref.sum()))
        rep.add("tv_geometric", tv, tv < 0.01, threshold=0.01, note=f"r={r!r} derived as p/(1-p)")
        return rep
    x = w[::stride]
    if system in ("udkdv", "udtoda"):
        if law is not None and law.family == "shiftgeom":
            h, k0 = law["h"], law["k"]
            m = np.rint(x / h) - k0
            rate = math.log1p(1 / max(np.mean(m), 1e-12))
            fit = DistributionSpec.of("shiftgeom", **{"lambda": rate, "h": h, "k": k0})
        else:
            loc = float(np.min(w))
            fit = DistributionSpec.of("exponential", rate=1 / float(np.mean(x) - loc), loc=loc)
        _compare(rep, "fitted", x, fit)
        rep.subtests[-1].note = f"fitted {fit}"
    else:
        y = np.exp(_path_carrier(system, x, L, delta))
        shape, _, scale = stats.invgamma.fit(y, floc=0)
        fit = DistributionSpec.of("loginvgamma", shape=shape, scale=scale)
        _compare(rep, "fitted", np.log(y), fit)
        rep.subtests[-1].note = f"fitted {fit}"
    rep.notes.append("family parameters fitted from the sample (flagged)")
    if law is not None:
        _compare(rep, "derived", x, law)
        rep.subtests[-1].note = f"derived {law}"
    return rep


# --- suites --------------------------------------------------------------


class SuiteError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class SuiteEntry:
    line: int
    kind: str
    args: dict
    expect: str = "pass"


_KINDS = ("balance-exact", "balance", "invariance", "walk", "reversibility", "carrier", "conjugacy",
          "equivalence")


def parse_suite(text: str) -> list[SuiteEntry]:
    """One test per line: ``kind key=value ... [expect=pass|fail]``; ``#`` starts a comment.

    Multiple spec literals are joined with ``;`` (e.g. Toda pair components).
    """
    entries = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *rest = line.split()
        if kind not in _KINDS:
            raise SuiteError(f"unknown test kind {kind!r}", no)
        args = {}
        for tok in rest:
            if "=" not in tok:
                raise SuiteError(f"expected key=value, got {tok!r}", no)
            k, v = tok.split("=", 1)
            args[k] = v
        expect = args.pop("expect", "pass")
        if expect not in ("pass", "fail"):
            raise SuiteError(f"expect must be pass or fail, not {expect!r}", no)
        for key in ("specs", "mu", "nu"):
            if key in args:
                try:
                    args[key] = [measures.parse_spec(s) for s in args[key].split(";")]
                except ValueError as exc:
                    raise SuiteError(str(exc), no) from None
        entries.append(SuiteEntry(no, kind, args, expect))
    return entries


def _num(args, key, default, cast=float):
    v = args.get(key)
    return default if v is None else cast(v)


def run_entry(e: SuiteEntry) -> TestReport:
    a = e.args
    seed = _num(a, "seed", 7, int)
    n = _num(a, "n", 100_000, int)
    L, delta = _num(a, "L", 1.0), _num(a, "delta", 1.0)
    system = a.get("system")
    try:
        if e.kind == "balance-exact":
            r = a.get("r")
            return bbs_exact_balance_test(float(a["p"]), None if r is None else float(r), _num(a, "wmax", 60, int))
        if e.kind == "balance":
            mu = a["mu"]
            return detailed_balance_test(system, mu if len(mu) > 1 else mu[0], a["nu"][0], n, seed, L, delta)
        if e.kind == "invariance":
            return invariance_test(system, a["specs"], n, _num(a, "steps", 3, int), seed, L, delta,
                                   a.get("protocol", "stationary"), a.get("strict", "true") == "true")
        if e.kind == "walk":
            return walk_invariance_test(a["op"], a["specs"], n, _num(a, "steps", 3, int), seed)
        if e.kind == "reversibility":
            return carrier_reversibility_test(system, a["specs"], n, seed, L, delta,
                                              w_seed=_num(a, "wseed", None), lo=_num(a, "lo", None, int),
                                              hi=_num(a, "hi", None, int), stride=_num(a, "stride", 10, int))
        if e.kind == "carrier":
            return carrier_stationary_test(system, a["specs"], n, seed, L, delta)
        from . import covariables

        if e.kind == "conjugacy":
            return covariables.conjugacy_check(system, _num(a, "n", 10_000, int), seed)
        # equivalence over random configurations
        rng = rng_for(seed)
        count, steps = _num(a, "random", 100, int), _num(a, "steps", 10, int)
        sites = _num(a, "sites", 50, int)
        tol = _num(a, "tol", None)
        rep = TestReport("equivalence", system, (), count, seed)
        worst = 0.0
        ok = True
        for _ in range(count):
            sub = covariables.equivalence_check(covariables.random_config(system, sites, rng), steps, tol, seed)
            worst = max(worst, sub.subtests[0].statistic)
            ok &= sub.passed
            rep.notes.extend(sub.notes)
        rep.add("max_abs_diff", worst, ok, threshold=sub.subtests[0].threshold)
        return rep
    except KeyError as exc:
        raise SuiteError(f"missing argument {exc.args[0]}", e.line) from None
    except (ValueError, TypeError) as exc:
        if isinstance(exc, SuiteError):
            raise
        raise SuiteError(str(exc), e.line) from None


def run_suite(text: str):
    """Run every entry; returns ``[(entry, report, as_expected)]``."""
    out = []
    for e in parse_suite(text):
        rep = run_entry(e)
        out.append((e, rep, rep.passed == (e.expect == "pass")))
    return out
