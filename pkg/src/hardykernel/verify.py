"""Lemma-by-lemma verification suites and the characteristic-vs-norm correlation sweep."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import tomli_w

from .characteristic import characteristic
from .dyadic import SHIFTS
from .geometry import TWO_PI, ArcInterval
from .grid import PolarGrid
from .operators.checks import carleson_embedding_ratio, domination_check, necessity_geometry
from .operators.dyadic_ops import apply_M
from .operators.norms import box_indicator, norm_estimate_L2, norm_estimate_Lp_heuristic
from .weights import cell_masses, doubling_constant, parse_weight, reverse_doubling_delta

SCHEMA_VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "inf" if math.isinf(x) else ("nan" if math.isnan(x) else f"{x:.12g}")
    if isinstance(x, (list, tuple)):
        return ";".join(_fmt(v) for v in x)
    return str(x)


@dataclass
class SweepResult:
    kind: str
    seed: int
    rows: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def columns(self) -> list:
        cols = []
        for r in self.rows:
            cols.extend(k for k in r if k not in cols)
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        w.writerow(["schema_version", "seed"] + cols)
        for r in self.rows:
            w.writerow([self.schema_version, self.seed] + [_fmt(r.get(c, "")) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            return v

        return json.dumps({"kind": self.kind, "schema_version": self.schema_version, "seed": self.seed,
                           "rows": clean(self.rows)}, indent=2, sort_keys=True)

    @property
    def passed(self) -> bool:
        return all(r.get("passed", True) is not False for r in self.rows)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class Family:
    weights: list
    alphas: list
    p: list = field(default_factory=lambda: [2.0])


def default_families() -> list:
    return [
        Family(["const:1"], [1.0, 2.0, 3.0]),
        Family(["radial:t=-0.5", "radial:t=0", "radial:t=0.5"], [1.0, 2.0]),
        Family(["point:theta=0,s=-1", "point:theta=0,s=1"], [1.0]),
    ]


@dataclass
class SweepSpec:
    """Everything that determines a correlation sweep; round-trips through TOML."""

    families: list = field(default_factory=default_families)
    depths: list = field(default_factory=lambda: [5, 6, 7, 8])
    j_max: int = 10
    rotations: int = 1
    seed: int = 0
    tol: float = 1e-7
    max_iter: int = 500
    slope_threshold: float = 0.1
    suspect_growth: float = 1.5
    doubling_budget: int = 2000

    def __post_init__(self):
        self.families = [f if isinstance(f, Family) else Family(**f) for f in self.families]
        if not self.families or any(not (f.weights and f.alphas and f.p) for f in self.families):
            raise ValueError("every family needs nonempty weights, alphas and p")
        if len(self.depths) < 3:
            raise ValueError("a growth rate needs at least three depths")
        for f in self.families:
            for w in f.weights:
                parse_weight(w)

    def configurations(self):
        for fam in self.families:
            for w in fam.weights:
                for p in fam.p:
                    for a in fam.alphas:
                        yield w, float(p), float(a)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["families"] = [asdict(f) for f in self.families]
        return d

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        d = dict(d)
        if "family" in d:
            d["families"] = d.pop("family")
        return cls(**d)

    @classmethod
    def from_toml(cls, text: str) -> "SweepSpec":
        d = tomllib.loads(text)
        if "family" in d:
            d["families"] = d.pop("family")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        return cls.from_toml(Path(path).read_text())


# ---------------------------------------------------------------------------
# correlation sweep


def log_slope(depths, values) -> float:
    """Least-squares slope of ``log(value)`` against depth."""
    return float(np.polyfit(np.asarray(depths, float), np.log(np.asarray(values, float)), 1)[0])


def correlation_row(weight_text: str, p: float, alpha: float, spec: SweepSpec) -> dict:
    weight = parse_weight(weight_text)
    ch = characteristic(weight, p, alpha, spec.j_max, spec.rotations)
    row = {"weight": weight_text, "p": p, "alpha": alpha, "admissible": ch.admissible,
           "char_value": ch.value, "char_finite": ch.finite,
           "char_last_growth": ch.growth[-1] if ch.growth else math.nan}
    if not ch.admissible:
        row.update({"norm_method": "skipped", "norm_estimates": [], "norm_slope": math.nan,
                    "norm_stable": False, "max_step_growth": math.nan, "agreement": "n/a",
                    "suspect": False, "reverse_doubling_delta": math.nan, "doubling_sup": math.nan})
        return row
    estimates, method = [], ""
    for depth in spec.depths:
        grid = PolarGrid(depth)
        if p == 2.0:
            rep = norm_estimate_L2(alpha, weight, grid, spec.tol, spec.max_iter, spec.seed)
        else:
            rep = norm_estimate_Lp_heuristic(alpha, weight, p, grid, seed=spec.seed)
        estimates.append(rep.estimate)
        method = rep.method
    slope = log_slope(spec.depths, estimates)
    steps = [b / a for a, b in zip(estimates[:-1], estimates[1:])]
    stable = slope < spec.slope_threshold
    rd = reverse_doubling_delta(weight, min(spec.j_max, 10))
    db = doubling_constant(weight, spec.doubling_budget, spec.seed)
    row.update({
        "norm_method": method, "norm_estimates": estimates, "norm_slope": slope, "norm_stable": stable,
        "max_step_growth": max(steps), "agreement": ch.finite == stable,
        "suspect": ch.finite and max(steps) > spec.suspect_growth,
        "reverse_doubling_delta": rd.delta, "doubling_sup": db.sup,
    })
    return row


def _correlation_task(args):
    return correlation_row(*args)


def run_theorem_correlation(sweep: SweepSpec | None = None, workers: int = 1) -> SweepResult:
    """Characteristic finiteness against norm stability under grid refinement.

    A configuration agrees when a finite characteristic comes with a norm
    log-slope below ``slope_threshold`` or an infinite one with a slope above.
    Configurations may run in ``workers`` processes; rows keep input order, so
    the output does not depend on the worker count.
    """
    sweep = sweep or SweepSpec()
    tasks = [(w, p, a, sweep) for w, p, a in sweep.configurations()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_correlation_task, tasks))
    else:
        rows = [_correlation_task(t) for t in tasks]
    result = SweepResult("theorem-correlation", sweep.seed)
    for row in rows:
        row["passed"] = row["agreement"] in (True, "n/a")
        result.rows.append(row)
    return result


# ---------------------------------------------------------------------------
# lemma suite


@dataclass
class LemmaConfig:
    weights: list = field(default_factory=lambda: ["const:1"])
    p: float = 2.0
    alpha: float = 1.0
    theta: float = 0.01
    geometry_samples: int = 10_000
    domination_samples: int = 100_000
    domination_jmax: int = 12
    maximal_depths: list = field(default_factory=lambda: [6, 8])
    maximal_trials: int = 4
    embedding_jmax: list = field(default_factory=lambda: [6, 8, 10])
    embedding_variation: float = 0.10
    reverse_jmax: int = 10
    doubling_budget: int = 2000
    seed: int = 0

    def to_toml(self) -> str:
        return tomli_w.dumps(asdict(self))

    @classmethod
    def from_toml(cls, text: str) -> "LemmaConfig":
        return cls(**tomllib.loads(text))


def maximal_constant(weight, p: float, depths, trials: int, seed: int) -> dict:
    """Largest ``||M f||_{p,w} / ||f||_{p,w}`` per depth over random and box-indicator ``f``.

    The dyadic maximal operator over a nested box family is bounded by ``p'``
    on every ``L^p(w)`` (weak (1,1) with constant 1 plus interpolation).
    """
    rng = np.random.default_rng(seed)
    per_depth = []
    for depth in depths:
        grid = PolarGrid(depth)
        mw = cell_masses(weight, grid)
        funcs = [rng.uniform(0.0, 1.0, grid.size) for _ in range(trials)]
        funcs += [rng.exponential(1.0, grid.size) ** 3 for _ in range(trials)]
        for g in (2, depth):
            funcs.append(box_indicator(grid, ArcInterval(rng.uniform(0, TWO_PI), TWO_PI / 2**g)))
        best = 0.0
        for f in funcs:
            nf = float(np.sum(np.abs(f) ** p * mw)) ** (1 / p)
            for s in SHIFTS:
                mf = apply_M(mw, s, grid.function(f)).values
                best = max(best, float(np.sum(mf**p * mw)) ** (1 / p) / nf)
        per_depth.append(best)
    return {"per_depth": per_depth, "bound": p / (p - 1.0)}


def lemma_row(weight_text: str, cfg: LemmaConfig) -> dict:
    weight = parse_weight(weight_text)
    row = {"weight": weight_text, "p": cfg.p, "alpha": cfg.alpha}
    geo = necessity_geometry(cfg.alpha, cfg.theta, n_samples=cfg.geometry_samples, seed=cfg.seed)
    row.update({"necessity_pass": geo.passed, "necessity_d": geo.d, "necessity_C1": geo.C1,
                "necessity_min_slack": min(geo.min_slack.values()),
                "necessity_lower_ratio": geo.lower_bound_min_ratio})
    dom = domination_check(cfg.alpha, cfg.domination_samples, cfg.domination_jmax, cfg.seed)
    row.update({"domination_pass": dom.passed, "domination_C3": dom.C3, "domination_C4": dom.C4,
                "domination_budget_growth": dom.budget_growth, "domination_excluded": dom.excluded,
                "domination_witness": list(dom.witness)})
    admissible = weight.integrable() and weight.dual(cfg.p).integrable()
    row["admissible"] = admissible
    if not admissible:
        row["status"] = "InadmissibleWeight"
        for k in ("maximal_pass", "embedding_pass", "reverse_doubling_pass"):
            row[k] = "skipped"
        row["passed"] = geo.passed and dom.passed
        return row
    row["status"] = "ok"
    mx = maximal_constant(weight, cfg.p, cfg.maximal_depths, cfg.maximal_trials, cfg.seed)
    spread = max(mx["per_depth"]) / min(mx["per_depth"])
    row.update({"maximal_pass": max(mx["per_depth"]) <= mx["bound"] * (1 + 1e-9) and spread < 1.5,
                "maximal_constants": mx["per_depth"], "maximal_bound": mx["bound"]})
    grid = PolarGrid(max(cfg.embedding_jmax))
    g = grid.function(np.random.default_rng(cfg.seed).uniform(0.0, 1.0, grid.size))
    ratios = [max(carleson_embedding_ratio(weight, s, cfg.p, g, j) for s in SHIFTS) for j in cfg.embedding_jmax]
    variation = (max(ratios) - min(ratios)) / min(ratios)
    row.update({"embedding_pass": variation < cfg.embedding_variation, "embedding_ratios": ratios,
                "embedding_variation": variation})
    rd = reverse_doubling_delta(weight, cfg.reverse_jmax)
    row.update({"reverse_doubling_pass": rd.holds, "reverse_doubling_delta": rd.delta,
                "reverse_doubling_witness": list(rd.witness)})
    db = doubling_constant(weight, cfg.doubling_budget, cfg.seed)
    row.update({"doubling_sup": db.sup, "doubling_flagged": db.flagged_non_doubling()})
    row["passed"] = all(row[k] is True for k in ("necessity_pass", "domination_pass", "maximal_pass",
                                                 "embedding_pass", "reverse_doubling_pass"))
    return row


def run_lemma_suite(config: LemmaConfig | None = None) -> SweepResult:
    """Run every lemma check for each configured weight; failures are recorded, never raised."""
    config = config or LemmaConfig()
    result = SweepResult("lemma-suite", config.seed)
    for w in config.weights:
        try:
            result.rows.append(lemma_row(w, config))
        except Exception as exc:  # a crashing check is a failed check, the suite continues
            result.rows.append({"weight": w, "status": f"error: {exc}", "passed": False})
    return result


def svg_scatter(result: SweepResult, path) -> None:
    """Log-log scatter of characteristic value against the finest norm estimate."""
    pts = [(r["char_value"], r["norm_estimates"][-1], r["weight"], r["alpha"]) for r in result.rows
           if r.get("norm_estimates") and math.isfinite(r["char_value"])]
    W, H, M = 480, 360, 50
    if not pts:
        Path(path).write_text(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}"/>\n')
        return
    xs = np.log10([p[0] for p in pts])
    ys = np.log10([p[1] for p in pts])

    def scale(v, lo, hi, a, b):
        return a + (b - a) * (0.5 if hi == lo else (v - lo) / (hi - lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
           f'<rect x="{M}" y="{M // 2}" width="{W - 1.5 * M}" height="{H - 1.5 * M}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle">log10 characteristic</text>',
           f'<text x="12" y="{H / 2}" transform="rotate(-90 12 {H / 2})" text-anchor="middle">log10 norm</text>']
    for (c, n, w, a), x, y in zip(pts, xs, ys):
        px = scale(x, xs.min(), xs.max(), M + 10, W - M)
        py = scale(y, ys.min(), ys.max(), H - M - 10, M)
        out.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="4"><title>{w} alpha={a}</title></circle>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
