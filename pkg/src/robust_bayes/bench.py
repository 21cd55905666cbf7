"""Simulation benchmark: paired fits of every estimator, medians, reports.

Work is split by ``(n, kappa, replication)``.  The data stream of a cell
depends only on the master seed and the replication id, so the same
replication at different sizes shares its error scale (common random
numbers).  Fitting streams are derived from the full cell key, which keeps
results independent of the number of workers.
"""

import hashlib
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import CvConfig, fit_estimator
from .distributions import RngStream
from .errors import ConfigError, PreconditionError
from .gibbs import run_chain
from .io import dataset_hash
from .model import GibbsConfig, PriorHyperparams, l2_error
from .simulate import SimDesign, generate_dataset

__all__ = [
    "ExperimentPlan",
    "BenchmarkRecord",
    "BenchmarkResult",
    "run_benchmark",
    "consistency_contrast",
    "emit_report",
    "ESTIMATOR_NAMES",
]

ESTIMATOR_NAMES = ("bayes", "lasso-ls", "lasso-lad", "ridge-ls", "ridge-lad", "ls", "lad")

_LABELS = {
    "lasso-ls": "LAS_LS",
    "lasso-lad": "LAS_LAD",
    "ridge-ls": "RID_LS",
    "ridge-lad": "RID_LAD",
    "ls": "LS",
    "lad": "LAD",
}


def column_label(column):
    if column.startswith("bayes"):
        return "Bayes_" + column[5:]
    return _LABELS[column]


@dataclass(frozen=True)
class ExperimentPlan:
    """What to simulate and which estimators to fit.

    ``"bayes"`` expands into one column per entry of ``gibbs_iterations``
    (``bayes500``, ``bayes1000``, ...).
    """

    n_list: tuple
    kappa_list: tuple
    replications: int = 50
    gibbs_iterations: tuple = (1000,)
    estimators: tuple = ESTIMATOR_NAMES
    seed: int = 0
    workers: int = 1
    cv: CvConfig = field(default_factory=CvConfig)
    theta_prior: str = "theta2"
    burn_in_fraction: float = 0.5

    def __post_init__(self):
        for name in ("n_list", "kappa_list", "gibbs_iterations", "estimators"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not self.estimators:
            raise ConfigError("estimator set is empty")
        unknown = set(self.estimators) - set(ESTIMATOR_NAMES)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")
        if not self.n_list or not self.kappa_list:
            raise ConfigError("n_list and kappa_list must be non-empty")
        if "bayes" in self.estimators and not self.gibbs_iterations:
            raise ConfigError("bayes needs at least one entry in gibbs_iterations")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")

    @property
    def columns(self):
        cols = []
        for name in ESTIMATOR_NAMES:
            if name not in self.estimators:
                continue
            if name == "bayes":
                cols.extend(f"bayes{it}" for it in self.gibbs_iterations)
            else:
                cols.append(name)
        return cols

    def to_dict(self):
        d = asdict(self)
        d["cv"] = {"folds": self.cv.folds, "n_lambdas": self.cv.n_lambdas, "ratio": self.cv.ratio}
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        cv = d.pop("cv", None)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown plan keys {sorted(unknown)}")
        return cls(cv=CvConfig(**cv) if cv else CvConfig(), **d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class BenchmarkRecord:
    n: int
    kappa: float
    estimator: str
    replication: int
    error: float
    seconds: float
    ok: bool
    dataset_hash: str
    message: str = ""


def _derived_id(*parts):
    key = "|".join(map(str, parts)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _fit(column, data, plan, key):
    stream = RngStream(plan.seed, _derived_id(*key, column))
    if column.startswith("bayes"):
        iters = int(column[5:])
        config = GibbsConfig(iterations=iters, burn_in=int(iters * plan.burn_in_fraction), stream=stream)
        return run_chain(data, PriorHyperparams.scaled(key[0], key[1]), config).beta_mean
    return fit_estimator(column, data, plan.cv, stream.generator())


def run_cell(plan, n, kappa, rep):
    """Simulate one dataset and fit every planned column on it."""
    design = SimDesign(n, kappa, RngStream(plan.seed, rep), theta_prior=plan.theta_prior)
    data = generate_dataset(design)
    digest = dataset_hash(data)
    out = []
    for column in plan.columns:
        t0 = time.perf_counter()
        try:
            beta = _fit(column, data, plan, (n, kappa, rep))
            seconds = time.perf_counter() - t0
            out.append(BenchmarkRecord(n, kappa, column, rep, l2_error(beta, data.beta0),
                                       seconds, True, digest))
        except Exception as exc:  # recorded and excluded from medians
            seconds = time.perf_counter() - t0
            out.append(BenchmarkRecord(n, kappa, column, rep, float("nan"), seconds, False,
                                       digest, f"{type(exc).__name__}: {exc}"))
    return out


def _run_task(args):
    return run_cell(*args)


@dataclass
class BenchmarkResult:
    records: list
    plan: ExperimentPlan = None

    def _reduce(self, attr):
        groups = {}
        for r in self.records:
            if r.ok:
                groups.setdefault((r.n, r.kappa, r.estimator), []).append(getattr(r, attr))
        return {k: float(np.median(v)) for k, v in groups.items()}

    def median_errors(self):
        """Median l2-squared error per ``(n, kappa, estimator)``."""
        return self._reduce("error")

    def median_seconds(self):
        return self._reduce("seconds")

    def failures(self):
        out = {}
        for r in self.records:
            if not r.ok:
                key = (r.n, r.kappa, r.estimator)
                out[key] = out.get(key, 0) + 1
        return out


def run_benchmark(plan, progress=None):
    """Run every ``(n, kappa, replication)`` cell of the plan.

    ``progress`` is called with each finished cell's records.  Results are
    the same for any worker count.
    """
    tasks = [(plan, n, k, rep) for n in plan.n_list for k in plan.kappa_list
             for rep in range(plan.replications)]
    records = []
    if plan.workers == 1:
        for task in tasks:
            cell = _run_task(task)
            records.extend(cell)
            if progress:
                progress(cell)
    else:
        with ProcessPoolExecutor(plan.workers) as pool:
            for cell in pool.map(_run_task, tasks):
                records.extend(cell)
                if progress:
                    progress(cell)
    return BenchmarkResult(records, plan)


def consistency_contrast(kappa, n_list, replications=50, estimators=("bayes", "ls"), seed=0,
                         iterations=1000, workers=1, progress=None):
    """Median errors of each estimator as n grows at fixed ``kappa``.

    Returns ``(table, result)`` where ``table[column][n]`` is a median.
    """
    n_list = list(n_list)
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise PreconditionError("n_list needs at least two strictly increasing entries")
    plan = ExperimentPlan(n_list, (kappa,), replications, (iterations,), tuple(estimators),
                          seed, workers)
    result = run_benchmark(plan, progress)
    med = result.median_errors()
    table = {c: {n: med.get((n, kappa, c), float("nan")) for n in n_list} for c in plan.columns}
    return table, result


# ------------------------------------------------------------------ report

def _text_table(values, n, kappas, columns, fmt):
    head = ["kappa"] + [column_label(c) for c in columns]
    rows = [[f"{k:g}"] + [fmt(values.get((n, k, c))) for c in columns] for k in kappas]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    line = lambda r: "  ".join(s.rjust(w) for s, w in zip(r, widths))
    rule = "-" * len(line(head))
    return "\n".join([f"n = {n}".center(len(rule)), rule, line(head), rule]
                     + [line(r) for r in rows] + [rule])


def emit_report(records, out_dir, plan=None):
    """Write records, median tables (CSV and aligned text) and metadata.

    Returns the list of written paths.
    """
    result = records if isinstance(records, BenchmarkResult) else BenchmarkResult(list(records), plan)
    plan = plan or result.plan
    if not result.records:
        raise PreconditionError("no benchmark records to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc

    recs = result.records
    ns = sorted({r.n for r in recs})
    kappas = sorted({r.kappa for r in recs})
    if plan is not None:
        columns = plan.columns
    else:
        seen = {r.estimator for r in recs}
        order = [f"bayes{it}" for it in sorted(int(c[5:]) for c in seen if c.startswith("bayes"))]
        columns = order + [c for c in ("lasso-ls", "lasso-lad", "ridge-ls", "ridge-lad", "ls", "lad")
                           if c in seen]
    errors, seconds, fails = result.median_errors(), result.median_seconds(), result.failures()
    paths = []

    def write(name, text):
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths.append(path)

    buf = [",".join(BenchmarkRecord.__dataclass_fields__)]
    for r in recs:
        buf.append(",".join(_csv_cell(getattr(r, f)) for f in BenchmarkRecord.__dataclass_fields__))
    write("records.csv", "\n".join(buf) + "\n")

    buf = ["n,kappa,estimator,median_error,median_seconds,n_ok,n_failed"]
    for n in ns:
        for k in kappas:
            for c in columns:
                key = (n, k, c)
                n_ok = sum(1 for r in recs if (r.n, r.kappa, r.estimator) == key and r.ok)
                buf.append(f"{n},{k:g},{c},{_num(errors.get(key))},{_num(seconds.get(key))},"
                           f"{n_ok},{fails.get(key, 0)}")
    write("medians.csv", "\n".join(buf) + "\n")

    err_fmt = lambda v: "nan" if v is None else f"{v:.3f}"
    min_fmt = lambda v: "nan" if v is None else f"{v / 60:.2f}"
    write("errors.txt", "Median ||beta_hat - beta||^2\n\n"
          + "\n\n".join(_text_table(errors, n, kappas, columns, err_fmt) for n in ns) + "\n")
    write("times.txt", "Median fit time (minutes)\n\n"
          + "\n\n".join(_text_table(seconds, n, kappas, columns, min_fmt) for n in ns) + "\n")

    meta = {
        "plan": plan.to_dict() if plan is not None else None,
        "seed": plan.seed if plan is not None else None,
        "n_records": len(recs),
        "failures": {f"{n}/{k:g}/{c}": v for (n, k, c), v in sorted(fails.items())},
        "versions": _versions(),
    }
    write("metadata.json", json.dumps(meta, indent=1) + "\n")
    return paths


def _num(v):
    return "" if v is None else repr(float(v))


def _csv_cell(v):
    text = repr(v) if isinstance(v, float) else str(v)
    return '"' + text.replace('"', '""') + '"' if ("," in text or '"' in text) else text


def _versions():
    import numba
    import scipy

    from . import __version__

    return {"python": sys.version.split()[0], "platform": platform.platform(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__,
            "robust_bayes": __version__}
