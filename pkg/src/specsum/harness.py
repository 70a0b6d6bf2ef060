"""Experiment runner: trace persistence, sweeps and method comparisons.

Traces are CSV files with '#'-prefixed header lines recording the full
configuration, the seed and the problem metadata.  Every numeric field
is written with shortest round-trip formatting, so reading a trace back
reproduces the run bit for bit.  Aggregates place runs on the shared
axis of cumulative function evaluations (never iterations): the union
of all evaluation counts forms the grid, each curve is stepped onto it
by carrying its last value forward, and the per-seed curves are reduced
by median (default) or mean.

A run whose reported objective turns non-finite writes that row (the
float's own 'inf'/'nan' text acts as the sentinel) and the curve stops
there; other runs in the batch are unaffected.

Cells of a (config x seed) grid are independent: problem oracles are
immutable and shared read-only, every run owns its generator and meter,
and each config gets its own seed stream, so callers may fan cells out
across processes.  Output files are written atomically (temp + rename).
"""

import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np

from .problems import (
    DatasetFormatError,
    QuadraticProblem,
    detect_format,
    generate_quadratic,
    load_dataset,
    logistic_problem,
)
from .solvers import run_solver

TRACE_COLUMNS = (
    "k", "resampled", "c_k", "gamma_k", "alpha_k", "lsp_trials",
    "cum_evals", "grad_pass_cost", "f_full", "grad_norm_full",
)

AGGREGATIONS = ("per-run", "median", "mean")


@dataclass
class ExperimentSpec:
    """Problem source plus the solver configurations and seeds to run."""

    family: str = "quadratic"
    n: int = None
    N: int = None
    problem_seed: int = 0
    instance: str = None
    dataset: str = None
    data_format: str = None
    lam: float = 1e-4
    configs: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "runs"
    aggregation: str = "median"

    def build_problem(self):
        if self.instance:
            return load_instance(self.instance)
        if self.dataset:
            fmt = self.data_format or detect_format(self.dataset)
            records = load_dataset(self.dataset, fmt)
            return logistic_problem(records, self.lam)
        if self.family != "quadratic":
            raise ValueError(f"unknown problem family {self.family!r}")
        if not self.n or not self.N:
            raise ValueError("generated problems need both n and N")
        return generate_quadratic(self.n, self.N,
                                  np.random.default_rng(self.problem_seed))


def rng_for_run(seed, stream=0):
    """Deterministic generator; distinct streams are independent."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# trace persistence


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace(trace, path):
    """Write one run as CSV; returns the path."""
    lines = [f"# {key} = {_fmt(val)}" for key, val in trace.header.items()]
    lines.append(",".join(TRACE_COLUMNS))
    for rec in trace.records:
        lines.append(",".join((
            _fmt(rec.k), _fmt(rec.resampled), _fmt(rec.c), _fmt(rec.gamma),
            _fmt(rec.alpha), _fmt(rec.lsp_trials), _fmt(rec.cum_evals),
            _fmt(rec.grad_pass_cost), _fmt(rec.f_full),
            _fmt(rec.grad_norm_full))))
        if not np.isfinite(rec.f_full):
            break  # the curve ends at the divergence sentinel
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def read_trace(path):
    """Parse a trace CSV into (header dict of strings, column arrays)."""
    header = {}
    rows = []
    columns = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                header[key.strip()] = val.strip()
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append([float(tok) if tok else np.nan
                             for tok in line.split(",")])
    if columns is None:
        raise DatasetFormatError(f"{path}: not a trace file")
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(columns))
    return header, {name: data[:, j] for j, name in enumerate(columns)}


def run_single(problem, config, seed, out_dir, stream=0):
    """Execute one (config, seed) cell and persist its trace."""
    cfg = replace(config, seed=int(seed))
    trace = run_solver(problem, cfg, rng_for_run(seed, stream))
    name = f"{cfg.display_label()}_seed{seed}.csv"
    return write_trace(trace, os.path.join(out_dir, name)), trace


# ---------------------------------------------------------------------------
# aggregation


def trace_curve(trace_or_rows):
    """(cum_evals, f_full) pairs of a run, cut at the first non-finite f."""
    if isinstance(trace_or_rows, dict):
        evals = np.asarray(trace_or_rows["cum_evals"], dtype=np.float64)
        f = np.asarray(trace_or_rows["f_full"], dtype=np.float64)
    else:
        evals = np.array([r.cum_evals for r in trace_or_rows.records], dtype=np.float64)
        f = np.array([r.f_full for r in trace_or_rows.records], dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(f))
    if bad.size:
        evals, f = evals[: bad[0]], f[: bad[0]]
    return evals, f


def _lvcf(evals, values, grid):
    idx = np.searchsorted(evals, grid, side="right") - 1
    idx = np.clip(idx, 0, evals.size - 1)
    return values[idx]


def aggregate_curves(curves_by_label, how="median"):
    """Align curves on the union evaluation grid and reduce per label.

    ``curves_by_label`` maps a column label to a list of (evals, f)
    curves (one per seed).  Returns (grid, columns) where columns maps
    output labels to arrays over the grid.
    """
    if how not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {how!r}")
    all_evals = [c[0] for curves in curves_by_label.values() for c in curves]
    if not all_evals:
        raise ValueError("nothing to aggregate")
    grid = np.unique(np.concatenate(all_evals))
    columns = {}
    for label, curves in curves_by_label.items():
        stacked = np.vstack([_lvcf(e, f, grid) for e, f in curves])
        if how == "median":
            columns[label] = np.median(stacked, axis=0)
        elif how == "mean":
            columns[label] = stacked.mean(axis=0)
        else:
            for i, row in enumerate(stacked):
                columns[f"{label}/run{i}"] = row
    return grid, columns


def write_aggregate(path, grid, columns, header=None):
    lines = [f"# {key} = {_fmt(val)}" for key, val in (header or {}).items()]
    lines.append(",".join(["cum_evals"] + list(columns)))
    cols = list(columns.values())
    for i, g in enumerate(grid):
        lines.append(",".join([_fmt(float(g))] + [_fmt(float(c[i])) for c in cols]))
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def read_aggregate(path):
    return read_trace(path)


# ---------------------------------------------------------------------------
# experiment protocols


def _run_cells(problem, configs, seeds, out_dir):
    """Run the (config x seed) grid; one independent stream per config."""
    curves = {}
    paths = []
    for stream, cfg in enumerate(configs):
        label = cfg.display_label()
        curves[label] = []
        for seed in seeds:
            path, trace = run_single(problem, cfg, seed, out_dir, stream=stream)
            paths.append(path)
            curves[label].append(trace_curve(trace))
    return paths, curves


def sweep_m(problem, base_config, m_values, seeds, out_dir, how="median"):
    """Runs of the base config for each m, reduced onto one aggregate."""
    if any(m < 1 for m in m_values):
        raise ValueError("m values must be >= 1")
    configs = [replace(base_config, m=int(m), label=f"m={m}") for m in m_values]
    paths, curves = _run_cells(problem, configs, seeds, out_dir)
    grid, columns = aggregate_curves(curves, how)
    header = {"experiment": "sweep-m", "problem": problem.label,
              "seeds": " ".join(str(s) for s in seeds), "aggregation": how}
    agg = write_aggregate(os.path.join(out_dir, "sweep_m.csv"), grid, columns, header)
    return paths, agg


def compare_methods(problem, configs, seeds, out_dir, how="median"):
    """Runs of each config on the shared problem, one aggregate column each."""
    paths, curves = _run_cells(problem, configs, seeds, out_dir)
    grid, columns = aggregate_curves(curves, how)
    header = {"experiment": "compare", "problem": problem.label,
              "seeds": " ".join(str(s) for s in seeds), "aggregation": how}
    agg = write_aggregate(os.path.join(out_dir, "compare.csv"), grid, columns, header)
    return paths, agg


# ---------------------------------------------------------------------------
# frozen instances


def generate_instance(family, n, N, seed, path):
    """Generate and freeze a problem instance (quadratic family only)."""
    if family != "quadratic":
        raise ValueError("only quadratic instances can be generated")
    problem = generate_quadratic(n, N, np.random.default_rng(seed))
    if not path.endswith(".npz"):
        path = path + ".npz"
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".npz")
    os.close(fd)
    try:
        with open(tmp, "wb") as fh:
            np.savez(fh, A=problem.A, b=problem.b,
                     lipschitz=problem.lipschitz, seed=seed)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_instance(path):
    """Reload a frozen instance bit-exactly."""
    with np.load(path) as data:
        A = data["A"]
        b = data["b"]
        lip = float(data["lipschitz"])
        seed = int(data["seed"])
    N, n = b.shape
    return QuadraticProblem(A, b, lipschitz=lip,
                            label=f"quadratic-n{n}-N{N}-seed{seed}")
