"""Iteration drivers for the subsampled spectral method and baselines.

All drivers share one tracing and metering scheme: a run executes
exactly ``maxiter`` iterations from x0 = 0 and produces a trace with
``maxiter + 1`` records, the first being the pre-run state (step fields
NaN/zero) and the rest one record per iteration, labeled by the
iteration index k = 0..maxiter-1.  The evaluation meter counts S units
per subsample value estimate computed by the algorithm; gradients are
free.  A separate gradient-pass cost column counts S per stochastic
gradient and N per full gradient pass, so methods that never evaluate
function values still expose their cost.

Methods
-------
slises
    Redraw the size-S batch every m-th iteration, keep it in between.
    Batch-redraw iterations (for m > 1) anchor the step coefficient at
    1/||g||; the others use the spectral ratio of same-batch gradient
    differences.  The clipped coefficient is damped by 1/k and the step
    is accepted through the nonmonotone line search with slack 1/2**k.
slises-modified
    Variant with measurable step sizes at redraw iterations: there the
    scale is exactly 1/k and the unit step is taken without any search;
    in between, the spectral coefficient is damped by 1/k**(1+delta).
spectral-full
    Deterministic full-batch spectral method with the same line search
    and no damping (clip only).
sgd
    Plain stochastic gradient with step 1/k, fresh uniform batch each
    iteration, no line search, no function evaluations.
svrg-bb / sgd-bb / sgd-bb-smooth
    Epoch-based baselines whose step size is the spectral ratio of
    consecutive epoch snapshots scaled by 1/p; svrg-bb adds a
    variance-reduction full gradient each epoch, sgd-bb replaces it
    with a recursively averaged stochastic gradient, optionally
    smoothing the step sizes with a running geometric mean.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import problems, sampling
from .kernels import BACKEND
from .linesearch import ArmijoContext, lsp_search
from .steplength import (
    MODIFIED,
    STANDARD,
    UNDAMPED,
    DampingPolicy,
    SpectralState,
    anchor_coefficient,
    bb_coefficient,
    damp,
)

METHODS = (
    "slises",
    "slises-modified",
    "spectral-full",
    "sgd",
    "svrg-bb",
    "sgd-bb",
    "sgd-bb-smooth",
)
SAMPLERS = ("uniform", "ais")


@dataclass
class SolverConfig:
    """Run parameters; defaults follow the benchmark configuration."""

    method: str = "slises"
    m: int = 3
    S: int = 1
    eta: float = 1e-4
    gamma_min: float = 1e-8
    gamma_max: float = 1e8
    delta: float = 0.1
    maxiter: int = 100
    sampler: str = "uniform"
    eps: float = 1.0
    seed: int = 0
    eta0: float = None
    eta1: float = None
    beta: float = None
    p: int = None
    reuse: bool = True
    damping: bool = True
    label: str = None

    def validate(self, N=None):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0 < self.eta < 1:
            raise ValueError("eta must be in (0, 1)")
        if self.maxiter < 1:
            raise ValueError("maxiter must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.S < 1 or (N is not None and self.S > N):
            raise ValueError(f"need 1 <= S <= N, got S={self.S}")
        if self.method == "slises-modified":
            if self.delta <= 0:
                raise ValueError("slises-modified needs delta > 0")
            if self.m < 2:
                raise ValueError("slises-modified needs m > 1")
        DampingPolicy(self.gamma_min, self.gamma_max)

    def display_label(self):
        if self.label:
            return self.label
        if self.method == "slises":
            tag = "ais" if self.sampler == "ais" else "uni"
            name = f"slises-{tag}-m{self.m}"
            if not self.damping:
                name += "-nodamp"
            return name
        if self.method == "slises-modified":
            return f"slises-mod-m{self.m}-d{self.delta:g}"
        return self.method


@dataclass
class IterationRecord:
    """One trace row; ``indices`` is kept in memory only."""

    k: int
    resampled: bool
    c: float
    gamma: float
    alpha: float
    lsp_trials: int
    cum_evals: int
    grad_pass_cost: int
    f_full: float
    grad_norm_full: float
    indices: tuple = field(default=(), repr=False)


@dataclass
class RunTrace:
    header: dict
    records: list
    final_x: np.ndarray


class _Driver:
    """Shared state, tracing and metering for all methods."""

    def __init__(self, problem, config, rng=None):
        config.validate(problem.N)
        self.problem = problem
        self.config = config
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.rng = rng
        self.x = np.zeros(problem.n)
        self.meter = problems.EvalMeter()
        self.grad_passes = 0
        self.k = 0
        self.records = []
        self._append_record(resampled=False, c=np.nan, gamma=np.nan,
                            alpha=np.nan, trials=0, indices=())

    def _append_record(self, resampled, c, gamma, alpha, trials, indices):
        f = problems.full_value(self.problem, self.x)
        g = problems.full_gradient(self.problem, self.x)
        self.records.append(IterationRecord(
            k=self.k, resampled=resampled, c=float(c), gamma=float(gamma),
            alpha=float(alpha), lsp_trials=int(trials),
            cum_evals=self.meter.count, grad_pass_cost=self.grad_passes,
            f_full=float(f), grad_norm_full=float(np.linalg.norm(g)),
            indices=tuple(int(i) for i in indices)))

    def header(self):
        cfg = self.config
        P = self.problem
        return {
            "method": cfg.method, "label": cfg.display_label(),
            "m": cfg.m, "S": cfg.S, "eta": cfg.eta,
            "gamma_min": cfg.gamma_min, "gamma_max": cfg.gamma_max,
            "delta": cfg.delta, "maxiter": cfg.maxiter,
            "sampler": cfg.sampler, "eps": cfg.eps, "seed": cfg.seed,
            "eta0": cfg.eta0, "eta1": cfg.eta1, "beta": cfg.beta, "p": cfg.p,
            "reuse": cfg.reuse, "damping": cfg.damping,
            "problem": P.label, "N": P.N, "n": P.n,
            "lipschitz": P.lipschitz, "backend": BACKEND,
        }

    def step(self):
        raise NotImplementedError

    def run(self):
        while self.k < self.config.maxiter:
            self.step()
        return RunTrace(header=self.header(), records=self.records,
                        final_x=self.x.copy())


class SlisesDriver(_Driver):
    """slises, slises-modified and spectral-full share this loop."""

    def __init__(self, problem, config, rng=None):
        super().__init__(problem, config, rng)
        cfg = self.config
        if cfg.method == "spectral-full":
            mode, exponent = UNDAMPED, 1.0
            self.sample = sampling.SampleBatch(np.arange(problem.N), drawn_at=0)
        elif cfg.method == "slises-modified":
            mode, exponent = MODIFIED, 1.0 + cfg.delta
            self.sample = None
        else:
            mode = STANDARD if cfg.damping else UNDAMPED
            exponent = 1.0
            self.sample = None
        self.policy = DampingPolicy(cfg.gamma_min, cfg.gamma_max, exponent, mode)
        self.sstate = SpectralState()
        self.ais = (sampling.AisState.uniform(problem.N, eps=cfg.eps)
                    if cfg.sampler == "ais" and cfg.method != "spectral-full"
                    else None)
        self._base_value = None  # cached estimator value at (sample, x)

    def _draw(self, k):
        cfg, P = self.config, self.problem
        if self.ais is None:
            return sampling.uniform_draw(P.N, cfg.S, self.rng, k=k)
        if self.sample is not None:
            # scores take the component gradient norms at the previous
            # iterate, for the indices of the batch being retired
            norms = [np.linalg.norm(P.component_gradient(i, self.sstate.prev_x))
                     for i in self.sample.indices]
            sampling.ais_update_scores(self.ais, self.sample, norms)
            self.grad_passes += len(self.sample)
        batch = sampling.ais_draw(self.ais, max(k, 1), cfg.S, self.rng)
        batch.drawn_at = k
        return batch

    def step(self):
        cfg, P, k = self.config, self.problem, self.k
        if cfg.method == "spectral-full":
            resampled = False
        elif sampling.should_resample(k, cfg.m):
            self.sample = self._draw(k)
            self._base_value = None
            resampled = True
        else:
            resampled = False

        g = problems.batch_gradient(P, self.sample, self.x)
        self.grad_passes += len(self.sample)

        if cfg.method == "slises-modified" and resampled:
            # measurable scale, unit step, no search
            gamma = 1.0 / max(k, 1)
            c = np.nan
            self.sstate.update(self.x, g)
            self.x = self.x - gamma * g
            self._base_value = None
            alpha, trials = 1.0, 0
        else:
            use_anchor = k == 0 or (resampled and cfg.m > 1)
            if use_anchor:
                c = anchor_coefficient(g)
            else:
                c = bb_coefficient(self.x - self.sstate.prev_x,
                                   g - self.sstate.prev_g)
                if c is None:
                    c = anchor_coefficient(g)
            self.sstate.update(self.x, g)
            if c is None:
                # stationary estimator: hold the iterate until the next redraw
                gamma, alpha, trials = np.nan, 1.0, 0
            else:
                gamma = damp(c, k, self.policy)
                d = -gamma * g
                dm = float(g @ d)
                if dm >= 0.0:
                    alpha, trials = 1.0, 0
                    if np.any(d):
                        self.x = self.x + d
                        self._base_value = None
                else:
                    if cfg.reuse and self._base_value is not None:
                        phi0, fresh = self._base_value, False
                    else:
                        phi0 = problems.batch_value(P, self.sample, self.x, self.meter)
                        fresh = True
                    ctx = ArmijoContext(phi0=phi0, dm=dm, eta=cfg.eta, t=0.5 ** k)
                    x0, sample, meter = self.x, self.sample, self.meter
                    res = lsp_search(
                        lambda a: problems.batch_value(P, sample, x0 + a * d, meter),
                        ctx, base_fresh=fresh)
                    alpha, trials = res.alpha, res.trials
                    self.x = x0 + alpha * d
                    self._base_value = res.phi_alpha

        self._append_record(resampled, np.nan if c is None else c, gamma,
                            alpha, trials, self.sample.indices)
        self.k += 1


class SgdDriver(_Driver):
    """Stochastic gradient with predefined 1/k steps, no line search."""

    def step(self):
        cfg, P, k = self.config, self.problem, self.k
        sample = sampling.uniform_draw(P.N, cfg.S, self.rng, k=k)
        g = problems.batch_gradient(P, sample, self.x)
        self.grad_passes += len(sample)
        gamma = 1.0 / max(k, 1)
        self.x = self.x - gamma * g
        self._append_record(True, np.nan, gamma, 1.0, 0, sample.indices)
        self.k += 1


class SvrgBbDriver(_Driver):
    """Variance-reduced steps with spectral epoch step sizes.

    Each epoch of p parameter updates opens with a full gradient at the
    snapshot; from the second epoch on the step size is
    ||dx||^2 / (dx'dg) / p over consecutive snapshots.
    """

    def __init__(self, problem, config, rng=None):
        super().__init__(problem, config, rng)
        self._p = config.p if config.p is not None else 2 * problem.n
        self._eta0 = config.eta0 if config.eta0 is not None else 0.01
        self._eta = self._eta0
        self._t = 0
        self._snap = None
        self._snap_g = None

    def _start_epoch(self):
        P = self.problem
        snap = self.x.copy()
        snap_g = problems.full_gradient(P, snap)
        self.grad_passes += P.N
        if self._snap is not None:
            dx = snap - self._snap
            dg = snap_g - self._snap_g
            denom = float(dx @ dg)
            if np.isfinite(denom) and denom > 0.0:
                self._eta = float(dx @ dx) / denom / self._p
            # degenerate snapshot difference: keep the previous step size
        self._snap, self._snap_g = snap, snap_g

    def step(self):
        cfg, P, k = self.config, self.problem, self.k
        if self._t == 0:
            self._start_epoch()
        sample = sampling.uniform_draw(P.N, cfg.S, self.rng, k=k)
        g_x = problems.batch_gradient(P, sample, self.x)
        g_snap = problems.batch_gradient(P, sample, self._snap)
        self.grad_passes += 2 * len(sample)
        self.x = self.x - self._eta * (g_x - g_snap + self._snap_g)
        self._t = (self._t + 1) % self._p
        self._append_record(True, np.nan, self._eta, 1.0, 0, sample.indices)
        self.k += 1


class SgdBbDriver(_Driver):
    """Spectral epoch step sizes without variance reduction.

    Within each epoch of p updates a recursive average of the
    stochastic gradients is accumulated with weight beta; from the
    third epoch on the step size is ||dx||^2 / |dx'dg| / p over
    consecutive epoch starts and averaged gradients.  The smoothing
    variant replaces each step size by the running geometric mean of
    the de-trended sizes e * eta_e, divided by the epoch index.
    """

    def __init__(self, problem, config, rng=None):
        super().__init__(problem, config, rng)
        self._p = config.p if config.p is not None else problem.n
        self._beta = config.beta if config.beta is not None else 1.0 / self._p
        self._eta0 = config.eta0 if config.eta0 is not None else 0.01
        self._eta1 = config.eta1 if config.eta1 is not None else 0.01
        self._smooth = config.method == "sgd-bb-smooth"
        self._t = 0
        self._epoch = 0
        self._eta = self._eta0
        self._eta_raw = self._eta0
        self._xt_prev = None
        self._ghat_prev = None
        self._acc = np.zeros(problem.n)
        self._log_sum = 0.0
        self._log_n = 0

    def _start_epoch(self):
        e = self._epoch
        xt = self.x.copy()
        if e == 0:
            self._eta = self._eta_raw = self._eta0
        elif e == 1:
            self._eta = self._eta_raw = self._eta1
        else:
            dx = xt - self._xt_prev
            dg = self._acc - self._ghat_prev
            denom = abs(float(dx @ dg))
            if np.isfinite(denom) and denom > 0.0:
                self._eta_raw = float(dx @ dx) / denom / self._p
            # else keep the previous raw step size
            if self._smooth and self._eta_raw > 0.0:
                self._log_sum += math.log(e * self._eta_raw)
                self._log_n += 1
                self._eta = math.exp(self._log_sum / self._log_n) / e
            else:
                self._eta = self._eta_raw
        self._xt_prev = xt
        self._ghat_prev = self._acc
        self._acc = np.zeros(self.problem.n)
        self._epoch += 1

    def step(self):
        cfg, P, k = self.config, self.problem, self.k
        if self._t == 0:
            self._start_epoch()
        sample = sampling.uniform_draw(P.N, cfg.S, self.rng, k=k)
        g = problems.batch_gradient(P, sample, self.x)
        self.grad_passes += len(sample)
        self.x = self.x - self._eta * g
        self._acc = self._beta * g + (1.0 - self._beta) * self._acc
        self._t = (self._t + 1) % self._p
        self._append_record(True, np.nan, self._eta, 1.0, 0, sample.indices)
        self.k += 1


_DRIVERS = {
    "slises": SlisesDriver,
    "slises-modified": SlisesDriver,
    "spectral-full": SlisesDriver,
    "sgd": SgdDriver,
    "svrg-bb": SvrgBbDriver,
    "sgd-bb": SgdBbDriver,
    "sgd-bb-smooth": SgdBbDriver,
}


def make_solver(problem, config, rng=None):
    """Instantiate the driver for ``config.method``."""
    if config.method not in _DRIVERS:
        raise ValueError(f"unknown method {config.method!r}")
    return _DRIVERS[config.method](problem, config, rng)


def run_solver(problem, config, rng=None):
    """Execute a full run and return its trace."""
    return make_solver(problem, config, rng).run()
