"""Multi-restart local minimization with per-restart RNG streams.

Two local searches are available: BFGS on a scalar objective with its
gradient, and Levenberg-Marquardt (``method="LM"``) on a residual vector
with its Jacobian, for objectives that are sums of squares.
"""

from dataclasses import dataclass, field, asdict
import logging

import numpy as np
from scipy.optimize import least_squares, minimize

log = logging.getLogger(__name__)


METHODS = ("BFGS", "L-BFGS-B", "LM")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by gate synthesis and the variational drivers.

    ``tol`` is the gradient-norm stopping threshold handed to BFGS, or the
    common ``xtol``/``ftol``/``gtol`` for LM, where ``max_iter`` caps
    residual evaluations.
    ``target`` stops a restart (and the restart loop) as soon as the
    objective drops below it.  ``gradient`` selects the analytic gradient or
    central differences with step ``step``.
    """

    method: str = "BFGS"
    gradient: str = "analytic"
    step: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 5000
    restarts: int = 10
    seed: int = 0
    target: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unsupported method {self.method!r}")
        if self.gradient not in ("analytic", "central"):
            raise ValueError(f"gradient must be 'analytic' or 'central', got {self.gradient!r}")
        if not (self.step > 0 and self.tol > 0 and self.max_iter > 0 and self.restarts > 0):
            raise ValueError("step, tol, max_iter and restarts must be positive")

    def replace(self, **changes):
        return OptimizerConfig(**{**asdict(self), **changes})

    def to_dict(self):
        return asdict(self)


@dataclass
class RestartResult:
    x: np.ndarray
    fun: float
    nit: int
    success: bool
    message: str
    trace: list = field(default_factory=list)


@dataclass
class MultiStartResult:
    best: RestartResult
    restarts: list

    @property
    def x(self):
        return self.best.x

    @property
    def fun(self):
        return self.best.fun

    @property
    def restarts_used(self):
        return len(self.restarts)

    @property
    def iterations(self):
        return sum(r.nit for r in self.restarts)


def central_gradient(fun, x, step):
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


def central_jacobian(residuals, x, step):
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        cols.append((residuals(x + e) - residuals(x - e)) / (2 * step))
    return np.stack(cols, axis=1)


def restart_rng(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def _one_restart(fun_and_grad, x0, config):
    if config.gradient == "central":
        f_only = lambda x: fun_and_grad(x)[0]

        def objective(x):
            return f_only(x), central_gradient(f_only, x, config.step)
    else:
        objective = fun_and_grad

    trace = [(0, float(objective(x0)[0]))]
    hit_target = False

    def callback(intermediate_result):
        nonlocal hit_target
        f = float(intermediate_result.fun)
        trace.append((len(trace), f))
        if config.target is not None and f < config.target:
            hit_target = True
            raise StopIteration

    res = minimize(
        objective,
        x0,
        jac=True,
        method=config.method,
        callback=callback,
        options={"gtol": config.tol, "maxiter": config.max_iter},
    )
    fun = float(res.fun)
    success = bool(res.success) or hit_target
    if config.target is not None:
        success = fun < config.target
    return RestartResult(np.asarray(res.x), fun, int(res.nit), success, str(res.message), trace)


def _one_lm_restart(residuals_and_jac, x0, config):
    # MINPACK needs at least as many residuals as unknowns; zero rows are inert
    pad = max(0, x0.size - residuals_and_jac(x0)[0].size)
    r_only = lambda x: np.concatenate([residuals_and_jac(x)[0], np.zeros(pad)])
    if config.gradient == "central":
        jac = lambda x: central_jacobian(r_only, x, config.step)
    else:
        jac = lambda x: np.vstack([residuals_and_jac(x)[1], np.zeros((pad, x.size))])

    trace = []

    def fun(x):
        r = r_only(x)
        f = float(r @ r)
        # MINPACK has no callback; record the running best per evaluation
        trace.append((len(trace), f if not trace else min(f, trace[-1][1])))
        return r

    res = least_squares(fun, x0, jac=jac, method="lm", xtol=config.tol, ftol=config.tol,
                        gtol=config.tol, max_nfev=config.max_iter)
    f = float(res.fun @ res.fun)
    success = f < config.target if config.target is not None else bool(res.success)
    return RestartResult(np.asarray(res.x), f, int(res.nfev), success, str(res.message), trace)


def multistart_minimize(fun_and_grad, sample_initial, config, residuals=None):
    """Run ``config.restarts`` local searches and keep the lowest objective.

    ``sample_initial(rng)`` draws a starting point from the private stream of
    restart ``k``, ``default_rng([seed, k])``, so the result of any restart is
    independent of how many ran before it.  ``method="LM"`` needs
    ``residuals(x) -> (r, J)`` whose squared norm is the objective.
    """
    if config.method == "LM" and residuals is None:
        raise ValueError("LM needs a residual function")
    runs = []
    best = None
    for k in range(config.restarts):
        x0 = np.asarray(sample_initial(restart_rng(config.seed, k)), dtype=float)
        if config.method == "LM":
            run = _one_lm_restart(residuals, x0, config)
        else:
            run = _one_restart(fun_and_grad, x0, config)
        runs.append(run)
        log.debug("restart %d: f=%.3e nit=%d", k, run.fun, run.nit)
        if best is None or run.fun < best.fun:
            best = run
        if config.target is not None and best.fun < config.target:
            break
    return MultiStartResult(best, runs)
