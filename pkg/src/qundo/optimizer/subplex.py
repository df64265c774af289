"""Rowan's subplex: Nelder--Mead on a cycling partition of the coordinates.

Each cycle sorts the coordinates by how far they moved in the previous
cycle, splits them into low-dimensional subspaces, and runs Nelder--Mead
in each subspace with the other coordinates frozen.  Step sizes then grow
or shrink with the observed progress.  Coefficients follow T. Rowan's
reference values (reflection 1, expansion 2, contraction 1/2, shrink 1/2,
psi = 1/4, omega = 1/10).
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError

ALPHA = 1.0
GAMMA = 2.0
BETA = 0.5
DELTA = 0.5
PSI = 0.25
OMEGA = 0.1
XTOL = 1e-3


@dataclass(frozen=True)
class OptimizerConfig:
    """Search settings shared by subplex and dCRAB.

    ``max_evaluations`` applies per subplex run (per super-iteration in
    dCRAB).  ``stop_value`` ends the search as soon as the objective is at
    or below it; None disables that test.
    """

    max_evaluations: int = 4000
    super_iterations: int = 3
    subspace_size_range: tuple = (2, 5)
    initial_step: float = 0.03
    ftol: float = 1e-6
    rng_seed: int = 0
    dressing: bool = True
    stop_value: float = None

    def __post_init__(self):
        lo, hi = (int(v) for v in self.subspace_size_range)
        if not 1 <= lo <= hi:
            raise ValueError("subspace_size_range must satisfy 1 <= min <= max")
        object.__setattr__(self, "subspace_size_range", (lo, hi))
        if self.super_iterations < 1:
            raise ValueError("super_iterations must be at least 1")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not self.ftol >= 0:
            raise ValueError("ftol must be non-negative")

    def check_dimension(self, n):
        if self.max_evaluations < n + 1:
            raise ValueError(f"max_evaluations must be at least dimension + 1 = {n + 1}")


@dataclass
class OptimizationRun:
    best_coefficients: np.ndarray
    best_epsilon: float
    evaluation_count: int
    history: list = field(default_factory=list)
    resulting_pulse: object = None
    converged: str = ""


class _Budget(Exception):
    pass


class _Tracker:
    """Counts evaluations and keeps the best point and a monotone history."""

    def __init__(self, fn, max_evals, stop_value):
        self.fn = fn
        self.max_evals = max_evals
        self.stop_value = stop_value
        self.count = 0
        self.best_x = None
        self.best_f = np.inf
        self.history = []

    def __call__(self, x):
        if self.count >= self.max_evals or self.done():
            raise _Budget
        fx = self.fn(x)
        self.count += 1
        try:
            fx = float(fx)
        except (TypeError, ValueError):
            fx = np.nan
        if not np.isfinite(fx):
            raise NumericalError(f"objective returned {fx!r} at x = {list(x)!r}",
                                 point=np.array(x, copy=True))
        if fx < self.best_f:
            self.best_f = fx
            self.best_x = np.array(x, copy=True)
        self.history.append((self.count, self.best_f))
        return fx

    def done(self):
        return self.stop_value is not None and self.best_f <= self.stop_value


def partition_subspaces(progress, nsmin, nsmax):
    """Split coordinates into subspaces, largest recent movement first.

    Returns a list of index arrays.  Sizes lie in [nsmin, nsmax] and are
    chosen greedily to maximise the gap between the mean |progress| inside
    the next subspace and the mean over what is left.
    """
    n = len(progress)
    order = np.argsort(-np.abs(progress), kind="stable")
    a = np.abs(progress)[order]
    subs = []
    used = 0
    while used < n:
        left = n - used
        asleft = a[used:].sum()
        best_ns = None
        gapmax = -np.inf
        as1 = a[used:used + nsmin - 1].sum()
        for ns1 in range(nsmin, min(nsmax, left) + 1):
            as1 += a[used + ns1 - 1]
            ns2 = left - ns1
            if ns2 > 0:
                # the remainder must itself be splittable into legal sizes
                if ns2 >= ((ns2 - 1) // nsmax + 1) * nsmin:
                    gap = as1 / ns1 - (asleft - as1) / ns2
                    if gap > gapmax:
                        gapmax = gap
                        best_ns = ns1
            else:
                if as1 / ns1 > gapmax:
                    best_ns = ns1
                break
        if best_ns is None:
            best_ns = left
        subs.append(order[used:used + best_ns])
        used += best_ns
    return subs


def _nelder_mead(f, x, idx, steps, fx, ftol):
    """Nelder--Mead over coordinates ``idx`` of ``x`` (others frozen).

    Stops when the simplex has shrunk to PSI of its initial size or the
    spread of vertex values falls to ``ftol`` relative.  Returns the best
    full-length point and its value; raises _Budget through from ``f``.
    """
    m = len(idx)
    base = x.copy()

    def full(y):
        z = base.copy()
        z[idx] = y
        return z

    verts = np.tile(x[idx], (m + 1, 1))
    vals = np.full(m + 1, np.inf)
    vals[0] = fx

    def size():
        return np.max(np.sum(np.abs(verts[1:] - verts[0]), axis=1))

    try:
        for i in range(m):
            verts[i + 1, i] += steps[i]
            vals[i + 1] = f(full(verts[i + 1]))
        init_size = size()
        while True:
            order = np.argsort(vals, kind="stable")
            verts = verts[order]
            vals = vals[order]
            spread = vals[-1] - vals[0]
            if spread <= ftol * abs(vals[0]) or size() <= PSI * init_size:
                break
            centroid = verts[:-1].mean(axis=0)
            xr = centroid + ALPHA * (centroid - verts[-1])
            fr = f(full(xr))
            if fr < vals[0]:
                xe = centroid + GAMMA * (xr - centroid)
                fe = f(full(xe))
                if fe < fr:
                    verts[-1], vals[-1] = xe, fe
                else:
                    verts[-1], vals[-1] = xr, fr
            elif fr < vals[-2]:
                verts[-1], vals[-1] = xr, fr
            else:
                if fr < vals[-1]:
                    xc = centroid + BETA * (xr - centroid)
                else:
                    xc = centroid + BETA * (verts[-1] - centroid)
                fc = f(full(xc))
                if fc < min(fr, vals[-1]):
                    verts[-1], vals[-1] = xc, fc
                else:
                    for i in range(1, m + 1):
                        verts[i] = verts[0] + DELTA * (verts[i] - verts[0])
                        vals[i] = f(full(verts[i]))
    finally:
        # keep whatever was best even if the budget ran out mid-iteration
        b = int(np.argmin(vals))
        best = full(verts[b])
        x[:] = best
    return vals[b]


def subplex_minimize(objective_fn, x0, config):
    """Minimise ``objective_fn`` from ``x0`` with subplex.

    Runs until a full cycle lowers the objective by no more than
    ``config.ftol`` (relative) after the steps have shrunk to 1e-3 of
    ``config.initial_step``, the steps fall below 1e-6 of it, the
    evaluation budget is spent, or ``config.stop_value`` is reached.  The returned history lists
    (evaluation index, best value so far) after every evaluation.

    Raises:
        NumericalError: if the objective returns a non-finite value; the
            offending point is attached as ``.point``.
    """
    x = np.array(x0, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a finite 1-d vector")
    n = x.size
    config.check_dimension(n)
    nsmin = min(config.subspace_size_range[0], n)
    nsmax = min(config.subspace_size_range[1], n)
    if nsmin * ((n - 1) // nsmax + 1) > n:
        raise ValueError(f"cannot split {n} coordinates into subspaces of size "
                         f"{nsmin}..{nsmax}")
    track = _Tracker(objective_fn, config.max_evaluations, config.stop_value)
    steps = np.full(n, float(config.initial_step))
    progress = steps.copy()
    reason = "max_evaluations"
    try:
        fx = track(x)
        while True:
            if track.done():
                reason = "stop_value"
                break
            x_prev = x.copy()
            f_prev = fx
            subs = partition_subspaces(progress, nsmin, nsmax)
            for idx in subs:
                fx = _nelder_mead(track, x, idx, steps[idx], fx, config.ftol)
            progress = x - x_prev
            if len(subs) > 1:
                ratio = np.sum(np.abs(progress)) / np.sum(np.abs(steps))
                factor = min(max(ratio, OMEGA), 1.0 / OMEGA)
            else:
                factor = PSI
            steps = np.where(progress != 0.0, np.sign(progress) * np.abs(steps),
                             -steps) * factor
            # a stagnant cycle only ends the run once the steps have also
            # collapsed; until then the shrunken steps get another cycle
            smax = np.max(np.abs(steps))
            if (f_prev - fx <= config.ftol * abs(f_prev) and smax <= XTOL * config.initial_step
                    or smax <= XTOL ** 2 * config.initial_step):
                reason = "ftol"
                break
    except _Budget:
        reason = "stop_value" if track.done() else "max_evaluations"
    best_x = track.best_x if track.best_x is not None else x
    return OptimizationRun(best_x, track.best_f, track.count, track.history, None, reason)
