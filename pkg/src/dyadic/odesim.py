"""Time integration of the truncated shell model and trajectory diagnostics."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _dopri
from .core import ModelParams, ShellField, sobolev_norm_sq
from .errors import InsufficientSamplesError, InvalidParametersError, InvalidStateError

__all__ = [
    "TailClosure",
    "IntegratorStats",
    "Trajectory",
    "BlowupTrigger",
    "BlowupReport",
    "integrate",
    "detect_blowup",
    "variation_check",
    "positivity_probe",
    "write_trajectory_csv",
    "trajectory_manifest",
]

COLLAPSE_FRACTION = 1e-14


class _TailMode(enum.IntEnum):
    ZERO = _dopri.TAIL_ZERO
    CONSTANT = _dopri.TAIL_CONSTANT
    SELF_SIMILAR = _dopri.TAIL_SELFSIMILAR


@dataclass(frozen=True)
class TailClosure:
    """Boundary value ``Y_{N+1}(t)`` feeding the last active shell.

    The default is the zero truncation of the model. ``constant(a)`` holds
    ``Y_{N+1} = a`` and ``self_similar(a, t0)`` uses ``a / (t - t0)``; both let
    exact constant or self-similar solutions be tracked on a finite grid.
    """

    mode: _TailMode = _TailMode.ZERO
    amplitude: float = 0.0
    t_origin: float = 0.0

    @classmethod
    def zero(cls) -> "TailClosure":
        return cls()

    @classmethod
    def constant(cls, a: float) -> "TailClosure":
        return cls(_TailMode.CONSTANT, float(a))

    @classmethod
    def self_similar(cls, a: float, t0: float) -> "TailClosure":
        return cls(_TailMode.SELF_SIMILAR, float(a), float(t0))

    def value(self, t):
        if self.mode is _TailMode.CONSTANT:
            return np.full_like(np.asarray(t, dtype=float), self.amplitude)
        if self.mode is _TailMode.SELF_SIMILAR:
            return self.amplitude / (np.asarray(t, dtype=float) - self.t_origin)
        return np.zeros_like(np.asarray(t, dtype=float))

    def as_dict(self) -> dict:
        return {"mode": self.mode.name.lower(), "amplitude": self.amplitude,
                "t_origin": self.t_origin}


@dataclass(frozen=True)
class IntegratorStats:
    steps_accepted: int
    steps_rejected: int
    min_step: float
    truncated: bool = False
    reason: str = "completed"

    def as_dict(self) -> dict:
        return {"steps_accepted": self.steps_accepted, "steps_rejected": self.steps_rejected,
                "min_step": self.min_step, "truncated": self.truncated, "reason": self.reason}


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution path.

    ``times`` has shape ``(S,)`` and ``values`` shape ``(S, N+1)``; both are
    read-only. ``samples`` exposes the same data as :class:`ShellField` objects.
    """

    params: ModelParams
    times: np.ndarray
    values: np.ndarray
    integrator_stats: IntegratorStats
    tail: TailClosure = TailClosure()
    t_end_requested: float | None = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != t.size:
            raise InvalidStateError("values must have shape (len(times), N+1)")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise InvalidStateError("sample times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def samples(self) -> list[ShellField]:
        return [ShellField(v, t) for t, v in zip(self.times, self.values)]

    def __len__(self) -> int:
        return self.times.size

    def energies(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.values, self.values)

    def tail_values(self) -> np.ndarray:
        return self.tail.value(self.times)


def integrate(initial: ShellField, params: ModelParams, t_end: float,
              rel_tol: float = 1e-10, abs_tol: float = 1e-12, *,
              n_samples: int = 201, sample_times=None,
              tail: TailClosure | None = None, max_steps: int = 5_000_000) -> Trajectory:
    """Integrate the shell model with adaptive Dormand-Prince 5(4) steps.

    Parameters
    ----------
    initial : ShellField
        Start state; its ``t`` is the start time.
    params : ModelParams
    t_end : float
        Final time, larger than ``initial.t``.
    rel_tol, abs_tol : float
        Componentwise local error control ``rel_tol*|Y| + abs_tol``.
    n_samples : int
        Number of equally spaced output samples including both ends.
        Ignored when ``sample_times`` is given.
    sample_times : array_like, optional
        Explicit increasing output times starting at ``initial.t``.
    tail : TailClosure, optional
        Value of ``Y_{N+1}``; zero truncation by default.
    max_steps : int
        Hard cap on attempted steps.

    Returns
    -------
    Trajectory
        Truncated (with ``integrator_stats.truncated``) if the step size
        collapses below ``1e-14 * span``, the state turns non-finite or the
        step cap is hit.
    """
    if initial.n_shells != params.n_shells:
        raise InvalidStateError("initial field does not match params.n_shells")
    t0 = initial.t
    if not t_end > t0:
        raise InvalidParametersError("t_end must exceed the initial time")
    for name, tol in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 0.0 < tol < 1.0:
            raise InvalidParametersError(f"{name} must lie in (0, 1)")
    tail = tail or TailClosure.zero()
    if tail.mode is _TailMode.SELF_SIMILAR and tail.t_origin == t0:
        raise InvalidParametersError("self-similar tail is singular at the start time")

    if sample_times is None:
        if n_samples < 2:
            raise InvalidParametersError("n_samples must be at least 2")
        ts = np.linspace(t0, t_end, int(n_samples))
    else:
        ts = np.asarray(sample_times, dtype=float)
        if ts.ndim != 1 or ts.size < 2 or ts[0] != t0 or ts[-1] > t_end or np.any(np.diff(ts) <= 0):
            raise InvalidParametersError(
                "sample_times must increase strictly from the start time up to t_end")
    ts = ts.copy()
    ts[-1] = ts[-1] if sample_times is not None else t_end

    k = np.ascontiguousarray(params.k, dtype=float)
    out, written, acc, rej, hmin, status = _dopri.dopri_run(
        np.array(initial.values, dtype=float), float(t0), float(ts[-1]), k,
        params.delta1, params.delta2, params.forcing,
        int(tail.mode), tail.amplitude, tail.t_origin,
        ts, float(rel_tol), float(abs_tol), int(max_steps), COLLAPSE_FRACTION)

    reason = {_dopri.STATUS_OK: "completed", _dopri.STATUS_COLLAPSE: "step_collapse",
              _dopri.STATUS_NONFINITE: "non_finite", _dopri.STATUS_MAX_STEPS: "max_steps"}[status]
    vals = out[:written]
    keep = np.all(np.isfinite(vals), axis=1)
    if not np.all(keep):
        written = int(np.argmin(keep))
        vals = vals[:written]
    stats = IntegratorStats(int(acc), int(rej), float(hmin),
                            truncated=status != _dopri.STATUS_OK, reason=reason)
    return Trajectory(params, ts[:written], vals, stats, tail, float(t_end))


class BlowupTrigger(str, enum.Enum):
    NORM_THRESHOLD = "NormThreshold"
    STEP_COLLAPSE = "StepCollapse"


@dataclass(frozen=True)
class BlowupReport:
    detected: bool
    t_estimate: float | None
    trigger: BlowupTrigger | None
    s_norm_used: float

    def as_dict(self) -> dict:
        return {"detected": self.detected, "t_estimate": self.t_estimate,
                "trigger": None if self.trigger is None else self.trigger.value,
                "s_norm_used": self.s_norm_used}


def detect_blowup(trajectory: Trajectory, s: float, threshold: float) -> BlowupReport:
    """Report the first sample whose squared H^s norm exceeds ``threshold``.

    If no sample crosses but the integration stopped early because the step
    size collapsed, the last recorded sample time is reported with trigger
    ``StepCollapse``. The estimate is a sample time, not an extrapolated
    singularity time.
    """
    if s <= 0 or threshold <= 0:
        raise InvalidParametersError("s and threshold must be positive")
    beta = trajectory.params.beta
    for t, v in zip(trajectory.times, trajectory.values):
        if sobolev_norm_sq(v, s, beta) > threshold:
            return BlowupReport(True, float(t), BlowupTrigger.NORM_THRESHOLD, float(s))
    st = trajectory.integrator_stats
    if st.truncated and st.reason in ("step_collapse", "non_finite") and len(trajectory):
        return BlowupReport(True, float(trajectory.times[-1]), BlowupTrigger.STEP_COLLAPSE, float(s))
    return BlowupReport(False, None, None, float(s))


def _decay_moments(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^1 exp(-y v) dv`` and ``int_0^1 v exp(-y v) dv`` for ``y >= 0``."""
    small = y < 1e-3
    ys = np.where(small, 1.0, y)
    em = -np.expm1(-ys)
    p0 = np.where(small, 1 - y / 2 + y * y / 6 - y ** 3 / 24, em / ys)
    p1 = np.where(small, 0.5 - y / 3 + y * y / 8 - y ** 3 / 30, (em - ys * np.exp(-ys)) / (ys * ys))
    return p0, p1


def variation_check(trajectory: Trajectory, n: int, t0: float, t1: float) -> float:
    """Residual of the variation-of-constants identity for shell ``n``.

    With ``g = delta1 k_{n+1} Y_{n+1} - delta2 k_{n-1} Y_{n-1}`` and
    ``f = k_n (delta1 Y_{n-1}^2 - delta2 Y_{n+1}^2)`` the identity reads::

        Y_n(t1) = Y_n(t0) exp(-G(t0, t1)) + int_{t0}^{t1} f(s) exp(-G(s, t1)) ds

    where ``G(s, t) = int_s^t g``. ``G`` is accumulated with the trapezoid rule.
    The outer integral uses product weights that integrate ``exp(-G)``
    exactly on each sample interval with ``f`` and ``G`` linear.

    Only samples inside ``[t0, t1]`` are used, so ``t0`` and ``t1`` are
    snapped to the nearest enclosed samples.

    Returns
    -------
    float
        ``|Y_n(t1) - right side|``.

    Raises
    ------
    InsufficientSamplesError
        If fewer than 8 samples lie in the window.
    """
    p = trajectory.params
    N = p.n_shells
    if not 1 <= n <= N - 1:
        raise InvalidParametersError("n must satisfy 1 <= n <= N-1")
    t = trajectory.times
    if not (t0 < t1) or t0 < t[0] - 1e-12 * abs(t[0]) or t1 > t[-1] + 1e-12 * max(abs(t[-1]), 1.0):
        raise InvalidParametersError("window must satisfy t0 < t1 inside the trajectory span")
    tol = 1e-12 * max(1.0, abs(t1))
    sel = (t >= t0 - tol) & (t <= t1 + tol)
    if np.count_nonzero(sel) < 8:
        raise InsufficientSamplesError("fewer than 8 samples in window; request denser output")
    ts = t[sel]
    Y = trajectory.values[sel]
    k = p.k
    d1, d2 = p.delta1, p.delta2
    ym = Y[:, n - 1]
    yc = Y[:, n]
    yp = Y[:, n + 1]
    g = d1 * k[n + 1] * yp - d2 * k[n - 1] * ym
    f = k[n] * (d1 * ym * ym - d2 * yp * yp)

    dt = np.diff(ts)
    G = np.concatenate(([0.0], np.cumsum(0.5 * dt * (g[1:] + g[:-1]))))
    # exp(-(G_end - G_i)) at each node
    E = np.exp(-(G[-1] - G))
    homogeneous = yc[0] * E[0]
    # exact weights for f and G linear on each interval; anchor the kernel at
    # the endpoint where it is largest so the local exponential stays <= 1
    x = np.diff(G)
    y = np.abs(x)
    p0, p1 = _decay_moments(y)
    fwd = x >= 0
    anchor = np.where(fwd, E[1:], E[:-1])
    near = np.where(fwd, f[1:], f[:-1])
    far = np.where(fwd, f[:-1], f[1:])
    integral = float(np.sum(dt * anchor * ((p0 - p1) * near + p1 * far)))
    return float(abs(yc[-1] - (homogeneous + integral)))


def positivity_probe(trajectory: Trajectory) -> list[tuple[float, int]]:
    """All ``(t, n)`` where ``delta1 Y_{n-1}^2 - delta2 Y_{n+1}^2 < 0``.

    Shells ``n = 1..N`` are checked; ``Y_{N+1}`` comes from the trajectory's
    tail closure.
    """
    p = trajectory.params
    V = trajectory.values
    tail = trajectory.tail_values()
    ext = np.concatenate((V, tail[:, None]), axis=1)
    lhs = p.delta1 * ext[:, :-2] ** 2 - p.delta2 * ext[:, 2:] ** 2
    idx = np.argwhere(lhs < 0)
    return [(float(trajectory.times[i]), int(j) + 1) for i, j in idx]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(trajectory: Trajectory, path) -> Path:
    """Write columns ``t, Y_0..Y_N`` with 17 significant digits."""
    path = Path(path)
    N = trajectory.params.n_shells
    lines = [",".join(["t"] + [f"Y_{i}" for i in range(N + 1)])]
    for t, v in zip(trajectory.times, trajectory.values):
        lines.append(",".join([_fmt(t)] + [_fmt(x) for x in v]))
    path.write_text("\n".join(lines) + "\n")
    return path


def trajectory_manifest(trajectory: Trajectory) -> dict:
    return {"params": trajectory.params.as_dict(),
            "stats": trajectory.integrator_stats.as_dict(),
            "tail": trajectory.tail.as_dict(),
            "n_samples": len(trajectory),
            "t_start": float(trajectory.times[0]) if len(trajectory) else None,
            "t_end": float(trajectory.times[-1]) if len(trajectory) else None}


def write_trajectory_manifest(trajectory: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(trajectory_manifest(trajectory), indent=2, sort_keys=True) + "\n")
    return path
