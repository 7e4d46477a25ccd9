"""Fast invariant suite behind ``dyadic verify``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (ModelParams, ShellField, rhs, selfsimilar_residual,
                   stationary_residual, stationary_residual_scale)
from .odesim import integrate
from .selfsimilar import (PULLBACK_M, build_selfsimilar, find_L_star,
                          shoot_selfsimilar, strong_from_weak)
from .stationary import (RatioStepParams, backward_ratio_step, build_constant_solution,
                         find_unique_constant, forward_ratio_step, k41_constant)

__all__ = ["CheckResult", "run_checks", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _fixed_point(params: ModelParams, rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        p = ModelParams(beta=rng.uniform(0.2, 3.0), delta1=rng.uniform(0.01, 10),
                        delta2=rng.uniform(0.01, 10))
        rp = RatioStepParams.from_model(p)
        worst = max(worst, abs(forward_ratio_step(1.0, rp) - 1), abs(backward_ratio_step(1.0, rp) - 1))
    return worst < 1e-14, f"max |f(1)-1| = {worst:.2e}"


def _telescoping(params: ModelParams, rng) -> tuple[bool, str]:
    p = params.replace(forcing=0.0)
    worst = 0.0
    for _ in range(200):
        y = rng.normal(size=p.n_shells + 1) * 2.0 ** (-np.arange(p.n_shells + 1) * p.beta / 3)
        r = rhs(y, p)
        terms = y * r
        worst = max(worst, abs(terms.sum()) / (1.0 + np.abs(terms).sum()))
    return worst < 1e-12, f"max normalized energy derivative {worst:.2e}"


def _obukhov_constant(params: ModelParams, rng) -> tuple[bool, str]:
    p = ModelParams(beta=1.0, delta1=0.1, delta2=1.0, forcing=1.0, n_shells=60)
    seq = build_constant_solution(1.0, p)
    res = np.max(np.abs(stationary_residual(seq, p)) / stationary_residual_scale(seq, p))
    _, drift = k41_constant(seq, p)
    return res < 1e-10 and drift < 1e-6, f"residual {res:.2e}, K41 drift {drift:.2e}"


def _kp_constant(params: ModelParams, rng) -> tuple[bool, str]:
    p = ModelParams(beta=1.0, delta1=1.0, delta2=0.0, forcing=1.0)
    seq = find_unique_constant(p)
    n = np.arange(len(seq))
    exact = 2.0 ** (-1.0 / 3.0) * 2.0 ** (-n / 3.0)
    err = float(np.max(np.abs(seq.values - exact)))
    return err < 1e-12, f"{len(seq)} shells, max error {err:.2e}"


def _pullback(params: ModelParams, rng) -> tuple[bool, str]:
    L, w = find_L_star(40, 1e-12)
    v = w.values
    ok = L <= PULLBACK_M and np.all(np.diff(v) >= 0) and v.min() >= L - PULLBACK_M and v[0] < 1e-6
    return bool(ok), f"L* = {L:.12f}, w_0 = {v[0]:.2e}"


def _kp_cross(params: ModelParams, rng) -> tuple[bool, str]:
    _, w = find_L_star(40, 1e-12)
    a1 = strong_from_weak(w)[1]
    r = shoot_selfsimilar(ModelParams(delta1=1.0, delta2=1e-12)).root
    rel = abs(r - a1) / a1
    return rel < 1e-4, f"pull-back {a1:.12f}, shooting {r:.12f}"


def _multi_band(params: ModelParams, rng) -> tuple[bool, str]:
    p = ModelParams(delta1=0.08, delta2=1.0)
    worst, dev = 0.0, 0.0
    for a1 in (0.1, 1.0, 10.0):
        s = build_selfsimilar(a1, p, 300)
        worst = max(worst, float(np.max(np.abs(selfsimilar_residual(s, p)))))
        dev = max(dev, abs(s.values[-1] / s.values[-2] * 2 ** (1 / 3) - 1))
    return worst < 1e-12 and dev < 1e-8, f"residual {worst:.2e}, |b_300 - 1| {dev:.2e}"


def _unique_band(params: ModelParams, rng) -> tuple[bool, str]:
    out = []
    ok = True
    for d1 in (1.0, 0.5):
        r = shoot_selfsimilar(ModelParams(delta1=d1, delta2=1.0))
        ok &= r.bracket_width < 1e-12 * r.root and r.meta["max_residual"] < 1e-8 \
            and r.meta["k41_drift"] < 1e-4
        out.append(f"a1={r.root:.10f}")
    return bool(ok), ", ".join(out)


def _energy(params: ModelParams, rng) -> tuple[bool, str]:
    p = ModelParams(beta=1.0, delta1=1.0, delta2=1.0, n_shells=12)
    y = rng.uniform(0.5, 1.5, 13) * 2.0 ** (-np.arange(13) / 3)
    tr = integrate(ShellField(y), p, 1.0, 1e-10, 1e-14)
    e = tr.energies()
    drift = abs(e[-1] - e[0]) / e[0]
    return drift < 1e-8 and not tr.integrator_stats.truncated, f"relative drift {drift:.2e}"


CHECKS: list[tuple[str, Callable]] = [
    ("ratio fixed point", _fixed_point),
    ("energy telescoping", _telescoping),
    ("obukhov constant", _obukhov_constant),
    ("kp constant closed form", _kp_constant),
    ("pull-back confinement", _pullback),
    ("kp root cross-check", _kp_cross),
    ("multi-solution band", _multi_band),
    ("unique band shooting", _unique_band),
    ("energy conservation", _energy),
]


def run_checks(params: ModelParams | None = None, seed: int = 12345) -> list[CheckResult]:
    """Run every check; exceptions count as failures."""
    params = params or ModelParams()
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(params, rng)
        except Exception as exc:  # noqa: BLE001
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out


def format_table(results: list[CheckResult]) -> str:
    w = max(len(r.name) for r in results)
    lines = [f"{'check':<{w}}  status  detail"]
    for r in results:
        lines.append(f"{r.name:<{w}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} checks passed")
    return "\n".join(lines)

