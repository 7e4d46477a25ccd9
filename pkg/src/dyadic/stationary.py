"""Constant (time-independent) solutions of the forced model.

A constant solution satisfies, for every ``n >= 1``::

    delta1 (k_n a_{n-1}^2 - k_{n+1} a_n a_{n+1})
        = delta2 (k_n a_{n+1}^2 - k_{n-1} a_n a_{n-1})

together with ``delta1 k_1 a_0 a_1 + delta2 a_1^2 = F`` on shell 0. In terms of
the normalized ratios ``b_n = (a_n / a_{n-1}) k_1**(1/3)`` the recursion is a
scalar map whose fixed point 1 is the K41 law ``a_n ~ k_n**(-1/3)``. The map
contracts when ``delta1/delta2 < k_1**(-4/3)`` and expands otherwise, which
is why Obukhov-dominant solutions are built forward while KP-dominant ones are
found by shooting on ``a_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (CoefficientSequence, ModelParams, RegimeTag, SequenceKind,
                   k41_normalize, regime_classify, stationary_residual,
                   stationary_residual_scale, wavenumber)
from .errors import (BracketingError, BranchError, InvalidParametersError,
                     InvalidStateError, NoSolutionError, RegimeMismatchError)

__all__ = [
    "RatioStepParams",
    "forward_ratio_step",
    "backward_ratio_step",
    "ratio_fixed_point_slope",
    "a1_from_forcing",
    "constant_sequence",
    "build_constant_solution",
    "constant_divergence",
    "find_unique_constant",
    "k41_constant",
    "backward_tail_check",
    "constant_csv_rows",
]

MAX_SHOOT_DEPTH = 60
RESIDUAL_RTOL = 1e-10
# log2 range of a_n k_n^{1/3} treated as still meaningful
_LOG2_ESCAPE = 200.0


@dataclass(frozen=True)
class RatioStepParams:
    """Coefficients of the ratio maps.

    Attributes
    ----------
    k1_43 : float
        ``k_1**(4/3)``.
    k1_m43 : float
        ``k_1**(-4/3)``.
    delta1, delta2 : float
    """

    k1_43: float
    k1_m43: float
    delta1: float
    delta2: float

    @classmethod
    def from_model(cls, params: ModelParams) -> "RatioStepParams":
        k1 = params.k1
        return cls(k1 ** (4.0 / 3.0), k1 ** (-4.0 / 3.0), params.delta1, params.delta2)


def _check_ratio(b: float) -> float:
    b = float(b)
    if not (b > 0 and math.isfinite(b)):
        raise BranchError(f"ratio must be positive and finite, got {b!r}")
    return b


def _forward(b: float, A: float, d2: float) -> float:
    # conjugate form of (-A + sqrt(A^2 + 4 A d2 / b^2 + 4 d2^2 / b)) / (2 d2)
    q = A / (b * b) + d2 / b
    s = math.sqrt(A * A + 4.0 * d2 * q)
    return 2.0 * q / (s + A)


def forward_ratio_step(b: float, p: RatioStepParams) -> float:
    """Next normalized ratio of a constant solution.

    Evaluates the positive root
    ``(-A + sqrt(A**2 + 4 A delta2 / b**2 + 4 delta2**2 / b)) / (2 delta2)``
    with ``A = delta1 k_1**(4/3)``, rewritten without cancellation.

    Raises
    ------
    BranchError
        If ``delta2 == 0``. Pure KP uses the closed form ``1 / b**2``.

    Examples
    --------
    >>> p = RatioStepParams(2 ** (4 / 3), 2 ** (-4 / 3), 0.5, 1.0)
    >>> forward_ratio_step(1.0, p)
    1.0
    """
    b = _check_ratio(b)
    if p.delta2 == 0:
        raise BranchError("delta2 = 0: use the pure-KP closed form b -> 1/b**2")
    return _forward(b, p.delta1 * p.k1_43, p.delta2)


def backward_ratio_step(b_next: float, p: RatioStepParams) -> float:
    """Previous backward ratio ``(a_{n-1}/a_n) k_1**(-1/3)`` from the next one.

    Evaluates
    ``(-B + sqrt(B**2 + 4 delta1**2 / b + 4 delta1 B / b**2)) / (2 delta1)``
    with ``B = delta2 k_1**(-4/3)``. Backward ratios are reciprocals of forward
    ratios, and this map inverts :func:`forward_ratio_step` on them.

    Raises
    ------
    BranchError
        If ``delta1 == 0``.
    """
    b = _check_ratio(b_next)
    if p.delta1 == 0:
        raise BranchError("delta1 = 0: backward step undefined, use the forward map")
    return _forward(b, p.delta2 * p.k1_m43, p.delta1)


def ratio_fixed_point_slope(params: ModelParams) -> float:
    """Derivative of the forward ratio map at the K41 fixed point 1.

    Equals ``-(2A + delta2) / (A + 2 delta2)`` with ``A = delta1 k_1**(4/3)``.
    Its modulus is below 1 exactly when ``delta1/delta2 < k_1**(-4/3)``.
    """
    A = params.delta1 * params.k1 ** (4.0 / 3.0)
    d2 = params.delta2
    return -(2.0 * A + d2) / (A + 2.0 * d2)


def a1_from_forcing(a0: float, params: ModelParams) -> float:
    """Solve ``delta1 k_1 a0 a1 + delta2 a1**2 = F`` for the positive ``a1``.

    Raises
    ------
    InvalidParametersError
        If ``F <= 0`` or ``a0 < 0``.
    NoSolutionError
        If ``delta2 == 0`` and ``a0 == 0``.
    """
    F = params.forcing
    if F <= 0:
        raise InvalidParametersError("constant solutions need positive forcing")
    if not (a0 >= 0 and math.isfinite(a0)):
        raise InvalidParametersError(f"a0 must be non-negative, got {a0!r}")
    d1, d2 = params.delta1, params.delta2
    B = d1 * params.k1 * a0
    if d2 == 0:
        if a0 == 0:
            raise NoSolutionError("delta2 = 0 and a0 = 0: shell 0 cannot absorb the forcing")
        return F / B
    # a1 = 2F / (B + sqrt(B^2 + 4 d2 F))
    return 2.0 * F / (B + math.sqrt(B * B + 4.0 * d2 * F))


def _ratio_map(p: RatioStepParams):
    A = p.delta1 * p.k1_43
    d2 = p.delta2
    if d2 == 0:
        return lambda b: 1.0 / (b * b)
    return lambda b: _forward(b, A, d2)


def constant_sequence(a0: float, params: ModelParams, depth: int) -> np.ndarray:
    """Forward-generated coefficients ``a_0..a_depth`` from a given ``a_0``.

    Generation stops early, returning a shorter array, once ``a_n k_n**(1/3)``
    leaves ``[2**-200, 2**200]`` relative to ``a_0`` or turns non-finite.
    """
    if depth < 1:
        raise InvalidParametersError("depth must be at least 1")
    a1 = a1_from_forcing(a0, params)
    p = RatioStepParams.from_model(params)
    f = _ratio_map(p)
    c = params.k1 ** (1.0 / 3.0)
    out = [float(a0), a1]
    b = a1 / a0 * c if a0 > 0 else math.inf
    log_at = math.log2(a1 * c) if a1 > 0 else -math.inf
    ref = math.log2(a0) if a0 > 0 else log_at
    for _ in range(depth - 1):
        if not (0 < b < math.inf):
            break
        b = f(b)
        if not (0 < b < math.inf):
            break
        log_at += math.log2(b)
        if abs(log_at - ref) > _LOG2_ESCAPE:
            break
        out.append(out[-1] * b / c)
    return np.array(out)


def build_constant_solution(a0: float, params: ModelParams) -> CoefficientSequence:
    """Construct the constant solution with given ``a_0`` by forward iteration.

    Valid in the Obukhov-dominant regime (and for pure Obukhov transfer), where
    the ratio map contracts to the K41 fixed point. The output has
    ``params.n_shells + 1`` terms.

    Raises
    ------
    RegimeMismatchError
        For KP-dominant or critical ratios; use :func:`find_unique_constant`.
    NoSolutionError
        If the residual check fails.
    """
    tag = regime_classify(params).tag
    if tag not in (RegimeTag.OBUKHOV_DOMINANT, RegimeTag.PURE_OBUKHOV):
        raise RegimeMismatchError(
            f"regime {tag.value}: forward construction is unstable, use find_unique_constant")
    if not (a0 > 0 and math.isfinite(a0)):
        raise InvalidParametersError(f"a0 must be positive, got {a0!r}")
    N = params.n_shells
    a = constant_sequence(a0, params, N)
    if a.size != N + 1:
        raise NoSolutionError(f"forward construction left the float range at shell {a.size}")
    res = stationary_residual(a, params)
    scale = stationary_residual_scale(a, params)
    worst = float(np.max(np.abs(res) / scale))
    if worst > RESIDUAL_RTOL:
        raise NoSolutionError(f"relative stationary residual {worst:.3e} exceeds {RESIDUAL_RTOL}")
    c = float(k41_normalize(a, params.beta)[-1])
    return CoefficientSequence(a, SequenceKind.CONSTANT, params, k41_constant=c,
                               meta={"method": "forward", "max_relative_residual": worst})


def constant_divergence(a, beta: float):
    """First shell where the normalized sequence runs away, or ``None``.

    With ``c_n = a_n k_n**(1/3)``, shell ``n`` diverges upward when
    ``c_n > 10 * median(c_{n/2..n})`` and collapses when
    ``c_n < 0.1 * median(c_{n/2..n})`` or ``a_n <= 0``.

    Returns
    -------
    tuple of (int, str) or None
        ``(n, "up")`` or ``(n, "down")``.
    """
    a = np.asarray(a, dtype=float)
    c = k41_normalize(a, beta)
    for n in range(1, a.size):
        if not a[n] > 0:
            return n, "down"
        med = float(np.median(c[n // 2: n + 1]))
        if c[n] > 10.0 * med:
            return n, "up"
        if c[n] < 0.1 * med:
            return n, "down"
    return None


def _parity_sign(a: np.ndarray, beta: float) -> int:
    """Sign of the alternating ratio mode at the deepest generated shell.

    Positive when odd-indexed ratios exceed 1 at that depth.
    """
    c = beta / 3.0
    for n in range(a.size - 1, 0, -1):
        lb = math.log2(a[n]) - math.log2(a[n - 1]) + c
        if lb != 0.0 and math.isfinite(lb):
            s = 1 if lb > 0 else -1
            return s if n % 2 == 1 else -s
    return 0


def _trusted_length(a_lo: np.ndarray, a_hi: np.ndarray, rtol: float) -> int:
    m = min(a_lo.size, a_hi.size)
    d = np.abs(a_lo[:m] - a_hi[:m]) > rtol * 0.5 * (np.abs(a_lo[:m]) + np.abs(a_hi[:m]))
    return int(np.argmax(d)) if np.any(d) else m


def find_unique_constant(params: ModelParams, depth: int = MAX_SHOOT_DEPTH,
                         bracket: tuple[float, float] | None = None,
                         trust_rtol: float = 1e-12, scan_points: int = 241) -> CoefficientSequence:
    """Shoot on ``a_0`` for the unique constant solution of a KP-dominant model.

    Each candidate ``a_0`` is continued forward to ``depth`` shells. The
    unstable direction of the ratio map alternates in sign, so the parity of
    the ratio excursion at the deepest shell separates candidates on either
    side of the solution. A logarithmic scan of ``bracket`` locates the sign
    change, then bisection runs to adjacent floats.

    The returned sequence stops at the last shell where the two final bracket
    endpoints still agree to ``trust_rtol`` and before the runaway detector
    of :func:`constant_divergence` fires.

    Parameters
    ----------
    params : ModelParams
        Must be KP-dominant, critical, above the self-similar band or pure KP.
    depth : int
        Shooting depth, at most 60.
    bracket : (float, float), optional
        Search interval for ``a_0``; defaults to
        ``[1e-6, 1e6] * sqrt(F / (delta1 + delta2))``.
    trust_rtol : float
        Agreement required between bracket endpoint sequences.
    scan_points : int
        Points of the logarithmic pre-scan.

    Raises
    ------
    RegimeMismatchError
        In the Obukhov-dominant regime.
    BracketingError
        If the bracket contains no sign change.
    """
    tag = regime_classify(params).tag
    if tag in (RegimeTag.OBUKHOV_DOMINANT, RegimeTag.PURE_OBUKHOV):
        raise RegimeMismatchError(
            f"regime {tag.value}: every a0 gives a solution, use build_constant_solution")
    if params.forcing <= 0:
        raise InvalidParametersError("constant solutions need positive forcing")
    if not 2 <= depth <= MAX_SHOOT_DEPTH:
        raise InvalidParametersError(f"depth must lie in [2, {MAX_SHOOT_DEPTH}]")
    beta = params.beta
    scale = math.sqrt(params.forcing / (params.delta1 + params.delta2))
    lo, hi = bracket if bracket is not None else (1e-6 * scale, 1e6 * scale)
    if not 0 < lo < hi:
        raise InvalidParametersError("bracket must satisfy 0 < lo < hi")

    def sign(a0):
        return _parity_sign(constant_sequence(a0, params, depth), beta)

    grid = np.geomspace(lo, hi, scan_points)
    signs = [sign(x) for x in grid]
    changes = [i for i in range(len(grid) - 1) if signs[i] * signs[i + 1] < 0]
    exact = [grid[i] for i, s in enumerate(signs) if s == 0]
    if not changes and not exact:
        raise BracketingError(
            f"no sign change of the divergence parity on [{lo:.3e}, {hi:.3e}]; "
            f"endpoint signs {signs[0]}, {signs[-1]}")

    candidates = []
    for i in changes:
        x0, x1, s0 = grid[i], grid[i + 1], signs[i]
        for _ in range(200):
            m = 0.5 * (x0 + x1)
            if m <= x0 or m >= x1:
                break
            sm = sign(m)
            if sm == 0:
                x0 = x1 = m
                break
            if sm == s0:
                x0 = m
            else:
                x1 = m
        candidates.append((x0, x1))
    candidates.extend((x, x) for x in exact)

    best = None
    for x0, x1 in candidates:
        mid = 0.5 * (x0 + x1)
        a_mid = constant_sequence(mid, params, depth)
        n_ok = _trusted_length(constant_sequence(x0, params, depth),
                               constant_sequence(x1, params, depth), trust_rtol)
        n_ok = min(n_ok, a_mid.size)
        div = constant_divergence(a_mid[:n_ok], beta)
        if div is not None:
            n_ok = div[0]
        if n_ok < 2:
            continue
        a = a_mid[:n_ok]
        c = k41_normalize(a, beta)
        q = max(1, a.size // 4)
        drift = float(np.max(np.abs(c[-q:] - c[-1]) / c[-1]))
        if best is None or (a.size, -drift) > (best[0].size, -best[3]):
            best = (a, x0, x1, drift)
    if best is None:
        raise NoSolutionError("bisection produced no trusted shells")
    a, x0, x1, drift = best
    meta = {"method": "shooting", "bracket": (x0, x1), "bracket_width": x1 - x0,
            "roots_found": len(candidates), "trusted_shells": int(a.size),
            "scan": (lo, hi, scan_points)}
    if a.size >= 3 and params.delta1 > 0:
        meta["tail_check"] = backward_tail_check(a, params)
    return CoefficientSequence(a, SequenceKind.CONSTANT, params,
                               k41_constant=float(k41_normalize(a, beta)[-1]), meta=meta)


def backward_tail_check(seq, params: ModelParams) -> float:
    """Compare a sequence's ratios with backward-map iterates from its last ratio.

    Seeds the backward map with the final backward ratio and walks down to
    shell 1. Returns the largest absolute difference between recomputed and
    stored backward ratios.
    """
    a = seq.values if isinstance(seq, CoefficientSequence) else np.asarray(seq, dtype=float)
    if a.size < 3:
        raise InvalidStateError("need at least 3 terms")
    c = params.k1 ** (1.0 / 3.0)
    back = a[:-1] / a[1:] / c
    p = RatioStepParams.from_model(params)
    x = back[-1]
    worst = 0.0
    for i in range(back.size - 2, -1, -1):
        x = backward_ratio_step(x, p)
        worst = max(worst, abs(x - back[i]))
    return worst


def k41_constant(seq, params: ModelParams) -> tuple[float, float]:
    """K41 constant ``a_M k_M**(1/3)`` and its drift over the last quarter.

    Returns
    -------
    estimate : float
    drift : float
        ``max |a_n k_n**(1/3) - estimate| / estimate`` over the last quarter
        of shells.
    """
    a = seq.values if isinstance(seq, CoefficientSequence) else np.asarray(seq, dtype=float)
    if a.size < 10:
        raise InvalidStateError("k41_constant needs at least 10 terms")
    c = k41_normalize(a, params.beta)
    est = float(c[-1])
    q = max(1, a.size // 4)
    drift = float(np.max(np.abs(c[-q:] - est)) / est)
    return est, drift


def constant_csv_rows(seq: CoefficientSequence):
    """Rows ``(n, k_n, a_n, a_n k_n**(1/3))``."""
    beta = seq.params.beta
    c = seq.normalized
    return [(n, wavenumber(n, beta), float(a), float(cn))
            for n, (a, cn) in enumerate(zip(seq.values, c))]
