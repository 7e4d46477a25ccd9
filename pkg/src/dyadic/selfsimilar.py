"""Self-similar solutions ``Y_n(t) = a_n / (t - t0)`` of the unforced model.

The coefficients satisfy, for ``n >= 1``::

    -a_n / k_n = delta1 (a_{n-1}^2 - k_1 a_n a_{n+1})
               - delta2 (a_{n+1}^2 - a_n a_{n-1} / k_1)

which is explicit in ``a_{n+1}`` given ``a_{n-1}`` and ``a_n``. Starting from
``a_0 = 0`` and a free ``a_1`` the recursion generates the whole sequence.

Pure KP (``delta2 = 0``, ``beta = 1``) is also treated in the weak form
``w_n = a_n 2**(n/3)``, where ``w_{n+1} = w_{n-1}**2 / w_n + zeta_n`` with
``zeta_n = 2**-n * 2**((n-2)/3)``. Truncated backward (pull-back) iteration
of the weak recursion locates the unique KP solution.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (CoefficientSequence, ModelParams, SelfSimilarBand, SequenceKind,
                   k41_normalize, regime_thresholds, selfsimilar_band,
                   selfsimilar_residual, wavenumber)
from .errors import (BracketingError, BranchError, IndeterminateDivergenceError,
                     InvalidParametersError, InvalidStateError, NoSolutionError,
                     RegimeMismatchError)
from .stationary import _parity_sign, _trusted_length

__all__ = [
    "PULLBACK_M",
    "WeakSequence",
    "DivergenceProfile",
    "ShootResult",
    "zeta",
    "kp_forward_step",
    "kp_sequence",
    "weak_from_strong",
    "strong_from_weak",
    "backward_truncated",
    "find_L_star",
    "divergence_classify",
    "k41_extend",
    "seed_divergence",
    "mixed_forward_step",
    "selfsimilar_sequence",
    "build_selfsimilar",
    "shoot_selfsimilar",
    "selfsimilar_ratio_step",
    "selfsimilar_backward_ratio_step",
    "backward_consistency_check",
    "c_growth_check",
    "ratio_envelope_check",
    "sobolev_partial_sums",
    "selfsimilar_csv_rows",
]

# sum of zeta_n over n >= 1
PULLBACK_M = 2.0 ** (-4.0 / 3.0) / (1.0 - 2.0 ** (-2.0 / 3.0))
ALPHA_MIN = 0.05
CONVERGED_LOG2 = 0.01
MAX_BUILD_DEPTH = 1000
MAX_SHOOT_DEPTH = 60
_LOG2_ESCAPE = 200.0


def zeta(n):
    """Weak-form source ``zeta_n = 2**-n * 2**((n-2)/3)`` (``beta = 1``)."""
    n = np.asarray(n, dtype=float)
    out = 2.0 ** (-n) * 2.0 ** ((n - 2.0) / 3.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WeakSequence:
    """Weak sequence ``w_0..w_{N+1}`` from the pull-back recursion.

    When ``well_defined`` is false, ``values`` holds only the entries computed
    before the recursion hit a negative radicand, ordered by index from the
    first computed shell to ``N+1``.
    """

    values: np.ndarray
    zeta: np.ndarray
    start_L: float
    well_defined: bool
    first_index: int = 0

    def __post_init__(self):
        for name in ("values", "zeta"):
            v = np.array(getattr(self, name), dtype=float, copy=True)
            v.setflags(write=False)
            object.__setattr__(self, name, v)


class DivergenceProfile(str, enum.Enum):
    ODD_UP = "OddUp"
    EVEN_UP = "EvenUp"
    CONVERGED = "Converged"


@dataclass(frozen=True)
class ShootResult:
    """Outcome of :func:`shoot_selfsimilar`.

    ``candidates`` lists every root bracket found by the scan as
    ``(lo, hi)`` pairs; ``root`` is the largest.
    """

    root: float
    bracket_width: float
    sequence: CoefficientSequence
    divergence_profile: DivergenceProfile
    candidates: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)


def kp_forward_step(a_prev: float, a_cur: float, n: int, beta: float = 1.0) -> float:
    """KP strong recursion ``a_{n+1} = 2**(-beta n) + a_{n-1}**2 / (2**beta a_n)``.

    This normalization uses ``2**(-beta n)`` as source; the model's own
    self-similar coefficients are these values divided by ``k_1 = 2**beta``.

    Examples
    --------
    >>> kp_forward_step(0.0, 1.0, 1)
    0.5
    >>> kp_forward_step(1.0, 0.5, 2)
    1.25
    """
    if a_cur == 0:
        raise ZeroDivisionError("a_cur = 0: handle leading-zero blocks separately")
    if n < 1:
        raise InvalidParametersError("n must be at least 1")
    return wavenumber(-n, beta) + a_prev * a_prev / (wavenumber(1, beta) * a_cur)


def kp_sequence(a1: float, depth: int, beta: float = 1.0) -> np.ndarray:
    """``a_0 = 0, a_1, ..., a_depth`` from :func:`kp_forward_step`."""
    a = [0.0, float(a1)]
    for n in range(1, depth):
        a.append(kp_forward_step(a[-2], a[-1], n, beta))
    return np.array(a)


def weak_from_strong(a) -> WeakSequence:
    """Rescale ``w_n = a_n 2**(n/3)`` (model normalization, ``beta = 1``)."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise InvalidStateError("strong sequence must be finite and non-negative")
    w = a * 2.0 ** (np.arange(a.size) / 3.0)
    N = max(a.size - 2, 0)
    return WeakSequence(w, zeta(np.arange(1, N + 1)), float(w[-1]) if w.size else 0.0, True)


def strong_from_weak(w) -> np.ndarray:
    """Inverse rescale ``a_n = w_n 2**(-n/3)``."""
    if isinstance(w, WeakSequence):
        v, i0 = w.values, w.first_index
    else:
        v, i0 = np.asarray(w, dtype=float), 0
    return v * 2.0 ** (-(np.arange(v.size) + i0) / 3.0)


def backward_truncated(L: float, N: int) -> WeakSequence:
    """Pull-back ``w_{N+1} = w_N = L``, ``w_{n-1} = sqrt(w_n (w_{n+1} - zeta_n))``.

    Failure is returned as data: ``well_defined`` turns false as soon as a
    radicand is negative.
    """
    if N <= 2:
        raise InvalidParametersError("N must exceed 2")
    if not L > 0:
        raise InvalidParametersError("L must be positive")
    z = zeta(np.arange(1, N + 1))
    w = np.empty(N + 2)
    w[N + 1] = w[N] = L
    for n in range(N, 0, -1):
        r = w[n + 1] - z[n - 1]
        if r < 0:
            return WeakSequence(w[n:], z, float(L), False, first_index=n)
        w[n - 1] = math.sqrt(w[n] * r)
    return WeakSequence(w, z, float(L), True)


def find_L_star(N: int = 40, tol: float = 1e-12) -> tuple[float, WeakSequence]:
    """Smallest start value giving a well-defined pull-back at depth ``N``.

    Bisects between a failing start and ``L = M`` (always well defined),
    continuing past ``tol`` down to float resolution so that ``w_0`` is as
    close to 0 as double precision allows.

    Returns
    -------
    L_star : float
        The succeeding bracket endpoint.
    seq : WeakSequence
        Pull-back from ``L_star``.
    """
    if N < 10:
        raise InvalidParametersError("N must be at least 10")
    if not tol > 0:
        raise InvalidParametersError("tol must be positive")
    hi = PULLBACK_M
    lo = hi
    while backward_truncated(lo, N).well_defined:
        lo *= 0.5
        if lo < 1e-300:
            raise NoSolutionError("no failing start value found")
    for _ in range(2000):
        m = 0.5 * (lo + hi)
        if m <= lo or m >= hi:
            break
        if backward_truncated(m, N).well_defined:
            hi = m
        else:
            lo = m
    seq = backward_truncated(hi, N)
    return hi, seq


def divergence_classify(seq, reference, alpha_min: float = ALPHA_MIN,
                        min_window: int = 16) -> DivergenceProfile:
    """Classify how ``seq`` departs from ``reference``.

    With ``d_n = log2(seq_n / reference_n)``, ``Converged`` means
    ``|d_n| < 0.01`` over the last quarter. Otherwise straight lines are fit
    to odd and even ``n`` over the trailing ``max(16, len/2)`` shells; one
    parity rising at ``alpha_min`` bits per shell or faster while the other
    falls at least as fast gives ``OddUp`` or ``EvenUp``.

    Raises
    ------
    IndeterminateDivergenceError
        For mixed signals; a deeper sequence usually resolves them.
    """
    s = np.asarray(seq.values if isinstance(seq, CoefficientSequence) else seq, dtype=float)
    r = np.asarray(reference.values if isinstance(reference, CoefficientSequence) else reference,
                   dtype=float)
    if s.size != r.size or s.size < 8:
        raise InvalidStateError("sequences must share a length of at least 8")
    n = np.arange(s.size)
    ok = (s > 0) & (r > 0)
    d = np.zeros(s.size)
    d[ok] = np.log2(s[ok]) - np.log2(r[ok])
    q = max(1, s.size // 4)
    if np.all(np.abs(d[-q:]) < CONVERGED_LOG2) and np.all(ok[-q:] | ((s[-q:] == 0) & (r[-q:] == 0))):
        return DivergenceProfile.CONVERGED
    w = max(min_window, s.size // 2)
    if s.size < min_window:
        raise IndeterminateDivergenceError("too few shells for a slope fit")
    sel = (n >= s.size - w) & ok
    odd = sel & (n % 2 == 1)
    even = sel & (n % 2 == 0)
    if np.count_nonzero(odd) < 2 or np.count_nonzero(even) < 2:
        raise IndeterminateDivergenceError("not enough positive terms to fit slopes")
    so = np.polyfit(n[odd], d[odd], 1)[0]
    se = np.polyfit(n[even], d[even], 1)[0]
    if so >= alpha_min and se <= -alpha_min:
        return DivergenceProfile.ODD_UP
    if se >= alpha_min and so <= -alpha_min:
        return DivergenceProfile.EVEN_UP
    raise IndeterminateDivergenceError(
        f"parity slopes odd={so:.4g}, even={se:.4g} bits/shell; try a deeper sequence")


def mixed_forward_step(a_prev: float, a_cur: float, n: int, params: ModelParams) -> float:
    """Positive root ``a_{n+1}`` of the self-similar relation at shell ``n``.

    Solves ``delta2 x**2 + delta1 k_1 a_n x = delta1 a_{n-1}**2
    + delta2 a_{n-1} a_n / k_1 + a_n / k_n`` with a cancellation-free formula.
    ``delta2 = 0`` reduces to the linear KP case.

    Examples
    --------
    >>> round(mixed_forward_step(0.0, 1.0, 1, ModelParams(delta1=0.0, delta2=1.0)), 12)
    0.707106781187
    """
    if not a_cur > 0:
        raise BranchError("a_cur must be positive")
    if n < 1:
        raise InvalidParametersError("n must be at least 1")
    d1, d2 = params.delta1, params.delta2
    k1 = params.k1
    c = d1 * a_prev * a_prev + d2 * a_prev * a_cur / k1 + a_cur / wavenumber(n, params.beta)
    B = d1 * k1 * a_cur
    if d2 == 0:
        return c / B
    return 2.0 * c / (B + math.sqrt(B * B + 4.0 * d2 * c))


def selfsimilar_sequence(a_lead: float, params: ModelParams, depth: int,
                         n_zero: int = 0) -> np.ndarray:
    """Generate ``a_0..a_depth`` with ``a_0..a_{n_zero} = 0`` and ``a_{n_zero+1} = a_lead``.

    Stops early once ``a_n k_n**(1/3)`` moves more than ``2**200`` away from
    its value at the first nonzero shell, returning a shorter array.
    """
    if not a_lead > 0:
        raise InvalidParametersError("a_lead must be positive")
    if depth < n_zero + 2:
        raise InvalidParametersError("depth too small for the leading block")
    beta = params.beta
    a = [0.0] * (n_zero + 1) + [float(a_lead)]
    ref = math.log2(a_lead) + beta * (n_zero + 1) / 3.0
    for n in range(n_zero + 1, depth):
        x = mixed_forward_step(a[-2], a[-1], n, params)
        if not (x > 0 and math.isfinite(x)):
            break
        if abs(math.log2(x) + beta * (n + 1) / 3.0 - ref) > _LOG2_ESCAPE:
            break
        a.append(x)
    return np.array(a)


def _k41_meta(a: np.ndarray, beta: float) -> tuple[float, float]:
    c = k41_normalize(a, beta)
    q = max(1, a.size // 4)
    est = float(c[-1])
    return est, float(np.max(np.abs(c[-q:] - est)) / est)


def build_selfsimilar(a1: float, params: ModelParams, depth: int = 200,
                      allow_outside_band: bool = False) -> CoefficientSequence:
    """Forward construction in the multi-solution band ``[k1**-4, k1**-4/3)``.

    Every ``a_1 > 0`` yields a solution there. ``allow_outside_band`` permits
    exploratory runs below the band, where no existence result is claimed.

    Raises
    ------
    RegimeMismatchError
        Outside the band (use :func:`shoot_selfsimilar` above it).
    NoSolutionError
        If the sequence leaves the float range before ``depth``.
    """
    band = selfsimilar_band(params)
    ok = band is SelfSimilarBand.MULTIPLE or (allow_outside_band and band is SelfSimilarBand.BELOW)
    if params.delta2 == 0 or not ok:
        raise RegimeMismatchError(
            f"ratio {params.ratio:.6g} is outside [k1^-4, k1^-4/3); use shoot_selfsimilar")
    if not 2 <= depth <= MAX_BUILD_DEPTH:
        raise InvalidParametersError(f"depth must lie in [2, {MAX_BUILD_DEPTH}]")
    if depth * params.beta > 900:
        raise InvalidParametersError("beta*depth above 900 underflows the coefficients")
    a = selfsimilar_sequence(a1, params, depth)
    if a.size != depth + 1:
        raise NoSolutionError(f"sequence left the float range at shell {a.size}")
    est, drift = _k41_meta(a, params.beta)
    return CoefficientSequence(a, SequenceKind.SELF_SIMILAR, params, k41_constant=est,
                               t_origin=-1.0,
                               meta={"method": "forward", "a1": float(a1), "k41_drift": drift,
                                     "band": band.value})


def shoot_selfsimilar(params: ModelParams, depth: int = MAX_SHOOT_DEPTH,
                      scan: tuple[float, float, int] | None = None,
                      trust_rtol: float = 1e-10) -> ShootResult:
    """Shoot on ``a_1`` for a self-similar solution when ``delta1/delta2 > k1**-4/3``.

    A logarithmic scan of ``a_1`` records the parity of the ratio excursion
    at the deepest shell; each sign change is bisected to adjacent floats.
    The largest root is returned and all roots are listed in ``candidates``.
    The sequence is truncated where the two final bracket endpoints stop
    agreeing to ``trust_rtol``.

    Parameters
    ----------
    params : ModelParams
        ``delta2 > 0`` and ratio above ``k1**-4/3``. Ratios above 1 are
        accepted and flagged in ``meta``.
    depth : int
        Shooting depth, at most 60.
    scan : (lo, hi, points), optional
        Default ``(1e-6, 1e4, 201)`` times ``1/(delta1 + delta2)``.
    trust_rtol : float

    Raises
    ------
    RegimeMismatchError
        In the multi-solution band, at the critical ratio or for ``delta2 = 0``.
    BracketingError
        If the scan finds no sign change.
    """
    band = selfsimilar_band(params)
    if params.delta2 == 0 or band not in (SelfSimilarBand.UNIQUE, SelfSimilarBand.ABOVE):
        raise RegimeMismatchError(
            f"band {band.value}: shooting needs ratio in (k1^-4/3, 1] and delta2 > 0")
    if not 8 <= depth <= MAX_SHOOT_DEPTH:
        raise InvalidParametersError(f"depth must lie in [8, {MAX_SHOOT_DEPTH}]")
    beta = params.beta
    s = 1.0 / (params.delta1 + params.delta2)
    lo, hi, pts = scan if scan is not None else (1e-6 * s, 1e4 * s, 201)

    def sign(a1):
        return _parity_sign(selfsimilar_sequence(a1, params, depth), beta)

    grid = np.geomspace(lo, hi, int(pts))
    signs = [sign(x) for x in grid]
    changes = [i for i in range(grid.size - 1) if signs[i] * signs[i + 1] < 0]
    if not changes:
        raise BracketingError(f"no sign change for a_1 in [{lo:.3e}, {hi:.3e}]")
    roots = []
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
        roots.append((float(x0), float(x1)))
    x0, x1 = roots[-1]
    root = 0.5 * (x0 + x1)
    a_mid = selfsimilar_sequence(root, params, depth)
    n_ok = _trusted_length(selfsimilar_sequence(x0, params, depth),
                           selfsimilar_sequence(x1, params, depth), trust_rtol)
    a = a_mid[:min(n_ok, a_mid.size)]
    if a.size < 8:
        raise NoSolutionError("fewer than 8 trusted shells at the root")
    est, drift = _k41_meta(a, beta)
    seq = CoefficientSequence(a, SequenceKind.SELF_SIMILAR, params, k41_constant=est,
                              t_origin=-1.0,
                              meta={"method": "shooting", "root": root, "bracket": (x0, x1),
                                    "k41_drift": drift, "trusted_shells": int(a.size),
                                    "band": band.value})
    res = float(np.max(np.abs(selfsimilar_residual(a, params))))
    meta = {"scan": (lo, hi, int(pts)), "roots_found": len(roots), "max_residual": res,
            "k41_drift": drift, "outside_band": band is SelfSimilarBand.ABOVE}
    if params.delta1 > 0 and a.size >= 4:
        meta["backward_check"] = backward_consistency_check(a, params)
    return ShootResult(root, x1 - x0, seq, DivergenceProfile.CONVERGED,
                       candidates=tuple(roots), meta=meta)


def k41_extend(seq: CoefficientSequence, depth: int) -> np.ndarray:
    """Continue a sequence to ``depth`` with its K41 law ``C k_n**(-1/3)``.

    The neglected correction is of relative order ``1/(a_n k_n)``, which is
    far below double precision beyond the trusted shells of a shot solution.
    """
    a = np.asarray(seq.values, dtype=float)
    if depth < a.size - 1:
        return a[:depth + 1].copy()
    n = np.arange(a.size, depth + 1)
    return np.concatenate((a, seq.k41_constant * 2.0 ** (-seq.params.beta * n / 3.0)))


def seed_divergence(a1: float, result: ShootResult, depth: int = 200) -> DivergenceProfile:
    """Classify the forward sequence from ``a1`` against a shot solution.

    The reference is the shot sequence continued by :func:`k41_extend`, so
    slowly growing perturbations can be followed past the shooting depth.
    """
    p = result.sequence.params
    s = selfsimilar_sequence(a1, p, depth)
    ref = k41_extend(result.sequence, depth)
    return divergence_classify(s, ref[:s.size])


def selfsimilar_ratio_step(b: float, eps: float, params: ModelParams) -> float:
    """Forward ratio map of the self-similar relation.

    With ``A = delta1 k1**(4/3)`` and ``eps = 1/(a_n k_n)``::

        b_{n+1} = (-A + sqrt(A**2 + 4 delta2 (A / b**2 + delta2 / b
                  + k1**(2/3) eps))) / (2 delta2)

    where ``b_n = (a_n/a_{n-1}) k1**(1/3)``.
    """
    if not (b > 0 and eps >= 0):
        raise BranchError("need b > 0 and eps >= 0")
    d1, d2 = params.delta1, params.delta2
    k1 = params.k1
    A = d1 * k1 ** (4.0 / 3.0)
    q = A / (b * b) + d2 / b + k1 ** (2.0 / 3.0) * eps
    if d2 == 0:
        return q / A
    return 2.0 * q / (math.sqrt(A * A + 4.0 * d2 * q) + A)


def selfsimilar_backward_ratio_step(b_next: float, eps: float, params: ModelParams) -> float:
    """Backward ratio ``(a_{n-1}/a_n) k1**(-1/3)`` from the next one.

    With ``B = delta2 k1**(-4/3)`` and ``eps = 1/(a_n k_n)``::

        b_n = (-B + sqrt(B**2 + 4 delta1 (delta1 / b + B / b**2
              - k1**(-2/3) eps))) / (2 delta1)

    Raises
    ------
    BranchError
        If the radicand makes the root non-positive.
    """
    if not (b_next > 0 and eps >= 0):
        raise BranchError("need b_next > 0 and eps >= 0")
    d1, d2 = params.delta1, params.delta2
    if d1 == 0:
        raise BranchError("delta1 = 0: backward step undefined")
    k1 = params.k1
    B = d2 * k1 ** (-4.0 / 3.0)
    q = d1 / b_next + B / (b_next * b_next) - k1 ** (-2.0 / 3.0) * eps
    if q <= 0:
        raise BranchError("no positive backward root")
    return 2.0 * q / (math.sqrt(B * B + 4.0 * d1 * q) + B)


def backward_consistency_check(seq, params: ModelParams) -> dict:
    """Recompute backward ratios from the last one with the sequence's own ``eps``.

    Returns the largest deviation from the stored backward ratios and the
    range ``[1/M, M]`` the recomputed ratios occupy.
    """
    a = np.asarray(seq.values if isinstance(seq, CoefficientSequence) else seq, dtype=float)
    beta = params.beta
    c = params.k1 ** (1.0 / 3.0)
    idx = np.nonzero(a > 0)[0]
    first = int(idx[0])
    back = {n: a[n - 1] / a[n] / c for n in range(first + 1, a.size)}
    x = back[a.size - 1]
    worst = 0.0
    vals = [x]
    for n in range(a.size - 2, first, -1):
        eps = 1.0 / (a[n] * wavenumber(n, beta))
        x = selfsimilar_backward_ratio_step(x, eps, params)
        vals.append(x)
        worst = max(worst, abs(x - back[n]) / back[n])
    v = np.array(vals)
    return {"max_relative_deviation": worst, "M": float(max(v.max(), 1.0 / v.min()))}


def c_growth_check(seq, params: ModelParams) -> tuple[bool, float]:
    """Check parity-wise growth of ``c_n = a_n k_n``.

    Returns
    -------
    monotone : bool
        ``c_{n+1} > c_{n-1}`` at every shell with both terms positive.
    M_fit : float
        ``min c_{n+1} / c_{n-1}`` over those shells.
    """
    a = np.asarray(seq.values if isinstance(seq, CoefficientSequence) else seq, dtype=float)
    th = regime_thresholds(params)
    r = params.ratio
    if not th["selfsimilar_lower"] * (1 - 1e-12) <= r <= 1.0 and params.delta2 > 0:
        raise RegimeMismatchError("c_growth_check needs ratio in [k1^-4, 1]")
    c = a * 2.0 ** (params.beta * np.arange(a.size))
    pos = np.nonzero(a > 0)[0]
    first = int(pos[0])
    cc = c[first:]
    q = cc[2:] / cc[:-2]
    return bool(np.all(q > 1.0)), float(q.min())


def ratio_envelope_check(seq, params: ModelParams) -> dict:
    """Envelope bound on normalized ratios in the multi-solution band.

    Using ``r_m = (a_{m+1}/a_m) k1**(1/3)`` for ``m >= 1``: if ``r_1 >= r_3``
    every ``r_{2j}`` is bounded by ``1 + sqrt(eps_1 k1**(2/3) / delta2)``.
    Otherwise the odd ratios ``r_{2j+1}`` (``j >= 1``) are bounded by
    ``1 + sqrt(eps_2 k1**(2/3) / delta2)``. Here ``eps_n = 1/(a_n k_n)``.

    Returns
    -------
    dict
        ``case`` ("even" or "odd"), ``bound``, ``max_ratio`` and ``holds``.
    """
    a = np.asarray(seq.values if isinstance(seq, CoefficientSequence) else seq, dtype=float)
    beta = params.beta
    k1 = params.k1
    c = k1 ** (1.0 / 3.0)
    r = {m: a[m + 1] / a[m] * c for m in range(1, a.size - 1)}
    eps = {n: 1.0 / (a[n] * wavenumber(n, beta)) for n in (1, 2)}
    if r[1] >= r[3]:
        case, e, ms = "even", eps[1], [m for m in r if m % 2 == 0]
    else:
        case, e, ms = "odd", eps[2], [m for m in r if m % 2 == 1 and m >= 3]
    bound = 1.0 + math.sqrt(e * k1 ** (2.0 / 3.0) / params.delta2)
    mx = max(r[m] for m in ms)
    return {"case": case, "bound": bound, "max_ratio": mx, "holds": bool(mx <= bound)}


def sobolev_partial_sums(a, s: float, beta: float = 1.0) -> np.ndarray:
    """Cumulative sums of ``2**(2 s beta n) a_n**2``."""
    a = np.asarray(a, dtype=float)
    return np.cumsum(2.0 ** (2.0 * s * beta * np.arange(a.size)) * a * a)


def selfsimilar_csv_rows(seq: CoefficientSequence):
    """Rows ``(n, a_n, a_n k_n**(1/3), b_n, eps_n)``.

    ``b_n = (a_n/a_{n-1}) k1**(1/3)`` and ``eps_n = 1/(a_n k_n)`` are NaN where
    undefined.
    """
    a = seq.values
    beta = seq.params.beta
    c = seq.normalized
    k13 = seq.params.k1 ** (1.0 / 3.0)
    rows = []
    for n in range(a.size):
        b = a[n] / a[n - 1] * k13 if n > 0 and a[n - 1] > 0 else math.nan
        e = 1.0 / (a[n] * wavenumber(n, beta)) if a[n] > 0 else math.nan
        rows.append((n, float(a[n]), float(c[n]), b, e))
    return rows
