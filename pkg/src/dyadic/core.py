"""Shell model core: parameters, state, right-hand side and residual functionals.

The mixed dyadic model couples shells ``n = 0..N`` with wavenumbers
``k_n = 2**(beta*n)``::

    dY_n/dt = delta1 * (k_n Y_{n-1}^2 - k_{n+1} Y_n Y_{n+1})
            - delta2 * (k_n Y_{n+1}^2 - k_{n-1} Y_n Y_{n-1})

with ``Y_{-1} = 0`` and ``Y_{N+1} = 0``. The forcing ``F`` acts on shell 0
only. ``delta1`` weights the KP (forward) transfer and ``delta2`` the
Obukhov (backward) transfer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidParametersError, InvalidStateError

__all__ = [
    "ModelParams",
    "ShellField",
    "SequenceKind",
    "CoefficientSequence",
    "RatioDirection",
    "RatioSequence",
    "RegimeTag",
    "RegimeClass",
    "SelfSimilarBand",
    "wavenumber",
    "wavenumbers",
    "rhs",
    "rhs_array",
    "energy",
    "sobolev_norm_sq",
    "regime_thresholds",
    "regime_classify",
    "selfsimilar_band",
    "stationary_residual",
    "stationary_residual_scale",
    "selfsimilar_residual",
    "selfsimilar_residual_scale",
    "k41_normalize",
]

# relative tolerance for "ratio equals threshold"
CRITICAL_RTOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Immutable model parameters.

    Parameters
    ----------
    beta : float
        Wavenumber exponent, ``k_n = 2**(beta*n)``. Must be positive.
    delta1, delta2 : float
        Non-negative KP and Obukhov coupling weights, not both zero.
    forcing : float
        Constant forcing on shell 0, non-negative.
    n_shells : int
        Index ``N`` of the last active shell, at least 2.
    """

    beta: float = 1.0
    delta1: float = 1.0
    delta2: float = 1.0
    forcing: float = 0.0
    n_shells: int = 40

    def __post_init__(self):
        for name in ("beta", "delta1", "delta2", "forcing"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or isinstance(v, bool):
                raise InvalidParametersError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise InvalidParametersError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.beta <= 0:
            raise InvalidParametersError(f"beta must be positive, got {self.beta}")
        if self.delta1 < 0 or self.delta2 < 0:
            raise InvalidParametersError("delta1 and delta2 must be non-negative")
        if self.delta1 + self.delta2 <= 0:
            raise InvalidParametersError("delta1 and delta2 cannot both be zero")
        if self.forcing < 0:
            raise InvalidParametersError(f"forcing must be non-negative, got {self.forcing}")
        if isinstance(self.n_shells, bool) or int(self.n_shells) != self.n_shells:
            raise InvalidParametersError(f"n_shells must be an integer, got {self.n_shells!r}")
        object.__setattr__(self, "n_shells", int(self.n_shells))
        if self.n_shells < 2:
            raise InvalidParametersError(f"n_shells must be at least 2, got {self.n_shells}")

    @property
    def k1(self) -> float:
        """Wavenumber ratio ``k_1 = 2**beta``."""
        return wavenumber(1, self)

    @property
    def ratio(self) -> float:
        """``delta1 / delta2`` (``inf`` for pure KP)."""
        return self.delta1 / self.delta2 if self.delta2 > 0 else math.inf

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers ``k_0..k_{N+1}`` as a read-only array."""
        arr = wavenumbers(self.n_shells + 2, self.beta)
        arr.setflags(write=False)
        return arr

    def replace(self, **changes) -> "ModelParams":
        """Return a copy with selected fields changed."""
        d = dict(beta=self.beta, delta1=self.delta1, delta2=self.delta2,
                 forcing=self.forcing, n_shells=self.n_shells)
        d.update(changes)
        return ModelParams(**d)

    def as_dict(self) -> dict:
        return dict(beta=self.beta, delta1=self.delta1, delta2=self.delta2,
                    forcing=self.forcing, n_shells=self.n_shells)


def wavenumber(n: int, params: ModelParams | float) -> float:
    """Wavenumber ``k_n = 2**(beta*n)``.

    Exact as a binary float whenever ``beta*n`` is an integer.

    Examples
    --------
    >>> wavenumber(3, ModelParams(beta=1.0))
    8.0
    """
    beta = params.beta if isinstance(params, ModelParams) else float(params)
    x = beta * n
    if x == int(x):
        return math.ldexp(1.0, int(x))
    return 2.0 ** x


def wavenumbers(count: int, beta: float, start: int = 0) -> np.ndarray:
    """Array ``k_start .. k_{start+count-1}``."""
    return np.array([wavenumber(n, beta) for n in range(start, start + count)], dtype=float)


@dataclass(frozen=True)
class ShellField:
    """Instantaneous state ``Y_0..Y_N`` at time ``t``."""

    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1 or v.size < 3:
            raise InvalidStateError("values must be a 1-d array with at least 3 shells")
        if not np.all(np.isfinite(v)):
            raise InvalidStateError("values must be finite")
        if not math.isfinite(self.t):
            raise InvalidStateError("t must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_shells(self) -> int:
        return self.values.size - 1


def _as_state(y, params: ModelParams) -> np.ndarray:
    v = y.values if isinstance(y, ShellField) else np.asarray(y, dtype=float)
    if v.shape != (params.n_shells + 1,):
        raise InvalidStateError(
            f"state has {v.shape} entries, expected ({params.n_shells + 1},)")
    if not np.all(np.isfinite(v)):
        raise InvalidStateError("state contains non-finite values")
    return v


def rhs_array(y: np.ndarray, params: ModelParams, tail: float = 0.0) -> np.ndarray:
    """Vectorized right-hand side on a raw array, with ``Y_{N+1} = tail``."""
    k = params.k
    d1, d2 = params.delta1, params.delta2
    ext = np.empty(y.size + 2)
    ext[0] = 0.0
    ext[1:-1] = y
    ext[-1] = tail
    ym, yc, yp = ext[:-2], ext[1:-1], ext[2:]
    kn = k[: y.size]
    kp = k[1: y.size + 1]
    km = np.empty_like(kn)
    km[0] = 0.0
    km[1:] = k[: y.size - 1]
    out = d1 * (kn * ym * ym - kp * yc * yp) - d2 * (kn * yp * yp - km * yc * ym)
    out[0] += params.forcing
    return out


def rhs(y: ShellField | np.ndarray, params: ModelParams) -> np.ndarray:
    """Time derivative of every shell under zero-tail truncation.

    Parameters
    ----------
    y : ShellField or ndarray
        State ``Y_0..Y_N``.
    params : ModelParams

    Returns
    -------
    ndarray
        ``dY_n/dt`` for ``n = 0..N``.

    Raises
    ------
    InvalidStateError
        If the state has the wrong length or is non-finite.
    """
    return rhs_array(_as_state(y, params), params)


def energy(y: ShellField | np.ndarray) -> float:
    """Energy ``sum_n Y_n**2``."""
    v = y.values if isinstance(y, ShellField) else np.asarray(y, dtype=float)
    return float(np.dot(v, v))


def sobolev_norm_sq(y: ShellField | np.ndarray, s: float, beta: float = 1.0) -> float:
    """Squared H^s norm ``sum_n 2**(2 s beta n) Y_n**2``.

    With ``beta = 1`` this is ``sum_n 2**(2sn) Y_n**2``.
    """
    v = y.values if isinstance(y, ShellField) else np.asarray(y, dtype=float)
    w = 2.0 ** (2.0 * s * beta * np.arange(v.size))
    return float(np.sum(w * v * v))


def regime_thresholds(params: ModelParams | float) -> dict:
    """Ratio thresholds ``k1**-4``, ``k1**-4/3`` and 1."""
    beta = params.beta if isinstance(params, ModelParams) else float(params)
    k1 = wavenumber(1, beta)
    return {"selfsimilar_lower": k1 ** -4, "critical": k1 ** (-4.0 / 3.0), "upper": 1.0}


class RegimeTag(str, enum.Enum):
    OBUKHOV_DOMINANT = "ObukhovDominant"
    CRITICAL_RATIO = "CriticalRatio"
    KP_DOMINANT = "KPDominant"
    OUTSIDE_SELFSIMILAR_BAND = "OutsideSelfSimilarBand"
    PURE_KP = "PureKP"
    PURE_OBUKHOV = "PureObukhov"


class SelfSimilarBand(str, enum.Enum):
    """Where ``delta1/delta2`` sits relative to the self-similar existence band."""

    BELOW = "Below"
    MULTIPLE = "Multiple"
    CRITICAL = "Critical"
    UNIQUE = "Unique"
    ABOVE = "Above"


@dataclass(frozen=True)
class RegimeClass:
    tag: RegimeTag
    ratio: float


def _is_close(a: float, b: float) -> bool:
    return abs(a - b) <= CRITICAL_RTOL * abs(b)


def regime_classify(params: ModelParams) -> RegimeClass:
    """Classify ``r = delta1/delta2`` against ``k1**-4/3`` and 1.

    Boundary values belong to the upper class except the exact critical
    ratio, which gets its own tag.

    Examples
    --------
    >>> regime_classify(ModelParams(delta1=0.1, delta2=1.0)).tag.value
    'ObukhovDominant'
    """
    d1, d2 = params.delta1, params.delta2
    if d2 == 0:
        return RegimeClass(RegimeTag.PURE_KP, math.inf)
    if d1 == 0:
        return RegimeClass(RegimeTag.PURE_OBUKHOV, 0.0)
    r = d1 / d2
    crit = regime_thresholds(params)["critical"]
    if _is_close(r, crit):
        tag = RegimeTag.CRITICAL_RATIO
    elif r < crit:
        tag = RegimeTag.OBUKHOV_DOMINANT
    elif r <= 1.0:
        tag = RegimeTag.KP_DOMINANT
    else:
        tag = RegimeTag.OUTSIDE_SELFSIMILAR_BAND
    return RegimeClass(tag, r)


def selfsimilar_band(params: ModelParams) -> SelfSimilarBand:
    """Position of the ratio relative to ``[k1**-4, k1**-4/3, 1]``.

    ``Multiple`` means forward construction works from any ``a_1``,
    ``Unique`` means a single shooting root is expected.
    """
    th = regime_thresholds(params)
    r = params.ratio
    if _is_close(r, th["critical"]):
        return SelfSimilarBand.CRITICAL
    if r < th["selfsimilar_lower"]:
        return SelfSimilarBand.BELOW
    if r < th["critical"]:
        return SelfSimilarBand.MULTIPLE
    if r <= 1.0:
        return SelfSimilarBand.UNIQUE
    return SelfSimilarBand.ABOVE


class SequenceKind(str, enum.Enum):
    CONSTANT = "Constant"
    SELF_SIMILAR = "SelfSimilar"


@dataclass(frozen=True)
class CoefficientSequence:
    """Positive coefficients ``a_0..a_M`` of a constant or self-similar solution.

    Constant solutions start at ``a_0``. Self-similar sequences also start at
    index 0, where ``a_0`` is unused by the self-similar relation and may be 0.
    """

    values: np.ndarray
    kind: SequenceKind
    params: ModelParams
    k41_constant: float | None = None
    t_origin: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def normalized(self) -> np.ndarray:
        """``a_n * k_n**(1/3)``."""
        return k41_normalize(self.values, self.params.beta)


def k41_normalize(a: np.ndarray, beta: float) -> np.ndarray:
    """``a_n * k_n**(1/3)`` for ``n = 0..len(a)-1``."""
    a = np.asarray(a, dtype=float)
    return a * 2.0 ** (beta * np.arange(a.size) / 3.0)


class RatioDirection(str, enum.Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"


@dataclass(frozen=True)
class RatioSequence:
    """Normalized ratios.

    Forward ratios are ``(a_n/a_{n-1}) k1**(1/3)``. Backward ratios are
    their reciprocals. The K41 law corresponds to ratios equal to 1.
    """

    values: np.ndarray
    direction: RatioDirection

    @classmethod
    def from_coefficients(cls, a, beta: float,
                          direction: RatioDirection = RatioDirection.FORWARD) -> "RatioSequence":
        a = np.asarray(a, dtype=float)
        c = wavenumber(1, beta) ** (1.0 / 3.0)
        b = a[1:] / a[:-1] * c
        if direction is RatioDirection.BACKWARD:
            b = 1.0 / b
        b.setflags(write=False)
        return cls(b, direction)


def _coeffs(seq) -> np.ndarray:
    v = seq.values if isinstance(seq, CoefficientSequence) else np.asarray(seq, dtype=float)
    if v.ndim != 1 or v.size < 3:
        raise InvalidStateError("sequence needs at least 3 terms")
    return v


def _stationary_terms(a: np.ndarray, params: ModelParams):
    k = wavenumbers(a.size + 1, params.beta)
    d1, d2 = params.delta1, params.delta2
    n = np.arange(1, a.size - 1)
    t1 = d1 * k[n] * a[n - 1] ** 2
    t2 = d1 * k[n + 1] * a[n] * a[n + 1]
    t3 = d2 * k[n] * a[n + 1] ** 2
    t4 = d2 * k[n - 1] * a[n] * a[n - 1]
    h1 = d1 * k[1] * a[0] * a[1]
    h2 = d2 * a[1] ** 2
    return (h1, h2), (t1, t2, t3, t4)


def stationary_residual(seq, params: ModelParams) -> np.ndarray:
    """Raw residual of the constant-solution equations.

    Component 0 is ``delta1 k1 a0 a1 + delta2 a1**2 - F``. Component ``n`` for
    ``1 <= n <= M-1`` is the shell-``n`` stationary balance.
    """
    a = _coeffs(seq)
    (h1, h2), (t1, t2, t3, t4) = _stationary_terms(a, params)
    out = np.empty(a.size - 1)
    out[0] = h1 + h2 - params.forcing
    out[1:] = (t1 - t2) - (t3 - t4)
    return out


def stationary_residual_scale(seq, params: ModelParams) -> np.ndarray:
    """Sum of absolute term magnitudes matching :func:`stationary_residual`."""
    a = _coeffs(seq)
    (h1, h2), (t1, t2, t3, t4) = _stationary_terms(a, params)
    out = np.empty(a.size - 1)
    out[0] = abs(h1) + abs(h2) + params.forcing
    out[1:] = np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4)
    return out


def _selfsimilar_terms(a: np.ndarray, params: ModelParams):
    k1 = wavenumber(1, params.beta)
    d1, d2 = params.delta1, params.delta2
    n = np.arange(1, a.size - 1)
    kn = wavenumbers(a.size, params.beta)[n]
    return (a[n] / kn, d1 * a[n - 1] ** 2, d1 * k1 * a[n] * a[n + 1],
            d2 * a[n + 1] ** 2, d2 * a[n] * a[n - 1] / k1)


def selfsimilar_residual(seq, params: ModelParams) -> np.ndarray:
    """Raw residual of the self-similar relation for ``n = 1..M-1``.

    ``a_n/k_n + delta1 (a_{n-1}^2 - k1 a_n a_{n+1})
    - delta2 (a_{n+1}^2 - a_n a_{n-1}/k1)``.
    """
    a = _coeffs(seq)
    s0, t1, t2, t3, t4 = _selfsimilar_terms(a, params)
    return s0 + (t1 - t2) - (t3 - t4)


def selfsimilar_residual_scale(seq, params: ModelParams) -> np.ndarray:
    """Sum of absolute term magnitudes matching :func:`selfsimilar_residual`."""
    a = _coeffs(seq)
    terms = _selfsimilar_terms(a, params)
    return sum(np.abs(t) for t in terms)
