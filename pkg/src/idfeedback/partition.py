"""Interval-partition state of the feedback encoder.

Only three lengths are tracked: ``l`` (everything left of the true segment),
``t`` (the true segment) and ``r`` (everything right of it).

``alpha`` is rounded once to a binary Scalar (gmpy2 ``mpfr``, configurable
mantissa), so it is a dyadic rational ``a / 2**s``.  Every update then maps
dyadic lengths over a common denominator to dyadic lengths over a common
denominator, and the state is kept *exactly* as integer numerators ``L, T, R``
over ``den``.  The Scalars ``l, t, r`` are views rounded to the working
precision; all predicates (side of 1/2, central, balanced, crossing) are
decided on the integers.

Rounding the state instead fails in two ways: once ``t`` is close to 1 its
absolute error is multiplied by ``beta`` on every step, and a tiny true
segment straddling 1/2 is split at a point known only to ``2**-precision``.

:class:`FullPartition` keeps all ``M`` segments the same way and is the O(M)
oracle for the three-length path.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import gmpy2
from gmpy2 import mpfr, mpq, mpz

DEFAULT_PRECISION = int(os.environ.get("IDFEEDBACK_PRECISION", "256"))

HALF = mpfr("0.5")  # exact at every precision

Scalar = type(mpfr(0))


class ParameterError(ValueError):
    pass


@contextmanager
def working_precision(bits: int):
    """Run the enclosed block with an ``bits``-bit mantissa."""
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        yield


def scalar(value, precision: int = DEFAULT_PRECISION) -> Scalar:
    """Convert ``value`` to a correctly rounded Scalar.

    Strings are parsed as decimals, so ``scalar("0.3")`` is the nearest binary
    value to 3/10 at the requested precision rather than the double 0.3 widened.
    Floats go through their shortest repr for the same reason.
    """
    with working_precision(precision):
        if isinstance(value, float):
            value = repr(value)
        return mpfr(value)


def tolerance(precision: int) -> Scalar:
    """Equality tolerance for invariants: ``2**(-precision/2)``."""
    with working_precision(precision):
        return gmpy2.exp2(mpfr(-(precision // 2)))


def format_scalar(value, precision: int = DEFAULT_PRECISION) -> str:
    """Decimal text with enough digits to parse back to the same Scalar."""
    if gmpy2.is_infinite(value) or gmpy2.is_nan(value):
        return str(float(value))
    digits = int(precision * 0.30103) + 2
    with working_precision(precision):
        return format(mpfr(value), f".{digits}g")


def _dyadic(value: Scalar) -> tuple[int, int]:
    """``value == num / 2**shift`` exactly."""
    num, den = value.as_integer_ratio()
    shift = den.bit_length() - 1
    if den != 1 << shift:
        raise ParameterError(f"{value} is not dyadic")
    return num, shift


@dataclass(frozen=True)
class Params:
    """Scheme parameters.

    Build with :func:`make_params`; it normalises ``alpha`` so that
    ``alpha + beta == 2`` holds exactly.
    """

    alpha: Scalar
    beta: Scalar
    tau: Scalar
    m_count: int
    n: int
    precision: int = DEFAULT_PRECISION

    @cached_property
    def log_alpha(self) -> Scalar:
        with working_precision(self.precision):
            return gmpy2.log2(self.alpha)

    @cached_property
    def log_beta(self) -> Scalar:
        with working_precision(self.precision):
            return gmpy2.log2(self.beta)

    @cached_property
    def scale(self) -> tuple:
        """``(a, b, s)`` with ``alpha = a / 2**s`` and ``beta = b / 2**s``."""
        a, s = _dyadic(self.alpha)
        return mpz(a), mpz((2 << s) - a), s

    @property
    def key_inequality(self) -> bool:
        """``alpha * beta**2 <= 1``; the analysis assumes it."""
        a, b, s = self.scale
        return a * b * b <= mpz(1) << (3 * s)

    @cached_property
    def tol(self) -> Scalar:
        return tolerance(self.precision)


def make_params(alpha, m_count: int, n: int, tau=0, precision: int = DEFAULT_PRECISION) -> Params:
    if m_count < 1:
        raise ParameterError(f"m_count must be positive, got {m_count}")
    if n < 0:
        raise ParameterError(f"n must be non-negative, got {n}")
    with working_precision(precision):
        a = scalar(alpha, precision)
        if not 0 < a < 1:
            raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
        beta = 2 - a
        # beta has the coarser ulp; re-deriving alpha from it makes the sum exact
        a = 2 - beta
        tau_s = scalar(tau, precision)
        if not 0 <= tau_s < 1:
            raise ParameterError(f"tau must lie in [0, 1), got {tau}")
    return Params(alpha=a, beta=beta, tau=tau_s, m_count=m_count, n=n, precision=precision)


class PartitionState(NamedTuple):
    """Exact lengths ``L/den``, ``T/den``, ``R/den``; ``precision`` sets the Scalar views."""

    L: object
    T: object
    R: object
    den: object
    precision: int = DEFAULT_PRECISION

    def _view(self, num) -> Scalar:
        with working_precision(self.precision):
            return mpfr(num) / mpfr(self.den)

    @property
    def l(self) -> Scalar:  # noqa: E743
        return self._view(self.L)

    @property
    def t(self) -> Scalar:
        return self._view(self.T)

    @property
    def r(self) -> Scalar:
        return self._view(self.R)

    @property
    def lengths(self) -> tuple[Scalar, Scalar, Scalar]:
        return self.l, self.t, self.r

    @property
    def x(self) -> Scalar:
        return self._view(min(self.L, self.R))

    @property
    def y(self) -> Scalar:
        return self._view(max(self.L, self.R))

    @property
    def center(self) -> Scalar:
        return self._view(mpq(2 * self.L + self.T, 2))

    @property
    def central(self) -> bool:
        return 2 * max(self.L, self.R) <= self.den

    @property
    def t_fraction(self):
        """``t`` as an exact rational, for comparisons across denominators."""
        return mpq(self.T, self.den)

    def __repr__(self) -> str:
        l, t, r = self.lengths
        return f"PartitionState(l={float(l)!r}, t={float(t)!r}, r={float(r)!r})"


def state_from_values(l, t, r, precision: int = DEFAULT_PRECISION) -> PartitionState:
    """Exact state whose lengths are the given values rounded to Scalars."""
    nums = [_dyadic(scalar(v, precision) if not isinstance(v, Scalar) else v) for v in (l, t, r)]
    shift = max(s for _, s in nums) + 1  # keep den even so 1/2 is a numerator
    L, T, R = (mpz(num) << (shift - s) for num, s in nums)
    return PartitionState(L, T, R, mpz(1) << shift, precision)


def init_state(m_count: int, m: int, precision: int = DEFAULT_PRECISION) -> PartitionState:
    if m_count < 1:
        raise ParameterError(f"m_count must be positive, got {m_count}")
    if not 1 <= m <= m_count:
        raise ParameterError(f"message {m} outside [1, {m_count}]")
    # denominator 2M keeps 1/2 an integer numerator
    return PartitionState(mpz(2 * (m - 1)), mpz(2), mpz(2 * (m_count - m)), mpz(2 * m_count), precision)


def sent_bit(state: PartitionState) -> int:
    # [0, 1/2) sends 0, so a center sitting exactly on 1/2 sends 1
    return 0 if 2 * state.L + state.T < state.den else 1


def _factors(received: int, params: Params) -> tuple:
    """Numerators of the scale factors left and right of 1/2, and their shift."""
    a, b, s = params.scale
    if received == 0:
        return b, a, s
    if received == 1:
        return a, b, s
    raise ParameterError(f"received symbol must be 0 or 1, got {received!r}")


def _image(p, half, f_left, f_right):
    """Numerator of the image of the point ``p / den`` (over ``den << s``)."""
    return f_left * p if p <= half else f_left * half + f_right * (p - half)


def apply_symbol(state: PartitionState, received: int, params: Params) -> PartitionState:
    """Update the three lengths after one received symbol.

    Points left of 1/2 are scaled by ``beta`` after a 0 (``alpha`` after a 1)
    towards 0, points right of it by the other factor; a segment straddling
    1/2 gets the two factors on its two parts.
    """
    f_left, f_right, s = _factors(received, params)
    L, T, R, den = state.L, state.T, state.R, state.den
    half = den >> 1
    new_den = den << s
    left_end = _image(L, half, f_left, f_right)
    right_end = _image(L + T, half, f_left, f_right)
    new_r = new_den - _image(den - R, half, f_left, f_right)
    return PartitionState(left_end, right_end - left_end, new_r, new_den, state.precision)


def conservation_error(state: PartitionState, precision: int = DEFAULT_PRECISION) -> Scalar:
    with working_precision(precision):
        return abs(mpfr(state.L + state.T + state.R - state.den)) / mpfr(state.den)


class Predicates(NamedTuple):
    central: bool
    balanced: bool
    crossing: bool
    degenerate: bool


def is_balanced(state: PartitionState, params: Params) -> tuple[bool, bool]:
    """Return ``(balanced, degenerate)``; a zero flank is reported unbalanced."""
    x, y = min(state.L, state.R), max(state.L, state.R)
    if x == 0:
        return False, True
    a, b, _ = params.scale
    return y * a <= b * x, False


def is_crossing(prev: PartitionState, nxt: PartitionState) -> bool:
    return (prev.L <= prev.R) != (nxt.L <= nxt.R)


def predicates(prev: PartitionState, nxt: PartitionState, params: Params) -> Predicates:
    balanced, degenerate = is_balanced(nxt, params)
    return Predicates(nxt.central, balanced, is_crossing(prev, nxt), degenerate)


@dataclass(frozen=True)
class FullPartition:
    """All ``M`` segments, stored exactly as boundary numerators over ``den``.

    ``bounds[k]`` is the right end of segment ``k`` (``bounds[0] == 0``,
    ``bounds[M] == den``).  Segment ``k`` is the half-open ``(bounds[k-1], bounds[k]]``.
    """

    bounds: tuple
    den: object
    true_index: int
    precision: int = field(default=DEFAULT_PRECISION, compare=False)

    @classmethod
    def uniform(cls, m_count: int, true_index: int, precision: int = DEFAULT_PRECISION) -> FullPartition:
        if not 1 <= true_index <= m_count:
            raise ParameterError(f"true index {true_index} outside [1, {m_count}]")
        return cls(tuple(mpz(2 * k) for k in range(m_count + 1)), mpz(2 * m_count), true_index, precision)

    @property
    def m_count(self) -> int:
        return len(self.bounds) - 1

    @property
    def lengths(self) -> tuple:
        with working_precision(self.precision):
            d = mpfr(self.den)
            return tuple(mpfr(b - a) / d for a, b in zip(self.bounds, self.bounds[1:]))

    def collapse(self) -> PartitionState:
        lo, hi = self.bounds[self.true_index - 1], self.bounds[self.true_index]
        return PartitionState(lo, hi - lo, self.den - hi, self.den, self.precision)

    def index_containing_half(self) -> int:
        """Index ``k`` with ``bounds[k-1] < 1/2 <= bounds[k]``."""
        return bisect_left(self.bounds, self.den >> 1)


def apply_symbol_full(fp: FullPartition, received: int, params: Params) -> FullPartition:
    f_left, f_right, s = _factors(received, params)
    half = fp.den >> 1
    bounds = tuple(_image(p, half, f_left, f_right) for p in fp.bounds)
    return FullPartition(bounds, fp.den << s, fp.true_index, fp.precision)


class StepRecord(NamedTuple):
    """One applied symbol: the state before and after, the bit the encoder
    would send from ``prev`` and the bit actually applied."""

    prev: PartitionState
    next: PartitionState
    sent: int
    received: int

    @property
    def correct(self) -> bool:
        return self.sent == self.received
