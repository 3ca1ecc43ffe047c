"""Potential functions of the convergence argument and runtime checks of its step inequalities.

For a state with ``x = min(l, r)`` and ``y = max(l, r)`` (logs base 2):

    u1 = log(t / x)                 v1 = log(2 t)
    u2 = -log(4 x y)    if y <= 1/2, else log((1 - y) / x)
    v2 = -log(2 y)      if y <= 1/2, else log(2 (1 - y))
    u  = u1 if u1 < log(beta - alpha)       else u2
    v  = v1 if u1 < log(beta/alpha - 1)     else v2

and the energy of a step range is ``g = e log(alpha) + f log(beta)`` with
``e``/``f`` the numbers of incorrect/correct steps in it.

:func:`check_propositions` evaluates every step inequality the argument relies
on over a recorded trajectory and returns the failures as data.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import NamedTuple

import gmpy2
from gmpy2 import mpfr, mpq

from idfeedback.partition import (
    HALF, Params, ParameterError, PartitionState, StepRecord, format_scalar, is_balanced,
    is_crossing, scalar, state_from_values, working_precision,
)

INF = mpfr("inf")

TRAJECTORY_COLUMNS = ("step", "sent", "received", "l", "t", "r", "x", "y", "u1", "u2", "v1", "v2",
                      "u", "v", "g_cum", "central", "balanced", "crossing", "correct")


class ProofFns(NamedTuple):
    x: object
    y: object
    u1: object
    u2: object
    v1: object
    v2: object
    u: object
    v: object
    central: bool
    balanced: bool
    degenerate: bool


@dataclass(frozen=True)
class Thresholds:
    u1_prime: object   # log(beta - alpha)
    u1_second: object  # log(beta/alpha - 1)
    u2_prime: object   # log(beta/alpha)
    log_alpha: object
    log_beta: object
    log_alpha_beta: object
    u2_floor: object   # -5 log(alpha beta)


def thresholds(params: Params) -> Thresholds:
    a, b = params.alpha, params.beta
    with working_precision(params.precision):
        lab = params.log_alpha + params.log_beta
        return Thresholds(gmpy2.log2(b - a), gmpy2.log2(b / a - 1), gmpy2.log2(b / a),
                          params.log_alpha, params.log_beta, lab, -5 * lab)


def proof_fns(state: PartitionState, params: Params, th: Thresholds | None = None) -> ProofFns:
    th = thresholds(params) if th is None else th
    t, x, y = state.t, state.x, state.y
    flank_zero = min(state.L, state.R) == 0
    central = state.central
    balanced, degenerate = is_balanced(state, params)
    with working_precision(params.precision):
        log2 = gmpy2.log2
        u1 = INF if flank_zero else log2(t / x)
        v1 = log2(2 * t)
        if central:
            u2 = INF if flank_zero else -log2(4 * x * y)
            v2 = INF if y == 0 else -log2(2 * y)
        else:
            rest = state._view(state.T + min(state.L, state.R))  # 1 - y, without the cancellation
            u2 = INF if flank_zero else log2(rest / x)
            v2 = log2(2 * rest)
    u = u1 if u1 < th.u1_prime else u2
    v = v1 if u1 < th.u1_second else v2
    return ProofFns(x, y, u1, u2, v1, v2, u, v, central, balanced, degenerate)


def energy_steps(correct_flags, params: Params) -> list:
    """Cumulative energy ``g(0, i)`` for ``i = 0..len(correct_flags)``."""
    with working_precision(params.precision):
        out = [mpfr(0)]
        for ok in correct_flags:
            out.append(out[-1] + (params.log_beta if ok else params.log_alpha))
    return out


def energy(records, i0: int, i1: int, params: Params):
    """``g(i0, i1)`` over the records ``(i0, i1]`` (1-based steps)."""
    if not 0 <= i0 <= i1 <= len(records):
        raise ParameterError(f"step range ({i0}, {i1}] invalid for {len(records)} steps")
    e = sum(1 for rec in records[i0:i1] if not rec.correct)
    f = (i1 - i0) - e
    with working_precision(params.precision):
        return e * params.log_alpha + f * params.log_beta


@dataclass(frozen=True)
class Violation:
    step: int
    proposition_id: str
    lhs: str
    rhs: str

    def as_dict(self) -> dict:
        return {"step": self.step, "proposition_id": self.proposition_id, "lhs": self.lhs, "rhs": self.rhs}


def violations_json(violations) -> str:
    return json.dumps([v.as_dict() for v in violations], indent=1)


class _Checker:
    """Accumulates violations of ``lhs >= rhs`` style inequalities at one tolerance."""

    def __init__(self, params: Params):
        self.params = params
        self.tol = params.tol
        self.out: list[Violation] = []

    def _fmt(self, v) -> str:
        return format_scalar(v, self.params.precision) if not isinstance(v, (bool, int)) else str(v)

    def ge(self, step: int, pid: str, lhs, rhs) -> None:
        """Record unless ``lhs >= rhs`` up to a relative tolerance."""
        if lhs == INF or rhs == -INF:
            return
        if rhs == INF:
            ok = False
        else:
            # callers run inside working_precision
            scale = max(abs(lhs), abs(rhs), 1)
            ok = lhs >= rhs - self.tol * scale
        if not ok:
            self.out.append(Violation(step, pid, self._fmt(lhs), self._fmt(rhs)))

    def eq(self, step: int, pid: str, lhs, rhs) -> None:
        self.ge(step, pid, lhs, rhs)
        self.ge(step, pid, rhs, lhs)

    def ge_ratio(self, step: int, pid: str, lhs: tuple, rhs: tuple, exact: bool) -> None:
        """``lhs >= rhs`` for ``(num, den)`` pairs, exactly or (for rounded states) up to tolerance."""
        (n1, d1), (n2, d2) = lhs, rhs
        if not exact:
            self.ge(step, pid, mpfr(n1) / mpfr(d1), mpfr(n2) / mpfr(d2))
            return
        if not (n1 >= n2 if d1 == d2 else n1 * d2 >= n2 * d1):
            self.out.append(Violation(step, pid, self._fmt(mpfr(n1) / mpfr(d1)),
                                      self._fmt(mpfr(n2) / mpfr(d2))))

    def holds(self, step: int, pid: str, cond: bool) -> None:
        if not cond:
            self.out.append(Violation(step, pid, "False", "True"))


def check_propositions(records, params: Params, degenerate_ok: bool = True) -> list[Violation]:
    """Check every step inequality of the convergence argument; empty list means none failed.

    ``records`` are consecutive :class:`StepRecord` values.  Step ``i`` (1-based)
    goes from ``records[i-1].prev`` to ``records[i-1].next``.

    A step whose previous state has ``l == r`` puts the centre of the true
    segment exactly on 1/2, where the update cannot move it off (the geometry
    the argument assumes away).  With ``degenerate_ok`` the strict geometric
    checks skip such steps; the energy bookkeeping checks still run.
    """
    if not records:
        return []
    with working_precision(params.precision):
        return _check(records, params, degenerate_ok)


def _check(records, params: Params, degenerate_ok: bool) -> list[Violation]:
    ck = _Checker(params)
    th = thresholds(params)
    fns = [proof_fns(records[0].prev, params, th)]
    for rec in records:
        fns.append(proof_fns(rec.next, params, th))
    lb, la = th.log_beta, th.log_alpha
    neg_lb = -lb
    central_crossings = 0
    a_num, b_num, shift = params.scale

    for i, rec in enumerate(records, 1):
        P, N = fns[i - 1], fns[i]
        prev, nxt = rec.prev, rec.next
        cross = is_crossing(prev, nxt)
        correct = rec.correct
        collide = prev.L == prev.R
        strict = not (collide and degenerate_ok)
        gain = lb if correct else la
        if P.central and cross:
            central_crossings += 1

        # basic facts
        if strict:
            ck.holds(i, "cross_implies_correct", not cross or correct)
        scaled_den = prev.den << shift
        # states produced by apply_symbol chain exactly; states parsed from text are rounded
        exact = nxt.den == scaled_den
        t_next = (nxt.T, nxt.den)
        t_prev = (prev.T << shift, scaled_den) if exact else (prev.T, prev.den)
        ck.ge_ratio(i, "t_bracket", t_next, (a_num * prev.T, scaled_den), exact)
        ck.ge_ratio(i, "t_bracket", (b_num * prev.T, scaled_den), t_next, exact)
        if strict:
            if correct:
                ck.ge_ratio(i, "t_grows_iff_correct", t_next, t_prev, exact)
            else:
                ck.ge_ratio(i, "t_grows_iff_correct", t_prev, t_next, exact)
            if P.central and not N.central and not cross:
                ck.holds(i, "central_exit_needs_error", not correct)

        # geometry of the potentials
        if strict:
            if P.u1 < th.u1_second and P.central and correct:
                ck.holds(i, "small_u1_central_correct_crosses[u1'']", cross)
            if P.u1 < th.u1_prime and P.central and correct:
                ck.holds(i, "small_u1_central_correct_crosses[u1']", cross)
        if cross:
            ck.holds(i, "crossing_balanced", P.balanced and N.balanced)
            if P.u1 >= th.u1_prime:
                ck.holds(i, "large_u1_crossing_lands_central[u1']", N.central)
            if P.u1 >= th.u1_second:
                ck.holds(i, "large_u1_crossing_lands_central[u1'']", N.central)
                ck.holds(i, "large_u1_crossing_starts_central", P.central)
            if P.u2 >= th.u2_prime:
                ck.holds(i - 1, "large_u2_next_to_crossing_central", P.central)
            if N.u2 >= th.u2_prime:
                ck.holds(i, "large_u2_next_to_crossing_central", N.central)

        # u1
        if P.u1 < th.u1_prime:
            ck.ge(i, "u1_monotone_below_u1'", N.u1, P.u1)
            if P.central and cross:
                ck.ge(i, "u1_central_crossing_gain", N.u1, P.u1 + lb)
        else:
            ck.ge(i, "u1_absorbed_at_u1'", N.u1, th.u1_prime)
        if P.u1 >= th.u1_second:
            ck.ge(i, "u1_absorbed_at_u1''", N.u1, th.u1_second)

        # u2
        if P.u1 >= th.u1_prime:
            ck.ge(i, "u2_monotone_above_u1'", N.u2, P.u2)
        if P.central and N.central:
            ck.eq(i, "u2_central_step_exact", N.u2, P.u2 - th.log_alpha_beta)

        # v1
        if P.u1 < th.u1_second:
            if cross:
                ck.ge(i, "v1_step", N.v1, P.v1)
            elif strict or not correct:
                ck.ge(i, "v1_step", N.v1, P.v1 + gain)

        # v2
        if cross:
            if P.u1 >= th.u1_second:
                ck.ge(i, "v2_step", N.v2, P.v2 + neg_lb)
        elif correct:
            if strict:
                ck.ge(i, "v2_step", N.v2, P.v2 + lb)
        elif P.v2 < lb:
            ck.ge(i, "v2_step", N.v2, P.v2 + la)
        else:
            ck.ge(i, "v2_step", N.v2, P.v2 + neg_lb)

        # u and v
        if P.central and cross:
            ck.ge(i, "u_step", N.u, P.u + lb)
            ck.ge(i, "v_step", N.v, P.v + neg_lb)
        else:
            ck.ge(i, "u_step", N.u, P.u)
            if strict or not correct:
                ck.ge(i, "v_step", N.v, P.v + gain)

    # pointwise orderings
    for i, F in enumerate(fns):
        ck.ge(i, "u2_dominates", F.u2, F.u1)
        ck.ge(i, "u2_dominates", F.u2, F.u)
        ck.ge(i, "v2_dominates", F.v2, F.v1)
        ck.ge(i, "v2_dominates", F.v2, F.v)
        if F.central:
            ck.ge(i, "central_u2_vs_v2", F.u2, 2 * F.v2)
            if F.balanced:
                ck.ge(i, "central_balanced_u2_vs_v2", 2 * F.v2 + th.u2_prime, F.u2)

    g = energy_steps([rec.correct for rec in records], params)
    _check_u2_energy(ck, fns, g, th, params)
    if degenerate_ok is False or not any(rec.prev.L == rec.prev.R for rec in records):
        # v(n) - v(0) >= g(0, n) - 2 (#central crossings) log(beta)
        rhs = g[-1] - 2 * central_crossings * lb
        lhs = fns[-1].v - fns[0].v if fns[0].v != INF else INF
        ck.ge(len(records), "v_energy_reconciliation", lhs, rhs)
    return ck.out


def _check_u2_energy(ck: _Checker, fns, g, th: Thresholds, params: Params) -> None:
    """``g(i0, i1) <= u2(i1) - u2(i0)`` whenever both ends are central and
    balanced and ``u2(i0) >= -5 log(alpha beta)``.

    Rearranged as ``g(i1) - u2(i1) <= g(i0) - u2(i0)``, so the running minimum
    over admissible ``i0`` covers every pair in one pass.
    """
    best = None
    with working_precision(params.precision):
        for i, F in enumerate(fns):
            if not (F.central and F.balanced):
                continue
            if F.u2 == INF:
                continue
            key = g[i] - F.u2
            if best is not None:
                ck.ge(i, "energy_vs_u2", best, key)
            if F.u2 >= th.u2_floor and (best is None or key < best):
                best = key


# Trajectories -----------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    sent: int | None
    received: int | None
    state: PartitionState
    fns: ProofFns
    g_cum: object
    crossing: bool
    correct: bool | None

    def row(self, precision: int) -> list[str]:
        f = lambda v: format_scalar(v, precision)  # noqa: E731
        l, t, r = self.state.lengths
        fn = self.fns
        blank = lambda v: "" if v is None else str(int(v))  # noqa: E731
        return [str(self.step), blank(self.sent), blank(self.received), f(l), f(t), f(r), f(fn.x), f(fn.y),
                f(fn.u1), f(fn.u2), f(fn.v1), f(fn.v2), f(fn.u), f(fn.v), f(self.g_cum),
                str(int(fn.central)), str(int(fn.balanced)), str(int(self.crossing)), blank(self.correct)]


def record_trajectory(records, initial: PartitionState, params: Params) -> list[TrajectoryRecord]:
    """Step 0 (the initial state) followed by one record per applied symbol."""
    th = thresholds(params)
    g = energy_steps([rec.correct for rec in records], params)
    out = [TrajectoryRecord(0, None, None, initial, proof_fns(initial, params, th), g[0], False, None)]
    for i, rec in enumerate(records, 1):
        out.append(TrajectoryRecord(i, rec.sent, rec.received, rec.next, proof_fns(rec.next, params, th), g[i],
                                    is_crossing(rec.prev, rec.next), rec.correct))
    return out


def trajectory_csv(traj, precision: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for rec in traj:
        w.writerow(rec.row(precision))
    return buf.getvalue()


def read_trajectory_csv(text: str, precision: int) -> tuple[PartitionState, list[StepRecord]]:
    """Rebuild the step records from a trajectory CSV (only sent, received, l, t, r are used)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != TRAJECTORY_COLUMNS:
        raise ParameterError("not a trajectory CSV: header mismatch")
    idx = {name: k for k, name in enumerate(TRAJECTORY_COLUMNS)}
    states = []
    bits = []
    for row in rows[1:]:
        if len(row) != len(TRAJECTORY_COLUMNS):
            raise ParameterError(f"row {row[:1]} has {len(row)} fields")
        states.append(state_from_values(*(row[idx[c]] for c in ("l", "t", "r")), precision=precision))
        bits.append((row[idx["sent"]], row[idx["received"]]))
    if not states:
        raise ParameterError("trajectory CSV has no rows")
    records = [StepRecord(states[k - 1], states[k], int(bits[k][0]), int(bits[k][1]))
               for k in range(1, len(states))]
    return states[0], records


# Lemma-5 style probe ---------------------------------------------------------


@dataclass
class BigSegmentProbe:
    n1: int | None
    delta_observed: object
    delta: object
    k: int
    hypothesis_met: bool
    bound_holds: bool | None
    diagnostics: str = ""


def half_displacement(params: Params, k: int):
    """Smallest ``|alpha**a beta**b / 2 - 1/2|`` over ``1 <= a + b < k``."""
    best = INF
    with working_precision(params.precision):
        for total in range(1, k):
            for a in range(total + 1):
                p = HALF * params.alpha ** a * params.beta ** (total - a)
                d = abs(p - HALF)
                if d < best:
                    best = d
    return best


def lemma5_probe(records, initial: PartitionState, params: Params, epsilon1, epsilon2) -> BigSegmentProbe:
    """Look for the first moment the true segment is at least ``delta`` long.

    If ``g(0, n) > eps1 n - log t(0)``, checks that such a moment ``n1``
    exists and that ``g(0, n1) < eps2 n - log t(0)``.
    """
    e1, e2 = scalar(epsilon1, params.precision), scalar(epsilon2, params.precision)
    if not e1 > e2 > 0:
        raise ParameterError("need epsilon1 > epsilon2 > 0")
    n = len(records)
    with working_precision(params.precision):
        k = int(gmpy2.floor(params.log_beta / e2)) + 1
        observed = half_displacement(params, k)
        delta = min(observed, 1 / (params.beta * params.beta))
        log_t0 = gmpy2.log2(initial.t)
        g = energy_steps([rec.correct for rec in records], params)
        if not g[-1] > e1 * n - log_t0:
            return BigSegmentProbe(None, observed, delta, k, False, None,
                                   f"g(0,n)={float(g[-1]):.6g} <= eps1*n - log t(0)={float(e1 * n - log_t0):.6g}")
        ts = [initial] + [rec.next for rec in records]
        n1 = next((i for i, st in enumerate(ts) if st.t_fraction >= mpq(delta)), None)
        if n1 is None:
            return BigSegmentProbe(None, observed, delta, k, True, False, "t never reached delta")
        holds = g[n1] < e2 * n - log_t0
    return BigSegmentProbe(n1, observed, delta, k, True, bool(holds))
