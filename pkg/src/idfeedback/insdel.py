"""Feedback code for the adversarial insertion-deletion channel.

The encoder is the substitution encoder of :mod:`idfeedback.subst`; the only
change is that the channel may return any string per transmitted bit, and the
encoder applies its symbols one by one.  Also here: the retransmission
wrapper that turns an insertion-deletion feedback code into a substitution
feedback code, and the check that an insertion-deletion output is a legal
output of the substitution code with few errors.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

from idfeedback import rates
from idfeedback.adversaries import (
    AttackContext, IdAdversary, ProtocolViolation, hamming, id_attack, lcs_distance,
)
from idfeedback.partition import (
    DEFAULT_PRECISION, Params, ParameterError, PartitionState, StepRecord, apply_symbol,
    format_scalar, init_state, make_params, sent_bit,
)
from idfeedback.prng import XorShift64Star
from idfeedback.subst import ALPHA_MIN, RateZeroError, _largest_power_below, decode_backward, params_dict


@dataclass(frozen=True)
class IdStep:
    sent: int
    received: str
    state_after: PartitionState
    cost: int


@dataclass
class IdTranscript:
    params: Params
    message: int
    steps: list = field(default_factory=list)
    budget: int = 0
    budget_spent: int = 0

    @property
    def y_concat(self) -> str:
        return "".join(s.received for s in self.steps)

    @property
    def n_prime(self) -> int:
        return sum(len(s.received) for s in self.steps)

    @property
    def initial_state(self) -> PartitionState:
        return init_state(self.params.m_count, self.message, self.params.precision)

    def records(self) -> list[StepRecord]:
        return flatten(self)

    def to_json(self) -> str:
        p = self.params.precision
        return json.dumps({
            "params": params_dict(self.params),
            "message": self.message,
            "budget": self.budget,
            "budget_spent": self.budget_spent,
            "steps": [{"sent": s.sent, "received": s.received, "cost": s.cost,
                       "state_after": [format_scalar(v, p) for v in s.state_after.lengths]}
                      for s in self.steps],
        }, indent=1)

    def to_csv(self) -> str:
        p = self.params.precision
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "sent", "received_string", "cost", "budget_spent", "l", "t", "r"])
        spent = 0
        for i, s in enumerate(self.steps, 1):
            spent += s.cost
            w.writerow([i, s.sent, s.received, s.cost, spent, *(format_scalar(v, p) for v in s.state_after.lengths)])
        return buf.getvalue()


def run_id_session(params: Params, m: int, adversary: IdAdversary = IdAdversary(), seed: int = 0,
                   rng: XorShift64Star | None = None) -> IdTranscript:
    state = init_state(params.m_count, m, params.precision)
    rng = XorShift64Star(seed) if rng is None else rng
    tr = IdTranscript(params, m, budget=adversary.budget)
    for step in range(1, params.n + 1):
        c = sent_bit(state)
        ctx = AttackContext(c, state, step, adversary.budget - tr.budget_spent, params, rng)
        y = id_attack(adversary, ctx)
        # charge the minimal edit count, whatever the adversary thinks it did
        cost = lcs_distance(str(c), y)
        tr.budget_spent += cost
        if tr.budget_spent > adversary.budget:
            raise ProtocolViolation(f"step {step}: spent {tr.budget_spent} of budget {adversary.budget}")
        for ch in y:
            state = apply_symbol(state, int(ch), params)
        tr.steps.append(IdStep(c, y, state, cost))
    return tr


def id_decode(y, m_count: int, params: Params) -> int:
    """Decode a concatenated output of any length; callers police the length."""
    return decode_backward(y, m_count, params)


def flatten(tr: IdTranscript) -> list[StepRecord]:
    """One record per received symbol, as the substitution encoder would see them.

    The ``sent`` field is the bit the encoder would emit from the state before
    the symbol, which for the first symbol of each block is the bit actually sent.
    """
    state = tr.initial_state
    out = []
    for s in tr.steps:
        for ch in s.received:
            nxt = apply_symbol(state, int(ch), tr.params)
            out.append(StepRecord(state, nxt, sent_bit(state), int(ch)))
            state = nxt
    return out


@dataclass(frozen=True)
class CompatResult:
    hamming_errors: int
    t_prime: int
    ok: bool
    n_prime: int
    length_ok: bool


def compat_check(tr: IdTranscript) -> CompatResult:
    """Is the output a legal substitution-channel output with at most ``t'`` errors?

    ``t' = floor((n' - n + t) / 2)`` with ``t`` the adversary's budget.
    """
    records = flatten(tr)
    e = [r.sent for r in records]
    y = [r.received for r in records]
    d = hamming(e, y)
    n, t, n_prime = tr.params.n, tr.budget, len(y)
    t_prime = (n_prime - n + t) // 2
    length_ok = n - t <= n_prime <= n + t
    return CompatResult(d, t_prime, d <= t_prime and length_ok, n_prime, length_ok)


def choose_id_alpha(tau: float, margin: float = 1e-3, alpha_min: float = ALPHA_MIN) -> float:
    """``2 tau / (1 + tau)`` below the entropy break, the largest admissible alpha above it."""
    tau = float(tau)
    target = 2 * tau / (1 + tau) if tau < rates.ID_BREAK else rates.ALPHA_MAX
    return max(target - margin, alpha_min)


def choose_id_params(tau, epsilon, n: int, margin: float | None = None, alpha_min: float = ALPHA_MIN,
                     precision: int = DEFAULT_PRECISION) -> Params:
    tau, epsilon = float(tau), float(epsilon)
    if not 0.0 <= tau < 0.5:
        raise RateZeroError(f"the insertion-deletion rate is zero for tau={tau}")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    margin = epsilon / 100 if margin is None else margin
    alpha = choose_id_alpha(tau, margin, alpha_min)
    r = rates.rate_id(tau)
    k = _largest_power_below((r - epsilon) * n, (r - epsilon / 2) * n)
    return make_params(alpha, 1 << k, n, tau, precision)


# Retransmission wrapper -------------------------------------------------------


class IdEncoderSession:
    """Running insertion-deletion encoder for one message.

    Any insertion-deletion feedback encoder can be wrapped if it offers this
    interface: ``current()`` is the next bit ``c_i`` and ``observe(block)``
    feeds back the output ``y_i`` for it.  Sessions are cheap to copy.
    """

    def __init__(self, params: Params, m: int):
        self.params = params
        self.state = init_state(params.m_count, m, params.precision)
        self.index = 0  # blocks observed so far

    def copy(self) -> IdEncoderSession:
        other = object.__new__(IdEncoderSession)
        other.params, other.state, other.index = self.params, self.state, self.index
        return other

    def current(self) -> int:
        return sent_bit(self.state)

    def observe(self, block: str) -> None:
        for ch in block:
            self.state = apply_symbol(self.state, int(ch), self.params)
        self.index += 1


@dataclass
class WrappedSession:
    """Substitution encoder over ``n + t`` uses built from an insertion-deletion encoder.

    The current ``c_i`` is repeated until it is received correctly; the
    received bits since the previous correct reception form ``y_i``.  After
    ``n`` correct receptions the encoder sends 0.
    """

    inner: IdEncoderSession
    n: int
    t: int
    pending: str = ""
    sent: list = field(default_factory=list)
    received: list = field(default_factory=list)
    blocks: list = field(default_factory=list)

    def copy(self) -> WrappedSession:
        return WrappedSession(self.inner.copy(), self.n, self.t, self.pending, list(self.sent),
                              list(self.received), list(self.blocks))

    @property
    def done(self) -> bool:
        return len(self.blocks) >= self.n

    def current(self) -> int:
        return 0 if self.done else self.inner.current()

    def observe(self, z: int) -> None:
        e = self.current()
        self.sent.append(e)
        self.received.append(z)
        if self.done:
            # trailing bits count as insertions appended to the last block
            self.blocks[-1] += str(z)
            return
        self.pending += str(z)
        if z == e:
            block, self.pending = self.pending, ""
            self.blocks.append(block)
            if not self.done:
                self.inner.observe(block)


def reduction_wrap(params: Params, m: int, t: int) -> WrappedSession:
    """Wrap the insertion-deletion encoder for message ``m`` into an ``n + t`` use substitution encoder."""
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t}")
    return WrappedSession(IdEncoderSession(params, m), params.n, t)


def run_wrapped(params: Params, m: int, t: int, flips) -> WrappedSession:
    """Drive the wrapped encoder through a substitution channel flipping the 1-based steps in ``flips``."""
    s = reduction_wrap(params, m, t)
    for j in range(1, params.n + t + 1):
        e = s.current()
        s.observe(1 - e if j in flips else e)
    return s


def block_costs(blocks, sent_bits) -> int:
    return sum(lcs_distance(str(c), y) for c, y in zip(sent_bits, blocks))


def strings_within(c: int, budget: int) -> list[str]:
    """All bit strings ``y`` with ``lcs_distance(c, y) <= budget``, shortest first."""
    out = []
    for length in range(budget + 2):
        for bits in itertools.product("01", repeat=length):
            y = "".join(bits)
            if lcs_distance(str(c), y) <= budget:
                out.append(y)
    return out


@dataclass
class IdCorrectness:
    ok: bool
    outputs_checked: int
    counterexample: tuple | None = None  # (message, blocks, decoded)


def id_code_corrects(params: Params, t: int) -> IdCorrectness:
    """Exhaustively decide whether the code recovers every message against every budget-``t`` adversary.

    Walks all output block sequences ``(y_1, ..., y_n)`` with
    ``sum lcs_distance(c_i, y_i) <= t``; stops at the first decoding failure.
    """
    m_count, n = params.m_count, params.n
    choices = {(c, b): [(y, lcs_distance(str(c), y)) for y in strings_within(c, b)]
               for c in (0, 1) for b in range(t + 1)}
    decoded: dict[str, int] = {}
    checked = 0

    def walk(session, m, left, blocks):
        nonlocal checked
        if session.index == n:
            z = "".join(blocks)
            if z not in decoded:
                decoded[z] = id_decode(z, m_count, params)
            checked += 1
            if decoded[z] != m:
                return (m, tuple(blocks), decoded[z])
            return None
        c = session.current()
        for y, cost in choices[(c, left)]:
            nxt = session.copy()
            nxt.observe(y)
            bad = walk(nxt, m, left - cost, blocks + [y])
            if bad:
                return bad
        return None

    for m in range(1, m_count + 1):
        bad = walk(IdEncoderSession(params, m), m, t, [])
        if bad:
            return IdCorrectness(False, checked, bad)
    return IdCorrectness(True, checked)


@dataclass
class ReductionReport:
    m_count: int
    n: int
    t: int
    alpha: float
    inner_corrects: bool
    patterns: int = 0
    budget_violations: int = 0
    retransmission_violations: int = 0
    decode_failures: int = 0

    @property
    def ok(self) -> bool:
        structural = self.budget_violations == 0 and self.retransmission_violations == 0
        return structural and (self.decode_failures == 0 or not self.inner_corrects)


def check_reduction(m_count: int, n: int, t: int, alpha: float | None = None,
                    precision: int = DEFAULT_PRECISION) -> ReductionReport:
    """Run the wrapped encoder against every flip pattern of weight at most ``t``.

    For every pattern the output is split into blocks, which must cost at most
    ``t`` in total and end on a correct reception.  Decoding failures are only
    counted against the wrapper when the inner code is itself ``t``-correcting.
    """
    alpha = choose_id_alpha(t / n) if alpha is None else alpha
    params = make_params(alpha, m_count, n, precision=precision)
    inner = id_code_corrects(params, t).ok
    rep = ReductionReport(m_count, n, t, alpha, inner)
    total = n + t
    decoded: dict[tuple, int] = {}

    def walk(session, j, left, m):
        if j > total:
            rep.patterns += 1
            # c_i is the first bit sent in block i
            starts = [0]
            for b in session.blocks[:-1]:
                starts.append(starts[-1] + len(b))
            c_bits = [session.sent[s] for s in starts]
            if len(session.blocks) != n or block_costs(session.blocks, c_bits) > t:
                rep.budget_violations += 1
            sent, got = session.sent, session.received
            if any(got[k] != sent[k] and sent[k + 1] != sent[k] for k in range(total - 1)):
                rep.retransmission_violations += 1
            z = tuple(session.received)
            if z not in decoded:
                decoded[z] = id_decode(z, m_count, params)
            if decoded[z] != m:
                rep.decode_failures += 1
            return
        e = session.current()
        keep = session.copy()
        keep.observe(e)
        walk(keep, j + 1, left, m)
        if left > 0:
            flip = session.copy()
            flip.observe(1 - e)
            walk(flip, j + 1, left - 1, m)

    for m in range(1, m_count + 1):
        walk(reduction_wrap(params, m, t), 1, t, m)
    return rep
