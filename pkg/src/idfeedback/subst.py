"""Feedback code for the adversarial substitution channel.

The encoder keeps the three lengths of :mod:`idfeedback.partition` and sends
the side of 1/2 holding the centre of the true segment.  Two decoders are
provided: :func:`decode_backward` follows the preimage of 1/2 back through
the received symbols in O(n), and :func:`decode_forward` replays the whole
partition exactly (O(Mn)) and serves as its oracle.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr

from idfeedback import rates
from idfeedback.adversaries import AttackContext, ProtocolViolation, SubstAdversary, subst_attack
from idfeedback.partition import (
    DEFAULT_PRECISION, HALF, FullPartition, Params, ParameterError, PartitionState, StepRecord,
    apply_symbol, apply_symbol_full, format_scalar, init_state, make_params, sent_bit, state_from_values,
    working_precision,
)
from idfeedback.prng import XorShift64Star

FORWARD_CAP = 1 << 16
ALPHA_MIN = 0.05


class CapacityError(ParameterError):
    pass


class RateZeroError(ParameterError):
    pass


@dataclass(frozen=True)
class SubstStep:
    sent: int
    received: int
    state_after: PartitionState


@dataclass
class SubstTranscript:
    params: Params
    message: int
    steps: list = field(default_factory=list)
    error_count: int = 0
    budget: int = 0

    @property
    def received(self) -> list[int]:
        return [s.received for s in self.steps]

    @property
    def sent(self) -> list[int]:
        return [s.sent for s in self.steps]

    @property
    def initial_state(self) -> PartitionState:
        return init_state(self.params.m_count, self.message, self.params.precision)

    def records(self) -> list[StepRecord]:
        prev = self.initial_state
        out = []
        for s in self.steps:
            out.append(StepRecord(prev, s.state_after, s.sent, s.received))
            prev = s.state_after
        return out

    def to_json(self) -> str:
        return json.dumps(transcript_dict(self), indent=1)

    def to_csv(self) -> str:
        p = self.params.precision
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "sent", "received", "l", "t", "r"])
        for i, s in enumerate(self.steps, 1):
            w.writerow([i, s.sent, s.received, *(format_scalar(v, p) for v in s.state_after.lengths)])
        return buf.getvalue()


def params_dict(params: Params) -> dict:
    p = params.precision
    return {
        "alpha": format_scalar(params.alpha, p),
        "tau": format_scalar(params.tau, p),
        "m_count": params.m_count,
        "n": params.n,
        "precision": p,
    }


def params_from_dict(d: dict) -> Params:
    return make_params(d["alpha"], d["m_count"], d["n"], d["tau"], d["precision"])


def transcript_dict(tr: SubstTranscript) -> dict:
    p = tr.params.precision
    return {
        "params": params_dict(tr.params),
        "message": tr.message,
        "budget": tr.budget,
        "error_count": tr.error_count,
        "steps": [
            {"sent": s.sent, "received": s.received,
             "state_after": [format_scalar(v, p) for v in s.state_after.lengths]}
            for s in tr.steps
        ],
    }


def transcript_from_json(text: str) -> SubstTranscript:
    """Rebuild a transcript; exact states are replayed from the received bits.

    The stored lengths and sent bits must agree with the replay.
    """
    d = json.loads(text)
    params = params_from_dict(d["params"])
    state = init_state(params.m_count, d["message"], params.precision)
    steps = []
    for k, s in enumerate(d["steps"], 1):
        if s["sent"] != sent_bit(state):
            raise ParameterError(f"step {k}: stored sent bit disagrees with the replay")
        state = apply_symbol(state, int(s["received"]), params)
        stored = state_from_values(*s["state_after"], precision=params.precision)
        if any(abs(a - b) > params.tol for a, b in zip(stored.lengths, state.lengths)):
            raise ParameterError(f"step {k}: stored lengths disagree with the replay")
        steps.append(SubstStep(s["sent"], s["received"], state))
    return SubstTranscript(params, d["message"], steps, d["error_count"], d["budget"])


def run_substitution_session(params: Params, m: int, adversary: SubstAdversary = SubstAdversary(),
                             seed: int = 0, rng: XorShift64Star | None = None) -> SubstTranscript:
    state = init_state(params.m_count, m, params.precision)
    rng = XorShift64Star(seed) if rng is None else rng
    tr = SubstTranscript(params, m, budget=adversary.budget)
    for step in range(1, params.n + 1):
        c = sent_bit(state)
        ctx = AttackContext(c, state, step, adversary.budget - tr.error_count, params, rng)
        y = subst_attack(adversary, ctx)
        if y != c:
            tr.error_count += 1
            if tr.error_count > adversary.budget:
                raise ProtocolViolation(f"step {step}: {tr.error_count} flips exceed budget {adversary.budget}")
        state = apply_symbol(state, y, params)
        tr.steps.append(SubstStep(c, y, state))
    return tr


def preimage_of_half(y, params: Params):
    """Point of [0, 1] that the received symbols ``y`` carry onto 1/2."""
    a, b = params.alpha, params.beta
    with working_precision(params.precision):
        p = mpfr(HALF)
        for bit in reversed(y):
            # factors applied left and right of 1/2; the left image ends at f_left/2
            f_left, f_right = (b, a) if int(bit) == 0 else (a, b)
            if 2 * p <= f_left:
                p = p / f_left
            else:
                p = HALF + (2 * p - f_left) / (2 * f_right)
    return p


def decode_backward(y, m_count: int, params: Params) -> int:
    p = preimage_of_half(y, params)
    with working_precision(params.precision):
        m_hat = int(gmpy2.ceil(m_count * p))
    return min(max(m_hat, 1), m_count)


def decode_forward(y, m_count: int, params: Params, cap: int = FORWARD_CAP) -> int:
    if m_count > cap:
        raise CapacityError(f"forward decoding materialises {m_count} segments; cap is {cap}")
    fp = FullPartition.uniform(m_count, 1, params.precision)
    for bit in y:
        fp = apply_symbol_full(fp, int(bit), params)
    return fp.index_containing_half()


def _largest_power_below(lo_exp: float, hi_exp: float) -> int:
    """Largest ``k`` with ``lo_exp < k < hi_exp``, or 1 if none."""
    k = math.ceil(hi_exp) - 1
    return k if k > lo_exp and k >= 1 else 1


def choose_params(tau, epsilon, n: int, margin=None, alpha_min: float = ALPHA_MIN,
                  precision: int = DEFAULT_PRECISION) -> Params:
    """Parameters for ``n`` uses against ``floor(tau*n)`` substitutions at rate about ``R_s(tau) - epsilon``.

    ``M`` is the largest power of two in ``(2**((R-eps)n), 2**((R-eps/2)n))``,
    or 2 if the window holds none.
    """
    tau, epsilon = float(tau), float(epsilon)
    if not 0.0 <= tau < 1.0 / 3.0:
        raise RateZeroError(f"the substitution rate is zero for tau={tau}")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    margin = epsilon / 100 if margin is None else float(margin)
    alpha = max(2 * min(tau, rates.SUBST_BREAK) - margin, alpha_min)
    r = rates.rate_s(tau)
    k = _largest_power_below((r - epsilon) * n, (r - epsilon / 2) * n)
    return make_params(alpha, 1 << k, n, tau, precision)
