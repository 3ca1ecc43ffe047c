"""Distances and channel adversaries.

Adversaries are plain dataclasses; :func:`subst_attack` and :func:`id_attack`
turn one into a per-step decision.  They see the public state of the encoder,
which is legitimate: the adversary knows the code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from idfeedback.partition import PartitionState, Params, ParameterError, apply_symbol, sent_bit
from idfeedback.prng import XorShift64Star


class ProtocolViolation(RuntimeError):
    """An adversary spent more than its budget."""


def lcs_length(x: str, y: str) -> int:
    if len(x) < len(y):
        x, y = y, x
    prev = [0] * (len(y) + 1)
    for a in x:
        cur = [0]
        for j, b in enumerate(y):
            cur.append(prev[j] + 1 if a == b else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def lcs_distance(x: str, y: str) -> int:
    """Fewest insertions plus deletions turning ``x`` into ``y``."""
    return len(x) + len(y) - 2 * lcs_length(x, y)


def hamming(x, y) -> int:
    if len(x) != len(y):
        raise ParameterError(f"hamming distance needs equal lengths, got {len(x)} and {len(y)}")
    return sum(a != b for a, b in zip(x, y))


def bits_to_str(bits) -> str:
    return "".join(str(b) for b in bits)


@dataclass(frozen=True)
class AttackContext:
    sent: int
    state: PartitionState
    step: int  # 1-based
    remaining_budget: int
    params: Params
    rng: Optional[XorShift64Star] = None


SUBST_KINDS = ("none", "fixed", "random", "greedy", "minimax")
ID_KINDS = ("none", "random", "greedy", "script")


@dataclass(frozen=True)
class SubstAdversary:
    kind: str = "none"
    budget: int = 0
    steps: frozenset = frozenset()
    p_attack: float = 0.5
    max_n: int = 16

    def __post_init__(self):
        if self.kind not in SUBST_KINDS:
            raise ParameterError(f"unknown substitution adversary {self.kind!r}")
        if self.kind == "fixed" and self.budget < len(self.steps):
            object.__setattr__(self, "budget", len(self.steps))


# A scripted insertion-deletion action for one step, relative to the sent bit.
@dataclass(frozen=True)
class IdAction:
    deleted: bool = False
    inserted_before: str = ""
    inserted_after: str = ""

    def realize(self, sent: int) -> str:
        return self.inserted_before + ("" if self.deleted else str(sent)) + self.inserted_after

    @property
    def max_cost(self) -> int:
        return int(self.deleted) + len(self.inserted_before) + len(self.inserted_after)


@dataclass(frozen=True)
class IdAdversary:
    kind: str = "none"
    budget: int = 0
    p_ins: float = 0.25
    p_del: float = 0.25
    script: dict = field(default_factory=dict)  # step -> IdAction

    def __post_init__(self):
        if self.kind not in ID_KINDS:
            raise ParameterError(f"unknown insertion-deletion adversary {self.kind!r}")


def _final_t(state: PartitionState, received: str, params: Params) -> object:
    for ch in received:
        state = apply_symbol(state, int(ch), params)
    return state.t_fraction


def _minimax_t(state, steps_left, budget, params, memo):
    """Smallest reachable ``t`` after ``steps_left`` more symbols, at most ``budget`` flips."""
    if steps_left == 0:
        return state.t_fraction
    key = (state, steps_left, budget)
    if key in memo:
        return memo[key]
    c = sent_bit(state)
    best = _minimax_t(apply_symbol(state, c, params), steps_left - 1, budget, params, memo)
    if budget > 0:
        flipped = _minimax_t(apply_symbol(state, 1 - c, params), steps_left - 1, budget - 1, params, memo)
        best = min(best, flipped)
    memo[key] = best
    return best


def subst_attack(adv: SubstAdversary, ctx: AttackContext) -> int:
    """Received bit for this step."""
    sent = ctx.sent
    if ctx.remaining_budget <= 0 or adv.kind == "none":
        return sent
    if adv.kind == "fixed":
        return 1 - sent if ctx.step in adv.steps else sent
    if adv.kind == "random":
        return 1 - sent if ctx.rng.random() < adv.p_attack else sent
    if adv.kind == "greedy":
        keep = apply_symbol(ctx.state, sent, ctx.params).T
        flip = apply_symbol(ctx.state, 1 - sent, ctx.params).T  # same denominator
        return 1 - sent if flip < keep else sent
    # minimax: exhaustive over a receding horizon of max_n symbols
    horizon = min(ctx.params.n - ctx.step + 1, adv.max_n)
    memo: dict = {}
    keep = _minimax_t(apply_symbol(ctx.state, sent, ctx.params), horizon - 1, ctx.remaining_budget, ctx.params, memo)
    flip = _minimax_t(apply_symbol(ctx.state, 1 - sent, ctx.params), horizon - 1, ctx.remaining_budget - 1,
                      ctx.params, memo)
    return 1 - sent if flip < keep else sent


def id_candidates(sent: int) -> list[str]:
    """Every distinct output at distance 1 from ``sent``, in a fixed order.

    delete, insert 0 before, insert 1 before, insert the other bit after.
    Inserting ``sent`` after equals inserting it before, so it is not repeated.
    """
    c = str(sent)
    return ["", "0" + c, "1" + c, c + str(1 - sent)]


def id_attack(adv: IdAdversary, ctx: AttackContext) -> str:
    """Output string ``y_i`` for this step."""
    sent = ctx.sent
    if adv.kind == "none":
        return str(sent)
    if adv.kind == "script":
        action = adv.script.get(ctx.step)
        return action.realize(sent) if action is not None else str(sent)
    if ctx.remaining_budget <= 0:
        return str(sent)
    if adv.kind == "random":
        u = ctx.rng.random()
        if u < adv.p_del:
            return ""
        if u < adv.p_del + adv.p_ins:
            b = str(ctx.rng.bit())
            return b + str(sent) if ctx.rng.bit() == 0 else str(sent) + b
        return str(sent)
    # greedy
    best, best_t = str(sent), _final_t(ctx.state, str(sent), ctx.params)
    for cand in id_candidates(sent):
        t = _final_t(ctx.state, cand, ctx.params)
        if t < best_t:
            best, best_t = cand, t
    return best


def _parse_kv(body: str) -> dict:
    out = {}
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise ParameterError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_SCRIPT_ACTIONS = {
    "del": IdAction(deleted=True),
    "b0": IdAction(inserted_before="0"),
    "b1": IdAction(inserted_before="1"),
    "a0": IdAction(inserted_after="0"),
    "a1": IdAction(inserted_after="1"),
}


def parse_adversary(spec: str, channel: str = "subst", default_budget: int = 0):
    """Parse the CLI adversary grammar.

    ``none``, ``fixed:16,21,22``, ``random:budget=10,p=0.5``, ``greedy:budget=10``,
    ``minimax:budget=2[,max_n=16]`` for the substitution channel;
    ``none``, ``random:budget=10,p=0.5`` (or ``p_ins=..,p_del=..``),
    ``greedy:budget=10``, ``script:3=del,5=b1,8=a0`` for the insertion-deletion
    channel.  A missing budget falls back to ``default_budget``.
    """
    kind, _, body = spec.strip().partition(":")
    kinds = {"subst": SUBST_KINDS, "id": ID_KINDS}.get(channel)
    if kinds is None:
        raise ParameterError(f"unknown channel {channel!r}")
    if kind not in kinds:
        raise ParameterError(f"unknown adversary {kind!r} for channel {channel!r}; expected one of {kinds}")
    try:
        if channel == "subst":
            if kind == "none":
                return SubstAdversary()
            if kind == "fixed":
                steps = frozenset(int(s) for s in body.split(",") if s.strip())
                return SubstAdversary("fixed", len(steps), steps)
            kv = _parse_kv(body)
            budget = int(kv.pop("budget", default_budget))
            if kind == "random":
                adv = SubstAdversary("random", budget, p_attack=float(kv.pop("p", 0.5)))
            elif kind == "greedy":
                adv = SubstAdversary("greedy", budget)
            elif kind == "minimax":
                adv = SubstAdversary("minimax", budget, max_n=int(kv.pop("max_n", 16)))
            else:
                raise ParameterError(f"unknown substitution adversary {kind!r}")
        elif channel == "id":
            if kind == "none":
                return IdAdversary()
            if kind == "script":
                script = {}
                for k, v in _parse_kv(body).items():
                    if v not in _SCRIPT_ACTIONS:
                        raise ParameterError(f"unknown script action {v!r}")
                    script[int(k)] = _SCRIPT_ACTIONS[v]
                return IdAdversary("script", sum(a.max_cost for a in script.values()), script=script)
            kv = _parse_kv(body)
            budget = int(kv.pop("budget", default_budget))
            if kind == "random":
                p = float(kv.pop("p", 0.5))
                adv = IdAdversary("random", budget, p_ins=float(kv.pop("p_ins", p / 2)),
                                  p_del=float(kv.pop("p_del", p / 2)))
            elif kind == "greedy":
                adv = IdAdversary("greedy", budget)
            else:
                raise ParameterError(f"unknown insertion-deletion adversary {kind!r}")
        else:
            raise ParameterError(f"unknown channel {channel!r}")
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed adversary spec {spec!r}: {exc}") from exc
    if kv:
        raise ParameterError(f"unknown adversary options {sorted(kv)} in {spec!r}")
    return adv
