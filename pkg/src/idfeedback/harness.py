"""Experiment configuration, seeded batch execution and reports.

Trial ``k`` of a run with master seed ``s`` owns the stream
``XorShift64Star(derive_seed(s, k))``: its first draw picks the message and
the rest feed the adversary.  Trials share nothing, so they may run in
worker processes; results are always reported in trial order.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

from idfeedback import rates
from idfeedback.adversaries import (
    IdAction, IdAdversary, SubstAdversary, hamming, lcs_distance, parse_adversary,
)
from idfeedback.analysis import Violation, check_propositions, record_trajectory, trajectory_csv
from idfeedback.insdel import choose_id_params, compat_check, flatten, id_decode, run_id_session
from idfeedback.partition import DEFAULT_PRECISION, Params, ParameterError, make_params
from idfeedback.prng import XorShift64Star, derive_seed
from idfeedback.subst import choose_params, decode_backward, run_substitution_session

CHANNELS = ("subst", "id")


@dataclass
class ExperimentConfig:
    """One experiment.  ``alpha`` left unset picks parameters from ``tau`` and ``epsilon``;
    ``m_bits`` or ``m_count`` then overrides the chosen message count."""

    channel: str = "subst"
    n: int = 27
    m_bits: int | None = None
    m_count: int | None = None
    tau: float = 0.0
    epsilon: float = 0.15
    alpha: float | None = None
    adversary: str = "none"
    seed: int = 0
    trials: int = 1
    precision: int = DEFAULT_PRECISION
    report: str | None = None
    trajectory: str | None = None

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ParameterError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if self.m_bits is not None and self.m_count is not None and self.m_count != 1 << self.m_bits:
            raise ParameterError("m_bits and m_count disagree")
        if self.trials < 1:
            raise ParameterError(f"trials must be positive, got {self.trials}")
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")

    @property
    def budget(self) -> int:
        """Default adversary budget ``floor(tau n)``."""
        return int(self.tau * self.n)

    def params(self) -> Params:
        if self.alpha is None:
            choose = choose_params if self.channel == "subst" else choose_id_params
            chosen = choose(self.tau, self.epsilon, self.n, precision=self.precision)
            alpha, m_count = chosen.alpha, chosen.m_count
        else:
            alpha, m_count = self.alpha, None
        if self.m_bits is not None:
            m_count = 1 << self.m_bits
        elif self.m_count is not None:
            m_count = self.m_count
        if m_count is None:
            raise ParameterError("an explicit alpha needs m_bits or m_count")
        return make_params(alpha, m_count, self.n, self.tau, self.precision)

    def make_adversary(self):
        return parse_adversary(self.adversary, self.channel, self.budget)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> ExperimentConfig:
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise ParameterError(f"line {lineno}: expected a known key=value, got {raw!r}")
            kw[key] = _coerce(types[key], value)
        return cls(**kw)


def _coerce(type_name: str, value: str):
    try:
        if type_name.startswith("int"):
            return int(value)
        if type_name.startswith("float"):
            return float(value)
    except ValueError as exc:
        raise ParameterError(f"bad value {value!r}: {exc}") from exc
    return value


@dataclass(frozen=True)
class TrialResult:
    trial: int
    message: int
    decoded: int
    success: bool
    budget_spent: int
    n_prime: int
    violations: int
    compat_ok: bool


@dataclass
class RunReport:
    config: dict
    trials: list = field(default_factory=list)
    wall_clock: float | None = None

    @property
    def success_rate(self) -> float:
        return sum(t.success for t in self.trials) / len(self.trials) if self.trials else 0.0

    @property
    def violation_count(self) -> int:
        return sum(t.violations for t in self.trials) + sum(not t.compat_ok for t in self.trials)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "config": self.config,
            "success_rate": self.success_rate,
            "violation_count": self.violation_count,
            "trials": [asdict(t) for t in self.trials],
        }
        if timing:
            out["wall_clock"] = self.wall_clock
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=1) + "\n"


def run_session(config: ExperimentConfig, params: Params, trial: int):
    """Run one trial; returns ``(transcript, step records, result)``."""
    rng = XorShift64Star(derive_seed(config.seed, trial))
    m = rng.below(params.m_count) + 1
    adversary = config.make_adversary()
    if config.channel == "subst":
        tr = run_substitution_session(params, m, adversary, rng=rng)
        records = tr.records()
        decoded = decode_backward(tr.received, params.m_count, params)
        spent, n_prime = tr.error_count, params.n
        # recheck the budget from the transcript itself
        compat_ok = hamming(tr.sent, tr.received) == spent <= adversary.budget
    else:
        tr = run_id_session(params, m, adversary, rng=rng)
        records = flatten(tr)
        decoded = id_decode(tr.y_concat, params.m_count, params)
        spent, n_prime = tr.budget_spent, tr.n_prime
        recheck = sum(lcs_distance(str(s.sent), s.received) for s in tr.steps)
        compat_ok = compat_check(tr).ok and recheck == spent <= adversary.budget
    violations = check_propositions(records, params)
    result = TrialResult(trial, m, decoded, decoded == m, spent, n_prime, len(violations), compat_ok)
    return tr, records, result


def _trial(args) -> TrialResult:
    config, params, k = args
    return run_session(config, params, k)[2]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> RunReport:
    start = time.perf_counter()
    params = config.params()
    jobs = [(config, params, k) for k in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_trial, jobs))
    else:
        results = [_trial(j) for j in jobs]
    report = RunReport(asdict(config), sorted(results, key=lambda r: r.trial))
    report.wall_clock = time.perf_counter() - start
    return report


def session_trajectory_csv(config: ExperimentConfig, trial: int = 0) -> str:
    params = config.params()
    tr, records, _ = run_session(config, params, trial)
    return trajectory_csv(record_trajectory(records, tr.initial_state, params), params.precision)


# Proposition fuzz campaign ------------------------------------------------------

FUZZ_KINDS = ("subst:none", "subst:fixed", "subst:random", "subst:greedy", "subst:minimax",
              "id:random", "id:greedy", "id:script")
FUZZ_MAX_M = 1 << 16
FUZZ_MAX_N = 200
FUZZ_ALPHA_MIN = 0.02


@dataclass(frozen=True)
class FuzzCase:
    trial: int
    kind: str
    m_count: int
    n: int
    alpha: float
    message: int
    budget: int


@dataclass
class FuzzReport:
    trials: int
    seed: int
    kinds: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)  # (FuzzCase, Violation)
    wall_clock: float | None = None

    @property
    def violation_count(self) -> int:
        return len(self.failures)

    def to_json(self) -> str:
        return json.dumps({
            "trials": self.trials,
            "seed": self.seed,
            "kinds": self.kinds,
            "violation_count": self.violation_count,
            "violations": [dict(asdict(c), **v.as_dict()) for c, v in self.failures],
            "wall_clock": self.wall_clock,
        }, indent=1) + "\n"


def _fuzz_adversary(kind: str, n: int, budget: int, rng: XorShift64Star):
    if kind == "subst:none":
        return SubstAdversary()
    if kind == "subst:fixed":
        return SubstAdversary("fixed", budget, frozenset(1 + rng.below(n) for _ in range(budget)))
    if kind == "subst:random":
        return SubstAdversary("random", budget, p_attack=rng.random())
    if kind == "subst:greedy":
        return SubstAdversary("greedy", budget)
    if kind == "subst:minimax":
        # exhaustive lookahead is exponential; keep it short
        return SubstAdversary("minimax", min(budget, 2), max_n=6)
    if kind == "id:random":
        return IdAdversary("random", budget, p_ins=rng.random() / 2, p_del=rng.random() / 2)
    if kind == "id:greedy":
        return IdAdversary("greedy", budget)
    actions = (IdAction(deleted=True), IdAction(inserted_before="0"), IdAction(inserted_before="1"),
               IdAction(inserted_after="0"), IdAction(inserted_after="1"))
    script = {1 + rng.below(n): actions[rng.below(len(actions))] for _ in range(budget)}
    return IdAdversary("script", len(script), script=script)


def fuzz_case(seed: int, trial: int, precision: int = DEFAULT_PRECISION):
    """Draw and run one fuzz trajectory; returns ``(case, violations)``."""
    rng = XorShift64Star(derive_seed(seed, trial))
    kind = FUZZ_KINDS[rng.below(len(FUZZ_KINDS))]
    # half the cases small, so that collisions and degenerate geometry show up
    m_count = 2 + rng.below(FUZZ_MAX_M - 1) if rng.bit() else 2 + rng.below(31)
    n = 1 + rng.below(FUZZ_MAX_N)
    alpha = FUZZ_ALPHA_MIN + rng.random() * (rates.ALPHA_MAX - FUZZ_ALPHA_MIN)
    params = make_params(alpha, m_count, n, precision=precision)
    if not params.key_inequality:
        params = make_params(FUZZ_ALPHA_MIN, m_count, n, precision=precision)
    message = 1 + rng.below(m_count)
    budget = rng.below(n // 3 + 1)
    adversary = _fuzz_adversary(kind, n, budget, rng)
    if kind.startswith("subst"):
        records = run_substitution_session(params, message, adversary, rng=rng).records()
    else:
        records = flatten(run_id_session(params, message, adversary, rng=rng))
    case = FuzzCase(trial, kind, m_count, n, float(params.alpha), message, adversary.budget)
    return case, check_propositions(records, params)


def _fuzz_one(args):
    return fuzz_case(*args)


def run_fuzz(trials: int, seed: int, precision: int = DEFAULT_PRECISION, workers: int = 1) -> FuzzReport:
    start = time.perf_counter()
    jobs = [(seed, k, precision) for k in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_fuzz_one, jobs, chunksize=64))
    else:
        results = [_fuzz_one(j) for j in jobs]
    report = FuzzReport(trials, seed)
    for case, violations in results:
        report.kinds[case.kind] = report.kinds.get(case.kind, 0) + 1
        report.failures.extend((case, v) for v in violations)
    report.kinds = dict(sorted(report.kinds.items()))
    report.wall_clock = time.perf_counter() - start
    return report


__all__ = [
    "ExperimentConfig", "RunReport", "TrialResult", "FuzzCase", "FuzzReport", "Violation",
    "run_experiment", "run_session", "session_trajectory_csv", "fuzz_case", "run_fuzz",
]
