"""Closed-form rate curves for the feedback substitution and insertion-deletion channels.

Everything here is double precision.  Logarithms are base two.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

SQRT5 = math.sqrt(5.0)
PHI = (1.0 + SQRT5) / 2.0
LOG2_PHI = math.log2(PHI)
SUBST_BREAK = (3.0 - SQRT5) / 4.0  # entropy branch of the substitution rate ends here
ID_BREAK = SQRT5 - 2.0             # ... and of the insertion-deletion rate here
ALPHA_MAX = (3.0 - SQRT5) / 2.0    # alpha * (2 - alpha)**2 == 1


class DomainError(ValueError):
    pass


def entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _check_tau(tau: float) -> None:
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"error fraction must lie in [0, 1], got {tau}")


def rate_s_branch(tau: float) -> str:
    _check_tau(tau)
    if tau <= SUBST_BREAK:
        return "entropy"
    if tau <= 1.0 / 3.0:
        return "tangent"
    return "zero"


def rate_s(tau: float) -> float:
    """Maximal asymptotic rate of binary feedback codes against ``tau*n`` substitutions."""
    branch = rate_s_branch(tau)
    if branch == "entropy":
        return 1.0 - entropy(tau)
    if branch == "tangent":
        return max(0.0, LOG2_PHI * (1.0 - 3.0 * tau))
    return 0.0


def rate_id_branch(tau: float) -> str:
    _check_tau(tau)
    if tau <= ID_BREAK:
        return "entropy"
    if tau <= 0.5:
        return "tangent"
    return "zero"


def rate_id(tau: float) -> float:
    """Maximal asymptotic rate of binary feedback codes against ``tau*n`` insertions/deletions."""
    branch = rate_id_branch(tau)
    if branch == "entropy":
        return (1.0 + tau) * (1.0 - entropy(tau / (1.0 + tau)))
    if branch == "tangent":
        return max(0.0, LOG2_PHI * (1.0 - 2.0 * tau))
    return 0.0


def tangent_params(tau: float) -> tuple[float, float]:
    """Slope and intercept of the tangent to ``1 - h(x)`` at ``x = tau``."""
    if not 0.0 < tau < 0.5:
        raise DomainError(f"tangent parameters need 0 < tau < 1/2, got {tau}")
    return math.log2(tau / (1.0 - tau)), 1.0 + math.log2(1.0 - tau)


def minimization_margin(tau: float) -> float:
    """``log2(1/(tau(1-tau))) - 2``; non-negative on (0, 1/2)."""
    if not 0.0 < tau < 0.5:
        raise DomainError(f"margin needs 0 < tau < 1/2, got {tau}")
    return -math.log2(tau * (1.0 - tau)) - 2.0


@dataclass(frozen=True)
class RateRow:
    tau: float
    rate: float
    branch: str


@dataclass
class RateTable:
    which: str
    rows: list

    def to_text(self) -> str:
        """Two whitespace-separated columns, one row per line (pgfplots ``table`` input)."""
        return "".join(f"{row.tau:.6f} {row.rate:.12f}\n" for row in self.rows)

    def to_json(self) -> str:
        return json.dumps({"which": self.which, "rows": [asdict(r) for r in self.rows]}, indent=1)


def rate_curve(which: str, grid_step: float) -> RateTable:
    if not 0.0 < grid_step <= 0.1 and not math.isclose(grid_step, 0.25):
        # 0.25 is allowed as a coarse smoke-test grid
        raise DomainError(f"grid step must lie in (0, 0.1], got {grid_step}")
    if which == "s":
        fn, br = rate_s, rate_s_branch
    elif which == "id":
        fn, br = rate_id, rate_id_branch
    else:
        raise DomainError(f"unknown curve {which!r}; expected 's' or 'id'")
    count = int(round(1.0 / grid_step))
    rows = []
    for k in range(count + 1):
        tau = min(1.0, k * grid_step)
        rows.append(RateRow(tau, fn(tau), br(tau)))
    return RateTable(which, rows)
