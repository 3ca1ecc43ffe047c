from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from idfeedback.adversaries import (
    AttackContext, IdAction, IdAdversary, ProtocolViolation, SubstAdversary, hamming, id_candidates,
    lcs_distance, lcs_length, parse_adversary, subst_attack,
)
from idfeedback.insdel import run_id_session
from idfeedback.partition import ParameterError, apply_symbol, init_state, make_params, sent_bit
from idfeedback.subst import run_substitution_session

bitstrings = st.text(alphabet="01", max_size=20)


def edit_distance_indel(x: str, y: str) -> int:
    """Insertions and deletions only, by the direct recurrence."""
    d = [[0] * (len(y) + 1) for _ in range(len(x) + 1)]
    for i in range(len(x) + 1):
        for j in range(len(y) + 1):
            if i == 0 or j == 0:
                d[i][j] = i + j
            elif x[i - 1] == y[j - 1]:
                d[i][j] = d[i - 1][j - 1]
            else:
                d[i][j] = 1 + min(d[i - 1][j], d[i][j - 1])
    return d[len(x)][len(y)]


def brute_lcs(x: str, y: str) -> int:
    for k in range(min(len(x), len(y)), 0, -1):
        subs = {"".join(c) for c in combinations(x, k)}
        if any("".join(c) in subs for c in combinations(y, k)):
            return k
    return 0


@given(bitstrings, bitstrings)
def test_lcs_distance_matches_indel_dp(x, y):
    assert lcs_distance(x, y) == edit_distance_indel(x, y)


@given(st.text(alphabet="01", max_size=8), st.text(alphabet="01", max_size=8))
def test_lcs_length_matches_brute_force(x, y):
    assert lcs_length(x, y) == brute_lcs(x, y)


@given(bitstrings, bitstrings, bitstrings)
def test_lcs_distance_is_a_metric(x, y, z):
    assert lcs_distance(x, y) == lcs_distance(y, x)
    assert (lcs_distance(x, y) == 0) == (x == y)
    assert lcs_distance(x, z) <= lcs_distance(x, y) + lcs_distance(y, z)


def test_hamming():
    assert hamming([0, 1, 1], [1, 1, 0]) == 2
    with pytest.raises(ParameterError):
        hamming([0], [0, 1])


def test_id_actions():
    assert IdAction(deleted=True).realize(1) == ""
    assert IdAction(inserted_before="0").realize(1) == "01"
    assert IdAction(inserted_after="1", deleted=True).realize(0) == "1"
    assert all(lcs_distance(str(c), y) == 1 for c in (0, 1) for y in id_candidates(c))


def test_parse_grammar():
    adv = parse_adversary("fixed:16,21,22")
    assert adv.kind == "fixed" and adv.steps == frozenset({16, 21, 22}) and adv.budget == 3
    assert parse_adversary("greedy:budget=4").budget == 4
    assert parse_adversary("greedy", default_budget=7).budget == 7
    assert parse_adversary("random:budget=2,p=0.3").p_attack == 0.3
    assert parse_adversary("minimax:budget=1,max_n=5").max_n == 5
    script = parse_adversary("script:3=del,5=b1", "id")
    assert script.budget == 2 and script.script[5] == IdAction(inserted_before="1")
    rnd = parse_adversary("random:budget=3,p_ins=0.1,p_del=0.2", "id")
    assert (rnd.p_ins, rnd.p_del) == (0.1, 0.2)


@pytest.mark.parametrize("spec,channel", [
    ("bogus", "subst"), ("fixed:a,b", "subst"), ("greedy:budget", "subst"), ("greedy:colour=red", "subst"),
    ("minimax", "id"), ("script:3=zap", "id"), ("none", "tcp"),
])
def test_parse_rejects(spec, channel):
    with pytest.raises(ParameterError):
        parse_adversary(spec, channel)


@given(st.sampled_from(["random", "greedy", "minimax"]), st.integers(2, 1000), st.integers(1, 40),
       st.integers(0, 5), st.integers(0, 2 ** 32))
@settings(max_examples=60, deadline=None)
def test_subst_budget_respected(kind, m_count, n, budget, seed):
    p = make_params("0.3", m_count, n)
    adv = SubstAdversary(kind, budget, max_n=4)
    tr = run_substitution_session(p, 1 + seed % m_count, adv, seed)
    assert tr.error_count == hamming(tr.sent, tr.received) <= budget


@given(st.sampled_from(["random", "greedy"]), st.integers(2, 1000), st.integers(1, 40),
       st.integers(0, 8), st.integers(0, 2 ** 32))
@settings(max_examples=60, deadline=None)
def test_id_budget_respected(kind, m_count, n, budget, seed):
    p = make_params("0.3", m_count, n)
    tr = run_id_session(p, 1 + seed % m_count, IdAdversary(kind, budget), seed)
    costs = [lcs_distance(str(s.sent), s.received) for s in tr.steps]
    assert costs == [s.cost for s in tr.steps]
    assert sum(costs) == tr.budget_spent <= budget


def test_overspending_script_is_caught():
    p = make_params("0.3", 8, 5)
    # the declared budget is too small for the script
    adv = IdAdversary("script", 1, script={1: IdAction(deleted=True), 2: IdAction(deleted=True)})
    with pytest.raises(ProtocolViolation):
        run_id_session(p, 3, adv)


def test_greedy_flip_minimises_next_t():
    p = make_params("0.3", 16, 1)
    s = init_state(16, 6)
    c = sent_bit(s)
    adv = SubstAdversary("greedy", 1)
    y = subst_attack(adv, AttackContext(c, s, 1, 1, p))
    other = 1 - y
    assert apply_symbol(s, y, p).t <= apply_symbol(s, other, p).t


def _final_t_for_pattern(p, m, flips):
    s = init_state(p.m_count, m)
    for i in range(1, p.n + 1):
        c = sent_bit(s)
        s = apply_symbol(s, 1 - c if i in flips else c, p)
    return s.t_fraction


@pytest.mark.parametrize("m_count,n,budget", [(8, 5, 1), (8, 6, 2), (13, 5, 2)])
def test_full_horizon_minimax_is_optimal(m_count, n, budget):
    # with the whole session in view, the adaptive attack is as good as the best fixed flip set
    p = make_params("0.3", m_count, n)
    for m in range(1, m_count + 1):
        tr = run_substitution_session(p, m, SubstAdversary("minimax", budget, max_n=n))
        got = tr.steps[-1].state_after.t_fraction
        best = min(_final_t_for_pattern(p, m, set(f))
                   for k in range(budget + 1) for f in combinations(range(1, n + 1), k))
        assert got == best
