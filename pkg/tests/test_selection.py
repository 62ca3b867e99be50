from __future__ import annotations

import random
import sqlite3

import pytest
from hypothesis import given
from hypothesis import strategies as st

from iesr.search.actions import ActionKind, ReasoningState, action_slots, apply_action, render_history
from iesr.search.mcts import CandidateTrajectory
from iesr.selection import (
    MaskProbe,
    SelectionConfig,
    TrajectoryScore,
    cluster_by_result,
    cons_vote,
    disc_conf,
    exec_signal,
    judge_consistency,
    mask_and_complete,
    probe_indices,
    run_selection,
    select_best,
)
from iesr.sqlexec import SqlRunner

from conftest import fence, make_db, scripted

import oracles

A1, A2, A3, A4, A5, A6 = ActionKind


def trajectory(sql: str, reward: float = 1.0, actions=(A1, A2), multiplicity: int = 1) -> CandidateTrajectory:
    state = ReasoningState("q", "schema")
    for a in actions:
        text = "TABLES: items" if a is A2 else f"{a.value} output"
        state = apply_action(state, a, action_slots(state, a), text)
    state = apply_action(state, A5, action_slots(state, A5), fence(sql))
    cand = CandidateTrajectory(state.steps, sql, reward)
    for _ in range(multiplicity - 1):
        cand.add_occurrence(reward)
    return cand


def completions(*texts, cycle=True):
    return scripted([{"template": "discriminator-completion", "responses": list(texts), "cycle": cycle}])


# -- score ----------------------------------------------------------------------

def test_score_linear_combination():
    s = TrajectoryScore.combine(1.0, 0.5, 0.75, SelectionConfig())
    assert s.total == pytest.approx(0.80, abs=1e-12)


def test_default_weights():
    cfg = SelectionConfig()
    assert (cfg.alpha, cfg.beta, cfg.gamma) == (0.4, 0.2, 0.4)
    with pytest.raises(ValueError):
        SelectionConfig(alpha=0.5, beta=0.5, gamma=0.5)
    with pytest.raises(ValueError):
        SelectionConfig(alpha=1.2, beta=-0.2, gamma=0.0)


def test_tie_break_by_reward_then_length():
    cfg = SelectionConfig()
    cands = [trajectory("SELECT 1", 0.5), trajectory("SELECT 22", 0.9), trajectory("SELECT 3", 0.9)]
    scores = [TrajectoryScore.combine(1, 1, 1, cfg)] * 3
    assert select_best(cands, scores) == 2
    assert select_best(cands[:2], scores[:2]) == 1
    with pytest.raises(ValueError):
        select_best([], [])


SIX = [
    ((1.0, 1 / 3, 0.5), 0.75, "SELECT a"),
    ((1.0, 2 / 3, 1 / 6), 0.5, "SELECT bb"),
    ((0.0, 1.0, 1 / 3), 1.0, "SELECT c"),
    ((1.0, 0.0, 0.5), 0.25, "SELECT dddd"),
    ((1.0, 1 / 3, 0.5), 0.75, "SELECT e"),
    ((0.0, 0.0, 1 / 6), 0.0, "SELECT f"),
]


def _six(scale=1.0, weights=(0.4, 0.2, 0.4)):
    cfg = SelectionConfig(*weights)
    cands = [CandidateTrajectory((), sql, r) for _, r, sql in SIX]
    scores = [TrajectoryScore.combine(*(scale * x for x in sig), cfg) for sig, _, _ in SIX]
    return cands, scores


def test_select_matches_enumeration():
    cands, scores = _six()
    expected = oracles.argmax_score([s for s, _, _ in SIX], (0.4, 0.2, 0.4), [r for _, r, _ in SIX],
                                    [len(q) for _, _, q in SIX])
    assert select_best(cands, scores) == expected == 0


@given(st.sampled_from([0.25, 0.5, 2.0, 8.0, 1024.0]))
def test_select_scale_invariant(k):
    assert select_best(*_six(k)) == select_best(*_six())


@given(st.lists(st.tuples(st.sampled_from([0.0, 1.0]), st.integers(0, 6), st.integers(0, 6), st.integers(0, 4)),
                min_size=1, max_size=8))
def test_select_matches_enumeration_random(rows):
    signals = [(e, d / 6, v / 6) for e, d, v, _ in rows]
    rewards = [r / 4 for *_, r in rows]
    cands = [CandidateTrajectory((), "SELECT " + "x" * (i % 3), rewards[i]) for i in range(len(rows))]
    scores = [TrajectoryScore.combine(*s, SelectionConfig()) for s in signals]
    expected = oracles.argmax_score(signals, (0.4, 0.2, 0.4), rewards, [len(c.sql) for c in cands])
    got = select_best(cands, scores)
    assert scores[got].total == pytest.approx(scores[expected].total, abs=1e-12)
    assert rewards[got] == rewards[expected]


def test_exec_only_weights():
    cands, scores = _six(weights=(1.0, 0.0, 0.0))
    # all executable ties broken by the highest reward among those with exec = 1
    assert select_best(cands, scores) == 0


# -- signals ---------------------------------------------------------------------

def test_exec_signal(shop_db):
    run = SqlRunner(shop_db, timeout_ms=50)
    assert exec_signal(trajectory("SELECT name FROM items"), run) == 1.0
    assert exec_signal(trajectory("SELEC name"), run) == 0.0
    slow = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c"
    assert exec_signal(trajectory(slow), run) == 0.0


def test_exec_signal_oracle_mode(shop_db):
    run = SqlRunner(shop_db)
    gold = ("SELECT name FROM items", run("SELECT name FROM items"))
    assert exec_signal(trajectory("SELECT name FROM items"), run, mode="oracle", gold=gold) == 1.0
    assert exec_signal(trajectory("SELECT 1"), run, mode="oracle", gold=gold) == 0.0
    with pytest.raises(ValueError):
        exec_signal(trajectory("SELECT 1"), run, mode="oracle")


def test_cons_vote_counts(shop_db):
    run = SqlRunner(shop_db)
    sqls = ["SELECT name FROM items", "SELECT name FROM items ORDER BY price", "SELECT name FROM items WHERE 1",
            "SELECT 1", "SELEC broken"]
    votes = cons_vote([trajectory(s) for s in sqls], run)
    assert votes == pytest.approx([0.6, 0.6, 0.6, 0.2, 0.2])
    assert cons_vote([trajectory("SELECT 1")], run) == [1.0]


def test_cons_vote_multiplicity_weighted(shop_db):
    run = SqlRunner(shop_db)
    votes = cons_vote([trajectory("SELECT 1", multiplicity=3), trajectory("SELECT 2")], run)
    assert votes == [0.75, 0.25]


def _raw(db, sql):
    conn = sqlite3.connect(db)
    try:
        return conn.execute(sql).fetchall()
    except sqlite3.Error:
        return None
    finally:
        conn.close()


def test_clusters_equal_pairwise_partition(shop_db):
    sqls = [
        "SELECT item_id FROM orders",
        "SELECT o.item_id FROM orders o JOIN items i USING (item_id)",
        "SELECT qty FROM orders",
        "SELECT item_id FROM orders WHERE qty > 0",
        "SELECT nope FROM orders",
        "SELECT qty * 1.0 FROM orders",
    ]
    labels = cluster_by_result([trajectory(s) for s in sqls], SqlRunner(shop_db))
    got = {frozenset(i for i, lab in enumerate(labels) if lab == x) for x in set(labels)}
    raw = [_raw(shop_db, s) for s in sqls]
    same = lambda i, j: raw[i] is not None and raw[j] is not None and oracles.tables_equal(raw[i], raw[j], False)
    assert got == oracles.pairwise_partition(len(sqls), same)
    assert len(got) == 3


@pytest.fixture(scope="module")
def blank_db(tmp_path_factory):
    return make_db(tmp_path_factory.mktemp("blank") / "x.sqlite", ["CREATE TABLE t (x INTEGER)"], {})


@given(st.lists(st.sampled_from(["SELECT 1", "SELECT 2", "SELECT 1.0", "SELEC", "SELECT 3"]), min_size=1, max_size=7),
       st.lists(st.integers(1, 4), min_size=7, max_size=7))
def test_cons_vote_is_distribution(blank_db, sqls, mult):
    cands = [trajectory(s, multiplicity=m) for s, m in zip(sqls, mult)]
    run = SqlRunner(blank_db)
    votes = cons_vote(cands, run)
    labels = cluster_by_result(cands, run)
    per_cluster = {lab: v for lab, v in zip(labels, votes)}
    assert sum(per_cluster.values()) == pytest.approx(1.0)
    assert all(0 < v <= 1 for v in votes)


def test_disc_conf_values():
    probes = [MaskProbe(1, consistent=True), MaskProbe(2, consistent=True), MaskProbe(1, consistent=False)]
    assert disc_conf(probes, 3) == pytest.approx(2 / 3)
    assert disc_conf(probes[:2], 3) == 1.0
    assert disc_conf([], 1) == 1.0


def test_probe_indices_in_range():
    rng = random.Random(0)
    for depth in range(2, 9):
        assert all(1 <= i < depth for i in probe_indices(depth, 50, rng))


# -- probes ------------------------------------------------------------------------

def test_mask_first_step_keeps_only_context():
    cand = trajectory("SELECT 1")
    gw = completions(fence("SELECT 1"))
    probe = mask_and_complete(cand, 1, gw, question_text="q", schema_doc="S")
    assert probe.sql == "SELECT 1" and not probe.failed
    prompt = gw.ledger.log[0]
    assert prompt.template_id == "discriminator-completion"
    with pytest.raises(ValueError):
        mask_and_complete(cand, cand.depth, gw, question_text="q", schema_doc="S")


def test_mask_prefix_contains_kept_steps():
    cand = trajectory("SELECT 1")
    prefix = render_history(cand.steps[:1])
    assert "A1 output" in prefix and "TABLES" not in prefix
    gw = scripted([{"template": "discriminator-completion", "match": {"prefix": prefix},
                    "responses": [fence("SELECT 1")]}])
    probe = mask_and_complete(cand, 2, gw, question_text="q", schema_doc="S")
    assert not probe.failed and probe.mask_index == 2


def test_probe_failures(shop_db):
    cand = trajectory("SELECT 1")
    run = SqlRunner(shop_db)
    failed = mask_and_complete(cand, 1, completions("no sql here"), question_text="q", schema_doc="S")
    assert failed.failed and not judge_consistency(failed, cand, run)
    broken = mask_and_complete(cand, 1, scripted([]), question_text="q", schema_doc="S")
    assert broken.failed and "gateway" in broken.error


def test_judge_consistency(shop_db):
    run = SqlRunner(shop_db)
    cand = trajectory("SELECT name, price FROM items")
    mk = lambda sql: MaskProbe(1, sql=sql)
    assert judge_consistency(mk("SELECT name, price FROM items"), cand, run)
    assert not judge_consistency(mk("SELECT price, name FROM items"), cand, run)
    assert not judge_consistency(mk("SELECT zz FROM items"), cand, run)


# -- full selection ------------------------------------------------------------------

def test_run_selection_prefers_consistent(shop_db):
    good = trajectory("SELECT name FROM items WHERE price < 1", 0.5)
    bad = trajectory("SELECT name FROM items WHERE price > 1", 0.9)
    gw = completions(fence("SELECT name FROM items WHERE price < 1"))
    res = run_selection([bad, good], SelectionConfig(), gw, shop_db, question_id="q", question_text="q",
                        schema_doc="S")
    assert res.chosen is good and res.retained == [1] and not res.filter_fallback
    assert res.scores[1].disc_conf == 1.0 and res.scores[0].disc_conf == 0.0
    trace = res.trace([bad, good])
    assert trace["chosen_index"] == 1 and len(trace["candidates"][0]["probes"]) == 3


def test_run_selection_filter_fallback(shop_db):
    cands = [trajectory("SELECT 1", 0.2), trajectory("SELECT 2", 0.8)]
    res = run_selection(cands, SelectionConfig(), completions("nothing"), shop_db, question_id="q",
                        question_text="q", schema_doc="S")
    assert res.filter_fallback and res.diagnostics and res.chosen is cands[1]
    assert set(res.retained) <= {0, 1}


def test_run_selection_empty(shop_db):
    res = run_selection([], SelectionConfig(), completions("x"), shop_db, question_id="q", question_text="q",
                        schema_doc="S")
    assert res.chosen is None and res.sql is None


def test_run_selection_deterministic(shop_db):
    cands = [trajectory("SELECT 1", 0.2, actions=(A1, A2, A3, A4)), trajectory("SELECT 2", 0.8)]
    entry = [{"template": "discriminator-completion",
              "choices": [{"text": fence("SELECT 1"), "weight": 1}, {"text": fence("SELECT 2"), "weight": 1}]}]
    runs = [
        run_selection(cands, SelectionConfig(probe_seed=4), scripted(entry), shop_db, question_id="q",
                      question_text="q", schema_doc="S").trace(cands)
        for _ in range(2)
    ]
    assert runs[0] == runs[1]
