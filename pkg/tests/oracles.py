"""Independent reference implementations used as test oracles.

Each function here is written from the definition, without importing the
code under test, so agreement between the two is meaningful.
"""

from __future__ import annotations

import math
import re


# -- result comparison ---------------------------------------------------------

def canon_cell(x, tol=1e-6, fold=True, cross=True):
    if x is None:
        return (0, "")
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        return (1, str(x))
    if isinstance(x, float):
        if math.isnan(x):
            return (2, "nan")
        if math.isinf(x):
            return (2, "+inf" if x > 0 else "-inf")
        if cross and abs(x - round(x)) <= tol:
            return (1, str(int(round(x))))
        if tol == 0:
            return (2, repr(x))
        return (2, str(int(round(x / tol))))
    if isinstance(x, bytes):
        return (3, x.hex())
    s = str(x).strip()
    return (4, s.casefold() if fold else s)


def tables_equal(a_rows, b_rows, ordered, tol=1e-6, fold=True):
    """Canonicalize every cell, then compare row lists (sorted unless ordered)."""
    ca = [tuple(canon_cell(v, tol, fold) for v in r) for r in a_rows]
    cb = [tuple(canon_cell(v, tol, fold) for v in r) for r in b_rows]
    if len(ca) != len(cb) or any(len(r) != len(ca[0]) for r in ca + cb):
        return False
    return ca == cb if ordered else sorted(ca) == sorted(cb)


# -- rewards, UCT, score -----------------------------------------------------------

def agreement_reward(bits):
    return sum(bits) / len(bits)


def uct(q, n_a, n_v, c):
    return q / max(1, n_a) + c * math.sqrt(math.log(max(1, n_v)) / max(1, n_a))


def argmax_score(signals, weights, rewards, sql_lengths):
    """Enumerate all candidates; tie-break by reward, then shorter SQL, then index."""
    alpha, beta, gamma = weights
    best = None
    for i, (e, d, v) in enumerate(signals):
        total = alpha * e + beta * d + gamma * v
        key = (total, rewards[i], -sql_lengths[i], -i)
        if best is None or key > best[0]:
            best = (key, i)
    return best[1]


# -- partitions ------------------------------------------------------------

def pairwise_partition(n, same):
    """Connected components of the pairwise 'same' relation, as a set of frozensets."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if same(i, j):
                parent[find(j)] = find(i)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return {frozenset(g) for g in groups.values()}


# -- lexical helpers -------------------------------------------------------

def tf_cosine(a: str, b: str) -> float:
    def terms(text):
        out = {}
        for w in re.findall(r"[a-z0-9]+", text.lower().replace("_", " ")):
            if len(w) > 3 and w.endswith("ies"):
                w = w[:-3] + "y"
            elif len(w) > 3 and w.endswith("s") and not w.endswith("ss"):
                w = w[:-1]
            out[w] = out.get(w, 0) + 1
        return out

    ta, tb = terms(a), terms(b)
    dot = sum(v * tb.get(k, 0) for k, v in ta.items())
    na = math.sqrt(sum(v * v for v in ta.values()))
    nb = math.sqrt(sum(v * v for v in tb.values()))
    return dot / (na * nb) if na and nb else 0.0


def char_ngram_jaccard(a: str, b: str, n: int = 3) -> float:
    def grams(s):
        s = re.sub(r"[^a-z0-9]+", " ", s.lower()).strip()
        if len(s) < n:
            return {s}
        return {s[i : i + n] for i in range(len(s) - n + 1)}

    ga, gb = grams(a), grams(b)
    return len(ga & gb) / len(ga | gb) if ga | gb else 0.0


# -- rule-guided verification ------------------------------------------------

def alg1(relations, constraints, sim, score, delta, tau):
    """Match each relation against every constraint, keep the matched ones, score, threshold."""
    r_cand = [r for r in relations if any(sim(r, c) > delta for c in constraints)]
    scored = [(r, score(r)) for r in r_cand]
    r_high = [r for r, s in scored if s > tau]
    return r_cand, [s for _, s in scored], r_high
