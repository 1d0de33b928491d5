"""Temporal reordering: permutation scoring, matching baseline, and metrics.

A story of ``n`` elements carries an ``n x n x 4`` table of log-probabilities
over the relation between caption position ``i`` and the frame shown in slot
``sigma[j]``: same moment, caption-before-frame, caption-after-frame, or
different video.  Scoring a candidate permutation sums the log-probability
of the relation class each (caption, frame) pair would have under it.

Permutations are plain index sequences: ``sigma[j]`` is the temporal slot
assigned to element ``j``.  The different-video class never holds inside a
single story; it only participates through normalization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

CLASS_SAME = 0
CLASS_BEFORE = 1  # caption precedes the frame
CLASS_AFTER = 2
CLASS_DIFFERENT = 3

MAX_EXHAUSTIVE_N = 8


def relation_class(caption_pos: int, frame_slot: int) -> int:
    if caption_pos == frame_slot:
        return CLASS_SAME
    return CLASS_BEFORE if caption_pos < frame_slot else CLASS_AFTER


def check_permutation(sigma: Sequence[int], n: int) -> tuple[int, ...]:
    """Validate a bijection over range(n) and return it as a tuple."""
    perm = tuple(int(s) for s in sigma)
    if len(perm) != n or sorted(perm) != list(range(n)):
        raise ValueError(f"{sigma!r} is not a permutation of 0..{n - 1}")
    return perm


@dataclass(frozen=True)
class PairwiseRelationTable:
    log_probs: np.ndarray  # (n, n, 4), [caption, frame, class]

    def __post_init__(self) -> None:
        lp = np.asarray(self.log_probs, dtype=np.float64)
        if lp.ndim != 3 or lp.shape[0] != lp.shape[1] or lp.shape[2] != 4:
            raise ValueError(f"log_probs must be (n, n, 4), got shape {lp.shape}")
        if lp.shape[0] < 1:
            raise ValueError("table must cover at least one element")
        object.__setattr__(self, "log_probs", lp)

    @property
    def n(self) -> int:
        return int(self.log_probs.shape[0])

    def validate(self, tol: float = 1e-6) -> None:
        """Require each (i, j) cell to be a normalized distribution."""
        if np.any(np.isnan(self.log_probs)) or np.any(self.log_probs == np.inf):
            raise ValueError("log-probabilities must be < inf and not NaN")
        mass = logsumexp(self.log_probs, axis=2)
        worst = float(np.abs(mass).max())
        if worst > tol:
            i, j = np.unravel_index(int(np.abs(mass).argmax()), mass.shape)
            raise ValueError(
                f"cell ({i}, {j}) is not normalized: logsumexp {mass[i, j]:.3g} "
                f"(tolerance {tol:.3g})"
            )

    @classmethod
    def from_flat(cls, n: int, flat: Sequence[float]) -> "PairwiseRelationTable":
        """Decode the wire format (row-major flattened n*n*4) and validate."""
        arr = np.asarray(list(flat), dtype=np.float64)
        if arr.size != n * n * 4:
            raise ValueError(
                f"expected {n * n * 4} log-probabilities for n={n}, got {arr.size}"
            )
        table = cls(arr.reshape(n, n, 4))
        table.validate()
        return table

    @classmethod
    def uniform(cls, n: int) -> "PairwiseRelationTable":
        return cls(np.full((n, n, 4), math.log(0.25)))

    @classmethod
    def oracle_from_order(
        cls, truth: Sequence[int], correct_mass: float = 0.97
    ) -> "PairwiseRelationTable":
        """Concentrate ``correct_mass`` on each pair's true relation class."""
        n = len(truth)
        perm = check_permutation(truth, n)
        if not 0.0 < correct_mass < 1.0:
            raise ValueError(f"correct_mass must be in (0, 1), got {correct_mass}")
        rest = math.log((1.0 - correct_mass) / 3.0)
        lp = np.full((n, n, 4), rest)
        for j in range(n):
            for i in range(n):
                lp[i, j, relation_class(i, perm[j])] = math.log(correct_mass)
        return cls(lp)

    def to_two_way(self) -> np.ndarray:
        """Marginalize onto {before, after} and renormalize each cell."""
        two = self.log_probs[:, :, (CLASS_BEFORE, CLASS_AFTER)]
        return two - logsumexp(two, axis=2, keepdims=True)


def _class_matrix(sigma: tuple[int, ...]) -> np.ndarray:
    """cls[i, j] = relation class of caption i vs the slot sigma assigns j."""
    n = len(sigma)
    slots = np.asarray(sigma, dtype=np.int64)[None, :]
    captions = np.arange(n, dtype=np.int64)[:, None]
    cls = np.where(captions < slots, CLASS_BEFORE, CLASS_AFTER)
    cls[captions == slots] = CLASS_SAME
    return cls


def score_permutation(table: PairwiseRelationTable, sigma: Sequence[int]) -> float:
    """Summed log-probability of every pair's relation under ``sigma``."""
    perm = check_permutation(sigma, table.n)
    cls = _class_matrix(perm)
    picked = np.take_along_axis(table.log_probs, cls[:, :, None], axis=2)
    return float(picked.sum())


@lru_cache(maxsize=None)
def _all_permutations(n: int) -> np.ndarray:
    # Lexicographic order; argmax picking the first maximum realizes the
    # documented tie-break.
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def _slot_scores(table: PairwiseRelationTable) -> np.ndarray:
    """S[j, s] = score contribution of placing element j at slot s."""
    n = table.n
    out = np.empty((n, n))
    captions = np.arange(n)
    for s in range(n):
        cls = np.where(captions < s, CLASS_BEFORE, CLASS_AFTER)
        cls[captions == s] = CLASS_SAME
        out[:, s] = table.log_probs[captions, :, cls].sum(axis=0)
    return out


def best_ordering(table: PairwiseRelationTable) -> tuple[tuple[int, ...], float]:
    """Exhaustive argmax of ``score_permutation``; ties pick the
    lexicographically smallest permutation."""
    n = table.n
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(
            f"exhaustive search is capped at n={MAX_EXHAUSTIVE_N}, got n={n}"
        )
    scores = _slot_scores(table)
    perms = _all_permutations(n)
    totals = scores[np.arange(n)[None, :], perms].sum(axis=1)
    best = int(np.argmax(totals))
    return tuple(int(s) for s in perms[best]), float(totals[best])


def frame_order_score(two_way: np.ndarray, sigma: Sequence[int]) -> float:
    """Score a frame permutation from a 2-way {before, after} table.

    ``two_way[i, j, 0]`` is the log-probability that frame ``i`` comes before
    frame ``j``; diagonal cells are ignored.
    """
    lp = np.asarray(two_way, dtype=np.float64)
    if lp.ndim != 3 or lp.shape[0] != lp.shape[1] or lp.shape[2] != 2:
        raise ValueError(f"two-way table must be (n, n, 2), got shape {lp.shape}")
    perm = check_permutation(sigma, lp.shape[0])
    total = 0.0
    for i, j in itertools.permutations(range(lp.shape[0]), 2):
        total += lp[i, j, 0 if perm[i] < perm[j] else 1]
    return float(total)


def best_frame_ordering(two_way: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Exhaustive argmax of ``frame_order_score``, same cap and tie-break."""
    lp = np.asarray(two_way, dtype=np.float64)
    n = lp.shape[0]
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(
            f"exhaustive search is capped at n={MAX_EXHAUSTIVE_N}, got n={n}"
        )
    best_perm: tuple[int, ...] | None = None
    best_score = -math.inf
    for cand in itertools.permutations(range(n)):
        s = frame_order_score(lp, cand)
        if s > best_score:
            best_perm, best_score = cand, s
    assert best_perm is not None
    return best_perm, best_score


def hungarian_match(similarity) -> tuple[tuple[tuple[int, int], ...], float]:
    """Maximum-total-weight one-to-one assignment of min(n, m) pairs.

    Among equally weighted optima the lexicographically smallest pair
    sequence (sorted by row) wins, which costs one reduced assignment solve
    per considered cell; fine at evaluation scale.
    """
    sim = np.asarray(similarity, dtype=np.float64)
    if sim.ndim != 2 or sim.shape[0] < 1 or sim.shape[1] < 1:
        raise ValueError(f"similarity must be a non-empty matrix, got shape {sim.shape}")
    if not np.all(np.isfinite(sim)):
        raise ValueError("similarity contains non-finite entries")
    n, m = sim.shape
    k = min(n, m)

    def lsa_value(rows: list[int], cols: list[int]) -> float:
        if not rows or not cols:
            return 0.0
        r, c = linear_sum_assignment(sim[np.ix_(rows, cols)], maximize=True)
        return float(sim[np.ix_(rows, cols)][r, c].sum())

    target = lsa_value(list(range(n)), list(range(m)))
    rows_left = list(range(n))
    cols_left = list(range(m))
    pairs: list[tuple[int, int]] = []
    acc = 0.0
    while len(pairs) < k:
        row = rows_left[0]
        rest_rows = rows_left[1:]
        need = k - len(pairs) - 1
        assigned = False
        for col in cols_left:
            rest_cols = [c for c in cols_left if c != col]
            if min(len(rest_rows), len(rest_cols)) < need:
                continue
            completion = lsa_value(rest_rows, rest_cols) if need else 0.0
            cand = acc + sim[row, col] + completion
            if math.isclose(cand, target, rel_tol=1e-9, abs_tol=1e-9):
                pairs.append((row, col))
                acc += sim[row, col]
                cols_left.remove(col)
                assigned = True
                break
        rows_left.pop(0)
        if not assigned and len(rows_left) < k - len(pairs):
            raise RuntimeError("assignment search lost optimality; tolerance too tight")
    return tuple(pairs), float(acc)


# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class StoryEvalReport:
    spearman: float  # within [-1, 1]
    pairwise_accuracy: float  # within [0, 1]
    distance: float  # non-negative
    n_stories: int


def spearman_positions(a: Sequence[int], b: Sequence[int]) -> float:
    """Rank correlation of two position vectors (all ranks distinct).

    Uses the exact closed form for tie-free ranks; a single element is
    perfectly correlated by convention.
    """
    n = len(a)
    perm_a = check_permutation(a, n)
    perm_b = check_permutation(b, n)
    if n == 1:
        return 1.0
    d2 = sum((x - y) ** 2 for x, y in zip(perm_a, perm_b))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


def story_metrics(
    predicted: Sequence[int], truth: Sequence[int], footrule: bool = False
) -> tuple[float, float, float]:
    """(spearman, pairwise accuracy, displacement) of predicted vs true slots.

    Displacement is the mean absolute position error per element; with
    ``footrule`` it is the sum instead.
    """
    n = len(truth)
    pred = check_permutation(predicted, n)
    true = check_permutation(truth, n)
    if len(pred) != n:
        raise ValueError(f"predicted has {len(pred)} elements, truth has {n}")
    rho = spearman_positions(pred, true)
    agree = 0
    pair_count = 0
    for e, f in itertools.combinations(range(n), 2):
        pair_count += 1
        if (pred[e] < pred[f]) == (true[e] < true[f]):
            agree += 1
    accuracy = agree / pair_count if pair_count else 1.0
    disp = sum(abs(p - t) for p, t in zip(pred, true))
    distance = float(disp) if footrule else disp / n
    return rho, accuracy, distance


def evaluate_story_set(
    tables: Sequence[PairwiseRelationTable],
    truths: Sequence[Sequence[int]],
    footrule: bool = False,
) -> StoryEvalReport:
    """Unscramble each story exhaustively and macro-average the metrics."""
    if len(tables) == 0:
        raise ValueError("evaluate_story_set requires at least one story")
    if len(tables) != len(truths):
        raise ValueError(f"{len(tables)} tables but {len(truths)} truths")
    rho_sum = acc_sum = dist_sum = 0.0
    for k, (table, truth) in enumerate(zip(tables, truths)):
        try:
            table.validate()
            predicted, _ = best_ordering(table)
            rho, acc, dist = story_metrics(predicted, truth, footrule=footrule)
        except ValueError as e:
            raise ValueError(f"story {k}: {e}") from e
        rho_sum += rho
        acc_sum += acc
        dist_sum += dist
    n = len(tables)
    return StoryEvalReport(
        spearman=rho_sum / n,
        pairwise_accuracy=acc_sum / n,
        distance=dist_sum / n,
        n_stories=n,
    )
