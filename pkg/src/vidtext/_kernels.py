"""Hot inner-loop kernels with optional numba acceleration.

The word-distance matrix and the alignment DP fill dominate runtime when
aligning long transcripts, so both carry ``@njit`` versions.  Set
``VIDTEXT_NO_NUMBA=1`` to force the pure-numpy fallbacks (they are also
selected automatically when numba is not importable).  Both paths run
integer arithmetic only, so results are identical bit for bit; the test
suite exercises whichever path the environment selects and the benchmark
script times both explicitly.

Step codes used by the alignment fill, in tie-break priority order:

* 0 -- advance both sequences (diagonal)
* 1 -- advance the column sequence only
* 2 -- advance the row sequence only
"""

from __future__ import annotations

import os

import numpy as np

STEP_BOTH = 0
STEP_COL = 1
STEP_ROW = 2


def _want_numba() -> bool:
    flag = os.environ.get("VIDTEXT_NO_NUMBA", "").strip().lower()
    if flag in {"1", "true", "yes", "on"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def levenshtein_codes_py(a: np.ndarray, b: np.ndarray) -> int:
    """Edit distance between two int32 code sequences (two-row DP)."""
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1, dtype=np.int32)
    cur = np.empty(m + 1, dtype=np.int32)
    for i in range(n):
        cur[0] = i + 1
        ai = a[i]
        for j in range(m):
            cost = 0 if ai == b[j] else 1
            cur[j + 1] = min(prev[j] + cost, prev[j + 1] + 1, cur[j] + 1)
        prev, cur = cur, prev
    return int(prev[m])


def pair_cost_matrix_py(
    a_flat: np.ndarray,
    a_offsets: np.ndarray,
    b_flat: np.ndarray,
    b_offsets: np.ndarray,
) -> np.ndarray:
    """Levenshtein distance between every (row word, column word) pair.

    Words arrive flattened: ``a_flat[a_offsets[i]:a_offsets[i + 1]]`` holds the
    code points of row word ``i``, and likewise for columns.
    """
    n = len(a_offsets) - 1
    m = len(b_offsets) - 1
    out = np.empty((n, m), dtype=np.int32)
    for i in range(n):
        ai = a_flat[a_offsets[i] : a_offsets[i + 1]]
        for j in range(m):
            bj = b_flat[b_offsets[j] : b_offsets[j + 1]]
            out[i, j] = levenshtein_codes_py(ai, bj)
    return out


def alignment_fill_py(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate the monotone full-coverage alignment DP over ``cost``.

    Returns the cumulative-cost matrix and a same-shape step matrix whose
    entries record which predecessor each cell used.  Ties go to the lowest
    step code, i.e. diagonal first, then advancing the column sequence.
    """
    n, m = cost.shape
    acc = np.empty((n, m), dtype=np.int64)
    step = np.empty((n, m), dtype=np.int8)
    acc[0, 0] = cost[0, 0]
    step[0, 0] = STEP_BOTH
    for j in range(1, m):
        acc[0, j] = acc[0, j - 1] + cost[0, j]
        step[0, j] = STEP_COL
    for i in range(1, n):
        acc[i, 0] = acc[i - 1, 0] + cost[i, 0]
        step[i, 0] = STEP_ROW
        for j in range(1, m):
            best = acc[i - 1, j - 1]
            code = STEP_BOTH
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
                code = STEP_COL
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
                code = STEP_ROW
            acc[i, j] = best + cost[i, j]
            step[i, j] = code
    return acc, step


_USE_NUMBA = _want_numba()

# The jitted variants are built whenever numba imports, regardless of the
# env flag, so benchmarks and tests can compare both paths in one process.
# The flag only decides which variant the public aliases point at.
try:
    from numba import njit

    levenshtein_codes_nb = njit(cache=True)(levenshtein_codes_py)

    # pair_cost_matrix_py closes over the interpreted levenshtein, so the
    # jitted variant needs its own body that calls the jitted one.
    @njit(cache=True)
    def pair_cost_matrix_nb(a_flat, a_offsets, b_flat, b_offsets):
        n = len(a_offsets) - 1
        m = len(b_offsets) - 1
        out = np.empty((n, m), dtype=np.int32)
        for i in range(n):
            ai = a_flat[a_offsets[i] : a_offsets[i + 1]]
            for j in range(m):
                bj = b_flat[b_offsets[j] : b_offsets[j + 1]]
                out[i, j] = levenshtein_codes_nb(ai, bj)
        return out

    alignment_fill_nb = njit(cache=True)(alignment_fill_py)
except ImportError:
    levenshtein_codes_nb = None
    pair_cost_matrix_nb = None
    alignment_fill_nb = None

if _USE_NUMBA:
    levenshtein_codes = levenshtein_codes_nb
    pair_cost_matrix = pair_cost_matrix_nb
    alignment_fill = alignment_fill_nb
else:
    levenshtein_codes = levenshtein_codes_py
    pair_cost_matrix = pair_cost_matrix_py
    alignment_fill = alignment_fill_py


def numba_active() -> bool:
    """True when the jitted kernel path was selected at import time."""
    return _USE_NUMBA


def encode_words(words: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten words into (codepoint array, offsets array) for the kernels."""
    offsets = np.zeros(len(words) + 1, dtype=np.int64)
    total = 0
    for i, w in enumerate(words):
        total += len(w)
        offsets[i + 1] = total
    flat = np.empty(total, dtype=np.int32)
    pos = 0
    for w in words:
        for ch in w:
            flat[pos] = ord(ch)
            pos += 1
    return flat, offsets
