"""Pairwise hypothesis competitions and the all-pairs tournament."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hypotheses import Hypothesis
from .oracle import SampleOracle

FIRST_WINS = "first-wins"
SECOND_WINS = "second-wins"
DRAW = "draw"


@dataclass
class CompetitionRecord:
    w1: np.ndarray
    w1_exterior: bool
    p1: float
    q1: float
    tau: float | None
    m: int
    verdict: str
    swapped: bool = False

    def to_document(self) -> dict:
        return {
            "swapped": self.swapped,
            "w1": self.w1.tolist(),
            "w1_exterior": self.w1_exterior,
            "p1": self.p1,
            "q1": self.q1,
            "tau": self.tau,
            "m": self.m,
            "verdict": self.verdict,
        }


def competition_sample_size(eps: float, delta: float) -> int:
    """``ceil(2 ln(2/delta) / eps^2)`` draws, so that ``exp(-m eps^2 / 2) <= delta/2``."""
    return math.ceil(2.0 * math.log(2.0 / delta) / eps**2)


def _common_range(h1: Hypothesis, h2: Hypothesis) -> tuple[int, int]:
    s1, s2 = h1.support(), h2.support()
    if s1 is not None and s2 is not None:
        return min(s1[0], s2[0]), max(s1[1], s2[1])
    if s1 is not None:
        return s1
    if s2 is not None:
        return s2
    w1, w2 = h1.window(), h2.window()
    return min(w1[0], w2[0]), max(w1[1], w2[1])


def _in_w1_outside(h1: Hypothesis, h2: Hypothesis, points: np.ndarray) -> np.ndarray:
    """Membership in ``{H1 > H2}`` for points outside the common range, evaluated lazily."""
    if points.size == 0:
        return np.zeros(0, dtype=bool)
    finite1, finite2 = h1.support() is not None, h2.support() is not None
    if finite1 and finite2:
        return np.zeros(points.size, dtype=bool)
    uniq, inv = np.unique(points, return_inverse=True)
    v1 = np.zeros(uniq.size) if finite1 else h1.pmf_at(uniq)
    v2 = np.zeros(uniq.size) if finite2 else h2.pmf_at(uniq)
    return (v1 > v2)[inv]


def _canonical_first(h1: Hypothesis, h2: Hypothesis, a: np.ndarray, b: np.ndarray) -> bool:
    """Whether ``h1`` leads in the canonical order: larger mass at the first differing point."""
    diff = np.flatnonzero(a != b)
    if diff.size:
        return bool(a[diff[0]] > b[diff[0]])
    return not (h1.support() is not None and h2.support() is None)


def choose_hypothesis(
    oracle: SampleOracle,
    h1: Hypothesis,
    h2: Hypothesis,
    eps: float,
    delta: float,
    fixed_draws: bool = False,
) -> tuple[Hypothesis, CompetitionRecord]:
    """Symmetric competition between two hypotheses.

    Returns the winner, or ``h1`` when the competition is a draw; the record carries the
    verdict relative to the argument order.  The set ``{H1 > H2}`` is always built from a
    canonical ordering of the pair, so swapping the arguments never changes the outcome on
    a fixed sample stream, even when samples hit points where the two pmfs agree.

    Draws happen without looking at samples when the two hypotheses are within ``5 eps``.
    With ``fixed_draws`` the ``m`` samples are pulled (and discarded) in that case too, so
    the draw count never depends on the hypotheses.
    """
    lo, hi = _common_range(h1, h2)
    a = np.asarray(h1.pmf_on(lo, hi), dtype=float)
    b = np.asarray(h2.pmf_on(lo, hi), dtype=float)
    if not _canonical_first(h1, h2, a, b):
        _, rec = _compete(oracle, h2, h1, b, a, lo, hi, eps, delta, fixed_draws)
        rec.verdict = {FIRST_WINS: SECOND_WINS, SECOND_WINS: FIRST_WINS}.get(rec.verdict, DRAW)
        rec.swapped = True
    else:
        _, rec = _compete(oracle, h1, h2, a, b, lo, hi, eps, delta, fixed_draws)
    winner = h2 if rec.verdict == SECOND_WINS else h1
    return winner, rec


def _compete(oracle, h1, h2, a, b, lo, hi, eps, delta, fixed_draws):
    mask = a > b
    p1 = float(a[mask].sum())
    q1 = float(b[mask].sum())
    exterior = h1.support() is None and h2.support() is not None
    if exterior:
        # h2 vanishes outside its support while h1 does not, so that region lies in W1
        p1 += h1.mass_outside(lo, hi)
    w1 = lo + np.flatnonzero(mask)
    m = competition_sample_size(eps, delta)
    if p1 - q1 <= 5.0 * eps:
        taken = oracle.draw(m).size if fixed_draws else 0
        return h1, CompetitionRecord(w1, exterior, p1, q1, None, taken, DRAW)

    samples = oracle.draw(m)
    inside = (samples >= lo) & (samples <= hi)
    hits = int(mask[samples[inside] - lo].sum())
    hits += int(_in_w1_outside(h1, h2, samples[~inside]).sum())
    tau = hits / max(1, samples.size)
    if tau > p1 - 1.5 * eps:
        verdict, winner = FIRST_WINS, h1
    elif tau < q1 + 1.5 * eps:
        verdict, winner = SECOND_WINS, h2
    else:
        verdict, winner = DRAW, h1
    return winner, CompetitionRecord(w1, exterior, p1, q1, tau, int(samples.size), verdict)


@dataclass
class TournamentRecord:
    size: int
    decisive: list[tuple[int, int, str]] = field(default_factory=list)
    records: dict[tuple[int, int], CompetitionRecord] = field(default_factory=dict)
    losses: np.ndarray | None = None
    winner_index: int | None = None
    samples_used: int = 0

    def verdict_matrix(self) -> np.ndarray:
        """``M[i, j] = 1`` if ``i`` beat ``j``, ``-1`` if it lost, ``0`` for draws."""
        out = np.zeros((self.size, self.size), dtype=np.int8)
        for i, j, verdict in self.decisive:
            sign = 1 if verdict == FIRST_WINS else -1
            out[i, j], out[j, i] = sign, -sign
        return out

    def to_document(self) -> dict:
        return {
            "size": self.size,
            "winner": self.winner_index,
            "samples_used": self.samples_used,
            "decisive": [[i, j, v] for i, j, v in self.decisive],
            "losses": {}
            if self.losses is None
            else {str(i): int(self.losses[i]) for i in np.flatnonzero(self.losses)},
        }


def _gap_rows(dense: np.ndarray, i: int) -> np.ndarray:
    """``p1 - q1`` of candidate ``i`` against every later candidate."""
    return np.maximum(dense[i] - dense[i + 1 :], 0.0).sum(axis=1)


def _tally(rec: "TournamentRecord", wins: np.ndarray, i: int, j: int, record: CompetitionRecord):
    rec.records[(i, j)] = record
    rec.decisive.append((i, j, record.verdict))
    winner, loser = (i, j) if record.verdict == FIRST_WINS else (j, i)
    wins[winner] += 1
    rec.losses[loser] += 1


def _batched_rounds(oracle, candidates, dense, lo, eps, pair_delta, fixed_draws, rec, wins):
    """All competitions of candidate ``i`` against later ones in one vectorized pass.

    With finite supports a competition uses its samples only through their histogram on
    the common range, so each batch of ``m`` draws is requested as a histogram.  W1 and
    the verdict follow the same canonical ordering as :func:`choose_hypothesis`.
    """
    n_cand, width = dense.shape
    m = competition_sample_size(eps, pair_delta)
    rows_per_chunk = max(1, 4_000_000 // max(width, m))
    for i in range(n_cand - 1):
        gaps = _gap_rows(dense, i)
        later = np.arange(i + 1, n_cand) if fixed_draws else i + 1 + np.flatnonzero(gaps > 5.0 * eps)
        for c0 in range(0, later.size, rows_per_chunk):
            js = later[c0 : c0 + rows_per_chunk]
            counts, sizes = oracle.draw_counts(js.size, m, lo, lo + width - 1)
            live = gaps[js - i - 1] > 5.0 * eps
            js, counts, sizes = js[live], counts[live], sizes[live]
            if js.size == 0:
                continue
            a = np.broadcast_to(dense[i], (js.size, width))
            b = dense[js]
            differ = a != b
            first = np.argmax(differ, axis=1)
            rows = np.arange(js.size)
            i_first = a[rows, first] > b[rows, first]
            top = np.where(i_first[:, None], a, b)
            bottom = np.where(i_first[:, None], b, a)
            mask = top > bottom
            p1 = (top * mask).sum(axis=1)
            q1 = (bottom * mask).sum(axis=1)
            tau = (counts * mask).sum(axis=1) / np.maximum(sizes, 1)
            top_wins = tau > p1 - 1.5 * eps
            bottom_wins = ~top_wins & (tau < q1 + 1.5 * eps)
            for r in np.flatnonzero(top_wins | bottom_wins):
                i_wins = bool(top_wins[r]) == bool(i_first[r])
                record = CompetitionRecord(
                    lo + np.flatnonzero(mask[r]),
                    False,
                    float(p1[r]),
                    float(q1[r]),
                    float(tau[r]),
                    int(sizes[r]),
                    FIRST_WINS if i_wins else SECOND_WINS,
                    swapped=not bool(i_first[r]),
                )
                _tally(rec, wins, i, int(js[r]), record)


def tournament_select(
    oracle: SampleOracle,
    candidates: list[Hypothesis],
    eps: float,
    delta: float,
    fixed_draws: bool = False,
) -> tuple[Hypothesis | None, TournamentRecord]:
    """Run every pairwise competition at confidence ``delta/(2N)``.

    Returns the candidate that lost no competition and won the most (lowest index on
    ties), or ``None`` when every candidate lost at least once.  ``fixed_draws`` makes
    every pair consume its sample budget whether or not the competition needs it.
    """
    n_cand = len(candidates)
    if n_cand == 0:
        raise ValueError("tournament needs at least one candidate")
    rec = TournamentRecord(n_cand, losses=np.zeros(n_cand, dtype=np.int64))
    wins = np.zeros(n_cand, dtype=np.int64)
    if n_cand == 1:
        rec.winner_index = 0
        return candidates[0], rec
    pair_delta = delta / (2 * n_cand)
    start_used = oracle.used
    if 5.0 * eps >= 1.0 and not fixed_draws:
        # p1 - q1 never exceeds 1, so every competition is a draw
        rec.winner_index = 0
        return candidates[0], rec
    dense = None
    supports = [c.support() for c in candidates] if n_cand <= 5000 else None
    if supports is not None and all(s is not None for s in supports):
        lo = min(s[0] for s in supports)
        hi = max(s[1] for s in supports)
        if (hi - lo + 1) * n_cand <= 50_000_000:
            dense = np.vstack([c.pmf_on(lo, hi) for c in candidates])
    if dense is not None:
        _batched_rounds(oracle, candidates, dense, lo, eps, pair_delta, fixed_draws, rec, wins)
    else:
        for i in range(n_cand - 1):
            for j in range(i + 1, n_cand):
                _, record = choose_hypothesis(
                    oracle, candidates[i], candidates[j], eps, pair_delta, fixed_draws
                )
                if record.verdict != DRAW:
                    _tally(rec, wins, i, j, record)
    rec.samples_used = oracle.used - start_used
    undefeated = np.flatnonzero(rec.losses == 0)
    if undefeated.size == 0:
        return None, rec
    rec.winner_index = int(undefeated[np.argmax(wins[undefeated])])
    return candidates[rec.winner_index], rec
