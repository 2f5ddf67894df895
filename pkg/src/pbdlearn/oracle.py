"""Pull-based sample sources that count every draw."""

from __future__ import annotations

import numpy as np

from .core import DensePmf, PbdSpec, make_rng, pbd_pmf, sample_from_pmf


class OracleExhausted(RuntimeError):
    """A sample source could not supply the requested draws."""


class SampleOracle:
    """Base class. Subclasses implement ``_draw``; ``used`` counts draws handed out."""

    def __init__(self):
        self.used = 0

    def draw(self, m: int) -> np.ndarray:
        if m < 0:
            raise ValueError("negative draw count")
        if m == 0:
            return np.empty(0, dtype=np.int64)
        out = self._draw(int(m))
        self.used += int(m)
        return out

    def _draw(self, m: int) -> np.ndarray:
        raise NotImplementedError

    def draw_counts(self, rows: int, m: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """``rows`` independent batches of ``m`` draws, each reduced to its histogram on
        ``lo..hi``.  Returns the histograms and the number of draws in each batch; draws
        outside the range count toward the batch size only."""
        width = hi - lo + 1
        out = np.zeros((rows, width), dtype=np.int64)
        sizes = np.zeros(rows, dtype=np.int64)
        for r in range(rows):
            x = self.draw(m)
            sizes[r] = x.size
            x = x[(x >= lo) & (x <= hi)]
            out[r] = np.bincount(x - lo, minlength=width)
        return out, sizes


class PmfOracle(SampleOracle):
    """Inverse-cdf draws from an explicit pmf with a private seeded generator."""

    def __init__(self, pmf: DensePmf, seed: int):
        super().__init__()
        t = pmf.trimmed()
        self._origin = t.origin
        self._cdf = np.cumsum(t.mass)
        self._cdf[-1] = 1.0
        self._probs = t.mass / t.mass.sum()
        self._rng = make_rng(seed)
        self.pmf = t

    def _draw(self, m: int) -> np.ndarray:
        idx = np.searchsorted(self._cdf, self._rng.random(m), side="right")
        return self._origin + np.minimum(idx, self._cdf.size - 1).astype(np.int64)

    def draw_counts(self, rows: int, m: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        # a histogram of m iid draws is multinomial; sampling it directly costs O(support)
        width = hi - lo + 1
        out = np.zeros((rows, width), dtype=np.int64)
        if rows == 0 or m == 0:
            return out, np.full(rows, m, dtype=np.int64)
        probs = self._probs
        full = self._rng.multinomial(m, probs, size=rows)
        self.used += rows * m
        a, b = max(lo, self._origin), min(hi, self._origin + probs.size - 1)
        if a <= b:
            out[:, a - lo : b - lo + 1] = full[:, a - self._origin : b - self._origin + 1]
        return out, np.full(rows, m, dtype=np.int64)


def pbd_oracle(spec: PbdSpec, seed: int) -> PmfOracle:
    return PmfOracle(pbd_pmf(spec), seed)


class RecordedOracle(SampleOracle):
    """Replays a fixed stream; running past its end raises ``OracleExhausted``."""

    def __init__(self, values):
        super().__init__()
        self._values = np.asarray(values, dtype=np.int64)
        self._pos = 0

    @property
    def remaining(self) -> int:
        return self._values.size - self._pos

    def _draw(self, m: int) -> np.ndarray:
        if m > self.remaining:
            raise OracleExhausted(f"requested {m} draws, {self.remaining} left in the recorded stream")
        out = self._values[self._pos : self._pos + m]
        self._pos += m
        return out.copy()


class ConditionalOracle(SampleOracle):
    """Rejection sampler for the law of the base source restricted to ``[a, b]``.

    Each request for ``m`` values pulls a fixed ``ceil(m / min_accept)`` draws from the
    base source, so the base draw count never depends on the data.  The accepted values
    (at most ``m``) are returned; fewer than a quarter of ``m`` raises ``OracleExhausted``.
    """

    def __init__(self, base: SampleOracle, a: int, b: int, min_accept: float):
        super().__init__()
        if not 0.0 < min_accept <= 1.0:
            raise ValueError("min_accept must be in (0, 1]")
        self.base = base
        self.a = int(a)
        self.b = int(b)
        self.min_accept = float(min_accept)

    def draw(self, m: int) -> np.ndarray:
        if m <= 0:
            return np.empty(0, dtype=np.int64)
        raw = self.base.draw(int(np.ceil(m / self.min_accept)))
        kept = raw[(raw >= self.a) & (raw <= self.b)][:m]
        if 4 * kept.size < m:
            raise OracleExhausted(
                f"only {kept.size} of {m} requested draws landed in [{self.a}, {self.b}]"
            )
        self.used += kept.size
        return kept
