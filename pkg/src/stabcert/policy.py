"""Gauge and label acquisition policies.

The witness-elimination rule scores each unqueried label by how much the two
endpoint witnesses disagree on its Walsh coefficient, then queries the
maximum-weight basis under those scores (a matroid greedy problem).  The
uniform policy ignores history; the mixed policy flips a coin between the
two; the fine-grained rule queries the single best label.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from stabcert.gf2 import Gauge, Label, greedy_max_weight_basis, sample_uniform_gauge
from stabcert.kernels import fwht_inplace
from stabcert.syndrome import SyndromeDistribution

__all__ = [
    "DisagreementSpectrum",
    "PolicyChoice",
    "disagreement_spectrum",
    "select_witness_gauge",
    "select_uniform_gauge",
    "select_mixed",
    "select_single_label",
]


@dataclass(frozen=True)
class DisagreementSpectrum:
    """Per-label witness disagreement d(u) >= 0; the zero label is excluded."""

    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.shape != (1 << self.n,):
            raise ValueError(f"expected length {1 << self.n} array")
        arr[0] = 0.0
        if arr.min() < 0.0 or arr.max() > 2.0 + 1e-9:
            raise ValueError("disagreement scores must lie in [0, 2]")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def value(self, u: int | Label) -> float:
        bits = u.bits if isinstance(u, Label) else u
        return float(self.values[bits])

    def total_unqueried(self, queried: Iterable[Label]) -> float:
        """D = sum of d(u) over unqueried nonzero labels."""
        skip = {lab.bits for lab in queried}
        return float(
            sum(self.values[b] for b in range(1, 1 << self.n) if b not in skip)
        )

    def max_unqueried(self, queried: Iterable[Label]) -> float:
        """Delta = max of d(u) over unqueried nonzero labels (0 if none)."""
        skip = {lab.bits for lab in queried}
        vals = [self.values[b] for b in range(1, 1 << self.n) if b not in skip]
        return float(max(vals)) if vals else 0.0


def disagreement_spectrum(
    p_lo: SyndromeDistribution, p_hi: SyndromeDistribution
) -> DisagreementSpectrum:
    """d(u) = |walsh(p_hi)(u) - walsh(p_lo)(u)| via one transform of the difference."""
    if p_lo.n != p_hi.n:
        raise ValueError("dimension mismatch")
    buf = p_hi.probs - p_lo.probs
    fwht_inplace(buf)
    np.abs(buf, out=buf)
    return DisagreementSpectrum(p_lo.n, buf)


def _queried_bits(queried: Iterable[Label]) -> set[int]:
    return {lab.bits for lab in queried}


def select_witness_gauge(
    d: DisagreementSpectrum, queried: Iterable[Label]
) -> Gauge | None:
    """Maximum-disagreement gauge; None signals full coverage (terminal).

    Solves the max-weight basis problem with unqueried-first tie-breaking,
    so the result always contains an unqueried label while any remain, and
    its score dominates the best single unqueried label.  Columns are
    ordered by ascending encoding.

    Queried labels get weight zero before the greedy scan: re-measuring
    yields no new constraint, and with band constraints the witnesses may
    still disagree slightly on queried labels, which must not crowd out
    unqueried ones.  With exact constraints this is a no-op.
    """
    n = d.n
    skip = _queried_bits(queried)
    if len(skip) >= (1 << n) - 1:
        return None
    weights = d.values.copy()
    for b in skip:
        weights[b] = 0.0
    basis = greedy_max_weight_basis(
        n, weights, [Label(n, b) for b in skip]
    )
    cols = tuple(sorted(basis, key=lambda lab: lab.bits))
    return Gauge(n, cols)


def select_uniform_gauge(
    n: int, queried: Iterable[Label], rng: np.random.Generator
) -> Gauge:
    """History-independent uniform gauge (``queried`` intentionally unused)."""
    return sample_uniform_gauge(n, rng)


def select_mixed(
    gamma: float,
    d: DisagreementSpectrum,
    queried: Iterable[Label],
    rng: np.random.Generator,
) -> Gauge | None:
    """Uniform gauge with probability gamma, else the witness gauge.

    Exactly one Bernoulli value is drawn before any gauge sampling, so traces
    are reproducible regardless of which branch is taken.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0,1], got {gamma!r}")
    take_uniform = rng.random() < gamma
    if take_uniform:
        return select_uniform_gauge(d.n, queried, rng)
    return select_witness_gauge(d, queried)


def select_single_label(
    d: DisagreementSpectrum, queried: Iterable[Label]
) -> Label | None:
    """Unqueried label with the largest disagreement; None at full coverage.

    Ties (including the all-zero spectrum) break by ascending encoding.
    """
    skip = _queried_bits(queried)
    best: tuple[float, int] | None = None
    for b in range(1, 1 << d.n):
        if b in skip:
            continue
        key = (-float(d.values[b]), b)
        if best is None or key < best:
            best = key
    if best is None:
        return None
    return Label(d.n, best[1])


@dataclass(frozen=True)
class PolicyChoice:
    """A parsed acquisition policy: witness, uniform, mixed(gamma), or fine."""

    kind: str
    gamma: float = 0.0

    _KINDS = ("witness", "uniform", "mixed", "fine")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0,1], got {self.gamma!r}")

    @classmethod
    def parse(cls, text: str) -> "PolicyChoice":
        text = text.strip()
        if text.startswith("mixed:"):
            return cls("mixed", float(text.split(":", 1)[1]))
        if text == "mixed":
            raise ValueError("mixed policy needs a gamma, e.g. 'mixed:0.25'")
        return cls(text)

    def __str__(self) -> str:
        if self.kind == "mixed":
            return f"mixed:{self.gamma:g}"
        return self.kind

    def select_gauge(
        self,
        d: DisagreementSpectrum,
        queried: Iterable[Label],
        rng: np.random.Generator,
    ) -> Gauge | None:
        if self.kind == "witness":
            return select_witness_gauge(d, queried)
        if self.kind == "uniform":
            return select_uniform_gauge(d.n, queried, rng)
        if self.kind == "mixed":
            return select_mixed(self.gamma, d, queried, rng)
        raise ValueError(f"policy {self.kind!r} does not select gauges")
