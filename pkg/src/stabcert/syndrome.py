"""Syndrome distributions, Walsh analysis, and test-state generators.

A syndrome distribution is a probability vector over F_2^n indexed by the
syndrome encoding of :mod:`stabcert.gf2`; its Walsh transform at label u is
the expectation of the stabilizer element labeled u, and the fidelity to the
target is the probability of the zero syndrome.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from stabcert.gf2 import Gauge, Label, apply_transpose, rank
from stabcert.kernels import fwht_inplace

__all__ = [
    "SyndromeDistribution",
    "WalshSpectrum",
    "AffineSupportSpec",
    "walsh",
    "inverse_walsh",
    "character_signs",
    "pullback_through_gauge",
    "make_affine_support",
    "make_rho_ex",
    "sample_dirichlet_uniform",
    "make_sparse_error_state",
    "sample_subspace_basis",
    "make_gauge_blind_pair",
    "make_indistinguishable_pair",
]

_SUM_ATOL = 1e-12
_NEG_ATOL = 1e-12


def _check_vector(n: int, values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (1 << n,):
        raise ValueError(f"expected length {1 << n} vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SyndromeDistribution:
    """Probability vector over syndromes s in F_2^n; fidelity = probs[0]."""

    n: int
    probs: np.ndarray
    atol: float = _SUM_ATOL

    def __post_init__(self) -> None:
        arr = _check_vector(self.n, self.probs).copy()
        neg_tol = max(_NEG_ATOL, self.atol)
        if arr.min() < -neg_tol:
            raise ValueError(f"negative probability {arr.min()!r}")
        np.clip(arr, 0.0, None, out=arr)
        total = arr.sum()
        if abs(total - 1.0) > max(_SUM_ATOL, self.atol):
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def fidelity(self) -> float:
        """Probability of the zero syndrome."""
        return float(self.probs[0])

    def prob(self, s: int | Label) -> float:
        bits = s.bits if isinstance(s, Label) else s
        return float(self.probs[bits])

    def walsh(self) -> "WalshSpectrum":
        return walsh(self)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "probs": [float(x) for x in self.probs]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SyndromeDistribution":
        return cls(int(data["n"]), np.asarray(data["probs"], dtype=np.float64))

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def read_json(cls, path) -> "SyndromeDistribution":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["syndrome_hex", "prob"])
            for s in range(1 << self.n):
                writer.writerow([f"{s:x}", repr(float(self.probs[s]))])

    @classmethod
    def read_csv(cls, path, n: int) -> "SyndromeDistribution":
        probs = np.zeros(1 << n)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                probs[int(row["syndrome_hex"], 16)] = float(row["prob"])
        return cls(n, probs)


@dataclass(frozen=True)
class WalshSpectrum:
    """Walsh coefficients of a probability distribution, indexed by label."""

    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _check_vector(self.n, self.values).copy()
        if abs(arr[0] - 1.0) > 1e-9:
            raise ValueError(f"spectrum of a distribution needs value 1 at 0, got {arr[0]!r}")
        if np.abs(arr).max() > 1.0 + 1e-9:
            raise ValueError("Walsh coefficient out of [-1, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def value(self, u: int | Label) -> float:
        bits = u.bits if isinstance(u, Label) else u
        return float(self.values[bits])

    def to_json_dict(self) -> dict:
        return {"n": self.n, "values": [float(x) for x in self.values]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "WalshSpectrum":
        return cls(int(data["n"]), np.asarray(data["values"], dtype=np.float64))


@dataclass(frozen=True)
class AffineSupportSpec:
    """Uniform distribution on the coset s0 + span(v_basis) in F_2^n."""

    n: int
    s0: Label
    v_basis: tuple[Label, ...]

    def __post_init__(self) -> None:
        if self.s0.n != self.n or any(v.n != self.n for v in self.v_basis):
            raise ValueError("dimension mismatch in affine-support spec")
        bits = [v.bits for v in self.v_basis]
        if any(b == 0 for b in bits):
            raise ValueError("v_basis must consist of nonzero labels")
        if rank(bits) != len(bits):
            raise ValueError("v_basis must be linearly independent")

    @property
    def r(self) -> int:
        return len(self.v_basis)


def walsh(p: SyndromeDistribution) -> WalshSpectrum:
    """Walsh transform: value at u is the sum of (-1)^(u.s) p(s)."""
    buf = p.probs.copy()
    fwht_inplace(buf)
    return WalshSpectrum(p.n, buf)


def inverse_walsh(spectrum: WalshSpectrum) -> SyndromeDistribution:
    """Inverse transform; clamps float dust and validates the result."""
    buf = spectrum.values.copy()
    fwht_inplace(buf)
    buf /= 1 << spectrum.n
    return SyndromeDistribution(spectrum.n, buf, atol=1e-9)


def character_signs(n: int, u: int) -> np.ndarray:
    """The +-1 vector (-1)^(u.s) over all syndromes s, as float64."""
    s = np.arange(1 << n, dtype=np.uint64)
    parity = np.bitwise_count(s & np.uint64(u)) & 1
    return 1.0 - 2.0 * parity.astype(np.float64)


def pullback_through_gauge(
    p_tilde: SyndromeDistribution, gauge: Gauge
) -> SyndromeDistribution:
    """Reindex a distribution given in gauge coordinates to reference ones.

    Returns p with p(s) = p_tilde(A^T s); the spectra then satisfy
    walsh(p)(A v) = walsh(p_tilde)(v), so gauge columns pull back to the
    coordinate labels e_i.
    """
    if p_tilde.n != gauge.n:
        raise ValueError("dimension mismatch")
    n = gauge.n
    s = np.arange(1 << n, dtype=np.uint64)
    t = np.zeros(1 << n, dtype=np.uint64)
    for i, col in enumerate(gauge.column_bits()):
        bit = np.bitwise_count(s & np.uint64(col)) & np.uint64(1)
        t |= bit << np.uint64(i)
    # A^T is a bijection on syndromes, so the pullback is a distribution.
    return SyndromeDistribution(n, p_tilde.probs[t])


def make_affine_support(spec: AffineSupportSpec) -> SyndromeDistribution:
    """Mass 2^-r on each point of the coset s0 + span(v_basis)."""
    points = [0]
    for v in spec.v_basis:
        points += [p ^ v.bits for p in points]
    probs = np.zeros(1 << spec.n)
    mass = 1.0 / len(points)
    for p in points:
        probs[p ^ spec.s0.bits] = mass
    return SyndromeDistribution(spec.n, probs)


def make_rho_ex() -> SyndromeDistribution:
    """The three-qubit worked example: mass 1/4 on syndromes 000,100,010,001."""
    probs = np.zeros(8)
    probs[[0, 1, 2, 4]] = 0.25
    return SyndromeDistribution(3, probs)


def sample_dirichlet_uniform(n: int, rng: np.random.Generator) -> SyndromeDistribution:
    """Uniform sample from the simplex over F_2^n (normalized exponentials)."""
    raw = rng.exponential(size=1 << n)
    return SyndromeDistribution(n, raw / raw.sum())


def make_sparse_error_state(
    n: int, fidelity_target: float, k_errors: int, rng: np.random.Generator
) -> SyndromeDistribution:
    """Fidelity exactly ``fidelity_target``; k random error syndromes share the rest.

    The error syndromes are distinct nonzero labels chosen uniformly and the
    residual mass is split by a symmetric Dirichlet(1,...,1) draw over them.
    """
    if not 0.0 < fidelity_target < 1.0:
        raise ValueError(f"fidelity_target must be in (0,1), got {fidelity_target!r}")
    if not 1 <= k_errors <= (1 << n) - 1:
        raise ValueError(f"k_errors must be in [1, 2^{n}-1], got {k_errors!r}")
    support = rng.choice((1 << n) - 1, size=k_errors, replace=False) + 1
    weights = rng.exponential(size=k_errors)
    weights /= weights.sum()
    probs = np.zeros(1 << n)
    probs[0] = fidelity_target
    probs[support] = (1.0 - fidelity_target) * weights
    return SyndromeDistribution(n, probs)


def sample_subspace_basis(n: int, r: int, rng: np.random.Generator) -> tuple[Label, ...]:
    """Basis of a random r-dimensional subspace of F_2^n.

    Draws r uniform n-bit rows and retries until they are full rank, i.e.
    uniform over full-rank r x n matrices.
    """
    if not 0 <= r <= n:
        raise ValueError(f"need 0 <= r <= n, got r={r}")
    if r == 0:
        return ()
    while True:
        rows = [int(b) for b in rng.integers(0, 1 << n, size=r)]
        if rank(rows) == r:
            return tuple(Label(n, b) for b in rows)


def make_gauge_blind_pair(
    gauge: Gauge,
) -> tuple[SyndromeDistribution, SyndromeDistribution]:
    """A pair with equal spectra on all columns of ``gauge`` but fidelities 1/2 and 0.

    In gauge coordinates the pair is (delta_0 + delta_{e1+e2})/2 versus
    (delta_{e1} + delta_{e2})/2: both have zero expectation on e_1 and e_2
    and expectation one on every other coordinate label e_i, so after pulling
    back through the gauge no single-gauge query can tell them apart.
    """
    n = gauge.n
    if n < 2:
        raise ValueError("needs n >= 2")
    p_t = np.zeros(1 << n)
    q_t = np.zeros(1 << n)
    p_t[[0, 3]] = 0.5
    q_t[[1, 2]] = 0.5
    p = pullback_through_gauge(SyndromeDistribution(n, p_t), gauge)
    q = pullback_through_gauge(SyndromeDistribution(n, q_t), gauge)
    return p, q


def make_indistinguishable_pair(
    n: int, v: Label, eta: float
) -> tuple[SyndromeDistribution, SyndromeDistribution]:
    """The biased-character pair p_+- = 2^-n (1 +- eta (-1)^(v.s)).

    The two distributions have identical Walsh coefficients on every label
    except ``v``, where they differ by 2 eta, and their fidelities differ by
    2^(1-n) eta.  Returns (p_plus, p_minus).
    """
    if v.n != n or v.bits == 0:
        raise ValueError("v must be a nonzero label of dimension n")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0,1], got {eta!r}")
    chi = character_signs(n, v.bits)
    scale = 1.0 / (1 << n)
    p_plus = SyndromeDistribution(n, scale * (1.0 + eta * chi))
    p_minus = SyndromeDistribution(n, scale * (1.0 - eta * chi))
    return p_plus, p_minus
