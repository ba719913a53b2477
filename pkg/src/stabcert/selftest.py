"""Self-contained oracle suites for small n.

Each suite checks a library component against an independent brute-force
computation at n <= 4, where exhaustive enumeration is cheap. The CLI
`selftest` subcommand runs all suites and fails loudly on any violation;
the same entry points back the unit tests.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from stabcert.certificates import kkl_lower, kkl_upper
from stabcert.gf2 import Label, sample_uniform_gauge
from stabcert.polytope import (
    ConstraintSet,
    _lp_rows,
    _standard_form,
    build_exact_constraints,
    solve_endpoints,
)
from stabcert.runner import InstanceSpec, RunConfig, run_adaptive
from stabcert.policy import PolicyChoice
from stabcert.shots import ShotModel
from stabcert.syndrome import (
    SyndromeDistribution,
    make_indistinguishable_pair,
    sample_dirichlet_uniform,
)


def brute_force_endpoints(cset: ConstraintSet) -> tuple[float, float] | None:
    """Endpoints of p(0) by enumerating basic solutions of the standard form.

    Every vertex of the feasible polytope extends to a basic solution of the
    slack-augmented equality system behind the LP, so scanning all of them
    bounds p(0) exactly. Returns None when no feasible basic solution exists.
    """
    a_eq, b_eq, a_band, bounds = _lp_rows(cset)
    a, b, _ = _standard_form(a_eq, b_eq, a_band, bounds)
    m, nv = a.shape
    # Keep one maximal independent row set; verify candidates against the
    # full system afterwards so dropped rows still constrain the answer.
    idx: list[int] = []
    for i in range(m):
        trial = idx + [i]
        if np.linalg.matrix_rank(a[trial], tol=1e-10) > len(idx):
            idx.append(i)
    a_red, b_red = a[idx], b[idx]
    r = len(idx)
    lo, hi = np.inf, -np.inf
    for cols in combinations(range(nv), r):
        sub = a_red[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x_b = np.linalg.solve(sub, b_red)
        if x_b.min() < -1e-9:
            continue
        x = np.zeros(nv)
        x[list(cols)] = x_b
        if np.abs(a @ x - b).max() > 1e-7:
            continue
        val = float(x[0])
        lo = min(lo, val)
        hi = max(hi, val)
    if not np.isfinite(lo):
        return None
    return lo, hi


def _random_constraints(
    n: int, rng: np.random.Generator, allow_bands: bool = True
) -> tuple[SyndromeDistribution, ConstraintSet]:
    p = sample_dirichlet_uniform(n, rng)
    q_max = 3 if not allow_bands else min(2 * n, (1 << n) - 1)
    q = int(rng.integers(1, q_max + 1))
    picks = rng.choice((1 << n) - 1, size=q, replace=False) + 1
    labels = [Label(n, int(bits)) for bits in picks]
    cset = build_exact_constraints(p, labels)
    if allow_bands and rng.random() < 0.5:
        # Relax a few entries into bands around the true transform value.
        relaxed = {}
        for bits, (lo_v, hi_v) in cset.entries.items():
            if rng.random() < 0.5:
                eta = float(rng.uniform(0.0, 0.3))
                relaxed[bits] = (max(-1.0, lo_v - eta), min(1.0, hi_v + eta))
            else:
                relaxed[bits] = (lo_v, hi_v)
        cset = ConstraintSet(n=n, entries=relaxed)
    return p, cset


def suite_endpoints_vs_enumeration(seed: int, cases: int) -> str:
    """LP endpoints against the basic-solution enumeration oracle."""
    rng = np.random.default_rng(seed)
    done = 0
    while done < cases:
        n = int(rng.integers(2, 5))
        # Slack columns make the n=4 enumeration too wide; keep it exact-only.
        p, cset = _random_constraints(n, rng, allow_bands=n < 4)
        oracle = brute_force_endpoints(cset)
        result = solve_endpoints(cset)
        if oracle is None:
            if result.status != "infeasible":
                raise AssertionError(
                    f"oracle infeasible but solver returned {result.status}"
                )
            continue
        if result.status != "solved":
            raise AssertionError("solver infeasible on a feasible instance")
        if abs(result.lower - oracle[0]) > 1e-7 or abs(result.upper - oracle[1]) > 1e-7:
            raise AssertionError(
                f"endpoints ({result.lower}, {result.upper}) vs "
                f"oracle {oracle} on n={n}"
            )
        done += 1
    return f"{cases} constraint sets at n <= 4"


def suite_closed_form(seed: int, cases: int) -> str:
    """One-gauge LP endpoints against the closed-form certificate."""
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        n = int(rng.integers(2, 5))
        p = sample_dirichlet_uniform(n, rng)
        gauge = sample_uniform_gauge(n, rng)
        labels = [Label(n, bits) for bits in gauge.column_bits()]
        spectrum = p.walsh()
        mu = [spectrum.value(lab) for lab in labels]
        result = solve_endpoints(build_exact_constraints(p, labels))
        if abs(result.lower - kkl_lower(mu)) > 1e-7:
            raise AssertionError(f"lower {result.lower} vs {kkl_lower(mu)}")
        if abs(result.upper - kkl_upper(mu)) > 1e-7:
            raise AssertionError(f"upper {result.upper} vs {kkl_upper(mu)}")
    return f"{cases} random (state, gauge) pairs at n <= 4"


def suite_completeness(seed: int, cases: int) -> str:
    """Full label coverage pins the interval to the true fidelity."""
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        n = int(rng.integers(2, 5))
        p = sample_dirichlet_uniform(n, rng)
        labels = [Label(n, bits) for bits in range(1, 1 << n)]
        result = solve_endpoints(build_exact_constraints(p, labels))
        truth = p.fidelity()
        if abs(result.lower - truth) > 1e-7 or abs(result.upper - truth) > 1e-7:
            raise AssertionError(
                f"full coverage gave ({result.lower}, {result.upper}), "
                f"truth {truth}"
            )
    return f"{cases} full-coverage solves at n <= 4"


def suite_affine_structure(seed: int, cases: int) -> str:
    """Witness-elimination terminal values on affine-support instances."""
    rng = np.random.default_rng(seed)
    for k in range(cases):
        r = int(rng.integers(1, 3))
        inside = bool(rng.integers(0, 2))
        cfg = RunConfig(
            n=4,
            instance=InstanceSpec(
                kind="affine", r=r, s0="zero" if inside else "outside_support"
            ),
            policy=PolicyChoice("witness"),
            epsilon=0.0,
            t_max=16,
            shots=ShotModel(),
            seed=int(seed * 1000 + k),
        )
        trace = run_adaptive(cfg)
        want = 2.0**-r if inside else 0.0
        if abs(trace.final_lower - want) > 1e-9 or abs(trace.final_upper - want) > 1e-9:
            raise AssertionError(
                f"affine r={r} inside={inside}: terminal "
                f"({trace.final_lower}, {trace.final_upper}), want {want}"
            )
    return f"{cases} affine runs at n=4"


def suite_indistinguishable_pair(seed: int, cases: int) -> str:
    """Missing-label pairs produce identical constraints and the stated gap."""
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        n = int(rng.integers(2, 5))
        v = Label(n, int(rng.integers(1, 1 << n)))
        eta = float(rng.uniform(0.1, 1.0))
        p_plus, p_minus = make_indistinguishable_pair(n, v, eta)
        gap = abs(p_plus.fidelity() - p_minus.fidelity())
        if abs(gap - 2.0 ** (1 - n) * eta) > 1e-12:
            raise AssertionError(f"gap {gap} vs {2.0 ** (1 - n) * eta}")
        labels = [Label(n, bits) for bits in range(1, 1 << n) if bits != v.bits]
        cs_plus = build_exact_constraints(p_plus, labels)
        cs_minus = build_exact_constraints(p_minus, labels)
        for bits, (lo_v, hi_v) in cs_plus.entries.items():
            lo_m, hi_m = cs_minus.entries[bits]
            if abs(lo_v - lo_m) > 1e-12 or abs(hi_v - hi_m) > 1e-12:
                raise AssertionError(f"constraint mismatch at label {bits}")
    return f"{cases} masked-label pairs at n <= 4"


SUITES = (
    ("endpoints-vs-enumeration", suite_endpoints_vs_enumeration, 40),
    ("closed-form-agreement", suite_closed_form, 60),
    ("full-coverage-completeness", suite_completeness, 40),
    ("affine-structure", suite_affine_structure, 10),
    ("indistinguishable-pair", suite_indistinguishable_pair, 40),
)


def run_selftest(seed: int = 0, scale: float = 1.0) -> list[tuple[str, bool, str]]:
    """Run every suite; returns (name, passed, detail) per suite."""
    results = []
    for name, fn, cases in SUITES:
        count = max(1, int(cases * scale))
        try:
            detail = fn(seed, count)
            results.append((name, True, detail))
        except AssertionError as exc:
            results.append((name, False, str(exc)))
    return results
