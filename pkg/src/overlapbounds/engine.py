"""Deterministic, replication-parallel Monte-Carlo engine.

Randomness is organised in fixed-size chunks of replications.  Chunk ``c``
of a run draws from ``Philox(key=(seed, c))``, a counter-based generator
with 2**64 independent streams, so the value of every replication is a
pure function of (seed, chunk index, row).  Worker threads only decide
which chunks they process; outputs are written into preallocated slots,
which makes runs bitwise identical for any thread count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, FunctionalOverflowError, InputError, TruncationError
from .series import DecayModel, Explicit, WeightSequence, tail_sum

CHUNK_SIZE = 4096

FAMILIES = ("independent", "nested", "union")


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """The generator for one replication chunk; never depends on threading."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def run_chunked(
    reps: int,
    seed: int,
    kernel: Callable[[np.random.Generator, int, int], np.ndarray],
    threads: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> np.ndarray:
    """Run ``kernel(rng, start, m)`` over all replications, chunk by chunk.

    The kernel returns one row per replication (scalar or vector); rows are
    assembled in replication order regardless of scheduling.
    """
    if reps < 1:
        raise InputError("reps must be >= 1")
    n_chunks = (reps + chunk_size - 1) // chunk_size
    pieces: list[np.ndarray | None] = [None] * n_chunks

    def work(c: int) -> None:
        start = c * chunk_size
        m = min(chunk_size, reps - start)
        pieces[c] = np.asarray(kernel(chunk_rng(seed, c), start, m))

    if threads <= 1 or n_chunks == 1:
        for c in range(n_chunks):
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(n_chunks)))
    return np.concatenate([p for p in pieces if p is not None], axis=0)


@dataclass(frozen=True)
class EventFamilySpec:
    """A simulatable event family: dependence structure, decay model, truncation.

    * ``independent``: indicator n is {U_n < p_n} with its own uniform.
    * ``nested``: one uniform U per replication, count = #{n : p_n > U};
      requires the clamped probabilities to be nonincreasing.
    * ``union``: the nested majorant with P(E~_n) = min(1, C_n), coupled to
      the independent draws so that its count dominates path by path.
    """

    family: str
    model: DecayModel
    truncation: int
    tail_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.truncation < 1:
            raise TruncationError("truncation must be >= 1")
        tail = tail_sum(self.model, self.truncation + 1)
        if tail.value + tail.truncation_error > self.tail_tolerance + 1e-15:
            raise TruncationError(
                f"tail beyond N={self.truncation} is {tail.value:.3g}, "
                f"above the tolerance {self.tail_tolerance:.3g}"
            )
        if self.family == "nested":
            probs = self.clamped_probs()
            if np.any(np.diff(probs) > 1e-12):
                raise DomainError("nested families need nonincreasing clamped probabilities")

    @classmethod
    def from_model(
        cls,
        family: str,
        model: DecayModel,
        tail_tolerance: float = 1e-6,
        exp_rate: float = 0.0,
    ) -> "EventFamilySpec":
        n = choose_truncation(model, tail_tolerance, exp_rate=exp_rate)
        return cls(family, model, n, tail_tolerance)

    def clamped_probs(self) -> np.ndarray:
        return np.array([self.model.prob(n) for n in range(1, self.truncation + 1)])

    def describe(self) -> dict:
        return {
            "family": self.family,
            "model": self.model.describe(),
            "truncation": self.truncation,
            "tail_tolerance": self.tail_tolerance,
        }


@dataclass(frozen=True)
class OverlapSample:
    """Monte-Carlo replications of the overlap count."""

    counts: np.ndarray
    reps: int
    seed: int
    truncation: int
    tail_tolerance: float
    spec: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.counts) != self.reps:
            raise InputError("counts length must equal reps")


@dataclass(frozen=True)
class EmpiricalMoment:
    estimate: float
    stderr: float
    reps: int
    functional: str


def choose_truncation(model: DecayModel, tail_tolerance: float, exp_rate: float = 0.0) -> int:
    """Minimal N with exp(rate*N) * (C_{N+1} + certified error) <= tolerance.

    With rate 0 this is the plain tail criterion P(O != O_N) <= C_{N+1};
    the exponential weighting controls unbounded payoffs e**(r O).
    """
    if isinstance(model, Explicit):
        return max(1, len(model.probabilities))
    if tail_tolerance <= 0:
        raise DomainError("tail_tolerance must be positive for infinite families")

    def ok(n: int) -> bool:
        t = tail_sum(model, n + 1)
        return math.exp(exp_rate * n) * (t.value + t.truncation_error) <= tail_tolerance

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 1 << 26:
            raise DomainError("no feasible truncation below 2**26; decay too slow for this rate")
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def simulate_overlap(
    spec: EventFamilySpec, reps: int, seed: int, threads: int = 1
) -> OverlapSample:
    """Simulate the overlap count; deterministic in (spec, reps, seed)."""
    probs = spec.clamped_probs()
    n = spec.truncation

    if spec.family == "independent":

        def kernel(rng: np.random.Generator, start: int, m: int) -> np.ndarray:
            u = rng.random((m, n))
            return (u < probs).sum(axis=1).astype(np.int64)

    elif spec.family == "nested":

        def kernel(rng: np.random.Generator, start: int, m: int) -> np.ndarray:
            u = rng.random(m)
            return (probs[None, :] > u[:, None]).sum(axis=1).astype(np.int64)

    else:
        kernel = _union_kernel(spec, probs)

    counts = run_chunked(reps, seed, kernel, threads=threads)
    return OverlapSample(
        counts=counts,
        reps=reps,
        seed=seed,
        truncation=spec.truncation,
        tail_tolerance=spec.tail_tolerance,
        spec=spec.describe(),
    )


def _union_kernel(spec: EventFamilySpec, probs: np.ndarray) -> Callable:
    """Kernel realising the nested majorant E~_n with P(E~_n) = min(1, C_n).

    Coupling: the same uniforms an independent run would draw define the
    occurring events; each occurring index m gets the score C_{m+1} + U_m,
    which lands strictly inside [C_{m+1}, C_m).  The minimum score W is
    mapped through its own distribution function to a uniform V (an extra
    uniform covers the no-occurrence atom), and E~_n = {V < min(1, C_n)}.
    Any occurring event with index >= n forces V < min(1, C_n), so the
    union count dominates the independent count replication by replication.
    """
    n = spec.truncation
    tails = np.array([tail_sum(spec.model, m).value for m in range(1, n + 2)])
    thresholds = np.minimum(1.0, tails[:n])
    # suffix[j] = prod_{i >= j} (1 - p_i) over 0-based event slots, suffix[n] = 1
    suffix = np.ones(n + 1)
    suffix[:n] = np.cumprod((1.0 - probs)[::-1])[::-1]

    def kernel(rng: np.random.Generator, start: int, m: int) -> np.ndarray:
        u = rng.random((m, n))
        u_extra = rng.random(m)
        occ = u < probs
        any_occ = occ.any(axis=1)
        last = n - 1 - np.argmax(occ[:, ::-1], axis=1)
        rows = np.arange(m)
        u_at_last = u[rows, last]
        v = np.where(
            any_occ,
            1.0 - (1.0 - u_at_last) * suffix[np.minimum(last + 1, n)],
            1.0 - u_extra * suffix[0],
        )
        return (v[:, None] < thresholds[None, :]).sum(axis=1).astype(np.int64)

    return kernel


def empirical_moment(
    sample: OverlapSample,
    power: float | None = None,
    exp_rate: float | None = None,
    tail: int | None = None,
    partial_sum_of: WeightSequence | None = None,
) -> EmpiricalMoment:
    """Sample mean and standard error of a functional of the overlap count.

    Exactly one of ``power`` (O**p), ``exp_rate`` (e**(rO)), ``tail``
    (indicator O >= k) or ``partial_sum_of`` (S(O) for a weight sequence)
    must be given.
    """
    chosen = [x is not None for x in (power, exp_rate, tail, partial_sum_of)]
    if sum(chosen) != 1:
        raise InputError("specify exactly one functional")
    counts = sample.counts
    if len(counts) == 0:
        raise InputError("sample is empty")
    if power is not None:
        values = counts.astype(float) ** power
        name = f"E[O**{power:g}]"
    elif exp_rate is not None:
        top = exp_rate * counts.max()
        if top > 700.0:
            raise FunctionalOverflowError(
                f"exp({top:.1f}) overflows double precision; use a smaller rate r"
            )
        values = np.exp(exp_rate * counts.astype(float))
        name = f"E[exp({exp_rate:g} O)]"
    elif tail is not None:
        values = (counts >= tail).astype(float)
        name = f"P(O >= {tail})"
    else:
        table = partial_sum_of.partial_sums_upto(int(counts.max()))
        values = table[counts]
        name = f"E[S(O)] for {partial_sum_of.describe()}"
    est = float(values.mean())
    sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return EmpiricalMoment(est, sd / math.sqrt(len(values)), len(values), name)


def write_sample_jsonl(sample: OverlapSample, path: str) -> None:
    """One metadata header record, then {"rep": i, "count": c} per replication."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "record": "header",
            "spec": sample.spec,
            "seed": sample.seed,
            "reps": sample.reps,
            "truncation": sample.truncation,
            "tail_tolerance": sample.tail_tolerance,
        }
        fh.write(json.dumps(header) + "\n")
        for i, c in enumerate(sample.counts):
            fh.write(json.dumps({"rep": i, "count": int(c)}) + "\n")


def read_sample_jsonl(path: str) -> OverlapSample:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("record") != "header":
            raise InputError("missing header record")
        counts = []
        for line in fh:
            rec = json.loads(line)
            counts.append(rec["count"])
    return OverlapSample(
        counts=np.asarray(counts, dtype=np.int64),
        reps=header["reps"],
        seed=header["seed"],
        truncation=header["truncation"],
        tail_tolerance=header["tail_tolerance"],
        spec=header["spec"],
    )
