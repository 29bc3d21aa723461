"""Per-trial measurement and the experiment driver."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from ..abelian import Coset, GroupType
from ..coker import (
    cokernel_p_part,
    count_pair_surjections,
    local_pair_structure,
    surjections_from_parts,
)
from ..errors import CapacityError, InvalidInputError
from ..matgen import SeedPolicy, sample
from ..padic import rank_over_q
from .config import ExperimentConfig, Observable
from .summary import ExperimentSummary, MomentAccumulator

log = logging.getLogger(__name__)

#: histogram bucket for infinite cokernels and groups above the cutoff
OTHER = "other"


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    n: int
    values: dict
    free_rank: int
    wall_time: float = field(default=0.0, compare=False)

    def to_json(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "seed": self.seed,
            "n": self.n,
            "values": self.values,
            "free_rank": self.free_rank,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_json(cls, obj: dict) -> TrialRecord:
        return cls(
            trial_index=int(obj["trial_index"]),
            seed=int(obj["seed"]),
            n=int(obj["n"]),
            values=dict(obj["values"]),
            free_rank=int(obj["free_rank"]),
            wall_time=float(obj.get("wall_time", 0.0)),
        )


def _joint_label(reports, primes, cutoff: int) -> str:
    g = GroupType()
    for p in primes:
        if reports[p].free_rank:
            return OTHER
        g = g.direct_sum(reports[p].torsion)
    return str(g) if g.order <= cutoff else OTHER


@dataclass(frozen=True)
class PairTarget:
    """Target (V, gamma + H) of a pair-surjection count; the (r, m)
    conditions are not imposed here since m varies with n."""

    group: GroupType
    coset: Coset


def measure(a, observables: tuple[Observable, ...], r: int) -> tuple[dict, int]:
    """Evaluate every observable on one matrix; returns (values, free_rank)."""
    n = a.n
    free_rank = None
    if any(ob.kind == "singular" for ob in observables):
        free_rank = n - rank_over_q(a)

    need = {}
    for ob in observables:
        for p in ob.needed_primes:
            depth = ob.group.sylow(p).partitions[p][0] if ob.group is not None else 0
            need[p] = max(need.get(p, 0), depth)
    pair_primes = sorted({p for ob in observables if ob.kind == "pair_moment" for p in ob.needed_primes})
    reports = {}
    pair_ps = None
    if pair_primes:
        e_hint = max(4, max(need[p] for p in pair_primes) + 1)
        pair_ps = local_pair_structure(a, r, pair_primes, free_rank=free_rank, e_hint=e_hint)
        free_rank = pair_ps.report.free_rank
        for rep in pair_ps.report.sylow:
            reports[rep.p] = rep
    for p in sorted(need):
        if p not in reports:
            reports[p] = cokernel_p_part(a, p, free_rank=free_rank)
            free_rank = reports[p].free_rank
    if free_rank is None:
        free_rank = n - rank_over_q(a)

    values = {}
    for ob in observables:
        if ob.kind == "singular":
            values[ob.key] = free_rank > 0
        elif ob.kind == "ppart":
            values[ob.key] = reports[ob.primes[0]].label()
        elif ob.kind == "histogram":
            values[ob.key] = _joint_label(reports, ob.primes, ob.cutoff)
        elif ob.kind == "moment":
            values[ob.key] = surjections_from_parts(reports, ob.group)
        elif ob.kind == "pair_moment":
            values[ob.key] = count_pair_surjections(pair_ps, PairTarget(ob.group, ob.coset))
    return values, free_rank


def run_trial(config: ExperimentConfig, n: int, trial_index: int) -> TrialRecord:
    t0 = time.perf_counter()
    policy = SeedPolicy(config.master_seed, trial_index)
    try:
        a = sample(config.model_spec(n), policy.generator())
        values, free_rank = measure(a, config.parsed_observables, config.r)
    except (CapacityError, InvalidInputError) as exc:
        raise type(exc)(f"trial {trial_index} (n={n}, seed={policy.stream_seed}): {exc}") from exc
    return TrialRecord(trial_index, policy.stream_seed, n, values, free_rank, time.perf_counter() - t0)


def trial_plan(config: ExperimentConfig) -> list[tuple[int, int]]:
    """(n, global trial index) for every trial, sizes in schedule order."""
    return [(n, s * config.trials + i) for s, n in enumerate(config.sizes) for i in range(config.trials)]


def _run_chunk(args):
    config, chunk = args
    return [run_trial(config, n, idx) for n, idx in chunk]


def run_experiment(config: ExperimentConfig, workers: int = 1, chunk_size: int = 64, sink=None):
    """Run every trial of ``config``; returns ``(summary, records)``.

    Records come back sorted by trial index whatever the worker count, and
    the summary depends only on the records, so results are reproducible
    under parallelism.  ``sink`` (if given) is called with the records
    completed so far when a trial fails, before the error propagates.
    """
    plan = trial_plan(config)
    chunks = [plan[i : i + chunk_size] for i in range(0, len(plan), chunk_size)]
    records: list[TrialRecord] = []
    try:
        if workers <= 1:
            for chunk in chunks:
                records.extend(_run_chunk((config, chunk)))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for out in pool.map(_run_chunk, [(config, c) for c in chunks]):
                    records.extend(out)
    except Exception:
        log.error("experiment aborted after %d completed trials", len(records))
        if sink is not None:
            sink(sorted(records, key=lambda rec: rec.trial_index))
        raise
    records.sort(key=lambda rec: rec.trial_index)
    summary = ExperimentSummary.from_records(config, records)
    return summary, records


def estimate_moment(records, key: str):
    """Sample mean and standard error of an integer observable."""
    vals = []
    flagged = 0
    for rec in records:
        if key not in rec.values:
            raise InvalidInputError(f"observable {key!r} was not collected")
        vals.append(int(rec.values[key]))
        flagged += rec.free_rank > 0
    acc = MomentAccumulator(len(vals), sum(vals), sum(v * v for v in vals), flagged)
    return acc.mean, acc.se
