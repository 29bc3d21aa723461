"""Mergeable per-size aggregates of trial records."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from ..errors import InvalidInputError
from .config import ExperimentConfig, parse_observable

LABEL_KINDS = ("ppart", "histogram", "singular")
COUNT_KINDS = ("moment", "pair_moment")


@dataclass
class MomentAccumulator:
    """Exact running sums of an integer observable."""

    count: int = 0
    total: int = 0
    total_sq: int = 0
    flagged: int = 0  # trials whose cokernel was infinite

    def add(self, x: int, flagged: bool = False):
        self.count += 1
        self.total += x
        self.total_sq += x * x
        self.flagged += bool(flagged)

    def merge(self, other: MomentAccumulator) -> MomentAccumulator:
        return MomentAccumulator(
            self.count + other.count,
            self.total + other.total,
            self.total_sq + other.total_sq,
            self.flagged + other.flagged,
        )

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else math.nan

    @property
    def se(self) -> float:
        k = self.count
        if k < 2:
            return math.nan
        # exact integer numerator of the unbiased variance
        var = (k * self.total_sq - self.total * self.total) / (k * (k - 1))
        return math.sqrt(max(var, 0.0) / k)

    def to_json(self) -> dict:
        return {"count": self.count, "sum": self.total, "sum_sq": self.total_sq, "flagged": self.flagged}

    @classmethod
    def from_json(cls, obj: dict) -> MomentAccumulator:
        return cls(int(obj["count"]), int(obj["sum"]), int(obj["sum_sq"]), int(obj["flagged"]))


@dataclass
class SizeSummary:
    n: int
    trials: int = 0
    labels: dict[str, Counter] = field(default_factory=dict)
    moments: dict[str, MomentAccumulator] = field(default_factory=dict)

    def add(self, record, kinds: dict[str, str]):
        self.trials += 1
        for key, value in record.values.items():
            kind = kinds[key]
            if kind in LABEL_KINDS:
                label = str(value).lower() if kind == "singular" else str(value)
                self.labels.setdefault(key, Counter())[label] += 1
            else:
                self.moments.setdefault(key, MomentAccumulator()).add(int(value), record.free_rank > 0)

    def merge(self, other: SizeSummary) -> SizeSummary:
        labels = {}
        for key in set(self.labels) | set(other.labels):
            labels[key] = self.labels.get(key, Counter()) + other.labels.get(key, Counter())
        moments = {}
        for key in set(self.moments) | set(other.moments):
            moments[key] = self.moments.get(key, MomentAccumulator()).merge(other.moments.get(key, MomentAccumulator()))
        return SizeSummary(self.n, self.trials + other.trials, labels, moments)

    def proportion(self, key: str, label: str) -> tuple[int, int]:
        hist = self.labels.get(key)
        if hist is None:
            raise InvalidInputError(f"observable {key!r} has no histogram at n={self.n}")
        return hist.get(label, 0), sum(hist.values())

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "histograms": {k: dict(sorted(v.items())) for k, v in sorted(self.labels.items())},
            "moments": {k: v.to_json() for k, v in sorted(self.moments.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> SizeSummary:
        return cls(
            int(obj["n"]),
            int(obj["trials"]),
            {k: Counter({lab: int(c) for lab, c in v.items()}) for k, v in obj["histograms"].items()},
            {k: MomentAccumulator.from_json(v) for k, v in obj["moments"].items()},
        )


@dataclass
class ExperimentSummary:
    """Aggregates of an experiment, keyed by matrix size.

    Only exact counts are stored, so merging is associative and
    commutative and the serialised form is independent of trial order.
    """

    config: ExperimentConfig
    sizes: dict[int, SizeSummary] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return self.config.config_hash

    @classmethod
    def from_records(cls, config: ExperimentConfig, records) -> ExperimentSummary:
        kinds = {ob.key: ob.kind for ob in config.parsed_observables}
        out = cls(config)
        for rec in records:
            out.sizes.setdefault(rec.n, SizeSummary(rec.n)).add(rec, kinds)
        return out

    def merge(self, other: ExperimentSummary) -> ExperimentSummary:
        if self.config_hash != other.config_hash:
            raise InvalidInputError(
                f"refusing to merge summaries of different configs ({self.config_hash} vs {other.config_hash})"
            )
        sizes = dict(self.sizes)
        for n, s in other.sizes.items():
            sizes[n] = sizes[n].merge(s) if n in sizes else s
        return ExperimentSummary(self.config, sizes)

    @property
    def total_trials(self) -> int:
        return sum(s.trials for s in self.sizes.values())

    def to_json(self) -> dict:
        from .. import __version__
        from ..matgen import PRNG_NAME

        return {
            "config_hash": self.config_hash,
            "master_seed": self.config.master_seed,
            "version": __version__,
            "prng": PRNG_NAME,
            "config": self.config.to_json(),
            "sizes": [self.sizes[n].to_json() for n in sorted(self.sizes)],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> ExperimentSummary:
        config = ExperimentConfig.from_json(obj["config"])
        if config.config_hash != obj.get("config_hash"):
            raise InvalidInputError("summary config hash does not match its embedded config")
        sizes = {int(s["n"]): SizeSummary.from_json(s) for s in obj["sizes"]}
        return cls(config, sizes)


def observable_kind(key: str) -> str:
    return parse_observable(key).kind
