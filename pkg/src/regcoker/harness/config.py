"""Experiment configuration and observable parsing."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass

from ..abelian import Coset, GroupType, parse_group
from ..errors import InvalidInputError
from ..matgen import ModelSpec, validate_model

log = logging.getLogger(__name__)

SYMMETRIC_MODELS = ("matching_union", "config_model_multigraph", "uniform_simple_regular", "haar_symmetric_mod")


@dataclass(frozen=True)
class Observable:
    """One per-trial measurement.

    kind is one of ppart, moment, pair_moment, singular, histogram.
    """

    kind: str
    primes: tuple[int, ...] = ()
    group: GroupType | None = None
    coset: Coset | None = None
    cutoff: int | None = None

    @property
    def key(self) -> str:
        if self.kind == "ppart":
            return f"ppart({self.primes[0]})"
        if self.kind == "moment":
            return f"moment({self.group})"
        if self.kind == "pair_moment":
            return f"pair_moment({self.group};{self.coset})"
        if self.kind == "histogram":
            return f"histogram({','.join(map(str, self.primes))};{self.cutoff})"
        return "singular"

    @property
    def needed_primes(self) -> tuple[int, ...]:
        if self.kind in ("ppart", "histogram"):
            return self.primes
        if self.kind in ("moment", "pair_moment"):
            return self.group.primes
        return ()


_PPART = re.compile(r"^ppart\((\d+)\)$")
_MOMENT = re.compile(r"^moment\(([^)]*)\)$")
_PAIR = re.compile(r"^pair_moment\(([^;]+);\((.*?)\)\+<(.*)>\)$")
_HIST = re.compile(r"^histogram\(([\d,\s]+);(\d+)\)$")
_ELEM = re.compile(r"\(([^()]*)\)")


def _parse_elem(text: str) -> tuple[int, ...]:
    text = text.strip()
    return tuple(int(x) for x in text.split(",")) if text else ()


def parse_observable(text: str) -> Observable:
    """Parse observable literals.

    >>> parse_observable("pair_moment(Z2;(1)+<>)").key
    'pair_moment(Z2;(1)+<>)'
    """
    s = text.replace(" ", "")
    if s == "singular":
        return Observable("singular")
    if m := _PPART.match(s):
        return Observable("ppart", primes=(int(m.group(1)),))
    if m := _MOMENT.match(s):
        return Observable("moment", group=parse_group(m.group(1)))
    if m := _PAIR.match(s):
        v = parse_group(m.group(1))
        rep = _parse_elem(m.group(2))
        gens = tuple(_parse_elem(g) for g in _ELEM.findall(m.group(3)))
        if v.rank == 0:
            rep = ()
        return Observable("pair_moment", group=v, coset=Coset(v, gens, rep))
    if m := _HIST.match(s):
        primes = tuple(sorted({int(x) for x in m.group(1).split(",") if x}))
        return Observable("histogram", primes=primes, cutoff=int(m.group(2)))
    raise InvalidInputError(f"cannot parse observable {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    r: int
    sizes: tuple[int, ...]
    trials: int
    master_seed: int
    observables: tuple[str, ...]
    condition: str = "none"
    p: int | None = None
    e: int | None = None
    congruence: tuple[int, int] | None = None  # (modulus, residue) imposed on every size
    name: str = ""
    abs_tol: float = 0.0
    retry_cap: int = 10**6

    def __post_init__(self):
        if not self.sizes:
            raise InvalidInputError("sizes must be nonempty")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        for n in self.sizes:
            validate_model(self.model, n, self.r, self.p, self.e, self.condition)
            if self.congruence:
                mod, res = self.congruence
                if n % mod != res % mod:
                    raise InvalidInputError(f"size {n} violates n = {res} mod {mod}")
        parsed = [parse_observable(o) for o in self.observables]
        for ob in parsed:
            for p in ob.needed_primes:
                if self.r and self.r % p == 0 and ob.kind in ("ppart", "histogram"):
                    log.warning("%s at p=%d dividing r=%d: exploratory, no theoretical prediction", ob.key, p, self.r)

    @property
    def parsed_observables(self) -> tuple[Observable, ...]:
        return tuple(parse_observable(o) for o in self.observables)

    def model_spec(self, n: int) -> ModelSpec:
        return ModelSpec(self.model, n, self.r, self.p, self.e, self.condition, self.retry_cap)

    def to_json(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["observables"] = list(self.observables)
        d["congruence"] = list(self.congruence) if self.congruence else None
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_json(cls, obj: dict) -> ExperimentConfig:
        data = dict(obj)
        model = data.pop("model")
        if isinstance(model, dict):
            data.setdefault("r", model.get("r"))
            for k in ("condition", "p", "e"):
                if k in model:
                    data.setdefault(k, model[k])
            model = model["kind"]
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        if "r" not in data or data["r"] is None:
            data["r"] = 0 if model == "haar_symmetric_mod" else None
        if data["r"] is None:
            raise InvalidInputError("config needs r")
        data["sizes"] = tuple(int(n) for n in data["sizes"])
        data["observables"] = tuple(data.get("observables", ()))
        if data.get("congruence") is not None:
            data["congruence"] = tuple(int(x) for x in data["congruence"])
        return cls(model=model, **data)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}:{exc.lineno}: invalid JSON config: {exc.msg}") from exc
    return ExperimentConfig.from_json(obj)
