"""Theory predictions for an experiment and the statistical comparison."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from math import gcd

from .. import abelian, theory
from ..abelian import GroupType, RMPair
from ..errors import InvalidInputError
from .config import ExperimentConfig, Observable
from .summary import ExperimentSummary

SIGMA = 3.0
NO_PREDICTION = "no_theoretical_prediction"

# machine-readable tags naming the limit theorem each prediction comes from
TAG_CL = "directed_cohen_lenstra_limit"
TAG_SYM = "symmetric_pairing_limit"
TAG_DIRECTED_MOMENT = "directed_moment_one"
TAG_SYM_MOMENT = "symmetric_moment_exterior_square"
TAG_RM_MOMENT = "rm_pair_moment_sum"
TAG_PAIR_MOMENT = "pair_moment_torsion"
TAG_NONSINGULAR = "nonsingularity_limit"
THEOREM_TAGS = (TAG_CL, TAG_SYM, TAG_DIRECTED_MOMENT, TAG_SYM_MOMENT, TAG_RM_MOMENT, TAG_PAIR_MOMENT, TAG_NONSINGULAR)

NONSINGULAR_THRESHOLD = 0.01
SINGULAR_MODELS = (
    "perm_sum",
    "matching_union",
    "config_model_multigraph",
    "uniform_simple_regular",
    "directed_1regular_union",
    "directed_1regular_union_simple",
)


def wilson_interval(k: int, n: int, z: float = SIGMA) -> tuple[float, float]:
    """Wilson score interval for k successes in n trials."""
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    z2 = z * z
    denom = 1 + z2 / n
    centre = (ph + z2 / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def z_score(estimate: float, se: float, prediction: float) -> float:
    diff = estimate - prediction
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def verdict(estimate: float, se: float, prediction: float, sigma: float = SIGMA, interval=None, abs_tol: float = 0.0):
    """(z, passed): pass iff |z| <= sigma, the interval covers the
    prediction, or the estimate is within abs_tol."""
    z = z_score(estimate, se, prediction)
    ok = abs(z) <= sigma or abs(estimate - prediction) <= abs_tol
    if interval is not None:
        ok = ok or interval[0] <= prediction <= interval[1]
    return z, ok


@dataclass(frozen=True)
class Prediction:
    """Predicted value of one statistic of one observable at size n.

    ``statistic`` is ``P[label]`` for a histogram cell, ``mean`` for a
    moment, or ``trend`` for the singular frequency.
    """

    observable: str
    statistic: str
    n: int
    value: float | None
    tag: str
    error: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> Prediction:
        return cls(
            obj["observable"],
            obj["statistic"],
            int(obj["n"]),
            None if obj["value"] is None else float(obj["value"]),
            obj["tag"],
            float(obj.get("error", 0.0)),
        )


def _small_groups(primes, cutoff) -> list[GroupType]:
    return abelian.all_group_types(primes, cutoff)


def _distribution_style(config: ExperimentConfig, primes) -> str | None:
    """Which limit law (if any) covers the P-part for this model."""
    if any(config.r % p == 0 for p in primes) and config.model != "haar_symmetric_mod":
        return None
    if config.model == "perm_sum" and config.r >= 3:
        return "directed_CL"
    if config.model == "matching_union" and config.r >= 3 and 2 not in primes:
        return "symmetric"
    if config.model == "haar_symmetric_mod" and tuple(primes) == (config.p,) and config.p != 2:
        return "symmetric"
    return None


def _label_predictions(config, ob: Observable, n: int) -> list[Prediction]:
    primes = ob.primes
    style = _distribution_style(config, primes)
    if style is None:
        return [Prediction(ob.key, "P[*]", n, None, NO_PREDICTION)]
    if ob.kind == "ppart":
        # cells up to order p^2 keep the number of simultaneous checks small
        cutoff = primes[0] ** 2
    else:
        cutoff = ob.cutoff
    tag = TAG_CL if style == "directed_CL" else TAG_SYM
    out = []
    for g in _small_groups(primes, cutoff):
        if config.model == "haar_symmetric_mod" and g.exponent >= config.p**config.e:
            continue
        val = theory.probability(style, g, primes)
        out.append(Prediction(ob.key, f"P[{g}]", n, float(val.mid), tag, float(val.width / 2)))
    return out


def _moment_prediction(config, ob: Observable, n: int) -> Prediction:
    v = ob.group
    r = config.r
    if config.model == "perm_sum" and r >= 3:
        if gcd(r, v.order) == 1:
            return Prediction(ob.key, "mean", n, float(theory.predicted_moment_directed(v, r)), TAG_DIRECTED_MOMENT)
        m = theory.p_part_of(n, v.primes)
        return Prediction(ob.key, "mean", n, float(theory.predicted_moment_rm(v, r, m)), TAG_RM_MOMENT)
    symmetric_ok = v.order % 2 == 1 and (
        (config.model == "matching_union" and r >= 3 and gcd(r, v.order) == 1)
        or (config.model == "haar_symmetric_mod" and v.primes == (config.p,) and v.exponent < config.p**config.e)
    )
    if symmetric_ok:
        return Prediction(ob.key, "mean", n, float(abelian.exterior_square(v).order), TAG_SYM_MOMENT)
    return Prediction(ob.key, "mean", n, None, NO_PREDICTION)


def _pair_prediction(config, ob: Observable, n: int) -> Prediction:
    if config.model != "perm_sum" or config.r < 3:
        return Prediction(ob.key, "mean", n, None, NO_PREDICTION)
    try:
        pair = RMPair(ob.group, ob.coset, config.r, theory.p_part_of(n, ob.group.primes))
    except InvalidInputError:
        return Prediction(ob.key, "mean", n, 0.0, TAG_PAIR_MOMENT)
    return Prediction(ob.key, "mean", n, float(abelian.torsion_count(pair.subgroup_type, config.r)), TAG_PAIR_MOMENT)


def predictions_for(config: ExperimentConfig) -> list[Prediction]:
    """Every prediction the limit theorems make for this experiment."""
    out: list[Prediction] = []
    for ob in config.parsed_observables:
        for n in config.sizes:
            if ob.kind in ("ppart", "histogram"):
                out.extend(_label_predictions(config, ob, n))
            elif ob.kind == "moment":
                out.append(_moment_prediction(config, ob, n))
            elif ob.kind == "pair_moment":
                out.append(_pair_prediction(config, ob, n))
            elif ob.kind == "singular":
                covered = config.model in SINGULAR_MODELS and config.r >= 3
                out.append(
                    Prediction(ob.key, "trend", n, 0.0 if covered else None, TAG_NONSINGULAR if covered else NO_PREDICTION)
                )
    return out


@dataclass(frozen=True)
class ComparisonRow:
    observable: str
    statistic: str
    n: int
    trials: int
    estimate: float
    se: float
    lo: float
    hi: float
    prediction: float | None
    tag: str
    z: float | None
    verdict: str  # pass, fail, or info (non-final size / exploratory)


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def checked(self) -> tuple[ComparisonRow, ...]:
        return tuple(r for r in self.rows if r.verdict != "info")

    @property
    def passed(self) -> bool:
        return all(r.verdict == "pass" for r in self.checked)

    @property
    def tags(self) -> set[str]:
        return {r.tag for r in self.checked}

    def find(self, observable: str, statistic: str, n: int | None = None) -> ComparisonRow:
        hits = [r for r in self.rows if r.observable == observable and r.statistic == statistic]
        if n is not None:
            hits = [r for r in hits if r.n == n]
        if not hits:
            raise KeyError((observable, statistic, n))
        return max(hits, key=lambda r: r.n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = list(ComparisonRow.__dataclass_fields__)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for row in self.rows:
            w.writerow([_fmt(getattr(row, f)) for f in fields])
        return buf.getvalue()

    def format(self) -> str:
        lines = [
            f"{'observable':<28} {'statistic':<14} {'n':>5} {'estimate':>10} {'se':>9} "
            f"{'prediction':>10} {'z':>7}  verdict  tag"
        ]
        for r in self.rows:
            pred = "-" if r.prediction is None else f"{r.prediction:.5f}"
            z = "-" if r.z is None else f"{r.z:.2f}"
            lines.append(
                f"{r.observable:<28} {r.statistic:<14} {r.n:>5} {r.estimate:>10.5f} {r.se:>9.5f} "
                f"{pred:>10} {z:>7}  {r.verdict:<7}  {r.tag}"
            )
        lines.append("overall: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else x


def _final_sizes(preds: list[Prediction]) -> set[tuple[str, str, int]]:
    # the verdict row for each predicted value is its largest size, so
    # n-dependent predictions (through n_P) each get checked once
    best: dict[tuple, int] = {}
    for p in preds:
        key = (p.observable, p.statistic, p.value)
        best[key] = max(best.get(key, p.n), p.n)
    return {(k[0], k[1], n) for k, n in best.items()}


def compare(summary: ExperimentSummary, predictions: list[Prediction], sigma: float = SIGMA) -> ComparisonReport:
    """Compare empirical statistics with predictions, one row per size."""
    abs_tol = summary.config.abs_tol
    kinds = {ob.key: ob.kind for ob in summary.config.parsed_observables}
    final = _final_sizes([p for p in predictions if p.value is not None])
    rows: list[ComparisonRow] = []
    trend_groups: dict[str, list[Prediction]] = {}
    for pred in predictions:
        if pred.observable not in kinds:
            raise InvalidInputError(f"prediction for {pred.observable!r}, which the experiment did not collect")
        size = summary.sizes.get(pred.n)
        if size is None:
            continue
        if pred.statistic == "trend":
            trend_groups.setdefault(pred.observable, []).append(pred)
            continue
        if pred.statistic.startswith("P["):
            if pred.value is None:
                hist = size.labels.get(pred.observable, {})
                for label in sorted(hist):
                    k = hist[label]
                    lo, hi = wilson_interval(k, size.trials, sigma)
                    est = k / size.trials
                    se = math.sqrt(est * (1 - est) / size.trials)
                    rows.append(
                        ComparisonRow(pred.observable, f"P[{label}]", pred.n, size.trials, est, se, lo, hi, None, pred.tag, None, "info")
                    )
                continue
            label = pred.statistic[2:-1]
            k, total = size.proportion(pred.observable, label)
            est = k / total
            se = math.sqrt(est * (1 - est) / total)
            lo, hi = wilson_interval(k, total, sigma)
            z, ok = verdict(est, se, pred.value, sigma, (lo, hi), abs_tol)
            rows.append(_row(pred, total, est, se, lo, hi, z, ok, final))
        else:
            acc = size.moments.get(pred.observable)
            if acc is None:
                raise InvalidInputError(f"observable {pred.observable!r} was not collected at n={pred.n}")
            est, se = acc.mean, acc.se
            lo, hi = est - sigma * se, est + sigma * se
            if pred.value is None:
                rows.append(ComparisonRow(pred.observable, "mean", pred.n, acc.count, est, se, lo, hi, None, pred.tag, None, "info"))
                continue
            z, ok = verdict(est, se, pred.value, sigma, None, 0.0)
            rows.append(_row(pred, acc.count, est, se, lo, hi, z, ok, final))
    for key, preds in trend_groups.items():
        rows.extend(_trend_rows(summary, key, sorted(preds, key=lambda p: p.n), sigma))
    return ComparisonReport(tuple(rows))


def _row(pred, trials, est, se, lo, hi, z, ok, final) -> ComparisonRow:
    checked = (pred.observable, pred.statistic, pred.n) in final
    v = ("pass" if ok else "fail") if checked else "info"
    return ComparisonRow(pred.observable, pred.statistic, pred.n, trials, est, se, lo, hi, pred.value, pred.tag, z, v)


def _trend_rows(summary, key, preds, sigma) -> list[ComparisonRow]:
    """Singular frequency: Wilson upper bound at the largest size at most
    the threshold, and no significant increase between consecutive sizes."""
    rows = []
    prev = None
    monotone = True
    stats = []
    for pred in preds:
        size = summary.sizes[pred.n]
        k, total = size.proportion(key, "true")
        lo, hi = wilson_interval(k, total, sigma)
        est = k / total
        if prev is not None and lo > prev[1]:
            monotone = False
        prev = (lo, hi)
        stats.append((pred, total, est, lo, hi))
    for i, (pred, total, est, lo, hi) in enumerate(stats):
        se = math.sqrt(est * (1 - est) / total)
        last = i == len(stats) - 1
        if pred.value is None or not last:
            v = "info"
        else:
            v = "pass" if monotone and hi <= NONSINGULAR_THRESHOLD else "fail"
        rows.append(ComparisonRow(key, "trend", pred.n, total, est, se, lo, hi, pred.value, pred.tag, None, v))
    return rows
