import json
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regcoker import cli
from regcoker.errors import CapacityError, InvalidInputError
from regcoker.harness import (
    ExperimentConfig,
    ExperimentSummary,
    compare,
    estimate_moment,
    parse_observable,
    predictions_for,
    run_experiment,
    verdict,
    wilson_interval,
)
from regcoker.harness import persist
from regcoker.harness.stats import THEOREM_TAGS, Prediction
from regcoker.harness.summary import SizeSummary


def small_config(**kw):
    base = dict(
        model="perm_sum",
        r=3,
        sizes=(6, 9),
        trials=30,
        master_seed=42,
        observables=("ppart(2)", "moment(Z2)", "singular", "histogram(2,5;10)"),
    )
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def small_run():
    cfg = small_config()
    summary, records = run_experiment(cfg)
    return cfg, summary, records


# ---------------------------------------------------------------- config


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ExperimentConfig(model="matching_union", r=3, sizes=(7,), trials=1, master_seed=0, observables=())
    with pytest.raises(InvalidInputError):
        small_config(sizes=(6, 9), congruence=(2, 0))
    with pytest.raises(InvalidInputError):
        small_config(observables=("ppart(x)",))
    with pytest.raises(InvalidInputError):
        ExperimentConfig.from_json({"model": "perm_sum", "r": 3, "sizes": [4], "trials": 1, "master_seed": 0, "bogus": 1})


def test_config_json_round_trip_and_hash():
    cfg = small_config(congruence=(3, 0), sizes=(6, 9))
    again = ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert again == cfg and again.config_hash == cfg.config_hash
    assert small_config(master_seed=43).config_hash != cfg.config_hash
    nested = ExperimentConfig.from_json(
        {"model": {"kind": "perm_sum", "r": 3}, "sizes": [6, 9], "trials": 30, "master_seed": 42, "observables": list(cfg.observables)}
    )
    assert nested.r == 3


def test_warns_when_p_divides_r(caplog):
    small_config(r=4, observables=("ppart(2)",))
    assert "no theoretical prediction" in caplog.text


@pytest.mark.parametrize(
    "text",
    ["ppart(5)", "moment(Z2^2)", "pair_moment(Z2;(1)+<>)", "pair_moment(Z4*Z2;(1,0)+<(2,0),(0,1)>)", "singular", "histogram(2,3;12)"],
)
def test_observable_keys_round_trip(text):
    ob = parse_observable(text)
    assert ob.key == text
    assert parse_observable(ob.key) == ob


# ---------------------------------------------------------------- driver


def test_n1_ppart_is_z3():
    cfg = ExperimentConfig(model="perm_sum", r=3, sizes=(1,), trials=20, master_seed=1, observables=("ppart(3)",))
    summary, records = run_experiment(cfg)
    assert all(rec.values["ppart(3)"] == "Z3" for rec in records)
    assert summary.sizes[1].labels["ppart(3)"] == Counter({"Z3": 20})


def test_trivial_cokernels_have_zero_moment():
    cfg = ExperimentConfig(model="perm_sum", r=1, sizes=(5,), trials=10, master_seed=1, observables=("moment(Z2)",))
    _, records = run_experiment(cfg)
    assert estimate_moment(records, "moment(Z2)")[0] == 0
    with pytest.raises(InvalidInputError):
        estimate_moment(records, "moment(Z3)")


def test_records_reproducible_and_summed(small_run):
    cfg, summary, records = small_run
    assert [r.trial_index for r in records] == list(range(60))
    for size in summary.sizes.values():
        for hist in size.labels.values():
            assert sum(hist.values()) == size.trials == cfg.trials
    from regcoker.harness import run_trial

    again = run_trial(cfg, records[17].n, 17)
    assert again == records[17]


def test_determinism_across_worker_counts(small_run):
    cfg, summary, records = small_run
    summary2, records2 = run_experiment(cfg, workers=2, chunk_size=7)
    assert summary2.dumps() == summary.dumps()
    assert records2 == records


def test_capacity_error_context_and_partial_records():
    cfg = ExperimentConfig(
        model="config_model_multigraph",
        r=2,
        sizes=(2,),
        trials=3,
        master_seed=0,
        observables=("singular",),
        condition="simple",
        retry_cap=50,
    )
    seen = []
    with pytest.raises(CapacityError, match="trial 0"):
        run_experiment(cfg, sink=seen.append)
    assert seen == [[]]


# ---------------------------------------------------------------- summaries


def test_merge_of_halves_equals_full(small_run):
    cfg, summary, records = small_run
    a = ExperimentSummary.from_records(cfg, records[::2])
    b = ExperimentSummary.from_records(cfg, records[1::2])
    assert a.merge(b).dumps() == summary.dumps()
    assert b.merge(a).dumps() == summary.dumps()


@given(st.lists(st.integers(0, 2), min_size=60, max_size=60))
@settings(max_examples=40, deadline=None)
def test_merge_associative_commutative(small_run, labels):
    cfg, summary, records = small_run
    parts = [ExperimentSummary.from_records(cfg, [r for r, lab in zip(records, labels) if lab == k]) for k in range(3)]
    x, y, z = parts
    left = x.merge(y).merge(z).dumps()
    right = x.merge(y.merge(z)).dumps()
    swapped = z.merge(x).merge(y).dumps()
    assert left == right == swapped == summary.dumps()


def test_merge_refuses_hash_mismatch(small_run):
    cfg, summary, records = small_run
    other = ExperimentSummary.from_records(small_config(master_seed=7), records)
    with pytest.raises(InvalidInputError, match="refusing"):
        summary.merge(other)


# ---------------------------------------------------------------- persistence


def test_records_round_trip(tmp_path):
    cfg = ExperimentConfig(model="perm_sum", r=3, sizes=(5,), trials=100, master_seed=3, observables=("ppart(2)", "moment(Z2)", "singular"))
    _, records = run_experiment(cfg)
    path = tmp_path / "records.jsonl"
    persist.write_records(path, cfg, records)
    cfg2, records2 = persist.read_records(path)
    assert cfg2 == cfg and records2 == records
    header = json.loads(path.read_text().splitlines()[0])
    assert {"config_hash", "master_seed", "version", "prng"} <= set(header)


def test_corrupt_records_report_line(tmp_path, small_run):
    cfg, _, records = small_run
    path = tmp_path / "records.jsonl"
    persist.write_records(path, cfg, records[:5])
    lines = path.read_text().splitlines()
    lines[3] = lines[3][:20]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(InvalidInputError, match=r"records.jsonl:4"):
        persist.read_records(path)


def test_summary_and_predictions_round_trip(tmp_path, small_run):
    cfg, summary, _ = small_run
    persist.write_summary(tmp_path / "s.json", summary)
    back = persist.read_summary(tmp_path / "s.json")
    assert back.dumps() == summary.dumps()
    preds = predictions_for(cfg)
    persist.write_predictions(tmp_path / "p.json", cfg, preds)
    assert persist.read_predictions(tmp_path / "p.json") == preds
    (tmp_path / "bad.json").write_text('{"sizes": [\n  1,\n  oops]}')
    with pytest.raises(InvalidInputError, match="bad.json:3"):
        persist.read_summary(tmp_path / "bad.json")


def test_comparison_csv(small_run):
    cfg, summary, _ = small_run
    report = compare(summary, predictions_for(cfg))
    text = report.to_csv()
    header = text.splitlines()[0].split(",")
    assert header[:3] == ["observable", "statistic", "n"]
    assert len(text.splitlines()) == len(report.rows) + 1


# ---------------------------------------------------------------- statistics


def test_verdict_examples():
    z, ok = verdict(0.290, 0.006, 0.28879)
    assert ok and abs(z) < 1
    z, ok = verdict(0.50, 0.01, 0.28879)
    assert not ok and abs(z - 21.1) < 0.1


def test_wilson_interval():
    lo, hi = wilson_interval(0, 2000)
    assert lo == 0 and abs(hi - 9 / 2009) < 1e-12
    lo, hi = wilson_interval(500, 1000, z=1.96)
    assert abs(lo - 0.469) < 1e-3 and abs(hi - 0.531) < 1e-3


def _singular_summary(counts):
    cfg = ExperimentConfig(model="perm_sum", r=3, sizes=tuple(n for n, _, _ in counts), trials=1, master_seed=0, observables=("singular",))
    s = ExperimentSummary(cfg)
    for n, k, total in counts:
        s.sizes[n] = SizeSummary(n, total, {"singular": Counter({"true": k, "false": total - k})}, {})
    return s, cfg


def test_singular_trend_verdicts():
    s, cfg = _singular_summary([(20, 40, 2000), (50, 6, 2000), (100, 1, 2000)])
    report = compare(s, predictions_for(cfg))
    assert report.find("singular", "trend").verdict == "pass" and report.passed
    s, cfg = _singular_summary([(20, 0, 2000), (50, 6, 2000), (100, 40, 2000)])
    assert not compare(s, predictions_for(cfg)).passed
    s, cfg = _singular_summary([(20, 100, 2000), (50, 60, 2000), (100, 30, 2000)])
    assert not compare(s, predictions_for(cfg)).passed  # decreasing but still above 1%


def test_predictions_cover_theorem_tags():
    cfgs = [
        small_config(observables=("ppart(2)", "moment(Z2)", "singular")),
        ExperimentConfig(model="matching_union", r=3, sizes=(10,), trials=1, master_seed=0, observables=("ppart(5)", "moment(Z5^2)")),
        ExperimentConfig(model="perm_sum", r=4, sizes=(10,), trials=1, master_seed=0, observables=("moment(Z2)", "pair_moment(Z2;(1)+<>)")),
    ]
    tags = {p.tag for cfg in cfgs for p in predictions_for(cfg)}
    assert set(THEOREM_TAGS) <= tags


def test_exploratory_rows_unchecked():
    cfg = ExperimentConfig(model="perm_sum", r=2, sizes=(8,), trials=40, master_seed=1, observables=("ppart(2)", "moment(Z4)"))
    summary, _ = run_experiment(cfg)
    report = compare(summary, predictions_for(cfg))
    assert report.checked == ()
    assert {r.tag for r in report.rows} == {"no_theoretical_prediction"}


def test_rm_predictions_follow_n_p():
    cfg = ExperimentConfig(model="perm_sum", r=3, sizes=(9, 10), trials=1, master_seed=0, observables=("moment(Z9)",))
    preds = {p.n: p.value for p in predictions_for(cfg)}
    from regcoker import theory
    from regcoker.abelian import parse_group

    assert preds[9] == theory.predicted_moment_rm(parse_group("Z9"), 3, 9)
    assert preds[10] == theory.predicted_moment_rm(parse_group("Z9"), 3, 1)
    assert preds[9] != preds[10]


def test_compare_rejects_unknown_prediction(small_run):
    _, summary, _ = small_run
    with pytest.raises(InvalidInputError):
        compare(summary, [Prediction("moment(Z7)", "mean", 6, 1.0, "directed_moment_one")])


# ---------------------------------------------------------------- CLI


def test_cli_run_and_compare(tmp_path, capsys):
    cfg = {"model": "perm_sum", "r": 3, "sizes": [8], "trials": 40, "master_seed": 5, "observables": ["moment(Z5)"]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = cli.main(["run", str(path), "--out", str(out)])
    assert code in (0, 2)
    for name in ("records.jsonl", "summary.json", "predictions.json", "comparison.csv"):
        assert (out / name).exists()
    assert cli.main(["compare", str(out / "summary.json"), str(out / "predictions.json")]) == code
    # a prediction far from the data is a statistical failure
    preds = json.loads((out / "predictions.json").read_text())
    for p in preds["predictions"]:
        p["value"] = 50.0
    (out / "far.json").write_text(json.dumps(preds))
    assert cli.main(["compare", str(out / "summary.json"), str(out / "far.json")]) == 2


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["sample", "--model", "matching_union", "--n", "5", "--r", "3"]) == 1
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{\n\n  nope")
    assert cli.main(["run", str(bad)]) == 1
    assert "bad.json:3" in capsys.readouterr().err


def test_cli_sample_coker_theory(tmp_path, capsys):
    assert cli.main(["sample", "--model", "perm_sum", "--n", "4", "--r", "3", "--seed", "9"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["n"] == 4 and obj["seed"]["master_seed"] == 9
    mpath = tmp_path / "m.json"
    mpath.write_text(json.dumps(obj))
    assert cli.main(["coker", str(mpath), "--json", "--pair-r", "3", "--target", "Z3;(1)+<>"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert {"free_rank", "torsion", "pair"} <= set(out)
    grid = tmp_path / "g.txt"
    grid.write_text("2 0\n0 3\n")
    assert cli.main(["coker", str(grid), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["torsion"] == "Z2*Z3"
    assert cli.main(["theory", "prob", "--style", "directed_CL", "--primes", "2"]) == 0
    assert math.isclose(json.loads(capsys.readouterr().out)["value"], 0.288788, abs_tol=1e-6)
    assert cli.main(["theory", "moment", "--style", "rm", "--group", "Z4", "--r", "2", "--m", "2"]) == 0
    assert capsys.readouterr().out.strip() == "4"
    assert cli.main(["theory", "table", "--primes", "3", "--cutoff", "9", "--style", "symmetric"]) == 0
    assert "Z3^2" in capsys.readouterr().out
