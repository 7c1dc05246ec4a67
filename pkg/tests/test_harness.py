import copy
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from propopt.errors import ConfigError, OutputError, ValidationError
from propopt.harness import (HEADER, Row, SweepResult, emit_csv, emit_svg_scatter, format_csv, load_config,
                             pareto_front, parse_config, read_csv, run_sweep)
from propopt.harness.sweep import LOSS_COLUMNS, Context, loss_value
from propopt.losses import LOSS_NAMES, LossReport, PropertyWeights, evaluate_all
from propopt.solvers import TransductiveProblem, solve

SVG = "{http://www.w3.org/2000/svg}"

BASE = {
    "schema_version": 1,
    "function": {"name": "power", "D": 2, "params": [3]},
    "points": {"mode": "uniform", "count": 6, "bounds": [-1, 1]},
    "similarity": {"kind": "gaussian", "scale": 1.0},
    "methods": [
        {"name": "optimized", "grid": {"lambda_robust": [0.1, 1.0]}},
        {"name": "smoothgrad", "grid": {"delta": [0.5], "samples": [200]}},
    ],
    "seed": 3,
}


def cfg(**changes):
    data = copy.deepcopy(BASE)
    data.update(changes)
    return parse_config(data)


def _row(x, y, method="m"):
    vals = dict.fromkeys(LOSS_NAMES, 0.0)
    vals.update(faithful_grad=x, robust_pair=y)
    return Row(method, "f", 1, 1, (1.0, 0.0, 0.0, 0.0), report=LossReport(**vals))


def _pairs(result):
    return [(loss_value(r, "faithful_grad"), loss_value(r, "robust_pair")) for r in result]


# configuration --------------------------------------------------------------


@pytest.mark.parametrize("change,match", [
    ({"schema_version": 2}, "schema_version"),
    ({"function": {"name": "nope", "D": 2}}, "function.name"),
    ({"function": {"name": "power", "D": 0}}, "function.D"),
    ({"points": {"mode": "grid", "count": 0}}, "points.count"),
    ({"points": {"mode": "file", "path": "missing.csv"}}, "not found"),
    ({"methods": []}, "non-empty"),
    ({"methods": [{"name": "optimized", "grid": {"lambda_robust": []}}]}, "non-empty list"),
    ({"methods": [{"name": "optimized", "grid": {"lambda_robust": [-1]}}]}, "nonnegative"),
    ({"methods": [{"name": "lime", "grid": {"samples": [2.5]}}]}, "integers"),
    ({"methods": [{"name": "gradcam"}]}, "unknown method"),
    ({"methods": [{"name": "smoothgrad", "grid": {"lambda_robust": [1]}}]}, "grid keys"),
    ({"methods": [{"name": "kernel_shap", "background": [0.0]}]}, "background"),
    ({"similarity": {"kind": "custom", "matrix": "missing.csv"}}, "not found"),
    ({"evaluation": [{"lambda_faithful": 0}]}, "evaluation"),
    ({"extra": 1}, "unknown top-level"),
    ({"seed": -1}, "seed"),
])
def test_config_validation(change, match):
    with pytest.raises(ConfigError, match=match):
        cfg(**change)


def test_config_validation_is_a_validation_error():
    assert issubclass(ConfigError, ValidationError)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


def test_relative_paths_resolve_against_config_dir(tmp_path):
    np.savetxt(tmp_path / "pts.csv", np.array([[0.0, 0.5], [1.0, -1.0], [0.2, 0.2]]), delimiter=",")
    data = copy.deepcopy(BASE)
    data["points"] = {"mode": "file", "path": "pts.csv"}
    (tmp_path / "c.json").write_text(json.dumps(data))
    c = load_config(tmp_path / "c.json")
    assert c.build_points(2).n == 3


def test_default_evaluation_is_optimized_grid():
    c = cfg()
    assert [w.lambdas() for w in c.evaluation] == [(1.0, 0.1, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0)]


# sweeps ---------------------------------------------------------------------


def test_cardinality():
    data = copy.deepcopy(BASE)
    data["methods"] = [{"name": "optimized", "grid": {"lambda_robust": [0.1, 1.0]}}]
    assert len(run_sweep(parse_config(data))) == 2
    # baselines are scored once per evaluation setting
    c = cfg()
    res = run_sweep(c)
    assert len(res) == 2 + 1 * len(c.evaluation)
    sg = [r for r in res if r.method == "smoothgrad"]
    assert [r.lambdas for r in sg] == [w.lambdas() for w in c.evaluation]
    assert all(r.status == "ok" for r in res)


def test_determinism():
    a, b = format_csv(run_sweep(cfg())), format_csv(run_sweep(cfg()))
    assert a == b
    assert format_csv(run_sweep(cfg(), workers=4)) == a
    assert format_csv(run_sweep(cfg(seed=4))) != a


def test_rows_match_reevaluation_oracle():
    c = cfg(methods=[{"name": "optimized", "grid": {"lambda_robust": [0.1, 2.0], "lambda_smooth": [0.0, 0.4],
                                                    "lambda_complex": [0.0, 0.3]}}])
    ctx = Context.build(c)
    for row in run_sweep(c):
        w = PropertyWeights(*row.lambdas)
        W = solve(TransductiveProblem.from_function(ctx.points, ctx.f, ctx.bundle, w))
        ref = evaluate_all(W, ctx.points, ctx.f, ctx.bundle, w)
        for name in LOSS_NAMES:
            got, want = getattr(row.report, name), getattr(ref, name)
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want)), name


def test_baseline_rows_share_losses_across_evaluation_settings():
    res = run_sweep(cfg())
    sg = [r for r in res if r.method == "smoothgrad"]
    assert sg[0].report.robust_pair == sg[1].report.robust_pair
    for r in sg:
        w = PropertyWeights(*r.lambdas)
        assert r.report.total == pytest.approx(r.report.faithful_grad * w.lambda_faithful
                                               + r.report.robust_pair * w.lambda_robust, rel=1e-12)


def test_permuting_the_grid_permutes_rows():
    a = run_sweep(cfg(methods=[{"name": "optimized", "grid": {"lambda_robust": [0.1, 1.0, 5.0]}}]))
    b = run_sweep(cfg(methods=[{"name": "optimized", "grid": {"lambda_robust": [5.0, 0.1, 1.0]}}]))
    key = lambda r: r.lambdas
    assert sorted(a.rows, key=key) == sorted(b.rows, key=key)


def test_failures_become_error_rows():
    c = cfg(methods=[{"name": "lime", "grid": {"delta": [0.5], "samples": [2, 50]}}],
            evaluation=[{"lambda_faithful": 1.0}])
    res = run_sweep(c)
    assert [r.status for r in res] == ["error:SamplingError", "ok"]
    assert res.rows[0].report is None and math.isnan(loss_value(res.rows[0], "total"))
    line = format_csv(res).splitlines()[1]
    assert line.endswith(",,error:SamplingError")


def test_timing_is_optional():
    assert all(r.wall_ms is None for r in run_sweep(cfg()))
    assert all(r.wall_ms >= 0 for r in run_sweep(cfg(record_timing=True)))


def test_loss_value_names():
    r = _row(1.0, 2.0)
    assert loss_value(r, "loss_robust_pair") == loss_value(r, "robust_pair") == 2.0
    with pytest.raises(ValidationError, match="unknown loss"):
        loss_value(r, "loss_accuracy")


# pareto ---------------------------------------------------------------------


def test_pareto_examples():
    rows = SweepResult((_row(1, 2), _row(2, 1), _row(2, 2)))
    assert _pairs(pareto_front(rows, "faithful_grad", "robust_pair")) == [(1, 2), (2, 1)]
    single = SweepResult((_row(3, 3),))
    assert pareto_front(single, "loss_faithful_grad", "loss_robust_pair").rows == single.rows
    dup = SweepResult((_row(1, 1, "first"), _row(1, 1, "second"), _row(0.5, 4)))
    front = pareto_front(dup, "faithful_grad", "robust_pair")
    assert [r.method for r in front] == ["m", "first"]
    with pytest.raises(ValidationError):
        pareto_front(rows, "faithful_grad", "bogus")


def test_pareto_idempotent_and_nondominated():
    rng = np.random.default_rng(0)
    rows = SweepResult(tuple(_row(*xy) for xy in rng.integers(0, 6, size=(40, 2)).astype(float)))
    front = pareto_front(rows, "faithful_grad", "robust_pair")
    assert pareto_front(front, "faithful_grad", "robust_pair").rows == front.rows
    fp = _pairs(front)
    assert fp == sorted(fp)
    for x, y in _pairs(rows):
        assert any(fx <= x and fy <= y for fx, fy in fp)


def test_pareto_drops_nonfinite():
    rows = SweepResult((_row(math.nan, 0.0), _row(1.0, 1.0)))
    assert _pairs(pareto_front(rows, "faithful_grad", "robust_pair")) == [(1.0, 1.0)]


# csv ------------------------------------------------------------------------


def test_csv_header_and_line_counts(tmp_path):
    assert ",".join(HEADER) == ("method,function,D,N,lambda_faithful,lambda_robust,lambda_smooth,"
                                "lambda_complex,delta,samples,seed,loss_faithful_grad,loss_faithful_fn,"
                                "loss_robust_pair,loss_robust_max,loss_smooth,loss_complex,total,wall_ms,"
                                "status")
    emit_csv(SweepResult(), tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(HEADER) + "\n"
    emit_csv(SweepResult((_row(1, 2), _row(2, 1), _row(2, 2))), tmp_path / "r.csv")
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 4


def test_csv_round_trip(tmp_path):
    res = run_sweep(cfg())
    emit_csv(res, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert len(back) == len(res)
    for a, b in zip(res, back):
        assert (a.method, a.function, a.D, a.N, a.delta, a.samples, a.seed, a.status) == \
               (b.method, b.function, b.D, b.N, b.delta, b.samples, b.seed, b.status)
        for name in LOSS_NAMES:
            x, y = getattr(a.report, name), getattr(b.report, name)
            assert float(format(x, ".12g")) == y
            assert abs(x - y) <= 5e-12 * abs(x)
    assert format_csv(back) == format_csv(res)


def test_csv_absent_fields_are_empty():
    text = format_csv(run_sweep(cfg()))
    opt = next(l for l in text.splitlines()[1:] if l.startswith("optimized"))
    fields = opt.split(",")
    assert fields[HEADER.index("delta")] == "" and fields[HEADER.index("samples")] == ""
    assert fields[HEADER.index("seed")] == "3"


def test_csv_errors(tmp_path):
    with pytest.raises(OutputError, match="cannot write"):
        emit_csv(SweepResult(), tmp_path / "no" / "dir.csv")
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError, match="header"):
        read_csv(tmp_path / "x.csv")


# svg ------------------------------------------------------------------------


def _svg(tmp_path, result, log=False):
    path = tmp_path / "p.svg"
    emit_svg_scatter(result, "loss_faithful_grad", "loss_robust_pair", path, log_axes=log)
    return ET.parse(path).getroot()


def test_svg_single_point(tmp_path):
    root = _svg(tmp_path, SweepResult((_row(1.0, 2.0),)))
    assert len(root.findall(f".//{SVG}circle")) == 1
    labels = [t.text for t in root.iter(f"{SVG}text") if t.get("class") in ("xlabel", "ylabel")]
    assert labels == ["loss_faithful_grad", "loss_robust_pair"]


def test_svg_legend_and_methods(tmp_path):
    root = _svg(tmp_path, SweepResult((_row(1, 2, "a"), _row(2, 1, "b"), _row(3, 3, "a"))))
    assert len([e for e in root.iter() if e.get("class") == "legend-entry"]) == 2
    fills = {c.get("fill") for c in root.iter(f"{SVG}circle")}
    assert len(fills) == 2


def test_svg_log_clamp(tmp_path):
    root = _svg(tmp_path, SweepResult((_row(0.0, 2.0), _row(1.0, 20.0), _row(100.0, 5.0))), log=True)
    circles = list(root.iter(f"{SVG}circle"))
    assert [c.get("data-clamped") for c in circles] == ["true", None, None]
    assert any(e.get("class") == "clamp-note" for e in root.iter())
    # the zero lands on the smallest positive value, the axis minimum
    cx = [float(c.get("cx")) for c in circles]
    assert cx[0] == cx[1] < cx[2]


def test_svg_requires_finite_rows(tmp_path):
    with pytest.raises(ValidationError, match="finite"):
        _svg(tmp_path, SweepResult((_row(math.nan, 1.0),)))


def test_loss_columns_cover_header():
    assert set(LOSS_COLUMNS.values()) <= set(HEADER)
