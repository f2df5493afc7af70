import math

import pytest

from hardykernel.verify import (
    Family,
    LemmaConfig,
    SweepResult,
    SweepSpec,
    log_slope,
    run_lemma_suite,
    run_theorem_correlation,
    svg_scatter,
)
from hardykernel.weights import WeightParseError


def small_spec(**kw):
    base = dict(families=[Family(["const:1"], [1.0, 3.0]), Family(["radial:t=-1.5"], [1.0])],
                depths=[3, 4, 5], j_max=6, doubling_budget=200)
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_spec_toml_round_trip():
    for spec in (SweepSpec(), small_spec(seed=9, tol=1e-9)):
        again = SweepSpec.from_toml(spec.to_toml())
        assert again == spec
        assert again.to_toml() == spec.to_toml()


def test_sweep_spec_accepts_family_tables():
    text = '''
depths = [4, 5, 6]
[[family]]
weights = ["const:1"]
alphas = [2.0]
'''
    spec = SweepSpec.from_toml(text)
    assert list(spec.configurations()) == [("const:1", 2.0, 2.0)]


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        small_spec(depths=[4, 5])
    with pytest.raises(ValueError):
        SweepSpec.from_dict({"depth": [1, 2, 3]})
    with pytest.raises(WeightParseError):
        small_spec(families=[Family(["radial:q=1"], [1.0])])


def test_log_slope():
    assert log_slope([1, 2, 3, 4], [3.0] * 4) == pytest.approx(0.0, abs=1e-12)
    assert log_slope([1, 2, 3], [2.0, 4.0, 8.0]) == pytest.approx(math.log(2))


def test_small_sweep_classification_and_determinism():
    spec = small_spec()
    a = run_theorem_correlation(spec)
    b = run_theorem_correlation(spec)
    assert a.to_csv() == b.to_csv()
    rows = {(r["weight"], r["alpha"]): r for r in a.rows}
    assert rows[("const:1", 1.0)]["char_finite"] and rows[("const:1", 1.0)]["norm_stable"]
    assert not rows[("const:1", 3.0)]["char_finite"] and not rows[("const:1", 3.0)]["norm_stable"]
    assert rows[("radial:t=-1.5", 1.0)]["agreement"] == "n/a"
    assert a.passed
    header = a.to_csv().splitlines()[0].split(",")
    assert header[:4] == ["schema_version", "seed", "weight", "p"]


def test_sweep_independent_of_worker_count():
    spec = small_spec()
    assert run_theorem_correlation(spec, workers=2).to_csv() == run_theorem_correlation(spec).to_csv()


def test_sweep_result_json_handles_infinity():
    res = SweepResult("x", 0, [{"v": math.inf, "w": [1.0, math.nan]}])
    text = res.to_json()
    assert '"inf"' in text and '"nan"' in text


def test_lemma_config_round_trip():
    cfg = LemmaConfig(weights=["const:1", "radial:t=0.5"], seed=4)
    assert LemmaConfig.from_toml(cfg.to_toml()) == cfg


def test_lemma_suite_statuses():
    cfg = LemmaConfig(weights=["const:1", "radial:t=0.5", "radial:t=-1.5"], geometry_samples=2000,
                      domination_samples=20_000, maximal_depths=[5, 6], maximal_trials=2,
                      embedding_jmax=[5, 6, 7], reverse_jmax=7, doubling_budget=200)
    res = run_lemma_suite(cfg)
    rows = {r["weight"]: r for r in res.rows}
    assert rows["const:1"]["passed"] is True
    assert rows["radial:t=0.5"]["passed"] is True
    bad = rows["radial:t=-1.5"]
    assert bad["status"] == "InadmissibleWeight"
    assert bad["maximal_pass"] == "skipped"
    for r in rows.values():
        assert r["necessity_pass"] and r["domination_pass"]


def test_lemma_suite_records_errors():
    res = run_lemma_suite(LemmaConfig(weights=["radial:q=1"], geometry_samples=100, domination_samples=100))
    assert res.rows[0]["status"].startswith("error")
    assert not res.passed


def test_svg_scatter(tmp_path):
    res = run_theorem_correlation(small_spec())
    out = tmp_path / "scatter.svg"
    svg_scatter(res, out)
    text = out.read_text()
    plotted = [r for r in res.rows if r["norm_estimates"] and math.isfinite(r["char_value"])]
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<circle") == len(plotted) == 2
    svg_scatter(SweepResult("x", 0), tmp_path / "empty.svg")
    assert (tmp_path / "empty.svg").read_text().startswith("<svg")
