import hashlib

import pytest

from compevo.bench import ExperimentSpec, run_experiment
from compevo.plots import band, pareto_points, read_traces, render_plots


def test_band_spans_min_max():
    series = [[3, 2, 1], [5, 1, 1], [4, 4, 0]]
    b = band(series)
    assert b.low.tolist() == [3, 1, 0] and b.high.tolist() == [5, 4, 1]
    assert b.median.tolist() == [4, 2, 1]
    assert b.generations.tolist() == [1, 2, 3]


def test_single_trace_degenerate():
    b = band([[0.5, 0.6]])
    assert b.low.tolist() == b.high.tolist() == b.median.tolist() == [0.5, 0.6]


def test_band_needs_data():
    with pytest.raises(ValueError):
        band([])


def test_render(tmp_path):
    spec = ExperimentSpec(experiment="exp2", data="synth:friedman_like:60:0.1", repetitions=2,
                          generations=3, out=str(tmp_path))
    run_experiment(spec)
    paths = render_plots(tmp_path)
    assert [p.name for p in paths] == ["quality.svg", "hypervolume.svg", "pareto.svg"]
    first = [hashlib.sha256(p.read_bytes()).hexdigest() for p in paths]
    text = paths[2].read_text()
    assert text.lstrip().startswith("<?xml") and "<dc:date>" not in text
    assert "<image" not in text  # no embedded or external raster assets
    assert [hashlib.sha256(p.read_bytes()).hexdigest() for p in render_plots(tmp_path)] == first
    traces = read_traces(tmp_path)
    assert set(traces) == {"nsga2_selection", "spea2_selection"} and set(traces["nsga2_selection"]) == {0, 1}


def test_scatter_count_equals_archive(tmp_path):
    spec = ExperimentSpec(experiment="exp3", data="synth:noisy_xor:60:0.1", repetitions=1, generations=2,
                          variants=["steady_state"], mu=6, out=str(tmp_path))
    report = run_experiment(spec)
    assert len(pareto_points(tmp_path, "steady_state", 0)) == report.results[0].n_front
