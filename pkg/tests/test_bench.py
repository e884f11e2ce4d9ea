"""Benchmark generators and the timing harness."""

import pytest

from flowcheck.bench import (
    BenchConfig,
    DIMENSIONS,
    generate_model,
    run_bench,
    run_case_once,
)
from flowcheck.core import ModelError, validate_model
from flowcheck.pipeline import load_model_data


class TestGenerateModel:
    @pytest.mark.parametrize("dimension", DIMENSIONS)
    @pytest.mark.parametrize("n", [1, 3, 10])
    def test_models_validate_and_hit_expected_counts(self, dimension, n):
        case = generate_model(dimension, n)
        loaded = load_model_data(case.text, case.format)
        assert validate_model(loaded.dictionary, loaded.diagram).ok
        _ms, violations = run_case_once(case)
        assert violations == case.expected_violations

    def test_smallest_chain_flags_both_vertices(self):
        case = generate_model("labelPropagations", 1)
        loaded = load_model_data(case.text, case.format)
        assert len(loaded.diagram.nodes) == 2
        assert case.expected_violations == 2

    def test_chain_reports_n_plus_one(self):
        for n in (1, 2, 5, 17):
            case = generate_model("labelPropagations", n)
            _ms, violations = run_case_once(case)
            assert violations == n + 1

    def test_node_labels_model_scales_only_labels(self):
        small = load_model_data(*_text_fmt(generate_model("nodeLabels", 1)))
        large = load_model_data(*_text_fmt(generate_model("nodeLabels", 50)))
        assert len(small.diagram.nodes) == len(large.diagram.nodes) == 2
        sink_small = small.diagram.node("sink")
        sink_large = large.diagram.node("sink")
        assert len(sink_small.labels) == 1
        assert len(sink_large.labels) == 50

    def test_unknown_dimension(self):
        with pytest.raises(ModelError):
            generate_model("bogus", 1)

    def test_size_must_be_positive(self):
        with pytest.raises(ModelError):
            generate_model("nodeLabels", 0)


def _text_fmt(case):
    return case.text, case.format


class TestRunBench:
    def test_rows_and_csv(self, tmp_path):
        out = tmp_path / "bench.csv"
        config = BenchConfig(dimension="labelPropagations", sizes=(1, 10, 100),
                             repetitions=3, output=out)
        rows = run_bench(config)
        assert len(rows) == 3
        for row in rows:
            assert row.ok
            assert row.min_ms <= row.median_ms <= row.max_ms
            assert row.median_ms > 0
        lines = out.read_text().splitlines()
        assert lines[0] == "dimension,size,median_ms,min_ms,max_ms"
        assert len(lines) == 4
        assert lines[1].startswith("labelPropagations,1,")
        assert not list(tmp_path.glob("*.tmp"))

    def test_raw_timings_file(self, tmp_path):
        out = tmp_path / "bench.csv"
        config = BenchConfig(dimension="nodeLabels", sizes=(1, 2),
                             repetitions=2, output=out, raw_output=True)
        run_bench(config)
        raw_lines = (tmp_path / "bench.raw.csv").read_text().splitlines()
        assert raw_lines[0] == "dimension,size,rep,ms"
        assert len(raw_lines) == 1 + 2 * 2

    def test_failed_cell_recorded_and_run_continues(self, tmp_path, monkeypatch):
        import flowcheck.bench as bench_mod

        real = bench_mod.generate_model

        def flaky(dimension, n):
            if n == 2:
                raise ModelError("boom")
            return real(dimension, n)

        monkeypatch.setattr(bench_mod, "generate_model", flaky)
        out = tmp_path / "bench.csv"
        rows = run_bench(BenchConfig(dimension="nodeLabels", sizes=(1, 2, 3),
                                     repetitions=1, output=out))
        assert [row.ok for row in rows] == [True, False, True]
        failed_line = out.read_text().splitlines()[2]
        assert failed_line.startswith("nodeLabels,2,nan")

    def test_sizes_must_ascend(self):
        with pytest.raises(ModelError):
            run_bench(BenchConfig(dimension="nodeLabels", sizes=(10, 1),
                                  repetitions=1))

    def test_identical_runs_identical_violations(self):
        case = generate_model("variableActions", 4)
        counts = {run_case_once(case)[1] for _ in range(3)}
        assert counts == {case.expected_violations}
