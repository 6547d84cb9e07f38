import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repad2.detector import StepReport, Verdict
from repad2.errors import ConfigError, DataFormatError
from repad2.evaluation import EvalCounts, MatchConfig, match_detections, score, summarize
from repad2.series_io import AnomalyLabel, LabelSet


def labels_of(*ranges):
    return LabelSet(anomalies=tuple(AnomalyLabel(s, e) for s, e in ranges))


def report(t, verdict=Verdict.NORMAL, retrained=False, latency=1e-4):
    return StepReport(
        time_point=t, observed=1.0, predicted=None, aare=None, threshold=None,
        verdict=verdict, retrained=retrained, re_predicted=False, decision_latency=latency,
    )


def run_of(n, anomalies=(), retrained_at=()):
    out = []
    for t in range(n):
        if t < 7:
            out.append(report(t, Verdict.WARMUP))
        else:
            verdict = Verdict.ANOMALY if t in anomalies else Verdict.NORMAL
            out.append(report(t, verdict, retrained=t in retrained_at,
                              latency=2e-3 if t in retrained_at else 1e-4))
    return out


class TestMatchDetections:
    def test_detection_inside_window_is_tp(self):
        counts = match_detections([105], labels_of((100, 100)), MatchConfig(k=7))
        assert counts == EvalCounts(tp=1, fp=0, fn=0)

    def test_detection_just_outside_window(self):
        counts = match_detections([108], labels_of((100, 100)), MatchConfig(k=7))
        assert counts == EvalCounts(tp=0, fp=1, fn=1)

    def test_no_detections(self):
        counts = match_detections([], labels_of((10, 10), (50, 60)), MatchConfig(k=7))
        assert counts == EvalCounts(tp=0, fp=0, fn=2)
        assert score(counts)[1] == 0.0

    def test_extra_detections_in_window_absorbed(self):
        counts = match_detections([95, 100, 104, 107], labels_of((100, 100)), MatchConfig(k=7))
        assert counts == EvalCounts(tp=1, fp=0, fn=0)

    def test_sequential_label_window_spans_range(self):
        counts = match_detections([43], labels_of((50, 90)), MatchConfig(k=7))
        assert counts.tp == 1

    def test_stray_runs_group_as_single_fp(self):
        counts = match_detections([50, 51, 52, 90], labels_of((200, 200)), MatchConfig(k=7))
        assert counts.fp == 2
        assert counts.fn == 1

    def test_fp_mode_each_counts_individually(self):
        cfg = MatchConfig(k=7, fp_mode="each")
        counts = match_detections([50, 51, 52, 90], labels_of((200, 200)), cfg)
        assert counts.fp == 4

    def test_overlap_credits_earlier_label_only(self):
        counts = match_detections([105], labels_of((100, 100), (110, 110)), MatchConfig(k=7))
        assert counts == EvalCounts(tp=1, fp=0, fn=1)

    def test_unsorted_detections_rejected(self):
        with pytest.raises(DataFormatError):
            match_detections([5, 3], labels_of((1, 1)), MatchConfig())

    def test_k_zero_requires_exact_hit(self):
        assert match_detections([100], labels_of((100, 100)), MatchConfig(k=0)).tp == 1
        assert match_detections([101], labels_of((100, 100)), MatchConfig(k=0)).tp == 0

    def test_negative_k_rejected(self):
        with pytest.raises(ConfigError):
            MatchConfig(k=-1)


class TestScore:
    def test_table_like_counts(self):
        precision, recall, f = score(EvalCounts(tp=21, fp=0, fn=9))
        assert precision == 1.0
        assert recall == pytest.approx(0.7)
        assert f == pytest.approx(0.8235, abs=1e-4)

    def test_empty_task_convention(self):
        assert score(EvalCounts(0, 0, 0)) == (1.0, 1.0, 1.0)

    def test_no_detections_with_labels_scores_zero_precision(self):
        precision, recall, f = score(EvalCounts(0, 0, 5))
        assert (precision, recall, f) == (0.0, 0.0, 0.0)

    def test_half_precision(self):
        assert score(EvalCounts(tp=30, fp=30, fn=0))[0] == 0.5

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(2, 5))
    @settings(max_examples=100, deadline=None)
    def test_scaling_counts_preserves_ratios(self, tp, fp, fn, m):
        base = score(EvalCounts(tp, fp, fn))
        scaled = score(EvalCounts(m * tp, m * fp, m * fn))
        assert base == pytest.approx(scaled)


class TestSummarize:
    def test_zero_anomaly_run(self):
        reports = run_of(60)
        summary = summarize(reports, labels_of((20, 20), (40, 40)))
        assert summary.recall == 0.0
        assert summary.latency_noretrain is not None
        assert summary.latency_retrain is None  # no retrain ever happened
        assert summary.counts.fn == 2

    def test_detected_spike(self):
        reports = run_of(60, anomalies={30}, retrained_at={30})
        summary = summarize(reports, labels_of((28, 28)))
        assert summary.recall == 1.0
        assert summary.precision == 1.0
        assert summary.latency_retrain is not None
        assert summary.retraining_ratio == pytest.approx(1 / 60)

    def test_latencies_exclude_warmup(self):
        reports = run_of(20)
        summary = summarize(reports, labels_of())
        mean, std = summary.latency_noretrain
        assert mean == pytest.approx(1e-4)

    def test_label_beyond_range_rejected(self):
        with pytest.raises(DataFormatError):
            summarize(run_of(20), labels_of((25, 25)))

    def test_empty_reports_rejected(self):
        with pytest.raises(DataFormatError):
            summarize([], labels_of())


# shared strategies for the matching properties
_labels = st.lists(st.tuples(st.integers(0, 400), st.integers(0, 10)), min_size=0, max_size=8)
_detections = st.lists(st.integers(0, 500), min_size=0, max_size=40)


def _build_labels(raw):
    out = []
    cursor = 0
    for start, span in sorted(raw):
        s = max(start, cursor)
        out.append((s, s + span))
        cursor = s + span + 2  # keep labels non-overlapping
    return labels_of(*out)


class TestMatchingProperties:
    @given(_detections, _labels, st.integers(0, 9), st.integers(1, 1000))
    @settings(max_examples=200, deadline=None)
    def test_shift_invariance(self, detections, raw_labels, k, offset):
        detections = sorted(detections)
        labels = _build_labels(raw_labels)
        cfg = MatchConfig(k=k)
        base = match_detections(detections, labels, cfg)
        shifted_labels = labels_of(*[(l.start + offset, l.end + offset) for l in labels])
        shifted = match_detections([d + offset for d in detections], shifted_labels, cfg)
        assert base == shifted

    @given(_detections, _labels, st.integers(0, 9))
    @settings(max_examples=200, deadline=None)
    def test_k_monotonicity(self, detections, raw_labels, k):
        detections = sorted(detections)
        labels = _build_labels(raw_labels)
        small = match_detections(detections, labels, MatchConfig(k=k))
        large = match_detections(detections, labels, MatchConfig(k=k + 3))
        assert large.tp >= small.tp
        assert large.fn <= small.fn

    @given(_detections, _labels, st.integers(0, 9))
    @settings(max_examples=200, deadline=None)
    def test_label_count_conservation(self, detections, raw_labels, k):
        detections = sorted(detections)
        labels = _build_labels(raw_labels)
        counts = match_detections(detections, labels, MatchConfig(k=k))
        assert counts.tp + counts.fn == len(labels)
