"""
Tests for the plotly figures.
"""

import numpy as np
import pytest

pytest.importorskip("plotly")

from lemmed.decode import Hypothesis  # noqa: E402
from lemmed.plots import plot_attention, plot_training  # noqa: E402
from lemmed.training import CheckpointRecord, TrainReport  # noqa: E402


def test_attention_heatmap():
    weights = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]])
    fig = plot_attention(Hypothesis((6, 7), -1.0, True, weights), ["b", "<WB>"], ["b", "<WB>"])
    heatmap = fig.data[0]
    assert np.allclose(np.asarray(heatmap.z), weights)
    assert list(heatmap.y) == ["0:b", "1:<WB>", "2:</S>"]
    assert list(heatmap.x) == ["0:b", "1:<WB>"]


def test_attention_required():
    with pytest.raises(ValueError):
        plot_attention(Hypothesis((), 0.0, False), [], [])


def test_training_curves():
    records = [CheckpointRecord(10, 1.0, 2.0, {"analysis_accuracy": 0.2, "lemma_accuracy": 0.4}),
               CheckpointRecord(20, 0.5, 1.0, {"analysis_accuracy": 0.6, "lemma_accuracy": 0.7})]
    report = TrainReport(records, 20, "analysis_accuracy")
    fig = plot_training(report)
    assert len(fig.data) == 2
    assert list(fig.data[1].y) == [0.2, 0.6]
    assert fig.data[1].name == "dev analysis_accuracy"
    assert list(plot_training(report, "lemma_accuracy").data[1].y) == [0.4, 0.7]
