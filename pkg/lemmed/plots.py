"""
plots.py
Attention heatmaps and training curves with plotly
"""

import plotly.graph_objects as go
from plotly.subplots import make_subplots


def plot_attention(hypothesis, source_symbols, target_symbols, colorscale="Blues", size=1):
    """
    Heatmap of the attention weights recorded during one decode.

    Parameters
    ----------
    hypothesis : Hypothesis
        Must carry attention rows (one per decoder step).
    source_symbols : sequence of str
        Encoder input symbols, one per attention column.
    target_symbols : sequence of str
        Decoded symbols; a trailing row for the end symbol is labelled
        "</S>" when the hypothesis finished.
    colorscale : str
    size : float
        Scales the figure width and height.

    Returns
    -------
    plotly.graph_objects.Figure

    """
    if hypothesis.attention is None:
        raise ValueError("the hypothesis carries no attention weights")
    weights = hypothesis.attention
    rows = list(target_symbols)
    if len(rows) < weights.shape[0]:
        rows += ["</S>"] * (weights.shape[0] - len(rows))
    # duplicate labels would merge heatmap rows
    y = [f"{i}:{symbol}" for i, symbol in enumerate(rows[:weights.shape[0]])]
    x = [f"{i}:{symbol}" for i, symbol in enumerate(source_symbols)]

    fig = go.Figure(data=go.Heatmap(z=weights, x=x, y=y, zmin=0.0, zmax=1.0, colorscale=colorscale))
    fig.update_layout(template="plotly_white",
                      width=size * 600,
                      height=size * 500,
                      xaxis=dict(title="source", tickangle=-90, showgrid=False),
                      yaxis=dict(title="target", autorange="reversed", showgrid=False))
    return fig


def plot_training(report, metric=None, size=1):
    """
    Training loss and a dev metric per checkpoint, the selected step marked.

    Parameters
    ----------
    report : TrainReport
    metric : str, optional
        Dev metric to draw; defaults to the report's selection metric.
    size : float

    Returns
    -------
    plotly.graph_objects.Figure

    """
    metric = metric or report.selection_metric
    steps = [record.step for record in report.checkpoints]
    fig = make_subplots(specs=[[{"secondary_y": True}]])
    fig.add_trace(go.Scatter(x=steps, y=[record.train_loss for record in report.checkpoints], mode="lines+markers",
                             name="train loss"),
                  secondary_y=False)
    fig.add_trace(go.Scatter(x=steps, y=[record.dev_metrics[metric] for record in report.checkpoints],
                             mode="lines+markers", name=f"dev {metric}"),
                  secondary_y=True)
    fig.add_vline(x=report.selected_step, line_dash="dash", line_color="gray")
    fig.update_layout(template="plotly_white", width=size * 700, height=size * 450, hovermode="x")
    fig.update_xaxes(title_text="step")
    fig.update_yaxes(title_text="loss (nats)", secondary_y=False)
    fig.update_yaxes(title_text=metric, range=[0, 1], secondary_y=True)
    return fig
