"""Average-rank bar charts as deterministic standalone SVG documents.

Methods are drawn left to right by ascending average rank; any pair whose
adjusted p-value exceeds the significance level is joined by a horizontal
connector above the bars. Identical inputs render byte-identical output.
"""

from __future__ import annotations

from .stats import PValueMatrix, RankSummary

_BAR_W = 46
_SLOT_W = 72
_MARGIN_LEFT = 64
_MARGIN_RIGHT = 24
_PLOT_H = 220
_CONNECTOR_GAP = 14
_LABEL_H = 70
_TOP_PAD = 20


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_rank_chart(
    summary: RankSummary,
    adjusted: PValueMatrix,
    alpha: float = 0.05,
    title: str = "Average rank (lower is better)",
) -> str:
    """Render the rank summary and its non-significant pairs as SVG text."""
    names = list(summary.method_names)
    k = len(names)
    if k == 0:
        raise ValueError("rank summary carries no methods")
    if not adjusted.empty and list(adjusted.method_names) != names:
        raise ValueError(
            f"p-value matrix methods {adjusted.method_names} do not match "
            f"rank summary methods {names}"
        )
    order = sorted(range(k), key=lambda i: (float(summary.average_ranks[i]), names[i]))
    ranks = [float(summary.average_ranks[i]) for i in order]

    connectors: list[tuple[int, int]] = []
    if not adjusted.empty:
        for a in range(k):
            for b in range(a + 1, k):
                i, j = order[a], order[b]
                p = float(adjusted.adjusted[i, j])
                if p == p and p > alpha:
                    connectors.append((a, b))

    n_levels = len(connectors)
    top = _TOP_PAD + n_levels * _CONNECTOR_GAP
    width = _MARGIN_LEFT + k * _SLOT_W + _MARGIN_RIGHT
    height = top + _PLOT_H + _LABEL_H
    baseline = top + _PLOT_H
    max_rank = float(k)

    def bar_x(pos: int) -> float:
        return _MARGIN_LEFT + pos * _SLOT_W + (_SLOT_W - _BAR_W) / 2

    def bar_mid(pos: int) -> float:
        return bar_x(pos) + _BAR_W / 2

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{_fmt(width / 2)}" y="14" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{title}</text>',
        f'<line x1="{_MARGIN_LEFT}" y1="{baseline}" x2="{width - _MARGIN_RIGHT}" '
        f'y2="{baseline}" stroke="black" stroke-width="1"/>',
    ]
    # Value axis ticks at integer ranks.
    for tick in range(0, k + 1):
        y = baseline - (tick / max_rank) * _PLOT_H
        parts.append(
            f'<line x1="{_MARGIN_LEFT - 4}" y1="{_fmt(y)}" x2="{_MARGIN_LEFT}" '
            f'y2="{_fmt(y)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick}</text>'
        )
    for pos, (idx, rank) in enumerate(zip(order, ranks)):
        h = (rank / max_rank) * _PLOT_H
        x = bar_x(pos)
        y = baseline - h
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_BAR_W}" height="{_fmt(h)}" '
            f'fill="#4878a8" stroke="black" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{_fmt(bar_mid(pos))}" y="{_fmt(y - 4)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{rank:.3f}</text>'
        )
        parts.append(
            f'<text x="{_fmt(bar_mid(pos))}" y="{baseline + 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10" '
            f'transform="rotate(30 {_fmt(bar_mid(pos))} {baseline + 14})">{names[idx]}</text>'
        )
    for level, (a, b) in enumerate(connectors):
        y = _TOP_PAD + level * _CONNECTOR_GAP
        x1, x2 = bar_mid(a), bar_mid(b)
        parts.append(
            f'<line x1="{_fmt(x1)}" y1="{y}" x2="{_fmt(x2)}" y2="{y}" '
            f'stroke="black" stroke-width="2.5"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
