"""Figure builders. Pure renderers: no statistics are recomputed here.

Figures are built on `matplotlib.figure.Figure` directly (no pyplot, no
global state), so rendering is deterministic and needs no display backend.
"""

from __future__ import annotations

from matplotlib.figure import Figure

from .readers import ScatterRow, SweepRow

ZERO_MARKER = "v"
MISSED_LABEL = "true 1 missed"
DETECTED_LABEL = "true 1 detected"
OFF_LABEL = "true 0"


def _ordered_detectors(rows):
    seen = []
    for row in rows:
        if row.detector not in seen:
            seen.append(row.detector)
    return seen


def plot_ber(rows: list[SweepRow]) -> Figure:
    """BER against transmit power, one line per detector, log-scale y.

    Confidence intervals are drawn as whiskers. A zero-error point has no
    finite log-scale position, so it is drawn at its interval's upper bound
    with a distinct open marker instead of the usual one.
    """
    fig = Figure(figsize=(7.0, 5.0))
    ax = fig.add_subplot(111)
    for detector in _ordered_detectors(rows):
        pts = sorted(
            (r for r in rows if r.detector == detector),
            key=lambda r: (r.power_dbm, r.np),
        )
        for r in pts:
            if r.ber == 0.0 and r.ci_hi <= 0.0:
                raise ValueError(
                    f"detector {detector!r} at {r.power_dbm} dBm: ber=0 with "
                    "ci_hi=0 cannot be placed on a log axis"
                )
        x = [r.power_dbm for r in pts]
        y = [r.ber if r.ber > 0.0 else r.ci_hi for r in pts]
        err_lo = [max(yv - r.ci_lo, 0.0) for yv, r in zip(y, pts)]
        err_hi = [max(r.ci_hi - yv, 0.0) for yv, r in zip(y, pts)]
        (line,) = ax.plot(x, y, marker="o", label=detector)
        color = line.get_color()
        ax.errorbar(
            x, y, yerr=[err_lo, err_hi], fmt="none", ecolor=color,
            capsize=3.0, label=f"_ci_{detector}",
        )
        zeros = [(r.power_dbm, r.ci_hi) for r in pts if r.ber == 0.0]
        if zeros:
            ax.plot(
                [p for p, _ in zeros],
                [v for _, v in zeros],
                linestyle="none",
                marker=ZERO_MARKER,
                markerfacecolor="none",
                markersize=9.0,
                color=color,
                label=f"_zero_upper_bound_{detector}",
            )
    ax.set_yscale("log")
    ax.set_xlabel("transmit power (dBm)")
    ax.set_ylabel("bit error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


def plot_scatter(rows: list[ScatterRow]) -> Figure:
    """Per-symbol fused weight differences in three marker classes.

    Open circles: on-symbols decided correctly. Filled circles: on-symbols
    decided wrongly. Crosses: off-symbols. The x axis is the normalized
    weight difference, the y axis the symbol index.
    """
    fig = Figure(figsize=(7.0, 5.0))
    ax = fig.add_subplot(111)
    classes = (
        (OFF_LABEL, "x", None, lambda r: r.true_bit == 0),
        (DETECTED_LABEL, "o", "none", lambda r: r.true_bit == 1 and r.decided_bit == 1),
        (MISSED_LABEL, "o", "C3", lambda r: r.true_bit == 1 and r.decided_bit == 0),
    )
    for label, marker, face, member in classes:
        picked = [(i, r.norm_weight_diff) for i, r in enumerate(rows) if member(r)]
        if not picked:
            continue
        kwargs = {} if face is None else {"markerfacecolor": face}
        ax.plot(
            [v for _, v in picked],
            [i for i, _ in picked],
            linestyle="none",
            marker=marker,
            label=label,
            **kwargs,
        )
    ax.axvline(0.0, color="grey", linewidth=0.8, linestyle="--")
    ax.set_xlim(-1.05, 1.05)
    ax.set_xlabel("normalized fused weight difference")
    ax.set_ylabel("data symbol index")
    ax.legend()
    return fig
