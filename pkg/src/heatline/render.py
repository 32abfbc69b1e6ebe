"""Static SVG rendering of a video's normalized usage contour.

Yellow filled contour over the timeline, with the annotated interval (if
any) shaded green behind it, mirroring what students see above the player.
"""

from __future__ import annotations

from .model import BinScoreTimeline, ImportantPartAnnotation

CONTOUR_FILL = "#f5c518"
CONTOUR_LINE = "#b8860b"
ANNOTATION_FILL = "#90ee90"


def contour_svg(
    timeline: BinScoreTimeline,
    annotation: ImportantPartAnnotation | None = None,
    width: int = 880,
    height: int = 140,
    title: str | None = None,
) -> str:
    duration = timeline.duration_s
    pad = 6
    plot_w = width - 2 * pad
    plot_h = height - 2 * pad
    baseline = height - pad

    def x_of(second: float) -> float:
        return pad + plot_w * second / duration

    def y_of(value: float) -> float:
        return baseline - plot_h * value

    points = [f"{x_of(0):.2f},{baseline:.2f}"]
    for i, value in enumerate(timeline.normalized):
        x = x_of(i + 0.5)
        points.append(f"{x:.2f},{y_of(value):.2f}")
    points.append(f"{x_of(duration):.2f},{baseline:.2f}")

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<title>{_escape(title)}</title>'
        )
    if annotation is not None:
        ax = x_of(annotation.start_s)
        aw = x_of(annotation.end_s) - ax
        parts.append(
            f'<rect x="{ax:.2f}" y="{pad}" width="{aw:.2f}" height="{plot_h}" '
            f'fill="{ANNOTATION_FILL}" fill-opacity="0.6"/>'
        )
    parts.append(
        f'<polygon points="{" ".join(points)}" fill="{CONTOUR_FILL}" '
        f'fill-opacity="0.85" stroke="{CONTOUR_LINE}" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{pad}" y1="{baseline}" x2="{width - pad}" y2="{baseline}" '
        'stroke="#444" stroke-width="1"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
