"""Top-view trajectory plots as plain SVG, plus a per-frame centre table."""
from __future__ import annotations

import colorsys
import csv
import io
from xml.sax.saxutils import escape

from .mot_io import Sequence


def track_color(track_id: int) -> str:
    """Stable colour per id: golden-ratio hue walk."""
    hue = (track_id * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.75, 0.85)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


def tracks_svg(seq: Sequence, stroke_width: float = 3.0) -> str:
    """One polyline per track through its box centres, y pointing down."""
    w, h = seq.image_width, seq.image_height
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<title>{escape(seq.name)}</title>',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black"/>',
    ]
    for t in seq.tracks:
        color = track_color(t.id)
        pts = " ".join(f"{p.box.cx:.2f},{p.box.cy:.2f}" for p in t.points)
        if len(t.points) == 1:
            p = t.points[0]
            parts.append(f'<circle data-id="{t.id}" cx="{p.box.cx:.2f}" cy="{p.box.cy:.2f}" '
                         f'r="{stroke_width * 2:g}" fill="{color}"/>')
        else:
            parts.append(f'<polyline data-id="{t.id}" points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="{stroke_width:g}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def centers_csv(seq: Sequence) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "id", "cx", "cy", "interpolated"])
    rows = sorted((p.frame, t.id, p) for t in seq.tracks for p in t.points)
    for frame, tid, p in rows:
        w.writerow([frame, tid, f"{p.box.cx:.6f}", f"{p.box.cy:.6f}", int(p.interpolated)])
    return buf.getvalue()
