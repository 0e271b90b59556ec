"""
Phase portraits as plain SVG text.

Layers, bottom to top: Σ, trajectories, non-crossing arcs of Σ (highlighted),
limit cycles (thick stroke), the anchor point.
"""
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from kolmo.models.results import SigmaClass
from kolmo.models.system import PiecewiseKolmogorov
from kolmo.services.model_service import sigma_point

# ─── 樣式 ────────────────────────────────────────────────────────────────────

STYLE = {
    "sigma": 'stroke="#6B7280" stroke-width="1" stroke-dasharray="4 3" fill="none"',
    "trajectory": 'stroke="#93C5FD" stroke-width="0.8" fill="none"',
    "sliding": 'stroke="#E85D04" stroke-width="3" fill="none"',
    "escaping": 'stroke="#7C3AED" stroke-width="3" fill="none"',
    "cycle": 'stroke="#111827" stroke-width="2" fill="none"',
}
PAD = 0.08


def _bounds(polylines: Sequence[np.ndarray], anchor) -> Tuple[float, float, float, float]:
    pts = [np.atleast_2d(np.asarray(anchor, dtype=float))]
    pts += [np.asarray(p, dtype=float) for p in polylines if p is not None and len(p)]
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    lo, hi = lo - PAD * span, hi + PAD * span
    return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


class _Canvas:
    def __init__(self, bounds, width: int, height: int):
        self.x0, self.y0, self.x1, self.y1 = bounds
        self.width, self.height = width, height

    def map(self, p) -> Tuple[float, float]:
        u = (p[0] - self.x0) / (self.x1 - self.x0) * self.width
        v = (1 - (p[1] - self.y0) / (self.y1 - self.y0)) * self.height
        return u, v

    def polyline(self, points, cls: str) -> str:
        coords = " ".join(f"{u:.2f},{v:.2f}" for u, v in (self.map(p) for p in points))
        return f'<polyline class="{cls}" {STYLE[cls]} points="{coords}"/>'


def render_portrait(Z: PiecewiseKolmogorov, anchor, trajectories: Iterable[np.ndarray] = (),
                    cycles: Iterable[np.ndarray] = (), arcs: Sequence[Tuple[float, float, SigmaClass]] = (),
                    width: int = 640, height: int = 640, title: Optional[str] = None) -> str:
    """``arcs`` are (s_lo, s_hi, kind) in signed arclength from ``anchor`` along Σ."""
    trajectories, cycles = list(trajectories), list(cycles)
    canvas = _Canvas(_bounds(trajectories + cycles, anchor), width, height)
    reach = 2.0 * max(canvas.x1 - canvas.x0, canvas.y1 - canvas.y0)

    body: List[str] = []
    body.append(canvas.polyline([sigma_point(Z, anchor, -reach), sigma_point(Z, anchor, reach)], "sigma"))
    for traj in trajectories:
        body.append(canvas.polyline(traj, "trajectory"))
    for lo, hi, kind in arcs:
        if kind in (SigmaClass.SLIDING, SigmaClass.ESCAPING):
            body.append(canvas.polyline([sigma_point(Z, anchor, lo), sigma_point(Z, anchor, hi)], kind.value))
    for cycle in cycles:
        body.append(canvas.polyline(np.vstack([cycle, cycle[:1]]), "cycle"))
    u, v = canvas.map(np.asarray(anchor, dtype=float))
    body.append(f'<circle class="anchor" cx="{u:.2f}" cy="{v:.2f}" r="3" fill="#111827"/>')

    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    clip = f'<rect width="{width}" height="{height}" fill="white"/>'
    label = f"<title>{title}</title>" if title else ""
    return "\n".join([head, label, clip] + body + ["</svg>"]) + "\n"


def write_svg(text: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
