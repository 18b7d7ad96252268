"""SVG overlay of a scenario and its trajectories.

Obstacles are drawn red on a white floor, the barrier disks translucent,
and each trajectory as a single ``<path>``.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

PALETTE = ("#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")
PX_PER_M = 50.0
MARGIN = 0.5  # m


def _n(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def render_svg(scenario, trajectories, labels=None) -> str:
    """Return the SVG document; ``trajectories`` is a sequence of Trajectory."""
    room = scenario.room
    x0, x1 = room.xmin - MARGIN, room.xmax + MARGIN
    y0, y1 = room.ymin - MARGIN, room.ymax + MARGIN
    width, height = (x1 - x0) * PX_PER_M, (y1 - y0) * PX_PER_M
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=_n(width),
        height=_n(height),
        viewBox=f"{_n(x0)} {_n(-y1)} {_n(x1 - x0)} {_n(y1 - y0)}",
    )
    # world y points up; flip once for the whole drawing
    g = ET.SubElement(svg, "g", transform="scale(1,-1)")
    ET.SubElement(
        g, "rect", x=_n(room.xmin), y=_n(room.ymin), width=_n(room.xmax - room.xmin),
        height=_n(room.ymax - room.ymin), fill="white", stroke="black", **{"stroke-width": "0.02"},
    )
    for rect in scenario.obstacles:
        bx0, bx1, by0, by1 = rect.bounds
        ET.SubElement(g, "rect", x=_n(bx0), y=_n(by0), width=_n(bx1 - bx0), height=_n(by1 - by0), fill="red")
    for rect, disk in zip(scenario.obstacles, scenario.disks):
        if rect.is_wall:
            continue
        ET.SubElement(
            g, "circle", cx=_n(disk.center[0]), cy=_n(disk.center[1]), r=_n(disk.radius),
            fill="red", **{"fill-opacity": "0.2", "stroke": "red", "stroke-width": "0.01"},
        )
    s = scenario.start
    ET.SubElement(g, "circle", cx=_n(s.x), cy=_n(s.y), r="0.08", fill="black")
    for i, t in enumerate(scenario.targets):
        ET.SubElement(g, "circle", cx=_n(t.pose.x), cy=_n(t.pose.y), r="0.08", fill="gold", stroke="black",
                      **{"stroke-width": "0.01", "id": f"target-{i + 1}"})
    for i, traj in enumerate(trajectories):
        pts = [smp.pose for smp in traj.samples]
        d = "M " + " L ".join(f"{_n(p.x)} {_n(p.y)}" for p in pts)
        attrs = {"d": d, "fill": "none", "stroke": PALETTE[i % len(PALETTE)], "stroke-width": "0.04"}
        if labels is not None:
            attrs["id"] = str(labels[i])
        ET.SubElement(g, "path", attrs)
    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode", xml_declaration=True) + "\n"


def write_svg(path, scenario, trajectories, labels=None) -> Path:
    path = Path(path)
    path.write_text(render_svg(scenario, trajectories, labels))
    return path
