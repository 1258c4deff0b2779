"""Figure rendering for sweep and optimization outputs.

Figures are written straight to files (Agg backend, no display); every
sweep CSV can also get a standalone plot script for later tweaking.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .optimize import SweepPoint


def plot_sweep(points: list[SweepPoint], path: "str | Path",
               xlabel: str = "QND coupling", title: "str | None" = None) -> Path:
    """Entanglement versus coupling, optimized points overlaid when present."""
    path = Path(path)
    base = [p for p in points if not p.optimized]
    opt = [p for p in points if p.optimized]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if base:
        ax.plot([p.coupling for p in base], [p.E_N for p in base],
                "-o", ms=3.5, label="equal parameters")
    if opt:
        ax.plot([p.coupling for p in opt], [p.E_N for p in opt],
                ":s", ms=4, label="optimized")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"logarithmic negativity $E_N$")
    if title:
        ax.set_title(title)
    if base and opt:
        ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Replot {csv_name} (generated alongside it; edit freely)."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

rows = []
with open(Path(__file__).with_name({csv_name!r})) as fh:
    for line in fh:
        if not line.startswith("#"):
            rows.append(line)
reader = csv.DictReader(rows)
data = list(reader)
x_col = reader.fieldnames[0]

sets = {{}}
for row in data:
    key = row.get("optimized", "0")
    sets.setdefault(key, ([], []))
    sets[key][0].append(float(row[x_col]))
    sets[key][1].append(float(row["E_N"]))

fig, ax = plt.subplots(figsize=(6, 4))
styles = {{"0": ("-o", "equal parameters"), "1": (":s", "optimized")}}
for key, (x, y) in sorted(sets.items()):
    style, label = styles.get(key, ("-", key))
    ax.plot(x, y, style, ms=4, label=label)
ax.set_xlabel(x_col)
ax.set_ylabel("logarithmic negativity $E_N$")
if len(sets) > 1:
    ax.legend(frameon=False)
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(Path(__file__).with_suffix(".png"), dpi=150)
print("wrote", Path(__file__).with_suffix(".png"))
'''


def emit_plot_script(csv_path: "str | Path") -> Path:
    """Write a self-contained matplotlib script next to a sweep CSV."""
    csv_path = Path(csv_path)
    script = csv_path.with_name(csv_path.stem + "_plot.py")
    script.write_text(PLOT_SCRIPT.format(csv_name=csv_path.name))
    return script
