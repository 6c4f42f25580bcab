"""Tabular experiment results, CSV round-trip and SVG plots derived from CSV."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_SCHEMA = "lrlab-csv/1"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


@dataclass
class ExperimentResult:
    """One row per grid point: parameter columns, then ``value`` and ``error``."""

    experiment: str
    params: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *params, value: float, error: float = 0.0) -> None:
        if len(params) != len(self.params):
            raise ValueError(f"expected {len(self.params)} parameters, got {len(params)}")
        self.rows.append((*params, value, error))

    @property
    def columns(self) -> tuple[str, ...]:
        return ("experiment", *self.params, "value", "error")

    def column(self, name: str) -> np.ndarray:
        i = (*self.params, "value", "error").index(name)
        return np.array([r[i] for r in self.rows])

    def where(self, **fixed) -> "ExperimentResult":
        idx = {k: self.params.index(k) for k in fixed}
        rows = [r for r in self.rows if all(r[i] == fixed[k] for k, i in idx.items())]
        return ExperimentResult(self.experiment, self.params, rows, dict(self.metadata))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {CSV_SCHEMA} experiment={self.experiment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([self.experiment, *(_fmt(x) for x in r)])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def read_csv(cls, path: str | Path) -> "ExperimentResult":
        lines = Path(path).read_text().splitlines()
        if not lines or not lines[0].startswith(f"# {CSV_SCHEMA}"):
            raise ValueError(f"{path}: missing {CSV_SCHEMA} header line")
        reader = csv.reader(lines[1:])
        header = next(reader)
        params = tuple(header[1:-2])
        rows, name = [], lines[0].split("experiment=")[-1].strip()
        for rec in reader:
            rows.append(tuple(_parse(x) for x in rec[1:]))
        return cls(name, params, rows)


def _parse(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def plot_csv(csv_path: str | Path, svg_path: str | Path) -> None:
    """Render the standard plot for an experiment CSV. Reads only the CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    res = ExperimentResult.read_csv(csv_path)
    with matplotlib.rc_context({"svg.hashsalt": "lrlab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        _draw(res, ax)
        ax.set_title(res.experiment)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _draw(res: ExperimentResult, ax) -> None:
    p = res.params
    if res.experiment == "lightcone":
        data = res.where(series="C") if "series" in p else res
        for i, t in enumerate(sorted(set(data.column("t")))):
            sub = data.where(t=t)
            vals = np.maximum(sub.column("value").astype(float), 1e-16)
            line, = ax.semilogy(sub.column("L"), vals, marker="o", label=f"t={t:g}")
            if "series" in p:
                bnd = res.where(series="bound", t=t)
                ax.semilogy(bnd.column("L"), bnd.column("value").astype(float), "--",
                            color=line.get_color(), lw=0.8)
        ax.set_xlabel("L (edges)")
        ax.set_ylabel("||[O_A(t), O_B]||")
        ax.legend(fontsize=6, ncol=2)
    elif res.experiment == "entropy_growth":
        sub = res.where(quantity="entropy")
        ax.plot(sub.column("t"), sub.column("value"), marker=".", label="S(rho_A)")
        bud = res.where(quantity="integrated_budget")
        ax.plot(bud.column("t"), bud.column("value"), "--", label="c* int sum|r_k|")
        ax.set_xlabel("t")
        ax.set_ylabel("bits")
        ax.legend(fontsize=7)
    elif res.experiment == "tqo":
        for q in ("eps", "eps_diag", "eps_offdiag"):
            sub = res.where(quantity=q)
            ax.plot(sub.column("l"), sub.column("value"), marker="o", label=q)
        ax.set_xlabel("l")
        ax.set_ylabel("epsilon")
        ax.legend(fontsize=7)
    else:
        x = res.column(p[0]) if p else np.arange(len(res.rows))
        if "quantity" in p:
            for q in sorted(set(res.column("quantity"))):
                sub = res.where(quantity=q)
                ax.plot(sub.column(p[0]), sub.column("value"), marker=".", label=q)
            ax.legend(fontsize=7)
        else:
            ax.plot(x, res.column("value"), marker=".")
        ax.set_xlabel(p[0] if p else "row")
        ax.set_ylabel("value")
