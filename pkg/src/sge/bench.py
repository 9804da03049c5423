"""Wall-clock timing of walk sampling over a grid of (nu, s) settings."""
from __future__ import annotations

import time
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .graph import Graph
from .sampler import SamplerConfig, available_backends, sample_all


def parse_grid(spec: str) -> list:
    """``"100x5,1000x5"`` -> ``[(100, 5), (1000, 5)]``."""
    grid = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            nu, s = item.lower().split("x")
            grid.append((int(nu), int(s)))
        except ValueError:
            raise ValidationError(f"bad grid entry {item!r}; expected NUxS, e.g. 1000x5") from None
    if not grid:
        raise ValidationError("empty benchmark grid")
    return grid


def time_sampling(g: Graph, grid: Sequence, backends: Optional[Iterable[str]] = None,
                  repeats: int = 3, seed: int = 0, workers: int = 1) -> list:
    """Best-of-``repeats`` sampling time for each grid point and backend."""
    if g.num_nodes == 0:
        raise ValidationError("cannot benchmark an empty graph")
    backends = list(backends or available_backends())
    rows = []
    for nu, s in grid:
        cfg = SamplerConfig("uniform", s=s, nu=nu, seed=seed)
        mean_len = cfg.distribution().mean_length()
        for backend in backends:
            best = np.inf
            for _ in range(max(1, repeats)):
                t0 = time.perf_counter()
                corpus = sample_all(g, cfg, workers=workers, backend=backend)
                best = min(best, time.perf_counter() - t0)
            rows.append({"backend": backend, "nu": nu, "s": s, "mean_length": mean_len,
                         "work": nu * mean_len, "seconds": best,
                         "tuples": corpus.num_tuples})
            del corpus
    return rows


def linearity(rows: Sequence[dict]) -> dict:
    """Per backend: least-squares fit of seconds on ``nu * mean_length`` and growth ratios.

    ``growth`` compares each row's time with the linear extrapolation from
    the first (cheapest) row of the same backend; 1.0 means exactly linear.
    """
    out = {}
    for backend in sorted({r["backend"] for r in rows}):
        rs = sorted((r for r in rows if r["backend"] == backend), key=lambda r: r["work"])
        work = np.array([r["work"] for r in rs])
        secs = np.array([r["seconds"] for r in rs])
        if len(rs) >= 2 and np.ptp(work) > 0:
            slope, intercept = np.polyfit(work, secs, 1)
        else:
            slope, intercept = secs[0] / work[0], 0.0
        growth = [float(secs[i] / (secs[0] * work[i] / work[0])) for i in range(len(rs))]
        out[backend] = {"slope": float(slope), "intercept": float(intercept),
                        "growth_vs_linear": growth}
    return out


def speedups(rows: Sequence[dict], reference: str = "python") -> list:
    """Time of ``reference`` divided by each other backend's, per grid point."""
    ref = {(r["nu"], r["s"]): r["seconds"] for r in rows if r["backend"] == reference}
    return [{"nu": r["nu"], "s": r["s"], "backend": r["backend"],
             "speedup": ref[(r["nu"], r["s"])] / r["seconds"]}
            for r in rows if r["backend"] != reference and (r["nu"], r["s"]) in ref]


def format_table(rows: Sequence[dict]) -> str:
    lines = ["backend\tnu\ts\tmean_length\twork\tseconds\ttuples"]
    for r in rows:
        lines.append(f"{r['backend']}\t{r['nu']}\t{r['s']}\t{r['mean_length']:.3f}\t"
                     f"{r['work']:.1f}\t{r['seconds']:.6f}\t{r['tuples']}")
    return "\n".join(lines) + "\n"
