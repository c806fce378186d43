"""Monte Carlo trials, phase-diagram sweeps and their CSV/SVG output."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .detect import H1, run_test
from .errors import InvalidParameterError
from .graph import DaryTree, Line, PlantSpec, Star, plant, sample_er
from .reconstruct import reconstruct_line, reconstruct_star
from .rng import derive_seed

DETECTORS = ("components", "kpath", "star", "dary", "auto")
RECONSTRUCTORS = ("line", "star")
METRICS = ("fpr", "fnr", "mean_overlap_fraction")
CSV_HEADER = ("lambda", "size", "trials", "fpr", "fnr", "mean_overlap_fraction")


@dataclass(frozen=True)
class TrialConfig:
    n: int
    lam: float
    spec: Optional[PlantSpec] = None
    detector: str = "kpath"
    reconstructor: Optional[str] = None
    master_seed: int = 0
    trials: int = 100
    cell_id: str = "cell"
    # detector arguments for pure-H0 runs; otherwise read off ``spec``
    K: Optional[int] = None
    D: Optional[int] = None
    h: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")
        if self.detector not in DETECTORS:
            raise InvalidParameterError(f"unknown detector {self.detector!r}")
        if self.reconstructor is not None:
            if self.reconstructor not in RECONSTRUCTORS:
                raise InvalidParameterError(f"unknown reconstructor {self.reconstructor!r}")
            if self.spec is None:
                raise InvalidParameterError("a reconstructor needs a planted structure")

    def detector_args(self):
        K, D, h = self.K, self.D, self.h
        s = self.spec
        if isinstance(s, Line):
            K = K if K is not None else s.K
        elif isinstance(s, Star):
            K = K if K is not None else s.K
        elif isinstance(s, DaryTree):
            D = D if D is not None else s.D
            h = h if h is not None else s.h
            K = K if K is not None else s.vertex_count()
        return {"K": K, "D": D, "h": h}


@dataclass(frozen=True)
class CellStats:
    trials: int
    false_positives: int
    false_negatives: Optional[int]
    overlap_sum: Optional[int]
    structure_size: Optional[int]
    inexact: int = 0

    @property
    def fpr(self):
        return self.false_positives / self.trials

    @property
    def fnr(self):
        return None if self.false_negatives is None else self.false_negatives / self.trials

    @property
    def mean_overlap_fraction(self):
        if self.overlap_sum is None:
            return None
        return self.overlap_sum / (self.trials * self.structure_size)

    def to_dict(self):
        return {
            "trials": self.trials,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "overlap_sum": self.overlap_sum,
            "structure_size": self.structure_size,
            "inexact": self.inexact,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "mean_overlap_fraction": self.mean_overlap_fraction,
        }


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    h0_reject: bool
    h1_reject: Optional[bool]
    overlap: Optional[int]
    exact: bool


def trial_seeds(cfg, index):
    """Independent seeds for the H0 and H1 samples of one trial."""
    return (
        derive_seed(cfg.master_seed, f"{cfg.cell_id}/h0", index),
        derive_seed(cfg.master_seed, f"{cfg.cell_id}/h1", index),
    )


def run_one_trial(cfg, index):
    args = cfg.detector_args()
    s0, s1 = trial_seeds(cfg, index)
    r0 = run_test(sample_er(cfg.n, cfg.lam, s0), cfg.detector, **args)
    exact = r0.exact
    h1_reject = overlap = None
    if cfg.spec is not None:
        inst = plant(sample_er(cfg.n, cfg.lam, s1), cfg.spec, s1, lam=cfg.lam)
        r1 = run_test(inst.graph, cfg.detector, **args)
        h1_reject = r1.decision == H1
        exact = exact and r1.exact
        truth = inst.truth.planted_vertices
        if cfg.reconstructor == "line":
            overlap = reconstruct_line(inst.graph, cfg.spec.vertex_count(), truth).overlap
        elif cfg.reconstructor == "star":
            overlap = reconstruct_star(inst.graph, cfg.spec.K, s1, truth).overlap
    return TrialOutcome(index, r0.decision == H1, h1_reject, overlap, exact)


def _run_one_trial_packed(job):
    return run_one_trial(*job)


def _map_ordered(jobs, threads):
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(jobs) <= 1:
        return [_run_one_trial_packed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order, so the reduction is schedule independent
        return list(pool.map(_run_one_trial_packed, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


def aggregate(cfg, outcomes):
    outcomes = sorted(outcomes, key=lambda o: o.index)
    fp = sum(o.h0_reject for o in outcomes)
    fn = None
    ov = None
    size = None
    if cfg.spec is not None:
        fn = sum(not o.h1_reject for o in outcomes)
        if cfg.detector == "kpath" and isinstance(cfg.spec, Line) and fn:
            # a planted K-path is always present
            raise AssertionError(f"k-path test missed a planted path in {fn} trials")
        if cfg.reconstructor is not None:
            ov = sum(o.overlap for o in outcomes)
            size = cfg.spec.vertex_count()
    inexact = sum(not o.exact for o in outcomes)
    return CellStats(len(outcomes), fp, fn, ov, size, inexact)


def run_trials(cfg, threads=1):
    """Run ``cfg.trials`` paired trials and return their :class:`CellStats`."""
    jobs = [(cfg, i) for i in range(cfg.trials)]
    return aggregate(cfg, _map_ordered(jobs, threads))


def spec_for_size(template, size):
    """Structure of the same family as ``template`` with its size parameter set to ``size``."""
    if isinstance(template, Line):
        return Line(size)
    if isinstance(template, Star):
        return Star(size)
    if isinstance(template, DaryTree):
        return DaryTree(template.D, size)
    raise InvalidParameterError(f"cannot resize {template!r}")


def _cell_id(lam, size):
    return f"lambda={float(lam)!r},size={int(size)}"


@dataclass
class SweepTable:
    lambdas: tuple
    sizes: tuple
    cells: dict = field(default_factory=dict)

    def cell(self, lam, size):
        return self.cells[(float(lam), int(size))]

    def rows(self):
        for lam in self.lambdas:
            for size in self.sizes:
                yield lam, size, self.cells[(lam, size)]

    def to_dict(self):
        return {
            "lambdas": list(self.lambdas),
            "sizes": list(self.sizes),
            "cells": [
                {"lambda": lam, "size": size, **c.to_dict()} for lam, size, c in self.rows()
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def sweep(lambdas, sizes, base, threads=1):
    """Run every ``(lambda, size)`` cell; the structure family comes from ``base.spec``."""
    lambdas = tuple(float(x) for x in lambdas)
    sizes = tuple(int(x) for x in sizes)
    if not lambdas or not sizes:
        raise InvalidParameterError("sweep grid is empty")
    if base.spec is None:
        raise InvalidParameterError("sweep needs a structure family in base.spec")
    cfgs = {}
    jobs = []
    for lam in lambdas:
        for size in sizes:
            cfg = replace(base, lam=lam, spec=spec_for_size(base.spec, size), cell_id=_cell_id(lam, size))
            cfgs[(lam, size)] = cfg
            jobs.extend((cfg, i) for i in range(cfg.trials))
    outcomes = _map_ordered(jobs, threads)
    table = SweepTable(lambdas, sizes)
    pos = 0
    for key, cfg in cfgs.items():
        table.cells[key] = aggregate(cfg, outcomes[pos:pos + cfg.trials])
        pos += cfg.trials
    return table


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))


def emit_csv(table, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for lam, size, c in table.rows():
            w.writerow([_fmt(lam), size, c.trials, _fmt(c.fpr), _fmt(c.fnr), _fmt(c.mean_overlap_fraction)])


def svg_heatmap(table, metric):
    """Grayscale heatmap as SVG text: rows are lambda values, columns sizes, black = 1."""
    if metric not in METRICS:
        raise InvalidParameterError(f"metric must be one of {METRICS}, got {metric!r}")
    cw, ch, left, top = 60, 30, 90, 40
    width = left + cw * len(table.sizes) + 10
    height = top + ch * len(table.lambdas) + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="11">',
        f'<text x="{left}" y="14">{metric}</text>',
    ]
    for j, size in enumerate(table.sizes):
        out.append(f'<text x="{left + j * cw + cw // 2}" y="{top - 6}" text-anchor="middle">{size}</text>')
    for i, lam in enumerate(table.lambdas):
        y = top + i * ch
        out.append(f'<text x="{left - 6}" y="{y + ch // 2 + 4}" text-anchor="end">{lam:g}</text>')
        for j, size in enumerate(table.sizes):
            v = getattr(table.cells[(lam, size)], metric)
            if v is None:
                fill = "none"
                label = "n/a"
            else:
                level = round(255 * (1.0 - min(max(v, 0.0), 1.0)))
                fill = f"rgb({level},{level},{level})"
                label = f"{v:.2f}"
            out.append(
                f'<rect x="{left + j * cw}" y="{y}" width="{cw}" height="{ch}" fill="{fill}" stroke="gray">'
                f"<title>lambda={lam:g} size={size} {metric}={label}</title></rect>"
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_heatmap(table, metric, path):
    text = svg_heatmap(table, metric)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def config_from_json(obj):
    """Build ``(lambdas, sizes, base TrialConfig)`` from a sweep config mapping.

    Keys: ``n``, ``lambdas``, ``sizes``, ``structure`` (line|star|dary),
    ``detector``, optional ``D`` for dary, ``reconstructor``, ``trials``,
    ``master_seed``.
    """
    try:
        kind = obj["structure"]
        sizes = [int(s) for s in obj["sizes"]]
        lambdas = [float(x) for x in obj["lambdas"]]
        n = int(obj["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameterError(f"bad sweep config: {exc!r}") from None
    if not sizes or not lambdas:
        raise InvalidParameterError("sweep grid is empty")
    if kind == "line":
        template = Line(max(2, sizes[0]))
    elif kind == "star":
        template = Star(max(1, sizes[0]))
    elif kind == "dary":
        template = DaryTree(int(obj.get("D", 2)), max(0, sizes[0]))
    else:
        raise InvalidParameterError(f"unknown structure {kind!r}")
    base = TrialConfig(
        n=n,
        lam=lambdas[0],
        spec=template,
        detector=obj.get("detector", "kpath"),
        reconstructor=obj.get("reconstructor"),
        master_seed=int(obj.get("master_seed", 0)),
        trials=int(obj.get("trials", 100)),
    )
    return lambdas, sizes, base
