"""Preset evaluation runs: minimum tables over standard grids and rate curves.

Table presets sweep the guessing probability over a published grid of
walker dimensions; curve presets turn the resulting gammas into analytic
rate-versus-N series at several noise levels, plugging the expected test
weight Q straight into the formulas.  Everything is deterministic, so
re-running a preset reproduces its output byte for byte.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qwrng.maxprob import MaxProbResult, SweepGrid, g_functions
from qwrng.rates import ProtocolCase, ProtocolParams, case_for_mode, rate_for_mode
from qwrng.walk import FlipOperator, MeasurementMode

_ALL = MeasurementMode.ALL
_MEM = MeasurementMode.MEMORY_ONLY
_POS = MeasurementMode.POSITION_ONLY

_P_FULL = (3, 5, 11, 21, 51)
_P_SMALL = (3, 5, 11, 21)
_NOISE_WIDE = (0.0, 0.15, 0.2, 0.3)
_NOISE_NARROW = (0.0, 0.15, 0.2)

# published sweep minima, used to annotate preset rows; single-coin walks
# read the same value through the memory and position marginals
REFERENCE_VALUES: dict[tuple[str, str], dict[tuple[int, int], float]] = {
    ("hadamard", "all"): {
        (1, 3): 0.2224, (1, 5): 0.1474, (1, 11): 0.0983, (1, 21): 0.0642, (1, 51): 0.0367,
        (2, 3): 0.1250, (2, 5): 0.1249, (2, 11): 0.0995, (2, 21): 0.1044, (2, 51): 0.1057,
        (3, 3): 0.0570, (3, 5): 0.0535, (3, 11): 0.0450, (3, 21): 0.0282, (3, 51): 0.0190,
        (4, 3): 0.0312, (4, 5): 0.0312, (4, 11): 0.0312, (4, 21): 0.0272, (4, 51): 0.0274,
    },
    ("hadamard", "memory"): {
        (1, 3): 0.3634, (1, 5): 0.2447, (1, 11): 0.1358, (1, 21): 0.0919, (1, 51): 0.0517,
        (2, 3): 0.2500, (2, 5): 0.1875, (2, 11): 0.1378, (2, 21): 0.1342, (2, 51): 0.1377,
        (3, 3): 0.1120, (3, 5): 0.0656, (3, 11): 0.0524, (3, 21): 0.0374, (3, 51): 0.0233,
        (4, 3): 0.0625, (4, 5): 0.0617, (4, 11): 0.0453, (4, 21): 0.0340, (4, 51): 0.0314,
    },
    ("hadamard", "position"): {
        (1, 3): 0.3634, (1, 5): 0.2447, (1, 11): 0.1358, (1, 21): 0.0919, (1, 51): 0.0517,
        (2, 3): 0.3336, (2, 5): 0.2570, (2, 11): 0.1831, (2, 21): 0.1692, (2, 51): 0.1701,
        (3, 3): 0.3400, (3, 5): 0.2165, (3, 11): 0.1186, (3, 21): 0.0778, (3, 51): 0.0379,
        (4, 3): 0.3437, (4, 5): 0.2055, (4, 11): 0.1230, (4, 21): 0.0808, (4, 51): 0.0709,
    },
    ("general", "all"): {
        (1, 3): 0.1729, (1, 5): 0.1133, (1, 11): 0.0534, (1, 21): 0.0420,
        (2, 3): 0.1228, (2, 5): 0.1251, (2, 11): 0.0799, (2, 21): 0.0709,
        (3, 3): 0.0614, (3, 5): 0.0402, (3, 11): 0.0274, (3, 21): 0.0192,
    },
    ("general", "memory"): {
        (1, 3): 0.3334, (1, 5): 0.2017, (1, 11): 0.0952, (1, 21): 0.0617,
        (2, 3): 0.1751, (2, 5): 0.1615, (2, 11): 0.1082, (2, 21): 0.0743,
        (3, 3): 0.0898, (3, 5): 0.0661, (3, 11): 0.0417, (3, 21): 0.0264,
    },
    ("general", "position"): {
        (1, 3): 0.3334, (1, 5): 0.2017, (1, 11): 0.0952, (1, 21): 0.0617,
        (2, 3): 0.3340, (2, 5): 0.2197, (2, 11): 0.1275, (2, 21): 0.0834,
        (3, 3): 0.3336, (3, 5): 0.2097, (3, 11): 0.1039, (3, 21): 0.0642,
    },
}


def reference_value(coin_kind: str, mode: MeasurementMode, kappa: int, P: int) -> float | None:
    return REFERENCE_VALUES.get((coin_kind, mode.value), {}).get((kappa, P))


def default_signal_grid(points: int = 40, lo: float = 1e3, hi: float = 1e10) -> tuple[int, ...]:
    """Log-spaced signal counts, deduplicated after rounding to integers."""
    grid = np.logspace(math.log10(lo), math.log10(hi), points)
    out: list[int] = []
    for v in grid:
        n = int(round(v))
        if not out or n > out[-1]:
            out.append(n)
    return tuple(out)


@dataclass(frozen=True)
class ExperimentSpec:
    """One preset: sweep cells, noise levels, signal grid, security knobs."""

    name: str
    cases: tuple[tuple[int, int, MeasurementMode, SweepGrid], ...]
    noise_levels: tuple[float, ...] = ()
    N_grid: tuple[int, ...] = ()
    epsilon: float = 1e-7
    epsilon_pa: float = 1e-6
    beta: float = 0.25


@dataclass(frozen=True)
class TableRow:
    kappa: int
    P: int
    mode: MeasurementMode
    value: float
    t: int
    theta: float | None
    phi: float | None
    flip: FlipOperator
    reference: float | None
    deviation: float | None


@dataclass(frozen=True)
class ResultTable:
    name: str
    rows: tuple[TableRow, ...]
    grid: SweepGrid


@dataclass(frozen=True)
class CurvePoint:
    case: ProtocolCase
    kappa: int
    P: int
    Q: float
    N: int
    rate: float


@dataclass(frozen=True)
class RateCurve:
    name: str
    points: tuple[CurvePoint, ...]


_TABLE_LAYOUTS: dict[str, tuple[tuple[int, ...], tuple[int, ...], tuple[MeasurementMode, ...], str]] = {
    "table1": ((2, 3, 4), _P_FULL, (_ALL,), "hadamard"),
    "table2": ((1, 2, 3), _P_SMALL, (_ALL,), "general"),
    "table3": ((2, 3, 4), _P_FULL, (_MEM,), "hadamard"),
    "table4": ((1, 2, 3), _P_SMALL, (_MEM,), "general"),
    "table5": ((2, 3, 4), _P_FULL, (_POS,), "hadamard"),
    "table6": ((1, 2, 3), _P_SMALL, (_POS,), "general"),
    "kappa1": ((1,), _P_FULL, (_ALL, _MEM, _POS), "hadamard"),
}

_FIG_LAYOUTS: dict[str, tuple[tuple[int, ...], tuple[int, ...], MeasurementMode, str, tuple[float, ...]]] = {
    "fig1": ((1, 3), _P_FULL, _ALL, "hadamard", _NOISE_WIDE),
    "fig2": ((2, 4), _P_FULL, _ALL, "hadamard", _NOISE_WIDE),
    "fig3": ((1, 2, 3), _P_SMALL, _ALL, "general", _NOISE_WIDE),
    "fig4": ((1, 2, 3, 4), _P_FULL, _MEM, "hadamard", _NOISE_NARROW),
    "fig5": ((1, 2, 3), _P_SMALL, _MEM, "general", _NOISE_NARROW),
    "fig6": ((1, 2, 3, 4), _P_FULL, _POS, "hadamard", _NOISE_NARROW),
    "fig7": ((1, 2, 3), _P_SMALL, _POS, "general", _NOISE_NARROW),
}

PRESET_NAMES: tuple[str, ...] = tuple(_TABLE_LAYOUTS) + tuple(_FIG_LAYOUTS)


def _grid_for(coin_kind: str, R: int | None, t_max: int | None) -> SweepGrid:
    if coin_kind == "hadamard":
        return SweepGrid(t_min=1, t_max=t_max or 2000)
    return SweepGrid(t_min=1, t_max=t_max or 1000, R=R or 16)


def preset(name: str, R: int | None = None, t_max: int | None = None) -> ExperimentSpec:
    """Look up a preset by name; R and t_max override the default grid."""
    if name in _TABLE_LAYOUTS:
        kappas, Ps, modes, kind = _TABLE_LAYOUTS[name]
        grid = _grid_for(kind, R, t_max)
        cases = tuple(
            (P, k, mode, grid) for mode in modes for k in kappas for P in Ps
        )
        return ExperimentSpec(name=name, cases=cases)
    if name in _FIG_LAYOUTS:
        kappas, Ps, mode, kind, noises = _FIG_LAYOUTS[name]
        grid = _grid_for(kind, R, t_max)
        cases = tuple((P, k, mode, grid) for k in kappas for P in Ps)
        return ExperimentSpec(
            name=name, cases=cases, noise_levels=noises, N_grid=default_signal_grid()
        )
    raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


# sweep results keyed by (P, kappa, mode, grid); a cache miss runs one
# evolution pass and stores all three modes, since they share it anyway
_sweep_cache: dict[tuple[int, int, MeasurementMode, SweepGrid], MaxProbResult] = {}


def g_function_cached(
    P: int, kappa: int, mode: MeasurementMode, grid: SweepGrid, threads: int = 1
) -> MaxProbResult:
    key = (P, kappa, mode, grid)
    if key not in _sweep_cache:
        for m, res in g_functions(P, kappa, grid, threads=threads).items():
            _sweep_cache[(P, kappa, m, grid)] = res
    return _sweep_cache[key]


def run_table(spec: ExperimentSpec | str, threads: int = 1) -> ResultTable:
    """Evaluate every cell of a table preset, annotating published values."""
    if isinstance(spec, str):
        spec = preset(spec)
    if not spec.cases:
        raise ValueError("spec has no cases")
    rows = []
    for P, kappa, mode, grid in spec.cases:
        res = g_function_cached(P, kappa, mode, grid, threads=threads)
        kind = "hadamard" if grid.R is None else "general"
        ref = reference_value(kind, mode, kappa, P)
        rows.append(
            TableRow(
                kappa=kappa,
                P=P,
                mode=mode,
                value=res.value,
                t=res.at_t,
                theta=res.at_theta,
                phi=res.at_phi,
                flip=res.at_flip,
                reference=ref,
                deviation=None if ref is None else res.value - ref,
            )
        )
    return ResultTable(name=spec.name, rows=tuple(rows), grid=spec.cases[0][3])


def run_rate_curve(spec: ExperimentSpec | str, threads: int = 1) -> RateCurve:
    """Analytic rate-versus-N series for every (cell, noise) pair of a preset."""
    if isinstance(spec, str):
        spec = preset(spec)
    if not spec.cases or not spec.noise_levels or not spec.N_grid:
        raise ValueError("curve spec needs cases, noise levels and a signal grid")
    points = []
    for P, kappa, mode, grid in spec.cases:
        res = g_function_cached(P, kappa, mode, grid, threads=threads)
        gamma = res.gamma
        for Q in spec.noise_levels:
            for N in spec.N_grid:
                params = ProtocolParams(
                    N=N, epsilon=spec.epsilon, epsilon_pa=spec.epsilon_pa,
                    beta=spec.beta, Q=Q,
                )
                rr = rate_for_mode(params, gamma, P, kappa, mode)
                if rr.rate > gamma + 1e-9:
                    raise AssertionError("rate exceeded its asymptote; formula misuse")
                points.append(
                    CurvePoint(case=case_for_mode(mode), kappa=kappa, P=P, Q=Q, N=N, rate=rr.rate)
                )
    return RateCurve(name=spec.name, points=tuple(points))


_TABLE_HEADER = ("kappa", "P", "mode", "value", "t", "theta", "phi", "flip")
_CURVE_HEADER = ("case", "kappa", "P", "Q", "N", "rate")


def _table_cells(result: ResultTable) -> list[tuple[str, ...]]:
    return [
        (
            str(r.kappa),
            str(r.P),
            r.mode.value,
            repr(r.value),
            str(r.t),
            "" if r.theta is None else repr(r.theta),
            "" if r.phi is None else repr(r.phi),
            r.flip.name,
        )
        for r in result.rows
    ]


def _curve_cells(result: RateCurve) -> list[tuple[str, ...]]:
    return [
        (p.case.value, str(p.kappa), str(p.P), repr(p.Q), str(p.N), repr(p.rate))
        for p in result.points
    ]


def emit(
    result: ResultTable | RateCurve,
    fmt: str = "csv",
    path: str | Path = ".",
    timestamp: bool = True,
) -> Path:
    """Write a result to `<name>[_<timestamp>].<ext>` under `path`.

    Column order is fixed; with timestamp=False re-emission of the same
    result is byte-identical.
    """
    if isinstance(result, ResultTable):
        header, cells = _TABLE_HEADER, _table_cells(result)
    elif isinstance(result, RateCurve):
        header, cells = _CURVE_HEADER, _curve_cells(result)
    else:
        raise TypeError(f"cannot emit {type(result).__name__}")
    if not cells:
        raise ValueError("nothing to emit")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")

    name = result.name
    if timestamp:
        name += time.strftime("_%Y%m%dT%H%M%S")
    out = Path(path) / f"{name}.{fmt}"
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(row) for row in cells]
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        doc = {"name": result.name, "rows": [dict(zip(header, row)) for row in cells]}
        out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return out


__all__ = [
    "ExperimentSpec",
    "TableRow",
    "ResultTable",
    "CurvePoint",
    "RateCurve",
    "PRESET_NAMES",
    "REFERENCE_VALUES",
    "reference_value",
    "default_signal_grid",
    "preset",
    "g_function_cached",
    "run_table",
    "run_rate_curve",
    "emit",
]
