"""Sweep drivers: convergence studies, the scaling identity check, and timing
benchmarks.  These produce plain records that the command line serializes."""

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import analytic
from .analysis import (
    FitResult,
    ReferenceSolution,
    analysis_grid,
    fit_algebraic,
    fit_spectral,
    reference_solution,
    rmse,
)
from .analytic import SourceSpec, scaled_parameters
from .dgcore import RunConfig, TransportSystem

VARIANTS = (
    "standard+static",
    "uncollided+static",
    "standard+moving",
    "uncollided+moving",
)
BASELINE = "standard+static"


def split_variant(variant: str):
    source_mode, mesh_mode = variant.split("+")
    return source_mode, mesh_mode


def variant_feasible(spec: SourceSpec, variant: str, n_cells: int) -> bool:
    """Whether a (variant, resolution) combination has a defined scheme."""
    source_mode, mesh_mode = split_variant(variant)
    if spec.kind == "mms":
        return variant == "standard+moving"
    if spec.kind == "plane-pulse" and variant == "standard+moving":
        return False
    if spec.kind in ("square-pulse", "square-source") and mesh_mode == "moving":
        return n_cells >= 4 and n_cells % 4 == 0
    return True


@dataclass
class SweepPoint:
    value: int  # the swept resolution (cells or order)
    order: int
    n_cells: int
    rmse: float
    wall_seconds: float
    steps_accepted: int
    steps_rejected: int


@dataclass
class VariantRecord:
    variant: str
    points: list
    fit: Optional[FitResult]
    skipped: list


@dataclass
class ConvergenceStudy:
    spec: SourceSpec
    sweep: str  # "cells" or "order"
    t_final: float
    n_angles: int
    grid: np.ndarray
    reference: ReferenceSolution
    records: dict  # variant -> VariantRecord

    def improvement_over_baseline(self, variant: str) -> Optional[float]:
        base = self.records.get(BASELINE)
        cand = self.records.get(variant)
        if not base or not cand or base.fit is None or cand.fit is None:
            return None
        return base.fit.intercept / cand.fit.intercept


def _solve_config(config: RunConfig, grid, phi_ref):
    system = TransportSystem(config)
    result = system.solve()
    err = rmse(system.scalar_flux(result.state, grid), phi_ref)
    return SweepPoint(
        value=0,
        order=config.order,
        n_cells=config.n_cells,
        rmse=err,
        wall_seconds=result.wall_seconds,
        steps_accepted=result.stats.steps_accepted,
        steps_rejected=result.stats.steps_rejected,
    )


def run_convergence(
    spec: SourceSpec,
    sweep: str,
    values,
    fixed: int,
    n_angles: int,
    t_final: float,
    variants=VARIANTS,
    cache_dir=None,
    rtol=5e-13,
    atol=1e-12,
) -> ConvergenceStudy:
    """Resolution sweep (over cells at fixed order, or over order at fixed
    cells) for each requested method variant against one shared reference."""
    if sweep not in ("cells", "order"):
        raise ValueError("sweep must be 'cells' or 'order'")
    values = sorted(int(v) for v in values)
    grid = analysis_grid(spec, t_final)
    max_cells = max(values) if sweep == "cells" else fixed
    ref = reference_solution(
        spec, t_final, grid, max_cells, n_angles, cache_dir=cache_dir
    )
    if spec.kind == "mms":
        variants = [v for v in variants if v == "standard+moving"] or [
            "standard+moving"
        ]
    records = {}
    for variant in variants:
        source_mode, mesh_mode = split_variant(variant)
        points, skipped = [], []
        for value in values:
            order = value if sweep == "order" else fixed
            n_cells = value if sweep == "cells" else fixed
            if not variant_feasible(spec, variant, n_cells):
                skipped.append(value)
                continue
            config = RunConfig(
                spec=spec,
                n_angles=n_angles,
                order=order,
                n_cells=n_cells,
                mesh_mode=mesh_mode,
                source_mode=source_mode,
                t_final=t_final,
                rtol=rtol,
                atol=atol,
            )
            point = _solve_config(config, grid, ref.phi)
            point.value = value
            points.append(point)
        fit = None
        if len(points) >= 2:
            vals = [p.value for p in points]
            errs = [p.rmse for p in points]
            if sweep == "cells":
                fit = fit_algebraic(vals, errs, ref.gate)
            else:
                fit = fit_spectral(vals, errs, ref.gate)
        records[variant] = VariantRecord(variant, points, fit, skipped)
    return ConvergenceStudy(
        spec, sweep, t_final, n_angles, grid, ref, records
    )


# ---------------------------------------------------------------------------
# Scaling identity check.


@dataclass
class ScaleCheckResult:
    spec: SourceSpec
    t_benchmark: float
    t_scaled: float
    grid: np.ndarray
    phi_direct: np.ndarray
    phi_scaled: np.ndarray
    max_abs_diff: float


def run_scalecheck(
    spec: SourceSpec,
    t_benchmark: float,
    order: int,
    n_cells: int,
    n_angles: int,
    variant: str = "uncollided+moving",
    rtol=5e-13,
    atol=1e-12,
) -> ScaleCheckResult:
    """Solve a c != 1 pulse directly and via the scaled c = 1 benchmark.

    The direct problem uses widths stretched by 1/c, runs to t/c, and its
    initial amplitude carries a factor c, which makes the two routes agree
    exactly in the continuum limit.
    """
    if spec.kind not in analytic.PULSE_KINDS:
        raise ValueError("the scaling identity only covers pulse problems")
    source_mode, mesh_mode = split_variant(variant)
    benchmark_spec = replace(spec, c=1.0)
    scaled_spec, t_scaled = scaled_parameters(spec, t_benchmark)

    common = dict(
        n_angles=n_angles,
        order=order,
        n_cells=n_cells,
        mesh_mode=mesh_mode,
        source_mode=source_mode,
        rtol=rtol,
        atol=atol,
    )
    bench_sys = TransportSystem(
        RunConfig(spec=benchmark_spec, t_final=t_benchmark, **common)
    )
    direct_sys = TransportSystem(RunConfig(spec=scaled_spec, t_final=t_scaled, **common))

    bench = bench_sys.solve()
    direct = direct_sys.solve()

    grid = analysis_grid(scaled_spec, t_scaled)
    phi_direct = direct_sys.scalar_flux(direct.state, grid)
    c = spec.c
    phi_scaled = (
        c
        * np.exp(-(1.0 - c) * t_scaled)
        * bench_sys.scalar_flux(bench.state, c * grid)
    )
    diff = float(np.max(np.abs(phi_direct - phi_scaled)))
    return ScaleCheckResult(
        spec, t_benchmark, t_scaled, grid, phi_direct, phi_scaled, diff
    )


# ---------------------------------------------------------------------------
# Timing benchmark.


@dataclass
class BenchRow:
    variant: str
    order: int
    n_cells: int
    mean_seconds: float
    rmse: float


def run_bench(
    spec: SourceSpec,
    sweep: str,
    values,
    fixed: int,
    n_angles: int,
    t_final: float,
    variant: str = "uncollided+moving",
    repeats: int = 5,
    cache_dir=None,
    rtol=5e-13,
    atol=1e-12,
):
    """Mean wall time over repeated solves at each resolution, with RMSE."""
    if sweep not in ("cells", "order"):
        raise ValueError("sweep must be 'cells' or 'order'")
    source_mode, mesh_mode = split_variant(variant)
    values = sorted(int(v) for v in values)
    grid = analysis_grid(spec, t_final)
    max_cells = max(values) if sweep == "cells" else fixed
    ref = reference_solution(
        spec, t_final, grid, max_cells, n_angles, cache_dir=cache_dir
    )
    rows = []
    for value in values:
        order = value if sweep == "order" else fixed
        n_cells = value if sweep == "cells" else fixed
        if not variant_feasible(spec, variant, n_cells):
            continue
        config = RunConfig(
            spec=spec,
            n_angles=n_angles,
            order=order,
            n_cells=n_cells,
            mesh_mode=mesh_mode,
            source_mode=source_mode,
            t_final=t_final,
            rtol=rtol,
            atol=atol,
        )
        times = []
        err = None
        for _ in range(repeats):
            system = TransportSystem(config)
            start = time.perf_counter()
            result = system.solve()
            times.append(time.perf_counter() - start)
            if err is None:
                err = rmse(system.scalar_flux(result.state, grid), ref.phi)
        rows.append(BenchRow(variant, order, n_cells, float(np.mean(times)), err))
    return rows
