"""Mesh-refinement studies: discrete solves and interpolation errors per level."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from ..assembly import ProblemParams, SolveStats, SolverError, assemble, solve_saddle
from ..fespace import build_space
from ..mesh import unit_cube_mesh
from .interpolation import interpolate_R
from .manufactured import get_example
from .norms import ErrorReport, error_norms, field_l2_norm, function_l2_norm

RATE_KEYS = ("l2", "curl_l2", "curl_h1", "energy", "gradcurl", "energy_sum")


@dataclass(frozen=True)
class StudyConfig:
    example: str = "layer"
    params: ProblemParams = field(default_factory=ProblemParams)
    r: int = 1
    levels: tuple[int, ...] = (2, 3, 4)
    solver: str = "auto"
    tol: float = 1e-10
    quad: int = 6

    def __post_init__(self):
        if self.r not in (1, 2):
            raise ValueError("r must be 1 or 2")
        if not self.levels or min(self.levels) < 1:
            raise ValueError("levels must be positive")
        if list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be strictly increasing")


@dataclass
class ConvergenceRecord:
    level: int
    h: float
    ndofs: int
    errors: ErrorReport
    rates: dict[str, float | None]
    p_norm: float = 0.0
    f_norm: float = 0.0
    stats: SolveStats | None = None
    seconds: float = 0.0


def observed_rate(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float | None:
    if e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def _with_rates(records: list[ConvergenceRecord]) -> list[ConvergenceRecord]:
    prev = None
    for rec in records:
        if prev is None:
            rec.rates = {k: None for k in RATE_KEYS}
        else:
            rec.rates = {
                k: observed_rate(getattr(prev.errors, k), getattr(rec.errors, k), prev.h, rec.h)
                for k in RATE_KEYS
            }
        prev = rec
    return records


def solve_level(config: StudyConfig, level: int) -> ConvergenceRecord:
    t0 = time.perf_counter()
    m = unit_cube_mesh(2**level)
    V = build_space(m, "V", config.r)
    S = build_space(m, "S", config.r)
    exact = get_example(config.example, config.params)
    sys = assemble(config.params, V, S, exact.f, rhs_quad=config.quad)
    try:
        u, p, stats = solve_saddle(sys, tol=config.tol, method=config.solver)
    except SolverError as exc:
        raise SolverError(f"level {level}: {exc}") from exc
    errs = error_norms(exact, u, config.params, quad=config.quad)
    return ConvergenceRecord(
        level=level,
        h=2.0**-level,
        ndofs=sys.n_u + sys.n_p,
        errors=errs,
        rates={},
        p_norm=field_l2_norm(p, config.quad),
        f_norm=function_l2_norm(exact.f, m, config.quad),
        stats=stats,
        seconds=time.perf_counter() - t0,
    )


def convergence_study(config: StudyConfig, progress=None) -> list[ConvergenceRecord]:
    records = []
    for level in config.levels:
        rec = solve_level(config, level)
        records.append(rec)
        if progress is not None:
            progress(rec)
    return _with_rates(records)


def interpolation_study(config: StudyConfig, progress=None) -> list[ConvergenceRecord]:
    """Errors of R_h u for the configured example, no linear solve."""
    exact = get_example(config.example, config.params)
    records = []
    for level in config.levels:
        t0 = time.perf_counter()
        m = unit_cube_mesh(2**level)
        V = build_space(m, "V", config.r)
        Ru = interpolate_R(exact.u, exact.curl_u, V, n=config.quad)
        rec = ConvergenceRecord(
            level=level,
            h=2.0**-level,
            ndofs=V.ndofs,
            errors=error_norms(exact, Ru, config.params, quad=config.quad),
            rates={},
            seconds=time.perf_counter() - t0,
        )
        records.append(rec)
        if progress is not None:
            progress(rec)
    return _with_rates(records)
