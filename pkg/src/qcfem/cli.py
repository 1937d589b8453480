"""Command-line driver: verification suite, convergence and interpolation studies."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

CSV_COLUMNS = (
    "level", "h", "ndofs",
    "err_l2", "rate_l2",
    "err_curl", "rate_curl",
    "err_curl_h1", "rate_curl_h1",
    "err_energy", "rate_energy",
    "p_norm", "solver_iters", "seconds",
)
# CSV column -> ErrorReport field; err_energy carries the summed-norm energy
ERROR_FIELDS = {"l2": "l2", "curl": "curl_l2", "curl_h1": "curl_h1", "energy": "energy_sum"}
FORMATS = ("csv", "json", "svg")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


@dataclass(frozen=True)
class RunConfig:
    command: str
    r: int = 1
    eps: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    example: str = "smooth"
    levels: tuple[int, ...] = (2, 3, 4)
    solver: str = "auto"
    tol: float = 1e-10
    quad: int = 6
    out: str | None = None
    formats: tuple[str, ...] = FORMATS
    timings: bool = False


def parse_levels(text: str) -> tuple[int, ...]:
    """``"2..4"`` or ``"2,3,5"`` to a strictly increasing tuple of levels."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split(".."))
            levels = tuple(range(lo, hi + 1))
        else:
            levels = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}") from None
    if not levels or min(levels) < 1 or list(levels) != sorted(set(levels)):
        raise argparse.ArgumentTypeError(f"levels must be increasing positive integers, got {text!r}")
    return levels


def parse_formats(text: str) -> tuple[str, ...]:
    fmts = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be a subset of {','.join(FORMATS)}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--r", type=int, choices=(1, 2), default=1, help="element order")
    common.add_argument("--eps", type=float, default=1.0)
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--beta", type=float, default=1.0)
    common.add_argument("--example", choices=("smooth", "layer"), default="smooth")
    common.add_argument("--levels", type=parse_levels, default=(2, 3, 4), help='e.g. "2..4" or "2,3"')
    common.add_argument("--solver", choices=("auto", "direct", "block", "krylov"), default="auto")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--quad", type=int, default=6, help="Gauss points per direction")
    common.add_argument("--out", default=None, help="output prefix; writes <out>.csv/.json/.svg")
    common.add_argument("--formats", type=parse_formats, default=FORMATS)
    common.add_argument("--timings", action="store_true", help="fill the seconds column (not reproducible)")

    p = argparse.ArgumentParser(prog="qcfem", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="structural checks, PASS/FAIL per check")
    sub.add_parser("convergence", parents=[common], help="solve on a sequence of meshes")
    sub.add_parser("solve", parents=[common], help="single solve at the finest level")
    sub.add_parser("interp-study", parents=[common], help="interpolation errors of R_h")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command, r=args.r, eps=args.eps, alpha=args.alpha, beta=args.beta,
        example=args.example, levels=args.levels, solver=args.solver, tol=args.tol,
        quad=args.quad, out=args.out, formats=args.formats, timings=args.timings,
    )


def validate(config: RunConfig) -> str | None:
    if config.eps < 0:
        return "--eps must be >= 0"
    if config.alpha <= 0 or config.beta < 0:
        return "--alpha must be > 0 and --beta >= 0"
    if config.tol <= 0:
        return "--tol must be positive"
    if config.quad < 1:
        return "--quad must be >= 1"
    if config.solver == "block" and config.beta == 0:
        return "--solver block needs --beta > 0"
    return None


# ------------------------------------------------------------------ output

def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    if isinstance(x, int):
        return str(x)
    return f"{x:.3e}"


def record_rows(records, timings: bool = False) -> list[dict[str, str]]:
    rows = []
    for rec in records:
        row = {"level": str(rec.level), "h": _fmt(rec.h), "ndofs": str(rec.ndofs)}
        for col, attr in ERROR_FIELDS.items():
            row[f"err_{col}"] = _fmt(getattr(rec.errors, attr))
            row[f"rate_{col}"] = _fmt(rec.rates.get(attr))
        row["p_norm"] = _fmt(rec.p_norm) if rec.stats is not None else ""
        row["solver_iters"] = str(rec.stats.iterations) if rec.stats is not None else ""
        row["seconds"] = _fmt(rec.seconds) if timings else ""
        rows.append(row)
    return rows


def to_csv(rows: list[dict[str, str]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def to_json(rows: list[dict[str, str]], meta: dict) -> str:
    def val(col, s):
        if s == "":
            return None
        return int(s) if col in ("level", "ndofs", "solver_iters") else float(s)

    data = {"meta": meta, "columns": list(CSV_COLUMNS),
            "rows": [{c: val(c, row[c]) for c in CSV_COLUMNS} for row in rows]}
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def to_svg(records, title: str = "", width: int = 560, height: int = 420) -> str:
    """log2(h) against log10(error), one polyline per norm plus slope guides."""
    series = {}
    for col, attr in ERROR_FIELDS.items():
        pts = [(math.log2(r.h), math.log10(getattr(r.errors, attr)))
               for r in records if getattr(r.errors, attr) > 0]
        if pts:
            series[col] = pts
    allp = [p for pts in series.values() for p in pts] or [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    span = max(x1 - x0, 1.0) * 2 * math.log10(2)  # room for a slope-2 guide
    y0, y1 = min(y0, y1 - span) - 0.2, y1 + 0.2
    ml, mr, mt, mb = 70, 130, 40, 50

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def sy(y):
        return mt + (y1 - y) / (y1 - y0) * (height - mt - mb)

    colors = {"l2": "#1f77b4", "curl": "#d62728", "curl_h1": "#2ca02c", "energy": "#9467bd"}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
        'fill="none" stroke="black"/>',
    ]
    for xt in range(math.ceil(x0), math.floor(x1) + 1):
        out.append(f'<text x="{sx(xt):.1f}" y="{height - mb + 18}" text-anchor="middle">2^{xt}</text>')
    for yt in range(math.ceil(y0), math.floor(y1) + 1):
        out.append(f'<text x="{ml - 8}" y="{sy(yt) + 4:.1f}" text-anchor="end">1e{yt}</text>')
    out.append(f'<text x="{(ml + width - mr) / 2:.1f}" y="{height - 10}" text-anchor="middle">h</text>')
    out.append(f'<text x="16" y="{(mt + height - mb) / 2:.1f}" '
               f'transform="rotate(-90 16 {(mt + height - mb) / 2:.1f})" text-anchor="middle">error</text>')
    # slope guides anchored at the finest h, at the bottom of the frame
    for k, slope in enumerate((0.5, 1.0, 2.0)):
        ya = y0 + 0.1 + 0.15 * k
        yb = ya + slope * (x1 - x0) * math.log10(2)
        out.append(f'<polyline class="guide" points="{sx(x0):.1f},{sy(ya):.1f} {sx(x1):.1f},{sy(yb):.1f}" '
                   'fill="none" stroke="gray" stroke-dasharray="4 3"/>')
        label = {0.5: "1/2", 1.0: "1", 2.0: "2"}[slope]
        out.append(f'<text x="{sx(x1) + 4:.1f}" y="{sy(yb) + 4:.1f}" fill="gray">slope {label}</text>')
    for i, (name, pts) in enumerate(series.items()):
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        c = colors[name]
        out.append(f'<polyline class="series" points="{coords}" fill="none" stroke="{c}" stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{c}"/>')
        ly = mt + 16 * i + 10
        out.append(f'<text x="{width - mr + 10}" y="{ly}" fill="{c}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(records, config: RunConfig, stream=None) -> list[Path]:
    stream = stream or sys.stdout
    if not records:
        raise ValueError("no records to emit")
    rows = record_rows(records, config.timings)
    written = []
    if config.out is None:
        stream.write(to_csv(rows))
        return written
    meta = {
        "command": config.command, "example": config.example, "r": config.r,
        "eps": config.eps, "alpha": config.alpha, "beta": config.beta,
        "solver": config.solver, "tol": config.tol, "quad": config.quad,
    }
    prefix = Path(config.out)
    if prefix.parent != Path(""):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    title = f"{config.example}, r={config.r}, eps={config.eps:g}"
    payloads = {"csv": to_csv(rows), "json": to_json(rows, meta), "svg": to_svg(records, title)}
    for fmt in config.formats:
        path = prefix.with_name(prefix.name + "." + fmt)
        path.write_text(payloads[fmt])
        written.append(path)
    return written


# --------------------------------------------------------------------- run

def _progress(rec) -> None:
    e = rec.errors
    print(f"level {rec.level}: ndofs={rec.ndofs} l2={e.l2:.3e} curl={e.curl_l2:.3e} "
          f"({rec.seconds:.1f}s)", file=sys.stderr, flush=True)


def run(config: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    from .analysis.convergence import StudyConfig, convergence_study, interpolation_study
    from .assembly import ProblemParams, SolverError

    if config.command == "verify":
        from .analysis.verify import run_verification

        results = run_verification(config.r)
        for res in results:
            print(res.line(), file=stream)
        return 0 if all(r.passed for r in results) else 1

    params = ProblemParams(config.eps, config.alpha, config.beta)
    levels = config.levels[-1:] if config.command == "solve" else config.levels
    study = StudyConfig(config.example, params, config.r, levels, config.solver, config.tol, config.quad)
    try:
        if config.command == "interp-study":
            records = interpolation_study(study, progress=_progress)
        else:
            records = convergence_study(study, progress=_progress)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config.command == "solve":
        rec = records[0]
        print(f"|u_h - u| = {rec.errors.l2:.3e}  |p_h| = {rec.p_norm:.3e}  |f| = {rec.f_norm:.3e}  "
              f"solver={rec.stats.method} residual={rec.stats.residual:.3e}", file=sys.stderr)
    try:
        for path in emit(records, config, stream):
            print(f"wrote {path}", file=sys.stderr)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 3
    return 0


def _cap_threads() -> None:
    n = os.environ.get("QCFEM_THREADS")
    if n and n.isdigit() and int(n) > 0:
        for var in THREAD_VARS:
            os.environ[var] = n


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = config_from_args(args)
    problem = validate(config)
    if problem:
        parser.error(problem)
    _cap_threads()
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
