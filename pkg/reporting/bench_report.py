import logging
from typing import Any, Dict

from stages.stage4_bench import BenchReport

logger = logging.getLogger("LDGCN")


def bench_report_data(report: BenchReport) -> Dict[str, Any]:
    return {
        "rows": [
            {
                "n": r.n,
                "m": r.m,
                "K": r.K,
                "d": r.d,
                "sparse_madds": r.sparse_madds,
                "dense_madds": r.dense_madds,
                "madds": r.madds,
                "wall_ms": r.wall_ms,
            }
            for r in report.rows
        ],
        "r_squared": report.r_squared(),
        "time_ratio": report.time_ratio(),
    }


def render_bench_report(report: BenchReport) -> str:
    """One aligned row per edge count, then the linear-fit summary."""
    header = f"{'n':>6} {'m':>8} {'K':>3} {'sparse':>12} {'dense':>12} {'madds':>12} {'ms':>10}"
    lines = [header, "-" * len(header)]
    for r in report.rows:
        lines.append(
            f"{r.n:>6} {r.m:>8} {r.K:>3} {r.sparse_madds:>12} {r.dense_madds:>12} {r.madds:>12} {r.wall_ms:>10.3f}"
        )
    span = report.rows[-1].m / report.rows[0].m
    lines.append("")
    lines.append(f"R^2 of multiply-adds vs m: {report.r_squared():.12f}")
    lines.append(f"wall time grew {report.time_ratio():.2f}x over a {span:g}x range of m")
    return "\n".join(lines) + "\n"
