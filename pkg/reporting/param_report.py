import logging
from pathlib import Path
from typing import List, Tuple

from layers.strategies import ParamReport, ParamRow, StackConfig, count_parameters
from utils.config import OUTPUT_DIR

logger = logging.getLogger("LDGCN")

_HEADER = ("strategy", "layer", "shape", "count", "total")


def _layer_label(row: ParamRow) -> str:
    if row.kind == "jump":
        return "jump"
    if row.kind == "proj":
        return f"b{row.block}.s{row.sub_block}.proj"
    if row.layer is None:
        return "shared"
    return f"b{row.block}.s{row.sub_block}.l{row.layer}"


def _shape(row: ParamRow) -> str:
    shape = f"{row.rows}x{row.cols}"
    return f"{row.groups}x{shape}" if row.groups > 1 else shape


def param_report_rows(report: ParamReport) -> List[Tuple[str, str, str, int, int]]:
    """Machine-readable rows: (strategy, layer, shape, count, running total)."""
    rows, running = [], 0
    for row in report.rows:
        running += row.count
        rows.append((report.strategy, _layer_label(row), _shape(row), row.count, running))
    return rows


def render_param_report(report: ParamReport) -> str:
    """Aligned text table followed by tab-separated rows."""
    rows = [tuple(str(v) for v in r) for r in param_report_rows(report)]
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(_HEADER)]

    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    text = [line(_HEADER), line("-" * w for w in widths)]
    text += [line(r) for r in rows]
    text.append("")
    text.append(
        f"conv parameters: {report.conv_total}  auxiliary: {report.aux_total}  total: {report.total}"
    )
    text.append("")
    text.append("\t".join(_HEADER))
    text += ["\t".join(r) for r in rows]
    return "\n".join(text) + "\n"


def report_params(cfg: StackConfig) -> str:
    report = count_parameters(cfg)
    logger.info(f"{cfg.strategy} encoder: {report.total} parameters ({report.conv_total} in convolutions).")
    return render_param_report(report)


def save_param_report(text: str, run_timestamp: str, output_dir=None) -> Path:
    output_dir = Path(output_dir or OUTPUT_DIR)
    output_dir.mkdir(parents=True, exist_ok=True)
    filename = output_dir / f"params-{run_timestamp}.txt"
    with open(filename, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info(f"Parameter report saved to {filename}")
    return filename
