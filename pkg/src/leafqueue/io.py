"""CSV, rate-file and plot I/O used by the command line tool."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .fitting import DegreeHistogram

__all__ = [
    "InputFormatError",
    "fmt",
    "read_histogram",
    "read_distribution",
    "read_rates_file",
    "write_csv",
    "write_plot",
]


class InputFormatError(ValueError):
    """A user-supplied file could not be parsed."""


def fmt(x) -> str:
    """Locale-independent float formatting with 10 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _read_table(path):
    text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputFormatError(f"{path}: file is empty")
    header = [h.strip().lower() for h in rows[0]]
    return header, rows[1:]


def _degree_column(path, header, rows, value_col, c_m):
    deg_idx = header.index("degree")
    val_idx = header.index(value_col)
    seen = {}
    for lineno, row in enumerate(rows, start=2):
        try:
            degree_f = float(row[deg_idx])
            value = float(row[val_idx])
        except (IndexError, ValueError):
            raise InputFormatError(f"{path}:{lineno}: malformed row {row!r}") from None
        if degree_f != int(degree_f) or degree_f < 0:
            raise InputFormatError(f"{path}:{lineno}: degree must be a non-negative integer")
        degree = int(degree_f)
        if c_m is not None and degree > c_m:
            raise InputFormatError(f"{path}:{lineno}: degree {degree} exceeds c_m={c_m}")
        if degree in seen:
            raise InputFormatError(f"{path}:{lineno}: degree {degree} listed twice")
        if not np.isfinite(value) or value < 0:
            raise InputFormatError(f"{path}:{lineno}: {value_col} must be finite and non-negative")
        seen[degree] = value
    if not seen:
        raise InputFormatError(f"{path}: no data rows")
    size = (c_m if c_m is not None else max(seen)) + 1
    out = np.zeros(size)
    for d, v in seen.items():
        out[d] = v
    return out


def read_histogram(path, c_m: int) -> DegreeHistogram:
    """Read a ``degree,count`` or ``degree,probability`` CSV.

    Degrees missing from the file get zero mass.
    """
    header, rows = _read_table(path)
    if "degree" not in header:
        raise InputFormatError(f"{path}: header must contain a 'degree' column")
    if "count" in header:
        values = _degree_column(path, header, rows, "count", c_m)
        builder = DegreeHistogram.from_counts
    elif "probability" in header:
        values = _degree_column(path, header, rows, "probability", c_m)
        builder = DegreeHistogram
    else:
        raise InputFormatError(f"{path}: header needs a 'count' or 'probability' column")
    try:
        return builder(values)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def read_distribution(path) -> np.ndarray:
    """Read the ``probability`` column of a degree-indexed CSV as written by this tool."""
    header, rows = _read_table(path)
    if "degree" not in header or "probability" not in header:
        raise InputFormatError(f"{path}: header must contain 'degree' and 'probability'")
    return _degree_column(path, header, rows, "probability", None)


def read_rates_file(path) -> dict[str, float]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputFormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InputFormatError(f"{path}:{lineno}: {value.strip()!r} is not a number") from None
    return out


def write_plot(path, curves: dict, *, svg: bool = True) -> list[Path]:
    """Write one ``degree,probability`` series per curve and a two-panel chart.

    ``path`` is a file stem; a trailing ``.svg`` is dropped. The chart has
    a linear and a log-y panel.
    """
    path = Path(path)
    stem = path.with_suffix("") if path.suffix.lower() == ".svg" else path
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for name, values in curves.items():
        out = stem.parent / f"{stem.name}_{name}.csv"
        write_csv(out, ["degree", "probability"], ((d, p) for d, p in enumerate(values)))
        written.append(out)
    if svg:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax_lin, ax_log) = plt.subplots(1, 2, figsize=(10, 4))
        for name, values in curves.items():
            values = np.asarray(values, dtype=float)
            degrees = np.arange(values.size)
            ax_lin.plot(degrees, values, marker=".", label=name)
            positive = values > 0
            ax_log.semilogy(degrees[positive], values[positive], marker=".", label=name)
        for ax in (ax_lin, ax_log):
            ax.set_xlabel("leaf degree")
            ax.set_ylabel("probability")
        ax_lin.legend()
        fig.tight_layout()
        out = stem.parent / f"{stem.name}.svg"
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(out)
    return written
