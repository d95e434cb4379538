"""Tab-separated output with a provenance header.

Layout::

    # config-json {"command": "bounds", "seed": 0, ...}
    col_a<TAB>col_b
    1<TAB>0.5

Floats are written with ``repr`` so reading a file back gives the exact
values that were written.
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import IO, Any, Dict, List, Sequence

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# config-json "


class TsvFormatError(ValueError):
    """Raised when a TSV file does not follow the provenance layout."""


@dataclass
class TsvTable:
    header: Dict[str, Any]
    columns: List[str]
    rows: List[List[Any]]

    def column(self, name: str) -> List[Any]:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise TsvFormatError(f"No column '{name}'") from None
        return [row[idx] for row in self.rows]


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "item"):
        return _format_cell(value.item())
    return str(value)


def _parse_cell(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def format_tsv(header: Dict[str, Any], columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Render a table; every row must have one cell per column."""
    lines = [HEADER_PREFIX + json.dumps(header, sort_keys=True, default=str), "\t".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise TsvFormatError(f"Row has {len(row)} cells for {len(columns)} columns")
        lines.append("\t".join(_format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_tsv(stream: IO[str], header: Dict[str, Any], columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    stream.write(format_tsv(header, columns, rows))
    logger.debug("Wrote TSV with %d rows", len(rows))


def parse_tsv(text: str) -> TsvTable:
    """Parse text produced by format_tsv.

    Raises:
        TsvFormatError: On a missing header, a missing column line or ragged rows
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith(HEADER_PREFIX):
        raise TsvFormatError("Missing '# config-json' header line")
    try:
        header = json.loads(lines[0][len(HEADER_PREFIX):])
    except json.JSONDecodeError as e:
        raise TsvFormatError(f"Header is not JSON: {e}") from e
    if len(lines) < 2:
        raise TsvFormatError("Missing column line")
    columns = lines[1].split("\t")
    rows = []
    for number, line in enumerate(lines[2:], start=3):
        cells = line.split("\t")
        if len(cells) != len(columns):
            raise TsvFormatError(f"Line {number} has {len(cells)} cells for {len(columns)} columns")
        rows.append([_parse_cell(c) for c in cells])
    return TsvTable(header, columns, rows)


def read_tsv(path: str) -> TsvTable:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_tsv(handle.read())
