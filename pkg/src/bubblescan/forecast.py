"""Critical-time quantile windows and the canonical forecast document.

Document layout (UTF-8, LF line endings, tab-separated):

    bubblescan-forecast<TAB>1
    tool_version<TAB><version>
    created_on<TAB><YYYY-MM-DD>
    methodology<TAB><free text>
    columns<TAB>category<TAB>asset<TAB>ticker<TAB>t_c 20% - 80%<TAB>t_c 5% - 95%<TAB>t2<TAB>n_fits<TAB>filter<TAB>grid
    row<TAB>...one line per record, same column order...

Windows render as ``YYYY-MM-DD - YYYY-MM-DD``; the ticker column carries the
source tag as ``TICKER (S)``; ``filter`` and ``grid`` are compact JSON with
sorted keys. Rows are sorted by category (Index, Equity, Commodity, Forex)
then asset name.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .bootstrap import TcEnsemble
from .errors import NoBubbleSignal, ParseError
from .market_data import AssetMeta

CATEGORIES = ("Index", "Equity", "Commodity", "Forex")
FORMAT_NAME = "bubblescan-forecast"
FORMAT_VERSION = "1"
COLUMNS = ("category", "asset", "ticker", "t_c 20% - 80%", "t_c 5% - 95%", "t2", "n_fits", "filter", "grid")
QUANTILE_LEVELS = (0.05, 0.20, 0.80, 0.95)
METHODOLOGY_NOTE = (
    "t_c windows are nearest-rank (ceiling) empirical quantiles of the critical times of "
    "qualified original and residual-bootstrap LPPL fits; calendar dates are floor(t_c)"
)

_TICKER_RE = re.compile(r"^(.*?) ?\(([^()]*)\)$")


def nearest_rank(values: Sequence[float], levels: Sequence[float]) -> list[float]:
    """Empirical quantiles without interpolation: the ceil(p*n)-th smallest value."""
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.shape[0]
    if n == 0:
        raise NoBubbleSignal("no critical times to take quantiles of")
    out = []
    for p in levels:
        if not 0.0 < p < 1.0:
            raise ValueError(f"quantile level must be in (0, 1), got {p}")
        # exact decimal arithmetic so that e.g. 0.7 * 10 ranks as 7, not 8
        rank = max(math.ceil(Fraction(str(p)) * n), 1)
        out.append(float(ordered[rank - 1]))
    return out


def tc_quantiles(ensemble: TcEnsemble, levels: Sequence[float] = QUANTILE_LEVELS) -> list[float]:
    if list(levels) != sorted(levels):
        raise ValueError("levels must be sorted ascending")
    if len(ensemble) == 0:
        raise NoBubbleSignal("empty ensemble")
    return nearest_rank(ensemble.tc_values, levels)


def _check_text(value: str, name: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise ValueError(f"{name} may not contain tabs or line breaks: {value!r}")
    return value


@dataclass(frozen=True)
class ForecastRecord:
    category: str
    asset: str
    ticker: str
    source: str
    t2: date
    n_fits: int
    window_20_80: tuple
    window_5_95: tuple
    filter_echo: dict = field(default_factory=dict)
    grid_echo: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {self.category!r}")
        for name in ("asset", "ticker", "source"):
            _check_text(getattr(self, name), name)
        if self.n_fits < 1:
            raise ValueError("n_fits must be >= 1")
        (a, b), (c, d) = self.window_20_80, self.window_5_95
        if not (a <= b and c <= d):
            raise ValueError("window start after window end")
        if not (c <= a and b <= d):
            raise ValueError("the 5%-95% window must contain the 20%-80% window")

    @property
    def ticker_label(self) -> str:
        if not self.source:
            return self.ticker
        return f"{self.ticker} ({self.source})" if self.ticker else f"({self.source})"

    def sort_key(self):
        return CATEGORIES.index(self.category), self.asset, self.ticker, self.source

    def as_dict(self) -> dict:
        return {
            "category": self.category,
            "asset": self.asset,
            "ticker": self.ticker,
            "source": self.source,
            "t2": self.t2.isoformat(),
            "n_fits": self.n_fits,
            "window_20_80": [self.window_20_80[0].isoformat(), self.window_20_80[1].isoformat()],
            "window_5_95": [self.window_5_95[0].isoformat(), self.window_5_95[1].isoformat()],
            "filter": self.filter_echo,
            "grid": self.grid_echo,
        }


@dataclass(frozen=True)
class ForecastDocument:
    records: tuple
    created_on: date
    methodology_note: str = METHODOLOGY_NOTE
    tool_version: str = __version__

    def __post_init__(self):
        _check_text(self.methodology_note, "methodology_note")
        _check_text(self.tool_version, "tool_version")
        object.__setattr__(self, "records", tuple(sorted(self.records, key=ForecastRecord.sort_key)))

    def as_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "format_version": FORMAT_VERSION,
            "tool_version": self.tool_version,
            "created_on": self.created_on.isoformat(),
            "methodology": self.methodology_note,
            "records": [r.as_dict() for r in self.records],
        }


def tau_to_date(origin: date, tau: float) -> date:
    return origin + timedelta(days=math.floor(tau))


def make_forecast(meta: AssetMeta, ensemble: TcEnsemble, grid_echo: dict | None = None,
                  filter_echo: dict | None = None) -> ForecastRecord:
    q05, q20, q80, q95 = tc_quantiles(ensemble, QUANTILE_LEVELS)
    to_date = lambda tau: tau_to_date(ensemble.origin, tau)
    return ForecastRecord(
        category=meta.category,
        asset=meta.name,
        ticker=meta.ticker,
        source=meta.source,
        t2=ensemble.t2,
        n_fits=len(ensemble),
        window_20_80=(to_date(q20), to_date(q80)),
        window_5_95=(to_date(q05), to_date(q95)),
        filter_echo=dict(filter_echo or {}),
        grid_echo=dict(grid_echo or {}),
    )


def _compact(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _window(w) -> str:
    return f"{w[0].isoformat()} - {w[1].isoformat()}"


def record_row(record: ForecastRecord) -> str:
    cells = (
        record.category,
        record.asset,
        record.ticker_label,
        _window(record.window_20_80),
        _window(record.window_5_95),
        record.t2.isoformat(),
        str(record.n_fits),
        _compact(record.filter_echo),
        _compact(record.grid_echo),
    )
    return "\t".join(("row",) + cells)


def render_document(doc: ForecastDocument) -> bytes:
    lines = [
        f"{FORMAT_NAME}\t{FORMAT_VERSION}",
        f"tool_version\t{doc.tool_version}",
        f"created_on\t{doc.created_on.isoformat()}",
        f"methodology\t{doc.methodology_note}",
        "\t".join(("columns",) + COLUMNS),
    ]
    lines.extend(record_row(r) for r in doc.records)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_window(text: str, lineno: int) -> tuple:
    parts = text.split(" - ")
    if len(parts) != 2:
        raise ParseError(f"bad window {text!r}", line=lineno)
    try:
        return date.fromisoformat(parts[0]), date.fromisoformat(parts[1])
    except ValueError:
        raise ParseError(f"bad window {text!r}", line=lineno) from None


def _expect(lines, idx, key):
    parts = lines[idx].split("\t", 1)
    if len(parts) != 2 or parts[0] != key:
        raise ParseError(f"expected {key!r} line", line=idx + 1)
    return parts[1]


def parse_document(data: bytes) -> ForecastDocument:
    """Inverse of :func:`render_document`."""
    text = data.decode("utf-8")
    if not text.endswith("\n"):
        raise ParseError("document must end with a newline")
    lines = text[:-1].split("\n")
    if len(lines) < 5:
        raise ParseError("truncated document")
    if _expect(lines, 0, FORMAT_NAME) != FORMAT_VERSION:
        raise ParseError("unsupported format version", line=1)
    tool_version = _expect(lines, 1, "tool_version")
    try:
        created_on = date.fromisoformat(_expect(lines, 2, "created_on"))
    except ValueError:
        raise ParseError("bad created_on", line=3) from None
    methodology = _expect(lines, 3, "methodology")
    if lines[4] != "\t".join(("columns",) + COLUMNS):
        raise ParseError("unexpected column header", line=5)

    records = []
    for idx in range(5, len(lines)):
        lineno = idx + 1
        cells = lines[idx].split("\t")
        if len(cells) != len(COLUMNS) + 1 or cells[0] != "row":
            raise ParseError("malformed row", line=lineno)
        category, asset, ticker_label, w2080, w595, t2, n_fits, flt, grid = cells[1:]
        m = _TICKER_RE.match(ticker_label)
        ticker, source = (m.group(1), m.group(2)) if m else (ticker_label, "")
        try:
            record = ForecastRecord(
                category=category,
                asset=asset,
                ticker=ticker,
                source=source,
                t2=date.fromisoformat(t2),
                n_fits=int(n_fits),
                window_20_80=_parse_window(w2080, lineno),
                window_5_95=_parse_window(w595, lineno),
                filter_echo=json.loads(flt),
                grid_echo=json.loads(grid),
            )
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        records.append(record)
    return ForecastDocument(tuple(records), created_on, methodology, tool_version)


def document_to_json(doc: ForecastDocument) -> str:
    return json.dumps(doc.as_dict(), indent=2, ensure_ascii=False) + "\n"
