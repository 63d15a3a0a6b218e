"""OHLC candle series: parsing, validation, indexing.

Prices are read as exact decimals and stored as integer pipettes (tenths
of a pip) so that every downstream balance is exact integer arithmetic.

Two CSV dialects are read, chosen from the header line:

canonical::

    timestamp,open,high,low,close,volume
    2019-11-01T00:00:00Z,1.10000,1.10100,1.09900,1.10050,350

broker export (Dukascopy style)::

    Gmt time,Open,High,Low,Close,Volume
    01.11.2019 00:00:00.000,1.10000,1.10100,1.09900,1.10050,350

Only the canonical dialect is written back.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from decimal import Decimal, InvalidOperation
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyData,
    InvariantViolation,
    MalformedRow,
    NonMonotonicTimestamps,
    UnsupportedGranularity,
)

SECONDS_PER_DAY = 86400
CANONICAL_HEADER = "timestamp,open,high,low,close,volume"


@dataclass(frozen=True)
class Instrument:
    code: str
    pip_size: Decimal
    display_name: str = ""

    def __post_init__(self):
        pip = Decimal(str(self.pip_size))
        if not pip > 0:
            raise ConfigError(f"{self.code}: pip_size must be positive, got {pip}")
        object.__setattr__(self, "pip_size", pip)

    @property
    def pipette_size(self) -> Decimal:
        return self.pip_size / 10

    @property
    def price_decimals(self) -> int:
        """Number of decimals needed to write a price exactly."""
        return max(0, -self.pipette_size.normalize().as_tuple().exponent)

    def to_pipettes(self, price: Decimal) -> int:
        q = Decimal(price) / self.pipette_size
        if q != q.to_integral_value():
            raise ValueError(f"price {price} is finer than a pipette of {self.code}")
        return int(q)

    def from_pipettes(self, n: int) -> Decimal:
        return (Decimal(int(n)) * self.pipette_size).quantize(
            Decimal(1).scaleb(-self.price_decimals)
        )

    def __str__(self) -> str:
        return self.code


INSTRUMENTS: dict[str, Instrument] = {
    i.code: i
    for i in (
        Instrument("EURUSD", Decimal("0.0001"), "Euro/U.S. Dollar"),
        Instrument("USDJPY", Decimal("0.01"), "U.S. Dollar/Japanese Yen"),
        Instrument("EURJPY", Decimal("0.01"), "Euro/Japanese Yen"),
        Instrument("GBPUSD", Decimal("0.0001"), "Pound Sterling/U.S. Dollar"),
        Instrument("AUDUSD", Decimal("0.0001"), "Australian Dollar/U.S. Dollar"),
        Instrument("USDCHF", Decimal("0.0001"), "U.S. Dollar/Swiss Franc"),
        Instrument("USDCAD", Decimal("0.0001"), "U.S. Dollar/Canadian Dollar"),
        Instrument("GBPJPY", Decimal("0.01"), "Pound Sterling/Japanese Yen"),
        Instrument("GBPAUD", Decimal("0.0001"), "Pound Sterling/Australian Dollar"),
        Instrument("NZDCAD", Decimal("0.0001"), "New Zealand Dollar/Canadian Dollar"),
    )
}


def get_instrument(code: str | Instrument) -> Instrument:
    """Look up a built-in instrument; accepts ``EURUSD`` or ``EUR/USD``."""
    if isinstance(code, Instrument):
        return code
    key = code.replace("/", "").replace("_", "").upper()
    try:
        return INSTRUMENTS[key]
    except KeyError:
        raise ConfigError(f"unknown instrument {code!r}") from None


class Granularity(enum.Enum):
    M1 = 60
    M2 = 120
    M5 = 300
    M10 = 600
    M15 = 900
    M30 = 1800
    H1 = 3600
    H2 = 7200
    H4 = 14400
    H8 = 28800
    H12 = 43200
    D1 = 86400
    W1 = 604800
    MN = 2592000  # nominal 30 days

    @property
    def code(self) -> str:
        return self.name

    @property
    def duration(self) -> int:
        """Candle span in seconds."""
        return self.value

    @classmethod
    def from_code(cls, code: str | Granularity) -> Granularity:
        if isinstance(code, Granularity):
            return code
        try:
            return cls[code.strip().upper()]
        except KeyError:
            raise ConfigError(f"unknown granularity {code!r}") from None

    def __str__(self) -> str:
        return self.name


# sort order used everywhere results are listed: H1 < H2 < ... < D1
GRANULARITY_ORDER = {g: i for i, g in enumerate(Granularity)}


@dataclass(frozen=True)
class DataSubsetKey:
    instrument: Instrument
    granularity: Granularity

    @property
    def label(self) -> str:
        return f"{self.instrument.code}-{self.granularity.code}"

    def sort_key(self) -> tuple:
        return (self.instrument.code, GRANULARITY_ORDER[self.granularity])

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class Candle:
    timestamp: datetime
    open: Decimal
    high: Decimal
    low: Decimal
    close: Decimal
    volume: Decimal | None = None


@dataclass(frozen=True)
class Violation:
    line: int
    kind: str
    message: str

    def __str__(self) -> str:
        return f"LINE {self.line}: {self.kind}: {self.message}"


@dataclass(frozen=True, eq=False)
class CandleSeries:
    """Immutable candle sequence of one (instrument, granularity) subset.

    Prices live in integer pipette arrays; ``index`` maps each epoch
    timestamp to its position in those arrays.
    """

    instrument: Instrument
    granularity: Granularity
    timestamps: np.ndarray  # int64 epoch seconds, candle open time
    open: np.ndarray  # int64 pipettes
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: tuple = field(default=())

    def __post_init__(self):
        n = len(self.timestamps)
        for name in ("timestamps", "open", "high", "low", "close"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            if len(arr) != n:
                raise ValueError(f"{name} has length {len(arr)}, expected {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        vol = tuple(self.volume) if self.volume else (None,) * n
        if len(vol) != n:
            raise ValueError(f"volume has length {len(vol)}, expected {n}")
        object.__setattr__(self, "volume", vol)

    @classmethod
    def from_candles(
        cls, instrument: Instrument, granularity: Granularity, candles: Iterable[Candle]
    ) -> CandleSeries:
        candles = list(candles)
        to_pt = instrument.to_pipettes
        return cls(
            instrument,
            granularity,
            timestamps=np.array([_epoch(c.timestamp) for c in candles], dtype=np.int64),
            open=np.array([to_pt(c.open) for c in candles], dtype=np.int64),
            high=np.array([to_pt(c.high) for c in candles], dtype=np.int64),
            low=np.array([to_pt(c.low) for c in candles], dtype=np.int64),
            close=np.array([to_pt(c.close) for c in candles], dtype=np.int64),
            volume=tuple(c.volume for c in candles),
        )

    @property
    def key(self) -> DataSubsetKey:
        return DataSubsetKey(self.instrument, self.granularity)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i: int) -> Candle:
        if i < 0:
            i += len(self)
        p = self.instrument.from_pipettes
        return Candle(
            timestamp=datetime.fromtimestamp(int(self.timestamps[i]), tz=timezone.utc),
            open=p(self.open[i]),
            high=p(self.high[i]),
            low=p(self.low[i]),
            close=p(self.close[i]),
            volume=self.volume[i],
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @cached_property
    def index(self) -> dict[int, int]:
        """Epoch-second timestamp -> position in the serial arrays."""
        return {int(t): i for i, t in enumerate(self.timestamps)}

    def candle_at(self, when: datetime | int) -> Candle:
        t = when if isinstance(when, (int, np.integer)) else _epoch(when)
        return self[self.index[int(t)]]

    def prices(self, which: str = "close") -> np.ndarray:
        """Float prices in quote units (for indicators and display only)."""
        return getattr(self, which) * float(self.instrument.pipette_size)

    def window(self, start: datetime | None, end: datetime | None) -> CandleSeries:
        """Candles with ``start <= timestamp < end``; ``None`` leaves that side open."""
        lo = 0 if start is None else int(np.searchsorted(self.timestamps, _epoch(start)))
        hi = len(self) if end is None else int(np.searchsorted(self.timestamps, _epoch(end)))
        return CandleSeries(
            self.instrument,
            self.granularity,
            self.timestamps[lo:hi],
            self.open[lo:hi],
            self.high[lo:hi],
            self.low[lo:hi],
            self.close[lo:hi],
            self.volume[lo:hi],
        )


def _epoch(dt: datetime) -> int:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


# -- parsing -------------------------------------------------------------------

_BROKER_TS = re.compile(
    r"^(\d{2})\.(\d{2})\.(\d{4}) (\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,3}))?"
    r"(?: GMT([+-])(\d{2}):?(\d{2}))?$"
)
_CANONICAL_TS = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z$")


def _parse_canonical_ts(text: str) -> int:
    m = _CANONICAL_TS.match(text)
    if not m:
        raise ValueError(f"bad timestamp {text!r}, expected YYYY-MM-DDTHH:MM:SSZ")
    y, mo, d, h, mi, s = map(int, m.groups())
    return _epoch(datetime(y, mo, d, h, mi, s, tzinfo=timezone.utc))


def _parse_broker_ts(text: str) -> int:
    m = _BROKER_TS.match(text)
    if not m:
        raise ValueError(f"bad timestamp {text!r}, expected DD.MM.YYYY HH:MM:SS.mmm")
    d, mo, y, h, mi, s, ms, sign, oh, om = m.groups()
    if ms and int(ms):
        raise ValueError(f"sub-second candle timestamp {text!r}")
    dt = datetime(int(y), int(mo), int(d), int(h), int(mi), int(s), tzinfo=timezone.utc)
    if sign:
        offset = timedelta(hours=int(oh), minutes=int(om))
        dt = dt - offset if sign == "+" else dt + offset
    return _epoch(dt)


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _detect_dialect(header: str):
    cols = [c.strip().lower() for c in header.split(",")]
    if cols == CANONICAL_HEADER.split(","):
        return _parse_canonical_ts
    if header.strip().lower().startswith("gmt time") and len(cols) == 6:
        return _parse_broker_ts
    return None


def _parse_decimal(text: str, what: str) -> Decimal:
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"unparseable {what} {text!r}") from None
    if not d.is_finite():
        raise ValueError(f"non-finite {what} {text!r}")
    return d


def _row_violations(ts, o, h, l, c) -> Iterable[tuple[int, str, str]]:
    """Yield (position, kind, message) for every invariant breach, in order."""
    for i in range(len(ts)):
        if min(o[i], h[i], l[i], c[i]) <= 0:
            yield i, "InvariantViolation", "prices must be positive"
        if h[i] < l[i]:
            yield i, "InvariantViolation", f"high {h[i]} < low {l[i]} (pipettes)"
        elif h[i] < max(o[i], c[i]):
            yield i, "InvariantViolation", f"high {h[i]} below open/close (pipettes)"
        elif l[i] > min(o[i], c[i]):
            yield i, "InvariantViolation", f"low {l[i]} above open/close (pipettes)"
        if i and ts[i] <= ts[i - 1]:
            yield i, "NonMonotonic", (
                f"timestamp {format_timestamp(ts[i])} not after {format_timestamp(ts[i - 1])}"
            )


def parse_csv(path: str | Path, instrument: Instrument | str, granularity: Granularity | str) -> CandleSeries:
    """Read and validate one subset file.

    Raises:
        EmptyData: no data rows.
        MalformedRow: wrong field count, bad number or bad timestamp.
        InvariantViolation: OHLC relations broken.
        NonMonotonicTimestamps: timestamps not strictly increasing.
    """
    instrument = get_instrument(instrument)
    granularity = Granularity.from_code(granularity)
    with open(path, encoding="utf-8-sig", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise EmptyData(f"{path}: empty file")
    parse_ts = _detect_dialect(lines[0])
    if parse_ts is None:
        raise MalformedRow(1, f"unrecognised header {lines[0]!r}")

    line_nos, ts, o, h, l, c, vol = [], [], [], [], [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = raw.split(",")
        if len(fields) not in (5, 6):
            raise MalformedRow(lineno, f"expected 6 fields, got {len(fields)}")
        try:
            t = parse_ts(fields[0].strip())
            prices = [_parse_decimal(f.strip(), name) for f, name in zip(fields[1:5], "ohlc")]
            v = None
            if len(fields) == 6 and fields[5].strip():
                v = _parse_decimal(fields[5].strip(), "volume")
                if v < 0:
                    raise ValueError(f"negative volume {fields[5]!r}")
            pts = [instrument.to_pipettes(p) for p in prices]
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        line_nos.append(lineno)
        ts.append(t)
        o.append(pts[0]), h.append(pts[1]), l.append(pts[2]), c.append(pts[3])
        vol.append(v)

    if not ts:
        raise EmptyData(f"{path}: no data rows")
    for pos, kind, msg in _row_violations(ts, o, h, l, c):
        exc = NonMonotonicTimestamps if kind == "NonMonotonic" else InvariantViolation
        raise exc(line_nos[pos], msg)
    return CandleSeries(instrument, granularity, ts, o, h, l, c, tuple(vol))


def write_csv(series: CandleSeries, path: str | Path) -> None:
    """Write ``series`` in the canonical dialect."""
    p = series.instrument.from_pipettes
    out = [CANONICAL_HEADER]
    for i in range(len(series)):
        v = series.volume[i]
        out.append(
            f"{format_timestamp(series.timestamps[i])},{p(series.open[i])},{p(series.high[i])},"
            f"{p(series.low[i])},{p(series.close[i])},{'' if v is None else v}"
        )
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def validate_series(series: CandleSeries) -> list[Violation]:
    """Collect invariant violations without raising.

    Line numbers assume the canonical file layout (header on line 1).
    """
    return [
        Violation(pos + 2, kind, msg)
        for pos, kind, msg in _row_violations(
            series.timestamps, series.open, series.high, series.low, series.close
        )
    ]


def format_report(violations: Sequence[Violation]) -> str:
    return "".join(f"{v}\n" for v in violations)


def complete_day_count(series: CandleSeries) -> int:
    """Number of UTC days holding exactly ``86400 / duration`` candles."""
    duration = series.granularity.duration
    if duration > SECONDS_PER_DAY:
        raise UnsupportedGranularity(f"{series.granularity} spans more than one day")
    if len(series) == 0:
        return 0
    per_day = SECONDS_PER_DAY // duration
    _, counts = np.unique(series.timestamps // SECONDS_PER_DAY, return_counts=True)
    return int(np.count_nonzero(counts == per_day))


# -- data directory layout -----------------------------------------------------

def subset_filename(instrument: Instrument | str, granularity: Granularity | str) -> str:
    return f"{get_instrument(instrument).code}-{Granularity.from_code(granularity).code}.csv"


def load_subset(data_dir: str | Path, instrument, granularity) -> CandleSeries:
    return parse_csv(Path(data_dir) / subset_filename(instrument, granularity), instrument, granularity)


_SUBSET_NAME = re.compile(r"^([A-Z]{6})-([A-Z0-9]+)\.csv$")


def discover_subsets(data_dir: str | Path) -> list[DataSubsetKey]:
    """Subset files present in ``data_dir`` named ``{INSTRUMENT}-{GRANULARITY}.csv``."""
    keys = []
    for path in sorted(Path(data_dir).glob("*.csv")):
        m = _SUBSET_NAME.match(path.name)
        if not m or m.group(1) not in INSTRUMENTS or m.group(2) not in Granularity.__members__:
            continue
        keys.append(DataSubsetKey(INSTRUMENTS[m.group(1)], Granularity[m.group(2)]))
    return sorted(keys, key=DataSubsetKey.sort_key)
