from datetime import datetime, timezone
from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fxlab import synthetic
from fxlab.errors import (
    ConfigError,
    EmptyData,
    InvariantViolation,
    MalformedRow,
    NonMonotonicTimestamps,
    UnsupportedGranularity,
)
from fxlab.market_data import (
    CandleSeries,
    Granularity,
    Instrument,
    complete_day_count,
    discover_subsets,
    format_report,
    get_instrument,
    parse_csv,
    validate_series,
    write_csv,
)

EURUSD = get_instrument("EURUSD")
HEADER = "timestamp,open,high,low,close,volume\n"


def write(tmp_path, text, name="EURUSD-H1.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_instrument_pip_sizes():
    assert get_instrument("EUR/USD").pip_size == Decimal("0.0001")
    assert get_instrument("USDJPY").pip_size == Decimal("0.01")
    assert get_instrument("eurjpy").price_decimals == 3
    assert EURUSD.price_decimals == 5
    with pytest.raises(ConfigError):
        get_instrument("XXXYYY")
    with pytest.raises(ConfigError):
        Instrument("BAD", Decimal(0))


def test_granularity_durations():
    assert Granularity.H1.duration == 3600
    assert Granularity.D1.duration == 86400
    assert Granularity.from_code("h12") is Granularity.H12


def test_parse_canonical_row(tmp_path):
    p = write(tmp_path, HEADER + "2019-11-01T00:00:00Z,1.1000,1.1010,1.0990,1.1005,350\n"
                                 "2019-11-01T01:00:00Z,1.1005,1.1011,1.1001,1.1002,12\n")
    s = parse_csv(p, "EURUSD", "H1")
    c = s[0]
    assert (c.open, c.high, c.low, c.close) == (Decimal("1.1000"), Decimal("1.1010"), Decimal("1.0990"), Decimal("1.1005"))
    assert c.volume == Decimal(350)
    assert c.timestamp == datetime(2019, 11, 1, tzinfo=timezone.utc)
    assert s.close.tolist() == [110050, 110020]


def test_fixture_writer_round_trip(tmp_path):
    series = synthetic.random_walk(200, 3)
    p = tmp_path / "EURUSD-H1.csv"
    write_csv(series, p)
    again = parse_csv(p, "EURUSD", "H1")
    for name in ("timestamps", "open", "high", "low", "close"):
        np.testing.assert_array_equal(getattr(series, name), getattr(again, name))
    assert [str(v) for v in again.volume] == [str(v) for v in series.volume]
    p2 = tmp_path / "copy.csv"
    write_csv(again, p2)
    assert p2.read_bytes() == p.read_bytes()


def test_broker_dialect(tmp_path):
    p = write(tmp_path, "Gmt time,Open,High,Low,Close,Volume\n"
                        "01.11.2019 00:00:00.000,108.500,108.600,108.400,108.550,1520.5\n"
                        "01.11.2019 01:00:00.000 GMT+0100,108.550,108.700,108.500,108.650,10\n")
    # 01:00 at GMT+01:00 is midnight UTC, the same instant as the first row
    with pytest.raises(NonMonotonicTimestamps):
        parse_csv(p, "USDJPY", "H1")
    s = parse_csv(write(tmp_path, p.read_text().replace("GMT+0100", "GMT+0000"), "b.csv"), "USDJPY", "H1")
    assert s[0].close == Decimal("108.550")
    assert s[1].timestamp == datetime(2019, 11, 1, 1, tzinfo=timezone.utc)
    assert len(parse_csv(write(tmp_path, p.read_text().replace(" GMT+0100", ""), "c.csv"), "USDJPY", "H1")) == 2


@pytest.mark.parametrize("text", ["", HEADER])
def test_empty_file(tmp_path, text):
    with pytest.raises(EmptyData):
        parse_csv(write(tmp_path, text), "EURUSD", "H1")


def test_high_below_low_reports_line(tmp_path):
    p = write(tmp_path, HEADER + "2019-11-01T00:00:00Z,1.1000,1.1010,1.0990,1.1005,1\n"
                                 "2019-11-01T01:00:00Z,1.0010,1.0000,1.0050,1.0020,1\n")
    with pytest.raises(InvariantViolation) as exc:
        parse_csv(p, "EURUSD", "H1")
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "row",
    [
        "2019-11-01T00:00:00Z,1.1000,1.1010,1.0990\n",
        "2019-11-01T00:00:00Z,1.1000,abc,1.0990,1.1005,1\n",
        "2019-11-01 00:00,1.1000,1.1010,1.0990,1.1005,1\n",
        "2019-11-01T00:00:00Z,1.100001,1.1010,1.0990,1.1005,1\n",
        "2019-11-01T00:00:00Z,1.1000,1.1010,1.0990,1.1005,-4\n",
    ],
)
def test_malformed_rows(tmp_path, row):
    with pytest.raises(MalformedRow) as exc:
        parse_csv(write(tmp_path, HEADER + row), "EURUSD", "H1")
    assert exc.value.line == 2


def test_unknown_header(tmp_path):
    with pytest.raises(MalformedRow):
        parse_csv(write(tmp_path, "a,b,c\n1,2,3\n"), "EURUSD", "H1")


def test_validate_series():
    good = synthetic.from_closes([110000, 110010, 110005])
    assert validate_series(good) == []

    dup = CandleSeries(EURUSD, Granularity.H1, [0, 3600, 3600], good.open, good.high, good.low, good.close)
    v = validate_series(dup)
    assert [x.kind for x in v] == ["NonMonotonic"]

    bad_close = good.close.copy()
    bad_close[1] = good.high[1] + 5
    bad = CandleSeries(EURUSD, Granularity.H1, good.timestamps, good.open, good.high, good.low, bad_close)
    v = validate_series(bad)
    assert len(v) == 1 and v[0].kind == "InvariantViolation"
    assert format_report(v).startswith("LINE 3: InvariantViolation")
    # input untouched
    assert bad.close[1] == good.high[1] + 5


def test_index_matches_linear_scan():
    s = synthetic.random_walk(300, 11)
    for pos in (0, 17, 299):
        t = int(s.timestamps[pos])
        linear = next(i for i in range(len(s)) if s.timestamps[i] == t)
        assert s.index[t] == linear
        assert s.candle_at(t) == s[linear]


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 400), seed=st.integers(0, 10_000))
def test_index_and_day_count_properties(n, seed):
    s = synthetic.random_walk(n, seed, skip_weekends=bool(seed % 2))
    assert len(s.index) == len(s)
    for t, i in list(s.index.items())[:: max(1, n // 10)]:
        assert int(s.timestamps[i]) == t
    assert complete_day_count(s) * (86400 // s.granularity.duration) <= len(s)


def test_complete_day_count():
    month = synthetic.from_closes(110000 + np.arange(480) % 7, start=datetime(2019, 11, 4, tzinfo=timezone.utc))
    assert complete_day_count(month) == 20
    assert complete_day_count(synthetic.from_closes(np.full(23, 110000))) == 0
    assert complete_day_count(synthetic.from_closes(np.arange(7) + 110000, granularity="D1")) == 7
    with pytest.raises(UnsupportedGranularity):
        complete_day_count(synthetic.from_closes([110000] * 3, granularity="W1"))


def test_series_is_read_only():
    s = synthetic.random_walk(10, 1)
    with pytest.raises(ValueError):
        s.close[0] = 1


def test_discover_subsets(tmp_path):
    for name in ("EURUSD-H1.csv", "USDJPY-D1.csv", "notes.csv", "EURUSD-X9.csv"):
        (tmp_path / name).write_text(HEADER)
    assert [k.label for k in discover_subsets(tmp_path)] == ["EURUSD-H1", "USDJPY-D1"]
