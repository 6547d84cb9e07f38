import os
import sys
from datetime import datetime, timedelta
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from repad2.series_io import TimeSeries

NAB_ENV = "REPAD_NAB_DIR"


def write_csv(path, values, start=datetime(2014, 4, 10), step_minutes=5):
    """NAB-format CSV from raw values."""
    with open(path, "w") as fh:
        fh.write("timestamp,value\n")
        for i, v in enumerate(values):
            ts = start + i * timedelta(minutes=step_minutes)
            fh.write(f"{ts:%Y-%m-%d %H:%M:%S},{v!r}\n")
    return path


def series_from(values):
    return TimeSeries.from_values(values, start=datetime(2014, 4, 10), interval=timedelta(minutes=5))


@pytest.fixture
def nab_dir():
    path = os.environ.get(NAB_ENV)
    if not path:
        pytest.skip(f"{NAB_ENV} not set; user-supplied NAB files required")
    return Path(path)
