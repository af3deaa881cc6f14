import time

import pytest

from sigverify.io import RawSample, RawSignature

# Opening samples of a real HP TC 1100 tablet capture (x, y, pressure, t in ms).
# Timestamps are the device's native fractional milliseconds.
HP_TABLET_TRACE = (
    (2262, 4126, 19, 0.0),
    (2256, 4126, 34, 2.7682),
    (2269, 4118, 51, 14.3258),
    (2267, 4113, 66, 17.8017),
    (2281, 4092, 80, 29.3914),
    (2284, 4069, 93, 32.9374),
    (2305, 4026, 104, 46.2131),
    (2330, 3971, 113, 48.8942),
    (2358, 3896, 122, 61.1508),
)


def make_trace_signature() -> RawSignature:
    return RawSignature(
        tuple(RawSample(x=x, y=y, t=t, button=1, pressure=p) for x, y, p, t in HP_TABLET_TRACE),
        source="hp-tc1100",
    )


@pytest.fixture
def tablet_trace() -> RawSignature:
    return make_trace_signature()


class Stopwatch:
    def __init__(self):
        self.elapsed = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._t0
        return False
