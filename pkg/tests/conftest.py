import pytest

from annochain.chain import TimingEvent
from annochain.gateway import MockGateway


@pytest.fixture
def gateway():
    return MockGateway()


def round_events(round_index: int, start: float = 0.0, observe: float = 20.0,
                 read: float | None = None, output: float = 10.0,
                 gap: float = 0.0) -> list[TimingEvent]:
    """Well-formed timing events for one round, phases laid out back-to-back."""
    t = start
    events = [TimingEvent(round_index, "observe_start", t)]
    t += observe
    events.append(TimingEvent(round_index, "observe_end", t))
    if read is not None:
        events.append(TimingEvent(round_index, "read_start", t))
        t += read
        events.append(TimingEvent(round_index, "read_end", t))
    t += gap
    events.append(TimingEvent(round_index, "output_start", t))
    t += output
    events.append(TimingEvent(round_index, "output_end", t))
    return events
