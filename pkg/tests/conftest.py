import numpy as np
import pytest

from restless.core import MODE_RESTLESS, ShotStream


def make_stream(iq, num_sequences, mode=MODE_RESTLESS, repetition_rate=1e5):
    """Build a stream from raw IQ values, inferring N_s and truncation."""
    iq = np.asarray(iq, dtype=np.complex128)
    n = len(iq)
    num_repetitions = -(-n // num_sequences)
    return ShotStream(
        iq=iq,
        num_sequences=num_sequences,
        num_repetitions=num_repetitions,
        repetition_rate=repetition_rate,
        mode=mode,
        truncated=n < num_sequences * num_repetitions,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
