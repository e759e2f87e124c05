import numpy as np
import pytest

from garble.audio_io import write_wav


@pytest.fixture
def wav_on_disk(tmp_path):
    """Factory: persist an AudioBuffer to a temp .wav and return its path."""

    def _save(buf, name="in.wav"):
        path = tmp_path / name
        path.write_bytes(write_wav(buf))
        return path

    return _save


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
