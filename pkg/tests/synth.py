"""Deterministic signal builders shared across the test modules."""

import numpy as np

from garble.audio_io import AudioBuffer

SR = 16000


def band_noise(seed, duration_s=1.0, sr=SR, lo_hz=300.0, hi_hz=3400.0,
               amp=0.35, am_hz=4.0):
    """Speech-band noise with slow amplitude modulation.

    Broadband like real speech, so windowed perturbations distort it in a
    smoothly window-dependent way (pure tones do not).
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sr))
    spec = np.fft.rfft(rng.standard_normal(2 * n))
    freqs = np.fft.rfftfreq(2 * n, 1.0 / sr)
    spec[(freqs < lo_hz) | (freqs > hi_hz)] = 0.0
    x = np.fft.irfft(spec)[:n]
    t = np.arange(n) / sr
    x = x * (1.0 + 0.5 * np.sin(2.0 * np.pi * am_hz * t))
    return AudioBuffer(x * (amp / np.max(np.abs(x))), sr)


def burst_fixture(seed, duration_s=2.0, spans=((0.3, 0.8), (1.2, 1.7)),
                  sr=SR, amp=0.35, edge_ms=10.0):
    """Digital silence with speech-band noise bursts on the given spans.

    Burst edges get a raised-cosine ramp inside the span so there are no
    clicks; returns (buffer, spans).
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sr))
    x = np.zeros(n)
    edge = int(round(edge_ms * sr / 1000.0))
    for b0, b1 in spans:
        i0, i1 = int(round(b0 * sr)), int(round(b1 * sr))
        m = i1 - i0
        spec = np.fft.rfft(rng.standard_normal(2 * m))
        freqs = np.fft.rfftfreq(2 * m, 1.0 / sr)
        spec[(freqs < 300.0) | (freqs > 3400.0)] = 0.0
        burst = np.fft.irfft(spec)[:m]
        burst *= amp / np.max(np.abs(burst))
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
        burst[:edge] *= ramp
        burst[-edge:] *= ramp[::-1]
        x[i0:i1] = burst
    return AudioBuffer(x, sr), tuple(spans)


def sine_buffer(freq_hz, duration_s=1.0, sr=SR, amp=0.5, phase=0.0):
    t = np.arange(int(round(duration_s * sr))) / sr
    return AudioBuffer(amp * np.sin(2.0 * np.pi * freq_hz * t + phase), sr)


def random_buffer(seed, n, sr=SR, amp=0.35):
    rng = np.random.default_rng(seed)
    return AudioBuffer(rng.uniform(-amp, amp, n), sr)
