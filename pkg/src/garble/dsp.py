"""Shared signal kernels: framing, real FFT, FIR low-pass, SNR measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    """One-sided spectrum of a real frame: bins[0..fft_size//2] complex."""

    bins: np.ndarray
    fft_size: int

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.complex128)
        expected = self.fft_size // 2 + 1
        if arr.ndim != 1 or len(arr) != expected:
            raise ValueError(f"expected {expected} bins for fft_size {self.fft_size}")
        object.__setattr__(self, "bins", arr)


def next_pow2(n: int) -> int:
    if n < 1:
        return 1
    return 1 << (n - 1).bit_length()


def frame_signal(audio: AudioBuffer, window_len: int, hop: int,
                 pad_last: bool = False) -> list[np.ndarray]:
    """Split into frames starting at 0, hop, 2*hop, ...

    The trailing frame keeps its natural (shorter) length unless pad_last
    zero-extends it to window_len. Empty input gives an empty list.
    """
    if window_len < 1 or hop < 1:
        raise ValueError("window_len and hop must be >= 1")
    x = audio.samples
    frames = []
    for start in range(0, len(x), hop):
        frame = x[start:start + window_len]
        if pad_last and len(frame) < window_len:
            frame = np.concatenate([frame, np.zeros(window_len - len(frame))])
        frames.append(frame)
    return frames


def fft_real(frame: np.ndarray) -> ComplexSpectrum:
    """Real FFT after zero-padding the frame to the next power of two.

    DC and (for even sizes) Nyquist bins are forced exactly real, which the
    inverse relies on.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("frame must be a nonempty 1-D array")
    n = next_pow2(len(x))
    bins = np.fft.rfft(x, n=n)
    bins[0] = bins[0].real
    if n % 2 == 0:
        bins[-1] = bins[-1].real
    return ComplexSpectrum(bins, n)


def inverse_fft_real(spectrum: ComplexSpectrum) -> np.ndarray:
    """Inverse of fft_real; output length equals fft_size.

    Raises ValueError when the DC or Nyquist bin carries an imaginary part,
    since no real signal produces one there.
    """
    bins = spectrum.bins
    peak = float(np.max(np.abs(bins))) if len(bins) else 0.0
    tol = 1e-12 * max(1.0, peak)
    bad = abs(bins[0].imag) > tol
    if spectrum.fft_size % 2 == 0:
        bad = bad or abs(bins[-1].imag) > tol
    if bad:
        raise ValueError("DC/Nyquist bin has nonzero imaginary part")
    return np.fft.irfft(bins, n=spectrum.fft_size)


def magnitude(spectrum: ComplexSpectrum) -> np.ndarray:
    """Per-bin magnitude sqrt(re^2 + im^2)."""
    return np.abs(spectrum.bins)


def design_lowpass(cutoff_hz: float, sample_rate: int,
                   numtaps: int | None = None) -> np.ndarray:
    """Hamming windowed-sinc low-pass taps, odd length, unit DC gain.

    Default order follows 4 * fs / transition_width with the transition band
    spanning [0.8, 1.2] * cutoff, rounded up to odd. Cutoff at Nyquist
    degenerates to a unit impulse (exact pass-through).
    """
    nyquist = sample_rate / 2.0
    if not 0.0 < cutoff_hz <= nyquist:
        raise ValueError(f"cutoff must be in (0, {nyquist}] Hz")
    if numtaps is None:
        transition = 0.4 * cutoff_hz
        numtaps = int(round(4.0 * sample_rate / transition))
        if numtaps % 2 == 0:
            numtaps += 1
    if numtaps < 1 or numtaps % 2 == 0:
        raise ValueError("numtaps must be odd and positive")
    fc = cutoff_hz / sample_rate  # normalized, 0.5 == Nyquist
    m = np.arange(numtaps) - (numtaps - 1) / 2
    h = 2.0 * fc * np.sinc(2.0 * fc * m)
    h *= np.hamming(numtaps)
    return h / np.sum(h)


def apply_fir(audio: AudioBuffer, taps: np.ndarray) -> AudioBuffer:
    """Convolve and compensate the (numtaps-1)/2 group delay; length preserved."""
    numtaps = len(taps)
    if numtaps % 2 == 0:
        raise ValueError("only odd-length (linear-phase, integer-delay) taps")
    if len(audio.samples) == 0:
        return audio
    full = np.convolve(audio.samples, taps)
    delay = (numtaps - 1) // 2
    return AudioBuffer(full[delay:delay + len(audio.samples)], audio.sample_rate)


def low_pass(audio: AudioBuffer, cutoff_hz: float) -> AudioBuffer:
    """Zero-phase-aligned FIR low-pass at cutoff_hz (see design_lowpass)."""
    return apply_fir(audio, design_lowpass(cutoff_hz, audio.sample_rate))


def measure_snr(reference: AudioBuffer, test: AudioBuffer) -> float:
    """10*log10(P_ref / P_residual) in dB; +inf when the signals are identical."""
    if len(reference.samples) != len(test.samples):
        raise ValueError("length mismatch")
    if reference.sample_rate != test.sample_rate:
        raise ValueError("sample rate mismatch")
    p_ref = float(np.mean(reference.samples ** 2)) if len(reference) else 0.0
    residual = test.samples - reference.samples
    p_res = float(np.mean(residual ** 2)) if len(reference) else 0.0
    if p_res == 0.0:
        return math.inf
    if p_ref == 0.0:
        return -math.inf
    return 10.0 * math.log10(p_ref / p_res)
