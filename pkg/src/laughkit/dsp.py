"""Low-level descriptor extraction.

Frames a mono 16 kHz signal into 10 ms-hop windows and computes 39
per-frame descriptors in five groups:

* time domain (4): zero-crossing rate, max/min sample value, signal
  offset (per-frame mean)
* energy (2): RMS and log energy
* voice (4): F0 by autocorrelation, probability of voicing
  ACF(T0)/ACF(0), F0 quality ZCR(ACF)/F0, harmonics-to-noise ratio
* spectral (13): band energies 0-250 / 0-650 / 250-650 / 1000-4000 Hz,
  10/25/50/75/90 % roll-off points, centroid, flux, relative position of
  the spectral maximum and minimum
* cepstral (16): MFCC 0-15 from a 26-filter mel bank

Each descriptor contour is augmented with first and second order
regression (delta) contours, giving the fixed 117-row contour matrix.
Row order is descriptor-major, derivative-minor and is frozen in
CONTOUR_NAMES.

Numerical conventions: windowing (Hamming) applies only to the rows that
need a spectrum; time-domain and autocorrelation rows see raw frames.
Autocorrelations use the overlap-normalized (unbiased) estimator so the
voicing ratio of a stationary tone stays near 1 at any lag. Logs are
floored at 1e-12. Zero-crossing rates of the raw signal are reported in
crossings per second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LOG_FLOOR = 1e-12
POWER_GUARD = 1e-20

#: Segments shorter than this many samples cannot be processed at all.
MIN_SEGMENT_SAMPLES = 160

N_MEL_FILTERS = 26
N_MFCC = 16

LLD_NAMES: tuple[str, ...] = (
    # time domain
    "zcr", "maxsample", "minsample", "offset",
    # energy
    "rms", "logenergy",
    # voice
    "f0", "voicingprob", "f0quality", "hnr",
    # spectral
    "band0_250", "band0_650", "band250_650", "band1000_4000",
    "rolloff10", "rolloff25", "rolloff50", "rolloff75", "rolloff90",
    "centroid", "flux", "maxmagpos", "minmagpos",
    # cepstral
    "mfcc0", "mfcc1", "mfcc2", "mfcc3", "mfcc4", "mfcc5", "mfcc6", "mfcc7",
    "mfcc8", "mfcc9", "mfcc10", "mfcc11", "mfcc12", "mfcc13", "mfcc14",
    "mfcc15",
)

DERIV_SUFFIXES: tuple[str, str, str] = ("base", "de", "dede")

N_LLDS = len(LLD_NAMES)

CONTOUR_NAMES: tuple[str, ...] = tuple(
    f"{lld}_{suffix}" for lld in LLD_NAMES for suffix in DERIV_SUFFIXES
)

N_CONTOURS = len(CONTOUR_NAMES)

ROLLOFF_FRACTIONS = (0.10, 0.25, 0.50, 0.75, 0.90)
BAND_LIMITS_HZ = ((0.0, 250.0), (0.0, 650.0), (250.0, 650.0), (1000.0, 4000.0))


class SegmentTooShortError(ValueError):
    """Segment below the minimum length the pipeline can process."""

    def __init__(self, n_samples: int, minimum: int = MIN_SEGMENT_SAMPLES):
        self.n_samples = n_samples
        self.minimum = minimum
        super().__init__(
            f"segment of {n_samples} samples is below the {minimum}-sample minimum"
        )


@dataclass(frozen=True)
class FrameConfig:
    """Framing and analysis settings.

    The 10 ms hop is part of the measurement contract (durations are
    counted in 10 ms frames) and cannot be overridden. The remaining
    fields are tunable defaults: 25 ms Hamming frames, 512-point FFT,
    F0 search 50-500 Hz, voicing decision at 0.55.
    """

    frame_length: int = 400
    hop: int = 160
    window: str = "hamming"
    fft_size: int = 512
    f0_min: float = 50.0
    f0_max: float = 500.0
    voicing_threshold: float = 0.55
    sample_rate: int = 16000

    def __post_init__(self):
        if self.hop != 160:
            raise ValueError("hop is fixed at 160 samples (10 ms at 16 kHz)")
        if self.frame_length > self.fft_size:
            raise ValueError("frame_length must not exceed fft_size")
        if self.frame_length < MIN_SEGMENT_SAMPLES:
            raise ValueError(f"frame_length must be >= {MIN_SEGMENT_SAMPLES}")
        if not 0.0 < self.f0_min < self.f0_max:
            raise ValueError("need 0 < f0_min < f0_max")
        if self.window not in ("hamming", "hann", "rect"):
            raise ValueError(f"unknown window {self.window!r}")

    @property
    def lag_min(self) -> int:
        return max(1, int(math.ceil(self.sample_rate / self.f0_max)))

    @property
    def lag_max(self) -> int:
        return int(math.floor(self.sample_rate / self.f0_min))


@dataclass(frozen=True)
class PitchResult:
    """Per-frame pitch measurement. f0, hnr and f0_quality are 0 when unvoiced."""

    f0: float
    t0: int
    voicing_prob: float
    f0_quality: float
    hnr: float


@dataclass(frozen=True)
class ContourMatrix:
    """117 x n_frames matrix of descriptor contours, rows in CONTOUR_NAMES order."""

    values: np.ndarray
    row_names: tuple[str, ...] = CONTOUR_NAMES

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != N_CONTOURS:
            raise ValueError(f"expected {N_CONTOURS} contour rows, got {self.values.shape}")
        if self.values.shape[1] < 1:
            raise ValueError("contours must contain at least one frame")

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[1])

    def row(self, name: str) -> np.ndarray:
        return self.values[self.row_names.index(name)]

    def to_csv(self, path) -> None:
        """Dump one row per contour: name, then the frame values at full precision."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("contour," + ",".join(f"frame{i}" for i in range(self.n_frames)) + "\n")
            for name, row in zip(self.row_names, self.values):
                fh.write(name + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _segment_samples(segment) -> np.ndarray:
    samples = getattr(segment, "samples", segment)
    x = np.asarray(samples, dtype=np.float64).ravel()
    return x


def frame_signal(segment, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """Slice a signal into raw (unwindowed) frames of shape (n_frames, frame_length).

    Signals of at least one hop but less than one frame are handled as a
    single zero-padded frame. Anything shorter raises SegmentTooShortError.
    """
    x = _segment_samples(segment)
    n = x.size
    if n < MIN_SEGMENT_SAMPLES:
        raise SegmentTooShortError(n)
    if n < cfg.frame_length:
        frame = np.zeros(cfg.frame_length)
        frame[:n] = x
        return frame[None, :]
    n_frames = (n - cfg.frame_length) // cfg.hop + 1
    view = np.lib.stride_tricks.sliding_window_view(x, cfg.frame_length)
    return np.ascontiguousarray(view[:: cfg.hop][:n_frames])


def _window_vector(cfg: FrameConfig) -> np.ndarray:
    if cfg.window == "hamming":
        return np.hamming(cfg.frame_length)
    if cfg.window == "hann":
        return np.hanning(cfg.frame_length)
    return np.ones(cfg.frame_length)


def time_energy_lld(frame, sample_rate: int = 16000) -> tuple[float, float, float, float, float, float]:
    """Time-domain and energy descriptors of one raw frame.

    Returns (zcr in crossings/s, max sample, min sample, offset,
    rms energy, log energy). Log energy is ln of the mean square floored
    at 1e-12, so silence yields ln(1e-12) rather than -inf.
    """
    x = np.asarray(frame, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty frame")
    duration = x.size / sample_rate
    crossings = int(np.count_nonzero(x[:-1] * x[1:] < 0.0))
    mean_square = float(np.mean(x * x))
    return (
        crossings / duration,
        float(x.max()),
        float(x.min()),
        float(x.mean()),
        math.sqrt(mean_square),
        math.log(max(mean_square, LOG_FLOOR)),
    )


def _raw_acf(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """Raw autocorrelation rows sum_n x_n x_{n+lag} for lags 0..max_lag."""
    n = frames.shape[1]
    nfft = 1
    while nfft < n + max_lag + 1:
        nfft <<= 1
    spec = np.fft.rfft(frames, nfft, axis=1)
    return np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, : max_lag + 1]


def _normalized_acf(frames: np.ndarray, lag_min: int, lag_max: int) -> np.ndarray:
    """Per-lag normalized autocorrelation for lags lag_min..lag_max.

    Each lag is normalized by the energies of the two overlapping windows,
    so values are bounded to [-1, 1] and a lag aligning the signal with an
    exact copy of itself scores exactly 1 regardless of overlap length.
    """
    n = frames.shape[1]
    raw = _raw_acf(frames, lag_max)[:, lag_min:]
    csq = np.concatenate(
        [np.zeros((frames.shape[0], 1)), np.cumsum(frames * frames, axis=1)], axis=1
    )
    taus = np.arange(lag_min, lag_max + 1)
    head = csq[:, n - taus]
    tail = csq[:, [n]] - csq[:, taus]
    denom = np.sqrt(head * tail)
    out = np.zeros_like(raw)
    ok = denom > POWER_GUARD
    out[ok] = raw[ok] / denom[ok]
    return out


def _acf_zero_crossings(acf_rows: np.ndarray) -> np.ndarray:
    prod = acf_rows[:, :-1] * acf_rows[:, 1:]
    return np.count_nonzero(prod < 0.0, axis=1).astype(np.float64)


def _pitch_batch(frames: np.ndarray, cfg: FrameConfig):
    """Vectorized pitch analysis. Returns (f0, voicing_prob, f0_quality, hnr, t0)."""
    n_frames, frame_len = frames.shape
    lag_min = cfg.lag_min
    lag_max = min(cfg.lag_max, frame_len - 1)
    zeros = np.zeros(n_frames)
    if lag_max < lag_min:
        return zeros, zeros, zeros, zeros, np.zeros(n_frames, dtype=int)

    energy = np.sum(frames * frames, axis=1)
    live = energy > POWER_GUARD

    search = _normalized_acf(frames, lag_min, lag_max)
    n_lags = search.shape[1]
    top = search.max(axis=1)
    # For a periodic signal the overlap-normalized ACF is near-flat across
    # period multiples (up to ~1/(N-lag) edge noise), so a bare argmax may
    # land on a subharmonic. Resolve by locating the first contiguous run
    # of lags within 2 % of the peak and taking the local maximum there.
    near_top = search >= (top - 0.02 * np.abs(top))[:, None]
    first = np.argmax(near_top, axis=1)
    lag_idx = np.arange(n_lags)[None, :]
    past_run = (~near_top) & (lag_idx > first[:, None])
    run_end = np.where(past_run.any(axis=1), np.argmax(past_run, axis=1) - 1, n_lags - 1)
    in_run = (lag_idx >= first[:, None]) & (lag_idx <= run_end[:, None])
    best = np.argmax(np.where(in_run, search, -np.inf), axis=1)
    t0 = best + lag_min
    peak = search[np.arange(n_frames), best]

    vp_raw = np.where(live, peak, 0.0)
    voicing_prob = np.clip(vp_raw, 0.0, 1.0)

    voiced = live & (voicing_prob >= cfg.voicing_threshold)
    f0 = np.where(voiced, cfg.sample_rate / t0, 0.0)

    hnr = np.zeros(n_frames)
    if np.any(voiced):
        # periodic-to-aperiodic ratio p/(1-p); fully periodic clips to +100 dB
        ok = voiced & (voicing_prob < 1.0) & (voicing_prob > 0.0)
        hnr[ok] = np.clip(
            10.0 * np.log10(voicing_prob[ok] / (1.0 - voicing_prob[ok])), -100.0, 100.0
        )
        hnr[voiced & (voicing_prob >= 1.0)] = 100.0

    quality = np.zeros(n_frames)
    if np.any(voiced):
        acf_crossings = _acf_zero_crossings(search)
        span_seconds = (lag_max - lag_min) / cfg.sample_rate
        if span_seconds > 0:
            rate = acf_crossings / span_seconds
            quality[voiced] = rate[voiced] / f0[voiced]

    return f0, voicing_prob, quality, hnr, t0


def acf_pitch(frame, cfg: FrameConfig = FrameConfig()) -> PitchResult:
    """Autocorrelation pitch analysis of a single raw frame.

    T0 is the lag maximising the normalized autocorrelation inside the
    configured F0 search band; the frame is voiced when ACF(T0)/ACF(0)
    reaches the voicing threshold. Unvoiced frames report f0 = 0,
    hnr = 0 and f0_quality = 0 (the measured voicing probability is kept).
    """
    x = np.asarray(frame, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty frame")
    f0, vp, quality, hnr, t0 = _pitch_batch(x[None, :], cfg)
    return PitchResult(
        f0=float(f0[0]),
        t0=int(t0[0]),
        voicing_prob=float(vp[0]),
        f0_quality=float(quality[0]),
        hnr=float(hnr[0]),
    )


def _bin_frequencies(cfg: FrameConfig) -> np.ndarray:
    n_bins = cfg.fft_size // 2 + 1
    return np.arange(n_bins) * (cfg.sample_rate / cfg.fft_size)


def _spectral_batch(mags: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Spectral descriptors for all frames. Returns (13, n_frames)."""
    n_frames, n_bins = mags.shape
    freqs = _bin_frequencies(cfg)
    power = mags * mags
    total = power.sum(axis=1)
    live = total > POWER_GUARD

    out = np.zeros((13, n_frames))

    for row, (lo, hi) in enumerate(BAND_LIMITS_HZ):
        mask = (freqs >= lo) & (freqs <= hi)
        out[row] = power[:, mask].sum(axis=1)

    cum = np.cumsum(power, axis=1)
    for i, frac in enumerate(ROLLOFF_FRACTIONS):
        idx = np.argmax(cum >= frac * total[:, None], axis=1)
        vals = freqs[idx]
        vals[~live] = 0.0
        out[4 + i] = vals

    centroid = np.zeros(n_frames)
    centroid[live] = (power[live] * freqs).sum(axis=1) / total[live]
    out[9] = centroid

    flux = np.zeros(n_frames)
    if n_frames > 1:
        diffs = mags[1:] - mags[:-1]
        flux[1:] = np.sqrt((diffs * diffs).sum(axis=1)) / n_bins
    out[10] = flux

    half = cfg.fft_size / 2
    out[11] = np.argmax(mags, axis=1) / half
    out[12] = np.argmin(mags, axis=1) / half
    return out


def spectral_lld(frame_spectrum, prev_spectrum=None, cfg: FrameConfig = FrameConfig()) -> tuple:
    """Spectral descriptors of one magnitude spectrum.

    Returns the 13-tuple (band 0-250, band 0-650, band 250-650,
    band 1000-4000, roll-off 10/25/50/75/90 %, centroid, flux, relative
    position of the spectral maximum, of the minimum). Band energies sum
    squared magnitudes over bins whose center frequency lies inside the
    band (limits inclusive). Flux compares against prev_spectrum and is 0
    without one. A zero-power spectrum yields 0 for roll-offs and centroid.
    """
    mag = np.asarray(frame_spectrum, dtype=np.float64).ravel()
    vals = _spectral_batch(mag[None, :], cfg)[:, 0]
    if prev_spectrum is not None:
        prev = np.asarray(prev_spectrum, dtype=np.float64).ravel()
        d = mag - prev
        vals[10] = math.sqrt(float(np.dot(d, d))) / mag.size
    return tuple(float(v) for v in vals)


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(sample_rate: int = 16000, fft_size: int = 512,
                   n_filters: int = N_MEL_FILTERS) -> np.ndarray:
    """Triangular mel filterbank matrix of shape (n_filters, fft_size//2+1).

    Filters span 0 Hz to sample_rate/2 with mel-spaced corner points and
    unit peak height.
    """
    n_bins = fft_size // 2 + 1
    freqs = np.arange(n_bins) * (sample_rate / fft_size)
    mel_points = np.linspace(0.0, float(_hz_to_mel(sample_rate / 2.0)), n_filters + 2)
    hz_points = _mel_to_hz(mel_points)
    bank = np.zeros((n_filters, n_bins))
    for m in range(n_filters):
        left, center, right = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (freqs >= left) & (freqs <= center)
        falling = (freqs > center) & (freqs <= right)
        if center > left:
            bank[m, rising] = (freqs[rising] - left) / (center - left)
        if right > center:
            bank[m, falling] = (right - freqs[falling]) / (right - center)
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=8)
def _mfcc_dct_matrix(n_filters: int = N_MEL_FILTERS, n_coeffs: int = N_MFCC) -> np.ndarray:
    k = np.arange(n_coeffs, dtype=np.float64)
    grid = np.cos(np.pi * (np.arange(n_filters) + 0.5)[None, :] * k[:, None] / n_filters)
    scale = np.where(k == 0, math.sqrt(1.0 / n_filters), math.sqrt(2.0 / n_filters))
    mat = grid * scale[:, None]
    mat.setflags(write=False)
    return mat


def mfcc_from_energies(filter_energies) -> np.ndarray:
    """MFCC 0-15 from mel filter energies: log (floored) then orthonormal DCT-II."""
    e = np.asarray(filter_energies, dtype=np.float64)
    log_e = np.log(np.maximum(e, LOG_FLOOR))
    return log_e @ _mfcc_dct_matrix().T


def mfcc(frame_spectrum, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """MFCC 0-15 of one magnitude spectrum via the 26-filter mel bank."""
    mag = np.asarray(frame_spectrum, dtype=np.float64).ravel()
    bank = mel_filterbank(cfg.sample_rate, cfg.fft_size)
    energies = (mag * mag) @ bank.T
    return mfcc_from_energies(energies)


def delta_regression(contour, window: int = 2) -> np.ndarray:
    """Regression-based delta of a contour.

    delta_t = sum_{n=1..W} n * (x_{t+n} - x_{t-n}) / (2 * sum n^2), with
    out-of-range indices clamped to the edge value.
    """
    x = np.asarray(contour, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty contour")
    w = int(window)
    padded = np.concatenate([np.repeat(x[:1], w), x, np.repeat(x[-1:], w)])
    num = np.zeros(x.size)
    for n in range(1, w + 1):
        num += n * (padded[w + n : w + n + x.size] - padded[w - n : w - n + x.size])
    return num / (2.0 * sum(n * n for n in range(1, w + 1)))


def extract_contours(segment, cfg: FrameConfig = FrameConfig()) -> ContourMatrix:
    """Compute the full 117-row contour matrix of a segment.

    Rows follow CONTOUR_NAMES: for each of the 39 descriptors, the base
    contour followed by its first and second order regression contours.
    """
    frames = frame_signal(segment, cfg)
    n_frames = frames.shape[0]
    sr = cfg.sample_rate

    base = np.empty((N_LLDS, n_frames))

    duration = cfg.frame_length / sr
    base[0] = np.count_nonzero(frames[:, :-1] * frames[:, 1:] < 0.0, axis=1) / duration
    base[1] = frames.max(axis=1)
    base[2] = frames.min(axis=1)
    base[3] = frames.mean(axis=1)

    mean_square = np.mean(frames * frames, axis=1)
    base[4] = np.sqrt(mean_square)
    base[5] = np.log(np.maximum(mean_square, LOG_FLOOR))

    f0, vp, quality, hnr, _ = _pitch_batch(frames, cfg)
    base[6] = f0
    base[7] = vp
    base[8] = quality
    base[9] = hnr

    mags = np.abs(np.fft.rfft(frames * _window_vector(cfg), cfg.fft_size, axis=1))
    base[10:23] = _spectral_batch(mags, cfg)

    bank = mel_filterbank(sr, cfg.fft_size)
    energies = (mags * mags) @ bank.T
    base[23:39] = (np.log(np.maximum(energies, LOG_FLOOR)) @ _mfcc_dct_matrix().T).T

    rows = np.empty((N_CONTOURS, n_frames))
    for i in range(N_LLDS):
        de = delta_regression(base[i])
        rows[3 * i] = base[i]
        rows[3 * i + 1] = de
        rows[3 * i + 2] = delta_regression(de)
    return ContourMatrix(values=rows)
