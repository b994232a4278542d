"""Detector-voltage traces built from temporal mode functions.

A frame is 10,000 samples at 1 GS/s holding 250 bins of 40 ns. The mode
function of bin k is f_k(t) = (t - t_k) exp(-(t - t_k)^2 / (2 tau^2)) on its own
window and zero elsewhere, with t_k the bin centre. Samples sit at the middle
of each 1 ns interval, so the 40 samples of a bin are exactly antisymmetric
and different bins never overlap.

Binary trace layout (little endian)::

    offset  size  field
    0       8     magic b"TDMTRACE"
    8       2     format version (uint16, currently 1)
    10      1     channel (ASCII 'A' or 'B')
    11      8     sample rate in samples/s (float64)
    19      4     number of samples (uint32)
    23      8*n   samples (float64)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

SAMPLE_RATE = 1e9
SAMPLES_PER_BIN = 40
BINS_PER_FRAME = 250
FRAME_SAMPLES = SAMPLES_PER_BIN * BINS_PER_FRAME

MAGIC = b"TDMTRACE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHcdI")


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class ModeFunction:
    """Temporal mode of bin ``k``; times in ns."""

    tau: float = 5.0
    delta_t: float = 40.0
    k: int = 0

    @property
    def center(self) -> float:
        return self.k * self.delta_t + self.delta_t / 2

    def __call__(self, t):
        s = np.asarray(t, dtype=float) - self.center
        val = s * np.exp(-(s**2) / (2 * self.tau**2))
        return np.where(np.abs(s) <= self.delta_t / 2, val, 0.0)


def mode_function_samples(mf: ModeFunction | None = None) -> np.ndarray:
    """L2-normalised samples of one bin's mode function (1 ns spacing)."""
    mf = ModeFunction() if mf is None else mf
    n = int(round(mf.delta_t))
    t = mf.k * mf.delta_t + np.arange(n) + 0.5
    f = mf(t)
    return f / np.linalg.norm(f)


@dataclass(frozen=True)
class Trace:
    samples: np.ndarray
    channel: str = "A"
    sample_rate: float = SAMPLE_RATE

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.shape != (FRAME_SAMPLES,):
            raise TraceError(f"a frame holds {FRAME_SAMPLES} samples, got shape {s.shape}")
        if self.channel not in ("A", "B"):
            raise TraceError(f"channel must be 'A' or 'B', got {self.channel!r}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __add__(self, other: "Trace") -> "Trace":
        return Trace(self.samples + other.samples, self.channel, self.sample_rate)

    def __rmul__(self, a: float) -> "Trace":
        return Trace(a * self.samples, self.channel, self.sample_rate)


def _basis(tau: float = 5.0) -> np.ndarray:
    """Per-bin sample vector; every bin uses the same 40 samples at its own offset."""
    return mode_function_samples(ModeFunction(tau=tau))


def synthesize_frame(
    values,
    noise_seed: int | None = None,
    noise_power: float = 0.0,
    channel: str = "A",
    tau: float = 5.0,
) -> Trace:
    """Trace carrying ``values[k]`` in bin k plus noise orthogonal to every mode.

    Args:
        values: up to 250 per-bin quadratures; missing bins are zero.
        noise_seed: seed for the complement noise.
        noise_power: per-sample variance of white noise before projection.
        channel: detector label.
        tau: mode-function width in ns.

    Returns:
        Trace whose integration returns ``values`` exactly.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size > BINS_PER_FRAME:
        raise TraceError(f"a frame holds at most {BINS_PER_FRAME} bins, got {v.size}")
    if noise_power < 0:
        raise TraceError("noise_power must be non-negative")
    full = np.zeros(BINS_PER_FRAME)
    full[: v.size] = v
    f = _basis(tau)
    blocks = full[:, None] * f[None, :]
    if noise_power > 0:
        rng = np.random.default_rng(noise_seed)
        w = rng.normal(scale=np.sqrt(noise_power), size=(BINS_PER_FRAME, SAMPLES_PER_BIN))
        w -= (w @ f)[:, None] * f[None, :]
        blocks = blocks + w
    return Trace(blocks.ravel(), channel)


def integrate_frame(trace: Trace, k: int | None = None, tau: float = 5.0):
    """Inner product of the trace with mode function k (all bins when k is None)."""
    blocks = trace.samples.reshape(BINS_PER_FRAME, SAMPLES_PER_BIN)
    f = _basis(tau)
    if k is None:
        return blocks @ f
    if int(k) != k or not 0 <= k < BINS_PER_FRAME:
        raise TraceError(f"bin index must lie in [0, {BINS_PER_FRAME}), got {k!r}")
    return float(blocks[int(k)] @ f)


def write_trace(trace: Trace, path) -> None:
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, trace.channel.encode(), trace.sample_rate,
                          trace.samples.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(trace.samples.astype("<f8").tobytes())


def read_trace(path) -> Trace:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise TraceError(f"{path}: file too short for a trace header")
    magic, version, channel, rate, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TraceError(f"{path}: not a trace file")
    if version != FORMAT_VERSION:
        raise TraceError(f"{path}: unsupported trace version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise TraceError(f"{path}: expected {n} samples, found {len(body) // 8}")
    return Trace(np.frombuffer(body, dtype="<f8").copy(), channel.decode(), rate)


def write_trace_csv(trace: Trace, path) -> None:
    t_ns = np.arange(trace.samples.size) * (1e9 / trace.sample_rate)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# channel={trace.channel} sample_rate={trace.sample_rate!r}\n")
        fh.write("t_ns,value\n")
        for t, v in zip(t_ns, trace.samples):
            fh.write(f"{float(t)!r},{float(v)!r}\n")


def read_trace_csv(path) -> Trace:
    with open(path, encoding="utf-8") as fh:
        meta = dict(item.split("=") for item in fh.readline()[2:].split())
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return Trace(data[:, 1], meta["channel"], float(meta["sample_rate"]))
