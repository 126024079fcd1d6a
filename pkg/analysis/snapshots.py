"""
Binary trajectory snapshots.

Layout (little-endian):
  magic "NLS1" | u32 version | f64 L | u64 M | u64 S | f64 t0 | f64 spacing |
  S*M complex samples as (f64 re, f64 im), snapshot-major | u64 checksum

The checksum is FNV-1a 64 over every preceding byte.
"""

import logging
import struct
from pathlib import Path

import numpy as np

from analysis.dynamics import Trajectory
from analysis.errors import ConfigurationError, FormatError
from analysis.spectral import make_grid

logger = logging.getLogger(__name__)

MAGIC    = b"NLS1"
VERSION  = 1
HEADER   = struct.Struct("<4sIdQQdd")
CHECKSUM = struct.Struct("<Q")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME  = 0x100000001B3
_MASK       = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data):
    # each step depends on the previous one; the recurrence does not vectorize
    h, prime, mask = _FNV_OFFSET, _FNV_PRIME, _MASK
    for byte in memoryview(data).cast("B"):
        h = ((h ^ byte) * prime) & mask
    return h


def encode_trajectory(traj):
    S, M = traj.samples.shape
    header  = HEADER.pack(MAGIC, VERSION, traj.grid.L, M, S, float(traj.t0), float(traj.spacing))
    payload = header + np.ascontiguousarray(traj.samples, dtype="<c16").tobytes()
    return payload + CHECKSUM.pack(fnv1a_64(payload))


def decode_trajectory(blob):
    if len(blob) < HEADER.size + CHECKSUM.size:
        raise FormatError("snapshot file truncated: shorter than its header")
    magic, version, L, M, S, t0, spacing = HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported snapshot version {version}")
    expected = HEADER.size + S * M * 16 + CHECKSUM.size
    if len(blob) != expected:
        raise FormatError(f"snapshot file truncated or padded: {len(blob)} bytes, expected {expected}")
    body = blob[:-CHECKSUM.size]
    (stored,) = CHECKSUM.unpack_from(blob, len(body))
    if stored != fnv1a_64(body):
        raise FormatError("snapshot checksum mismatch")
    try:
        grid = make_grid(L, M)
    except ConfigurationError as exc:
        raise FormatError(f"snapshot header describes an invalid grid: {exc}") from None
    samples = np.frombuffer(body, dtype="<c16", offset=HEADER.size).reshape(S, M)
    return Trajectory(grid, samples.astype(complex), t0, spacing)


def write_snapshots(traj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_trajectory(traj))
    logger.info("wrote %d snapshots to %s", len(traj), path)
    return path


def read_snapshots(path):
    return decode_trajectory(Path(path).read_bytes())
