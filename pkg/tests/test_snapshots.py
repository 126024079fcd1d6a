import numpy as np
import pytest

from analysis.dynamics import SolverConfig, Trajectory, solve
from analysis.errors import FormatError
from analysis.snapshots import (
    CHECKSUM,
    HEADER,
    MAGIC,
    decode_trajectory,
    encode_trajectory,
    fnv1a_64,
    read_snapshots,
    write_snapshots,
)


@pytest.fixture
def traj(bump):
    return solve(bump, SolverConfig(dt=1e-2, T=0.2, stride=5, symmetric=True))


def test_fnv1a_reference_values():
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_fnv1a_accepts_any_byte_buffer():
    data = bytes(range(256)) * 4
    assert fnv1a_64(bytearray(data)) == fnv1a_64(memoryview(data)) == fnv1a_64(data)


def test_file_is_bit_exact(tmp_path, traj):
    path = write_snapshots(traj, tmp_path / "run" / "trajectory.nls")
    back = read_snapshots(path)
    assert path.stat().st_size == HEADER.size + traj.samples.size * 16 + CHECKSUM.size
    assert np.array_equal(back.samples, traj.samples)
    assert back.t0 == traj.t0 and back.spacing == traj.spacing
    assert back.grid == traj.grid
    assert np.allclose(back.times, traj.times)


def test_empty_trajectory(grid):
    empty = Trajectory(grid, np.zeros((0, grid.M), dtype=complex))
    back  = decode_trajectory(encode_trajectory(empty))
    assert len(back) == 0 and back.grid == grid


def test_truncated_file(traj):
    blob = encode_trajectory(traj)
    with pytest.raises(FormatError, match="truncated"):
        decode_trajectory(blob[:-1])
    with pytest.raises(FormatError, match="truncated"):
        decode_trajectory(blob[:10])


def test_bad_magic(traj):
    blob = b"XLS1" + encode_trajectory(traj)[len(MAGIC):]
    with pytest.raises(FormatError, match="magic"):
        decode_trajectory(blob)


def test_bad_version(traj):
    blob = bytearray(encode_trajectory(traj))
    blob[4] = 9
    with pytest.raises(FormatError, match="version"):
        decode_trajectory(bytes(blob))


def test_flipped_payload_bit(traj):
    blob = bytearray(encode_trajectory(traj))
    blob[HEADER.size + 3] ^= 0x01
    with pytest.raises(FormatError, match="checksum"):
        decode_trajectory(bytes(blob))
