"""Frame I/O: the MPF1 binary snapshot format and its CSV twin.

MPF1 layout (little-endian):
    magic   4s   b"MPF1"
    dim     u8
    count   u32
    step    u32
    time    f32
    ids            count * u32
    positions      count * dim * f32
    velocities     count * dim * f32
    material_ids   count * u16
    kinds          count * u8   (0 free, 1 boundary)

Binary frames round-trip losslessly (all payload fields are stored exactly
as written).  CSV mode uses '.' decimals and 9 significant digits, which
round-trips 32-bit floats exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .state import SimState

MAGIC = b"MPF1"
_HEADER = struct.Struct("<4sBIIf")


@dataclass
class FrameRecord:
    step: int
    time: float
    dim: int
    ids: np.ndarray          # u32
    positions: np.ndarray    # (n, dim) f32
    velocities: np.ndarray   # (n, dim) f32
    material_ids: np.ndarray  # u16
    kinds: np.ndarray        # u8

    @property
    def count(self) -> int:
        return len(self.ids)

    @classmethod
    def from_state(cls, state: SimState) -> "FrameRecord":
        n = state.n_particles
        with np.errstate(over="ignore"):  # beyond-f32 values encode as inf
            return cls(
                step=state.step_count,
                time=float(np.float32(state.time)),
                dim=state.dim,
                ids=np.arange(n, dtype=np.uint32),
                positions=state.positions.astype(np.float32),
                velocities=state.velocities.astype(np.float32),
                material_ids=state.material_ids.astype(np.uint16),
                kinds=state.kinds.astype(np.uint8),
            )

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, self.dim, self.count, self.step, self.time)
        return b"".join([
            head,
            np.ascontiguousarray(self.ids, dtype="<u4").tobytes(),
            np.ascontiguousarray(self.positions, dtype="<f4").tobytes(),
            np.ascontiguousarray(self.velocities, dtype="<f4").tobytes(),
            np.ascontiguousarray(self.material_ids, dtype="<u2").tobytes(),
            np.ascontiguousarray(self.kinds, dtype="u1").tobytes(),
        ])

    @classmethod
    def from_bytes(cls, buf: bytes) -> "FrameRecord":
        magic, dim, count, step, time = _HEADER.unpack_from(buf, 0)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if dim not in (2, 3):
            raise ValueError(f"bad dim {dim}")
        off = _HEADER.size
        ids = np.frombuffer(buf, "<u4", count, off).copy()
        off += 4 * count
        positions = np.frombuffer(buf, "<f4", count * dim, off).reshape(count, dim).copy()
        off += 4 * count * dim
        velocities = np.frombuffer(buf, "<f4", count * dim, off).reshape(count, dim).copy()
        off += 4 * count * dim
        material_ids = np.frombuffer(buf, "<u2", count, off).copy()
        off += 2 * count
        kinds = np.frombuffer(buf, "u1", count, off).copy()
        off += count
        if off != len(buf):
            raise ValueError(f"frame has {len(buf) - off} trailing bytes")
        return cls(step, time, dim, ids, positions, velocities, material_ids, kinds)

    def to_csv(self) -> str:
        axes = "xyz"[: self.dim]
        cols = ["step", "time", "id"]
        cols += [f"p{a}" for a in axes] + [f"v{a}" for a in axes]
        cols += ["material_id", "kind"]
        lines = [",".join(cols)]
        for k in range(self.count):
            vals = [str(self.step), f"{self.time:.9g}", str(int(self.ids[k]))]
            vals += [f"{v:.9g}" for v in self.positions[k]]
            vals += [f"{v:.9g}" for v in self.velocities[k]]
            vals += [str(int(self.material_ids[k])), str(int(self.kinds[k]))]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "FrameRecord":
        lines = [ln for ln in text.strip().splitlines() if ln]
        header = lines[0].split(",")
        dim = 3 if "pz" in header else 2
        rows = [ln.split(",") for ln in lines[1:]]
        n = len(rows)
        rec = cls(
            step=int(rows[0][0]) if rows else 0,
            time=float(rows[0][1]) if rows else 0.0,
            dim=dim,
            ids=np.array([int(r[2]) for r in rows], dtype=np.uint32),
            positions=np.array([[float(v) for v in r[3:3 + dim]] for r in rows],
                               dtype=np.float32).reshape(n, dim),
            velocities=np.array([[float(v) for v in r[3 + dim:3 + 2 * dim]] for r in rows],
                                dtype=np.float32).reshape(n, dim),
            material_ids=np.array([int(r[3 + 2 * dim]) for r in rows], dtype=np.uint16),
            kinds=np.array([int(r[4 + 2 * dim]) for r in rows], dtype=np.uint8),
        )
        return rec


def frame_filename(step: int, fmt: str = "bin") -> str:
    ext = {"bin": "mpf", "csv": "csv"}[fmt]
    return f"frame_{step:08d}.{ext}"


def write_frame(path: str, record: FrameRecord, fmt: str = "bin"):
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(record.to_bytes())
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            fh.write(record.to_csv())
    else:
        raise ValueError(f"unknown frame format {fmt!r}")


def read_frame(path: str) -> FrameRecord:
    if path.endswith(".csv"):
        with open(path, newline="") as fh:
            return FrameRecord.from_csv(fh.read())
    with open(path, "rb") as fh:
        return FrameRecord.from_bytes(fh.read())
