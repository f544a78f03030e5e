"""Binary snapshots in the ``HWM1`` format.

Layout: magic ``b"HWM1"``, then ``version u32, dim u32, N u32, L f64,
t f64, components u32`` (little-endian, packed), then the samples as
little-endian f64 in component-major, row-major grid order. A JSON
manifest is written next to the file as ``<path>.manifest.json``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BadMagic, HeaderMismatch, TruncatedFile, VersionMismatch
from ..report import canonical_json

MAGIC = b"HWM1"
VERSION = 1
HEADER = struct.Struct("<4sIIIddI")


@dataclass(frozen=True)
class Snapshot:
    dim: int
    n: int
    L: float
    t: float
    samples: np.ndarray

    @property
    def components(self) -> int:
        return self.samples.shape[0]


def encode(snap: Snapshot) -> bytes:
    a = np.ascontiguousarray(snap.samples, dtype="<f8")
    if a.shape[1:] != (snap.n,) * snap.dim:
        raise ValueError(f"samples shape {a.shape} does not match dim={snap.dim}, N={snap.n}")
    head = HEADER.pack(MAGIC, VERSION, snap.dim, snap.n, float(snap.L), float(snap.t), a.shape[0])
    return head + a.tobytes()


def decode(buf: bytes, expect: dict | None = None) -> Snapshot:
    """Parse a snapshot; ``expect`` may pin ``dim``, ``n``, ``L`` or ``components``."""
    if len(buf) < 4:
        raise TruncatedFile("file shorter than the magic")
    if buf[:4] != MAGIC:
        raise BadMagic(f"bad magic {buf[:4]!r}")
    if len(buf) < HEADER.size:
        raise TruncatedFile("file shorter than the header")
    _, version, dim, n, L, t, comps = HEADER.unpack_from(buf)
    if version != VERSION:
        raise VersionMismatch(f"version {version}, expected {VERSION}")
    got = {"dim": dim, "n": n, "L": L, "components": comps}
    for k, v in (expect or {}).items():
        if got[k] != v:
            raise HeaderMismatch(f"header {k}={got[k]!r}, expected {v!r}")
    payload = len(buf) - HEADER.size
    if not 1 <= dim <= 4 or n < 1 or comps < 1:
        raise HeaderMismatch(f"implausible header dim={dim} N={n} components={comps}")
    need = 8 * comps * n**dim
    if payload != need:
        if payload > need or _other_layout(payload, dim, n, comps):
            raise HeaderMismatch(f"payload of {payload} bytes does not match header (dim={dim}, N={n}, components={comps})")
        raise TruncatedFile(f"payload {payload} bytes, expected {need}")
    a = np.frombuffer(buf, dtype="<f8", offset=HEADER.size).reshape((comps,) + (n,) * dim)
    return Snapshot(dim, n, L, t, a.astype(np.float64))


def _other_layout(payload: int, dim: int, n: int, comps: int) -> bool:
    """True when the payload fits a header with another dim or component count."""
    for d in range(1, 5):
        for c in (1, 3):
            if (d, c) != (dim, comps) and payload == 8 * c * n**d:
                return True
    return False


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def write(path: str | Path, snap: Snapshot, manifest: dict | None = None):
    path = Path(path)
    path.write_bytes(encode(snap))
    if manifest is not None:
        manifest_path(path).write_text(canonical_json(manifest) + "\n")


def read(path: str | Path, expect: dict | None = None) -> Snapshot:
    return decode(Path(path).read_bytes(), expect)
