"""
Binary persistence for gauge fields.

Layout (little-endian):
    magic    4 bytes  b"HJVF"
    version  u32      1
    kind     u8       0 = U(1), 1 = SU(2)
    n_t, n_x, n_y, n_z  u32 each
    spacing  f64
    links    f64[n_t, n_x, n_y, n_z, 4, width]  (site-major, direction-minor)
    crc32    u32      zlib.crc32 of the link bytes
"""

import logging
import struct
import zlib
from pathlib import Path
from typing import Union

import numpy as np

from ..core import lie
from ..core.errors import (ChecksumError, MagicMismatchError, TruncatedFileError,
                           VersionMismatchError)
from ..core.lie import GroupKind
from .field import GaugeField
from .geometry import LatticeGeometry


logger = logging.getLogger(__name__)

MAGIC = b"HJVF"
VERSION = 1
HEADER = struct.Struct("<4sIBIIIId")
TRAILER = struct.Struct("<I")


def encode_field(field: GaugeField) -> bytes:
    """Serialize a field to the HJVF byte layout."""
    geom = field.geometry
    header = HEADER.pack(MAGIC, VERSION, field.kind.code,
                         geom.n_t, geom.n_x, geom.n_y, geom.n_z, float(geom.a))
    payload = np.ascontiguousarray(field.links, dtype="<f8").tobytes()
    return header + payload + TRAILER.pack(zlib.crc32(payload) & 0xFFFFFFFF)


def decode_field(blob: bytes) -> GaugeField:
    """Parse HJVF bytes; raises a FieldFormatError subclass on bad input."""
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"file has {len(blob)} bytes, too short for the magic")
    if blob[:4] != MAGIC:
        raise MagicMismatchError("missing HJVF magic")
    if len(blob) < HEADER.size:
        raise TruncatedFileError(f"header needs {HEADER.size} bytes, file has {len(blob)}")
    _, version, code, n_t, n_x, n_y, n_z, spacing = HEADER.unpack_from(blob)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version} (expected {VERSION})")
    kind = GroupKind.from_code(code)
    geometry = LatticeGeometry(n_t, n_x, n_y, n_z, spacing)

    shape = geometry.shape + (4, lie.group_width(kind))
    n_bytes = int(np.prod(shape)) * 8
    end = HEADER.size + n_bytes
    if len(blob) < end + TRAILER.size:
        raise TruncatedFileError(
            f"expected {end + TRAILER.size} bytes, file has {len(blob)}"
        )
    payload = blob[HEADER.size:end]
    (stored,) = TRAILER.unpack_from(blob, end)
    computed = zlib.crc32(payload) & 0xFFFFFFFF
    if stored != computed:
        raise ChecksumError(f"CRC32 mismatch: stored {stored:#010x}, computed {computed:#010x}")

    links = np.frombuffer(payload, dtype="<f8").reshape(shape)
    return GaugeField(geometry, kind, links)


def save_field(field: GaugeField, path: Union[str, Path]) -> Path:
    """Write a field file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(field))
    logger.info("saved %s field %s to %s", field.kind.value, field.geometry.shape, path)
    return path


def load_field(path: Union[str, Path]) -> GaugeField:
    """Read a field file written by save_field."""
    return decode_field(Path(path).read_bytes())
