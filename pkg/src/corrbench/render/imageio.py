"""Binary netpbm encoders/decoders used for debug dumps and dataset records.

RGB is 8-bit PPM (P6). Depth is 16-bit PGM (P5, big-endian per the format)
storing 1/4096 m per unit; empty pixels (infinite depth) store 0. Masks are
packed PBM (P4) with bit 1 marking object pixels.
"""

from __future__ import annotations

import numpy as np

DEPTH_SCALE = 4096.0  # units per meter


def encode_ppm(rgb: np.ndarray) -> bytes:
    h, w, c = rgb.shape
    if c != 3:
        raise ValueError("encode_ppm expects [H,W,3]")
    data = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    return b"P6\n%d %d\n255\n" % (w, h) + data.tobytes()


def encode_pgm16(depth: np.ndarray) -> bytes:
    h, w = depth.shape
    scaled = np.where(np.isfinite(depth), depth * DEPTH_SCALE, 0.0)
    data = np.clip(np.round(scaled), 0, 65535).astype(">u2")
    return b"P5\n%d %d\n65535\n" % (w, h) + data.tobytes()


def encode_pbm(mask: np.ndarray) -> bytes:
    h, w = mask.shape
    packed = np.packbits(mask.astype(np.uint8), axis=1)
    return b"P4\n%d %d\n" % (w, h) + packed.tobytes()


def _parse_header(buf: bytes, magic: bytes, n_fields: int):
    if not buf.startswith(magic):
        raise ValueError(f"expected {magic!r} header")
    fields = []
    pos = 2
    while len(fields) < n_fields:
        while buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while buf[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while not buf[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(buf[start:pos]))
    return fields, pos + 1


def decode_ppm(buf: bytes) -> np.ndarray:
    (w, h, maxval), pos = _parse_header(buf, b"P6", 3)
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    data = np.frombuffer(buf, dtype=np.uint8, count=w * h * 3, offset=pos)
    return data.reshape(h, w, 3).astype(np.float64) / 255.0


def decode_pgm16(buf: bytes) -> np.ndarray:
    (w, h, maxval), pos = _parse_header(buf, b"P5", 3)
    if maxval != 65535:
        raise ValueError("only 16-bit PGM supported")
    data = np.frombuffer(buf, dtype=">u2", count=w * h, offset=pos)
    depth = data.reshape(h, w).astype(np.float64) / DEPTH_SCALE
    depth[depth == 0.0] = np.inf
    return depth


def decode_pbm(buf: bytes) -> np.ndarray:
    (w, h), pos = _parse_header(buf, b"P4", 2)
    row_bytes = (w + 7) // 8
    data = np.frombuffer(buf, dtype=np.uint8, count=row_bytes * h, offset=pos)
    bits = np.unpackbits(data.reshape(h, row_bytes), axis=1)[:, :w]
    return bits.astype(bool)


def ppm_size(buf: bytes, offset: int = 0) -> int:
    """Byte length of the PPM record starting at offset."""
    (w, h, _), pos = _parse_header(buf[offset:], b"P6", 3)
    return pos + w * h * 3


def pgm16_size(buf: bytes, offset: int = 0) -> int:
    (w, h, _), pos = _parse_header(buf[offset:], b"P5", 3)
    return pos + w * h * 2


def pbm_size(buf: bytes, offset: int = 0) -> int:
    (w, h), pos = _parse_header(buf[offset:], b"P4", 2)
    return pos + ((w + 7) // 8) * h


def write_ppm(path, rgb):
    with open(path, "wb") as f:
        f.write(encode_ppm(rgb))


def read_ppm(path):
    with open(path, "rb") as f:
        return decode_ppm(f.read())


def write_pgm16(path, depth):
    with open(path, "wb") as f:
        f.write(encode_pgm16(depth))


def read_pgm16(path):
    with open(path, "rb") as f:
        return decode_pgm16(f.read())


def write_pbm(path, mask):
    with open(path, "wb") as f:
        f.write(encode_pbm(mask))


def read_pbm(path):
    with open(path, "rb") as f:
        return decode_pbm(f.read())
