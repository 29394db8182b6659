"""Minimal 16-bit RGBA PNG reader/writer.

Texture files need four 16-bit channels; Pillow cannot round-trip those, so
this module implements the small slice of the PNG format we rely on:
bit depth 16, color type 6 (RGBA), no interlacing. The writer emits
filter-0 scanlines; the reader handles all five standard scanline filters
so externally produced files load too.
"""

import struct
import zlib

import numpy as np

from .errors import FormatError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_COLOR_TYPE_CHANNELS = {0: 1, 2: 3, 4: 2, 6: 4}


def _chunk(tag, payload):
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def write_rgba16(path, rgba):
    """Write an (H, W, 4) uint16 array as a 16-bit RGBA PNG."""
    arr = np.asarray(rgba)
    if arr.ndim != 3 or arr.shape[2] != 4 or arr.dtype != np.uint16:
        raise FormatError(f"expected (H, W, 4) uint16 array, got {arr.shape} {arr.dtype}")
    h, w = arr.shape[:2]
    ihdr = struct.pack(">IIBBBBB", w, h, 16, 6, 0, 0, 0)
    big = arr.astype(">u2").tobytes()
    stride = w * 8
    raw = b"".join(b"\x00" + big[y * stride:(y + 1) * stride] for y in range(h))
    with open(path, "wb") as f:
        f.write(_SIGNATURE)
        f.write(_chunk(b"IHDR", ihdr))
        f.write(_chunk(b"IDAT", zlib.compress(raw, 9)))
        f.write(_chunk(b"IEND", b""))


def _paeth(a, b, c):
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw, height, stride, bpp):
    out = bytearray(height * stride)
    pos = 0
    for y in range(height):
        ftype = raw[pos]
        pos += 1
        line = bytearray(raw[pos:pos + stride])
        pos += stride
        prev_off = (y - 1) * stride
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub
            for i in range(bpp, stride):
                line[i] = (line[i] + line[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            if y > 0:
                for i in range(stride):
                    line[i] = (line[i] + out[prev_off + i]) & 0xFF
        elif ftype == 3:  # Average
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                up = out[prev_off + i] if y > 0 else 0
                line[i] = (line[i] + (left + up) // 2) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                left = line[i - bpp] if i >= bpp else 0
                up = out[prev_off + i] if y > 0 else 0
                ul = out[prev_off + i - bpp] if (y > 0 and i >= bpp) else 0
                line[i] = (line[i] + _paeth(left, up, ul)) & 0xFF
        else:
            raise FormatError(f"unknown PNG scanline filter {ftype}")
        out[y * stride:(y + 1) * stride] = line
    return bytes(out)


def read_rgba16(path):
    """Read a 16-bit RGBA PNG written by write_rgba16 (or any conforming file).

    Returns an (H, W, 4) uint16 array. Files with a different bit depth or
    channel count raise FormatError.
    """
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != _SIGNATURE:
        raise FormatError(f"{path} is not a PNG file")
    pos = 8
    ihdr = None
    idat = []
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        tag = data[pos + 4:pos + 8]
        payload = data[pos + 8:pos + 8 + length]
        if len(payload) != length:
            raise FormatError(f"{path}: truncated {tag!r} chunk")
        (crc,) = struct.unpack(">I", data[pos + 8 + length:pos + 12 + length])
        if zlib.crc32(tag + payload) & 0xFFFFFFFF != crc:
            raise FormatError(f"{path}: CRC mismatch in {tag!r} chunk")
        pos += 12 + length
        if tag == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", payload)
        elif tag == b"IDAT":
            idat.append(payload)
        elif tag == b"IEND":
            break
    if ihdr is None:
        raise FormatError(f"{path}: missing IHDR")
    w, h, depth, color_type, comp, filt, interlace = ihdr
    channels = _COLOR_TYPE_CHANNELS.get(color_type)
    if channels != 4:
        raise FormatError(
            f"{path}: expected 4 channels (RGBA), file has color type "
            f"{color_type} ({channels or '?'} channels)")
    if depth != 16:
        raise FormatError(f"{path}: expected bit depth 16, file has {depth}")
    if comp != 0 or filt != 0 or interlace != 0:
        raise FormatError(f"{path}: unsupported compression/filter/interlace flags")
    raw = zlib.decompress(b"".join(idat))
    stride = w * 8
    if len(raw) != h * (stride + 1):
        raise FormatError(f"{path}: IDAT size mismatch")
    plain = _unfilter(raw, h, stride, bpp=8)
    return np.frombuffer(plain, dtype=">u2").reshape(h, w, 4).astype(np.uint16)
