"""File formats: PCM16 WAV, binary PPM, tensor and array snapshots, CSV.

Tensor binary (little-endian)::

    magic  b"ANFT"   version u32   ndim u32   dims u64 * ndim
    data   complex128 row-major (real, imag pairs of f64)

Array snapshot (little-endian)::

    magic  b"ANFA"   version u32   rows u32   cols u32   g_max f64
    n_in u32  n_out u32  n_tiles u32  quadrant_order u32  pair_order u32
    array_id u64   has_actual u32
    g_target f64[rows*cols]  [g_actual f64[rows*cols]]
"""

from __future__ import annotations

import csv
import io
import struct
import wave
from pathlib import Path

import numpy as np

from .device import Layout, ProgrammedArray
from .errors import FileFormatError

TENSOR_MAGIC = b"ANFT"
ARRAY_MAGIC = b"ANFA"
VERSION = 1


def read_wav(path) -> tuple[np.ndarray, int]:
    """16-bit PCM mono WAV -> (int16 samples as float64, sample rate)."""
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            frames = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FileFormatError(f"{path}: not a PCM WAV file ({exc})") from exc
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if channels != 1:
        raise FileFormatError(f"{path}: {channels} channels; mix down to mono first "
                              "(e.g. average the channels)")
    if width != 2:
        raise FileFormatError(f"{path}: {8 * width}-bit samples; only 16-bit PCM is supported")
    return np.frombuffer(frames, dtype="<i2").astype(np.float64), rate


def write_wav(path, samples, rate: int) -> None:
    data = np.clip(np.rint(np.asarray(samples, dtype=float)), -32768, 32767).astype("<i2")
    try:
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(int(rate))
            w.writeframes(data.tobytes())
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def _ppm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise FileFormatError("truncated PPM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1


def read_ppm(path) -> np.ndarray:
    """Binary P6 with maxval 255 -> uint8 array (rows, cols, 3)."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    tokens, offset = _ppm_tokens(data, 4)
    if tokens[0] != b"P6":
        raise FileFormatError(f"{path}: not a binary PPM (P6)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FileFormatError(f"{path}: bad PPM header") from exc
    if maxval != 255:
        raise FileFormatError(f"{path}: only 8-bit PPM (maxval 255) is supported")
    pixels = data[offset:offset + width * height * 3]
    if len(pixels) != width * height * 3:
        raise FileFormatError(f"{path}: truncated pixel data")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, img) -> None:
    img = np.clip(np.rint(np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise FileFormatError(f"expected (rows, cols, 3) image, got {img.shape}")
    h, w, _ = img.shape
    try:
        Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + img.tobytes())
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def tensor_to_bytes(x) -> bytes:
    x = np.ascontiguousarray(x, dtype="<c16")
    head = TENSOR_MAGIC + struct.pack("<II", VERSION, x.ndim) + struct.pack(f"<{x.ndim}Q", *x.shape)
    return head + x.tobytes()


def tensor_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != TENSOR_MAGIC or len(data) < 12:
        raise FileFormatError("not an ANFT tensor")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FileFormatError(f"unsupported tensor version {version}")
    shape = struct.unpack_from(f"<{ndim}Q", data, 12)
    offset = 12 + 8 * ndim
    count = int(np.prod(shape)) if shape else 1
    if len(data) != offset + 16 * count:
        raise FileFormatError("tensor payload size does not match header")
    return np.frombuffer(data, dtype="<c16", offset=offset).reshape(shape).astype(np.complex128)


def save_tensor(path, x) -> None:
    _write(path, tensor_to_bytes(x))


def load_tensor(path) -> np.ndarray:
    return tensor_from_bytes(_read(path))


_ARRAY_HEAD = struct.Struct("<4sIIId5IQI")


def array_to_bytes(arr: ProgrammedArray) -> bytes:
    lay = arr.layout
    has_actual = arr.g_actual is not None
    head = _ARRAY_HEAD.pack(ARRAY_MAGIC, VERSION, arr.rows, arr.cols, arr.g_max, lay.n_in,
                            lay.n_out, lay.n_tiles, lay.quadrant_order, lay.pair_order,
                            arr.array_id, int(has_actual))
    body = np.ascontiguousarray(arr.g_target, dtype="<f8").tobytes()
    if has_actual:
        body += np.ascontiguousarray(arr.g_actual, dtype="<f8").tobytes()
    return head + body


def array_from_bytes(data: bytes) -> ProgrammedArray:
    if len(data) < _ARRAY_HEAD.size or data[:4] != ARRAY_MAGIC:
        raise FileFormatError("not an ANFA array snapshot")
    (_, version, rows, cols, g_max, n_in, n_out, n_tiles, qo, po, array_id,
     has_actual) = _ARRAY_HEAD.unpack_from(data)
    if version != VERSION:
        raise FileFormatError(f"unsupported snapshot version {version}")
    cells = rows * cols
    expect = _ARRAY_HEAD.size + 8 * cells * (2 if has_actual else 1)
    if len(data) != expect:
        raise FileFormatError("snapshot payload size does not match header")
    grids = np.frombuffer(data, dtype="<f8", offset=_ARRAY_HEAD.size).astype(np.float64)
    target = grids[:cells].reshape(rows, cols)
    actual = grids[cells:].reshape(rows, cols) if has_actual else None
    return ProgrammedArray(target, g_max, Layout(n_in, n_out, n_tiles, qo, po), array_id, actual)


def save_array(path, arr: ProgrammedArray) -> None:
    _write(path, array_to_bytes(arr))


def load_array(path) -> ProgrammedArray:
    return array_from_bytes(_read(path))


def spectrum_csv(X) -> str:
    X = np.asarray(X).ravel()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "real", "imag"])
    for i, v in enumerate(X):
        w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def matrix_csv(m, header=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in np.atleast_2d(m):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    _write(path, text.encode())


def _write(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
