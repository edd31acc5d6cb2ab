"""Stream serialization: CSV for interoperability, binary for bulk data.

CSV layout::

    # K=20
    # N_s=10000
    # R=100000.0
    # mode=restless
    j,k,i,I,Q
    1,1,0,0.123456789,-0.0423
    ...

IQ values are written with 9 significant digits.  An optional trailing
``state`` column carries simulator ground-truth states.

Binary layout (all little-endian)::

    magic   4 bytes  b"RSTL"
    version u16      1 = plain records, 2 = records with truth state
    K       u32
    N_s     u32
    R       f64
    mode    u8       0 = standard, 1 = restless
    records          j u64, I f64, Q f64 [, state u8]

Truncated acquisitions are recognised by their record count being smaller
than ``K * N_s``; no separate flag is stored.
"""

from __future__ import annotations

import io as _io
import struct
from pathlib import Path

import numpy as np

from .core import MODE_RESTLESS, MODE_STANDARD, ShotStream, StreamValidationError

MAGIC = b"RSTL"
_VERSION_PLAIN = 1
_VERSION_TRUTH = 2
_HEADER = struct.Struct("<4sHIIdB")
_MODE_CODES = {MODE_STANDARD: 0, MODE_RESTLESS: 1}
_MODE_NAMES = {v: k for k, v in _MODE_CODES.items()}

_REC_PLAIN = np.dtype([("j", "<u8"), ("I", "<f8"), ("Q", "<f8")])
_REC_TRUTH = np.dtype([("j", "<u8"), ("I", "<f8"), ("Q", "<f8"), ("state", "u1")])


def _check_states(stream: ShotStream, states) -> np.ndarray | None:
    if states is None:
        return None
    arr = np.asarray(states, dtype=np.uint8).reshape(-1)
    if len(arr) != len(stream):
        raise ValueError(f"truth states length {len(arr)} != stream length {len(stream)}")
    if arr.max(initial=0) > 1:
        raise ValueError("truth states must be 0 or 1")
    return arr


def write_stream_csv(stream: ShotStream, path, states=None) -> None:
    states = _check_states(stream, states)
    k_arr, i_arr = stream.k, stream.i
    with open(path, "w", newline="") as fh:
        fh.write(f"# K={stream.num_sequences}\n")
        fh.write(f"# N_s={stream.num_repetitions}\n")
        fh.write(f"# R={stream.repetition_rate!r}\n")
        fh.write(f"# mode={stream.mode}\n")
        fh.write("j,k,i,I,Q" + (",state" if states is not None else "") + "\n")
        for p in range(len(stream)):
            z = stream.iq[p]
            row = f"{p + 1},{k_arr[p]},{i_arr[p]},{z.real:.9g},{z.imag:.9g}"
            if states is not None:
                row += f",{states[p]}"
            fh.write(row + "\n")


def read_stream_csv(path):
    """Read a CSV stream.  Returns ``(stream, states_or_None)``."""
    meta: dict[str, str] = {}
    header = None
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            header = [c.strip() for c in line.split(",")]
            break
        if header is None:
            raise StreamValidationError(f"{path}: no header row found")
        has_state = header == ["j", "k", "i", "I", "Q", "state"]
        if not has_state and header != ["j", "k", "i", "I", "Q"]:
            raise StreamValidationError(f"{path}: unexpected header {header}")
        try:
            K = int(meta["K"])
            n_rep = int(meta["N_s"])
            rate = float(meta["R"])
            mode = meta["mode"]
        except KeyError as exc:
            raise StreamValidationError(f"{path}: missing metadata key {exc}") from None
        data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
    if data.size == 0:
        raise StreamValidationError(f"{path}: no data rows")
    if data.shape[1] != len(header):
        raise StreamValidationError(f"{path}: row width {data.shape[1]} != header width {len(header)}")
    j = data[:, 0]
    _validate_j_column(j, K, path)
    k_col = data[:, 1].astype(np.int64)
    i_col = data[:, 2].astype(np.int64)
    j_int = j.astype(np.int64)
    if np.any(k_col != (j_int - 1) % K + 1) or np.any(i_col != (j_int - 1) // K):
        raise StreamValidationError(f"{path}: k/i columns inconsistent with j and K={K}")
    iq = data[:, 3] + 1j * data[:, 4]
    states = data[:, 5].astype(np.uint8) if has_state else None
    stream = _build_stream(iq, K, n_rep, rate, mode, path)
    return stream, states


def _validate_j_column(j: np.ndarray, num_sequences: int, path) -> None:
    j_int = j.astype(np.int64)
    if np.any(j_int != j):
        raise StreamValidationError(f"{path}: non-integer global index")
    diffs = np.diff(j_int)
    if np.any(diffs <= 0):
        if np.any(diffs == 0):
            raise StreamValidationError(f"{path}: duplicated global index")
        raise StreamValidationError(f"{path}: global indices not strictly increasing")
    if j_int[0] != 1 or np.any(diffs != 1):
        raise StreamValidationError(f"{path}: global indices must be contiguous from 1")


def _build_stream(iq, K, n_rep, rate, mode, path) -> ShotStream:
    truncated = len(iq) < K * n_rep
    try:
        return ShotStream(
            iq=iq,
            num_sequences=K,
            num_repetitions=n_rep,
            repetition_rate=rate,
            mode=mode,
            truncated=truncated,
        )
    except StreamValidationError as exc:
        raise StreamValidationError(f"{path}: {exc}") from None


def write_stream_binary(stream: ShotStream, path, states=None) -> None:
    states = _check_states(stream, states)
    version = _VERSION_PLAIN if states is None else _VERSION_TRUTH
    rec_dtype = _REC_PLAIN if states is None else _REC_TRUTH
    records = np.empty(len(stream), dtype=rec_dtype)
    records["j"] = np.arange(1, len(stream) + 1, dtype=np.uint64)
    records["I"] = stream.iq.real
    records["Q"] = stream.iq.imag
    if states is not None:
        records["state"] = states
    header = _HEADER.pack(
        MAGIC,
        version,
        stream.num_sequences,
        stream.num_repetitions,
        stream.repetition_rate,
        _MODE_CODES[stream.mode],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(records.tobytes())


def read_stream_binary(path):
    """Read a binary stream.  Returns ``(stream, states_or_None)``."""
    with open(path, "rb") as fh:
        raw_header = fh.read(_HEADER.size)
        if len(raw_header) < _HEADER.size:
            raise StreamValidationError(f"{path}: file too short for header")
        magic, version, K, n_rep, rate, mode_code = _HEADER.unpack(raw_header)
        if magic != MAGIC:
            raise StreamValidationError(f"{path}: bad magic {magic!r}")
        if version not in (_VERSION_PLAIN, _VERSION_TRUTH):
            raise StreamValidationError(f"{path}: unsupported version {version}")
        if mode_code not in _MODE_NAMES:
            raise StreamValidationError(f"{path}: unknown mode code {mode_code}")
        rec_dtype = _REC_PLAIN if version == _VERSION_PLAIN else _REC_TRUTH
        payload = fh.read()
    if len(payload) % rec_dtype.itemsize != 0:
        raise StreamValidationError(f"{path}: record section length is not a record multiple")
    records = np.frombuffer(payload, dtype=rec_dtype)
    if len(records) == 0:
        raise StreamValidationError(f"{path}: no records")
    _validate_j_column(records["j"].astype(np.float64), K, path)
    iq = records["I"] + 1j * records["Q"]
    states = records["state"].copy() if version == _VERSION_TRUTH else None
    stream = _build_stream(iq, K, n_rep, rate, _MODE_NAMES[mode_code], path)
    return stream, states


def write_stream(stream: ShotStream, path, fmt: str = "csv", states=None) -> None:
    """Write a stream (and optional truth states) as ``"csv"`` or ``"binary"``."""
    if fmt == "csv":
        write_stream_csv(stream, path, states)
    elif fmt == "binary":
        write_stream_binary(stream, path, states)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_stream(path, fmt: str | None = None):
    """Read a stream, sniffing the format from the magic bytes when not given.

    Returns ``(stream, states_or_None)``.
    """
    if fmt is None:
        with open(path, "rb") as fh:
            fmt = "binary" if fh.read(4) == MAGIC else "csv"
    if fmt == "csv":
        return read_stream_csv(path)
    if fmt == "binary":
        return read_stream_binary(path)
    raise ValueError(f"unknown format {fmt!r}")
