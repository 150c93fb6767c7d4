"""File formats: lattice text files, binary field snapshots, CSV series, configs."""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .lattice import Lattice, LatticeError
from .spectral import Grid2D, RealField2D

PathLike = Union[str, Path]

SNAPSHOT_MAGIC = b"LBF2"
_HEADER = struct.Struct("<4sIId")


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# -- lattices ---------------------------------------------------------------

def format_lattice(lattice: Lattice) -> str:
    """``dim n c_s`` followed by one ``w v_1 .. v_d`` line per velocity (n + 1 lines)."""
    lines = [f"{lattice.dim} {lattice.q - 1} {_fmt(lattice.sound_speed)}"]
    for w, v in zip(lattice.weights, lattice.velocities):
        lines.append(" ".join([_fmt(w)] + [_fmt(c) for c in v]))
    return "\n".join(lines) + "\n"


def parse_lattice(text: str, name: str = "") -> Lattice:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise FormatError("empty lattice file")
    try:
        dim, n = int(rows[0][0]), int(rows[0][1])
        cs = float(rows[0][2])
        if len(rows[0]) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise FormatError("first line must read 'dim n c_s'") from None
    body = rows[1:]
    if len(body) != n + 1:
        raise FormatError(f"expected {n + 1} velocity lines, found {len(body)}")
    try:
        table = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise FormatError(f"bad number in lattice file: {exc}") from None
    if table.ndim != 2 or table.shape[1] != dim + 1:
        raise FormatError(f"each velocity line needs 1 + {dim} numbers")
    try:
        return Lattice(dim, table[:, 1:], table[:, 0], cs, name or f"D{dim}Q{n + 1}")
    except LatticeError as exc:
        raise FormatError(str(exc)) from None


def write_lattice(path: PathLike, lattice: Lattice) -> None:
    Path(path).write_text(format_lattice(lattice), newline="\n")


def read_lattice(path: PathLike) -> Lattice:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise OSError(f"cannot read lattice file {p}: {exc.strerror}") from exc
    try:
        return parse_lattice(text, p.stem)
    except FormatError as exc:
        raise FormatError(f"{p}: {exc}") from None


# -- field snapshots --------------------------------------------------------

def snapshot_bytes(field: RealField2D, time: float) -> bytes:
    n = field.grid.n
    header = _HEADER.pack(SNAPSHOT_MAGIC, n, 0, float(time))
    return header + np.ascontiguousarray(field.values, dtype="<f8").tobytes()


def write_field_snapshot(path: PathLike, field: RealField2D, time: float) -> None:
    p = Path(path)
    try:
        p.write_bytes(snapshot_bytes(field, time))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {p}: {exc.strerror}") from exc


def read_field_snapshot(path: PathLike) -> Tuple[RealField2D, float]:
    """Return ``(field, time)`` from an LBF2 snapshot."""
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read snapshot {p}: {exc.strerror}") from exc
    if len(data) < _HEADER.size:
        raise FormatError(f"{p}: truncated header")
    magic, n, _reserved, time = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise FormatError(f"{p}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise FormatError(f"{p}: expected {expected} bytes for n={n}, got {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n)
    return RealField2D(Grid2D(n), values.astype(float)), time


def snapshot_name(prefix: str, time: float) -> str:
    return f"{prefix}_t{time:.6f}.lbf"


# -- CSV --------------------------------------------------------------------

def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence], footer: Sequence[Sequence] = ()) -> None:
    """CSV with LF endings; floats use 17 significant digits."""
    p = Path(path)

    def cell(x):
        if isinstance(x, (float, np.floating)):
            return _fmt(x)
        return str(x)

    try:
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in list(rows) + list(footer):
                w.writerow([cell(x) for x in r])
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc.strerror}") from exc


def read_csv(path: PathLike) -> Tuple[List[str], List[List[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# -- key=value configs ------------------------------------------------------

def parse_config(text: str) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys use ``-`` or ``_``."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"line {lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def read_config(path: PathLike) -> Dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {p}: {exc.strerror}") from exc
    try:
        return parse_config(text)
    except FormatError as exc:
        raise FormatError(f"{p}: {exc}") from None


def format_config(values: Mapping[str, object]) -> str:
    lines = []
    for k, v in values.items():
        if v is None:
            continue
        if isinstance(v, float):
            v = _fmt(v)
        elif isinstance(v, (list, tuple)):
            v = ",".join(_fmt(x) if isinstance(x, float) else str(x) for x in v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def write_config(path: PathLike, values: Mapping[str, object]) -> None:
    Path(path).write_text(format_config(values), newline="\n")
