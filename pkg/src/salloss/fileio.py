"""Map, fixation, dataset and report file formats.

* SALMAP1: ``b"SALMAP1\\0"``, width and height as little-endian uint32,
  then row-major little-endian float64 values.
* Portable graymaps P2 (ASCII) and P5 (binary, 8- or 16-bit big-endian).
* Fixations: CSV lines ``x,y`` (0-based) or a graymap, nonzero = fixated.
"""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FixationSet, SaliencyError, as_map

SALMAP_MAGIC = b"SALMAP1\0"
MAP_SUFFIXES = (".salmap", ".pgm", ".pnm")


class FormatError(SaliencyError):
    pass


def save_map(path, values) -> None:
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        save_pgm(path, values)
        return
    m = as_map(values)
    h, w = m.shape
    with open(path, "wb") as fh:
        fh.write(SALMAP_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def save_pgm(path, values, maxval: int = 65535) -> None:
    """Binary P5 graymap of a map clipped to [0, 1]."""
    m = np.clip(as_map(values), 0.0, 1.0)
    h, w = m.shape
    q = np.rint(m * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(q.astype(dtype).tobytes())


def _pnm_tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated graymap header")
        tokens.append(data[start:pos])
    return tokens, pos


def parse_pgm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError("not a P2/P5 graymap")
    try:
        (w, h, maxval), pos = _pnm_tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as e:
        raise FormatError(f"bad graymap header: {e}") from e
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FormatError(f"bad graymap geometry {w}x{h} maxval {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        if len(data) < pos + need:
            raise FormatError("truncated graymap raster")
        raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    else:
        try:
            raw = np.array(data[pos:].split(), dtype=np.int64)
        except ValueError as e:
            raise FormatError(f"bad P2 raster: {e}") from e
        if raw.size < w * h:
            raise FormatError("truncated graymap raster")
        raw = raw[: w * h]
    if np.any(raw > maxval) or np.any(raw < 0):
        raise FormatError("graymap sample exceeds maxval")
    return raw.astype(np.float64).reshape(h, w) / maxval


def parse_salmap(data: bytes) -> np.ndarray:
    if data[:8] != SALMAP_MAGIC:
        raise FormatError("not a SALMAP1 file")
    if len(data) < 16:
        raise FormatError("truncated SALMAP1 header")
    w, h = struct.unpack_from("<II", data, 8)
    if w < 1 or h < 1:
        raise FormatError(f"bad SALMAP1 geometry {w}x{h}")
    need = 16 + 8 * w * h
    if len(data) < need:
        raise FormatError("truncated SALMAP1 data")
    if len(data) > need:
        raise FormatError(f"{len(data) - need} trailing bytes in SALMAP1 file")
    m = np.frombuffer(data, dtype="<f8", count=w * h, offset=16).astype(np.float64).reshape(h, w)
    if not np.all(np.isfinite(m)):
        raise FormatError("non-finite values in SALMAP1 file")
    return m


def load_map(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] == SALMAP_MAGIC:
        return parse_salmap(data)
    if data[:2] in (b"P2", b"P5"):
        return parse_pgm(data)
    raise FormatError(f"{path}: unknown map format")


def parse_fixation_csv(text: str, frame: tuple[int, int]) -> FixationSet:
    points = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise FormatError(f"line {lineno}: expected 'x,y'")
        try:
            x, y = int(row[0]), int(row[1])
        except ValueError:
            if lineno == 1:  # header line
                continue
            raise FormatError(f"line {lineno}: non-integer coordinate") from None
        points.append((x, y))
    return FixationSet(tuple(points), frame)


def load_fixations(path, frame: tuple[int, int] | None = None) -> FixationSet:
    """Fixations from CSV (needs ``frame`` = (width, height)) or a graymap."""
    data = Path(path).read_bytes()
    if data[:2] in (b"P2", b"P5") or data[:8] == SALMAP_MAGIC:
        m = parse_pgm(data) if data[:2] in (b"P2", b"P5") else parse_salmap(data)
        fix = FixationSet.from_map(m > 0)
        if frame is not None and fix.frame != tuple(frame):
            raise FormatError(f"fixation map frame {fix.frame} does not match {tuple(frame)}")
        return fix
    if frame is None:
        raise FormatError("CSV fixations need the map frame")
    return parse_fixation_csv(data.decode("utf-8"), tuple(frame))


def save_fixations(path, fix: FixationSet) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for x, y in fix.points:
            fh.write(f"{x},{y}\n")


def write_curve(path, values) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,loss\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{v!r}\n")


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    map_path: Path
    fix_path: Path
    stimulus_path: Path | None = None

    def load(self):
        gt = load_map(self.map_path)
        fix = load_fixations(self.fix_path, (gt.shape[1], gt.shape[0]))
        stim = load_map(self.stimulus_path) if self.stimulus_path else None
        if stim is not None and stim.shape != gt.shape:
            raise FormatError(f"{self.id}: stimulus shape {stim.shape} != map shape {gt.shape}")
        return gt, fix, stim


def _find_map(folder: Path, stem: str) -> Path | None:
    for suffix in MAP_SUFFIXES:
        p = folder / f"{stem}{suffix}"
        if p.exists():
            return p
    return None


def scan_dataset(root) -> list[DatasetEntry]:
    """Entries of ``<root>/maps/<id>.*`` with ``<root>/fix/<id>.csv``, sorted by id."""
    root = Path(root)
    maps_dir, fix_dir, stim_dir = root / "maps", root / "fix", root / "stimuli"
    if not maps_dir.is_dir():
        raise FormatError(f"{root}: missing maps/ directory")
    entries = []
    for p in sorted(maps_dir.iterdir()):
        if p.suffix.lower() not in MAP_SUFFIXES:
            continue
        fix = fix_dir / f"{p.stem}.csv"
        if not fix.exists():
            fix = _find_map(fix_dir, p.stem)
        if fix is None or not fix.exists():
            raise FormatError(f"{p.stem}: no fixation file in {fix_dir}")
        stim = _find_map(stim_dir, p.stem) if stim_dir.is_dir() else None
        entries.append(DatasetEntry(p.stem, p, fix, stim))
    if not entries:
        raise FormatError(f"{root}: empty dataset")
    return entries


def write_dataset(root, samples, prefix: str = "img") -> list[str]:
    """Write samples (image, gt, fix) in the dataset layout; returns the ids."""
    root = Path(root)
    for sub in ("maps", "fix", "stimuli"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    ids = []
    for n, s in enumerate(samples):
        sid = f"{prefix}{n:03d}"
        save_map(root / "maps" / f"{sid}.salmap", s.gt)
        save_fixations(root / "fix" / f"{sid}.csv", s.fix)
        save_map(root / "stimuli" / f"{sid}.salmap", s.image)
        ids.append(sid)
    return ids
