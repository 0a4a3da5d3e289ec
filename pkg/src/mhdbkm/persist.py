"""Snapshot files, checkpoints and the delimited records time series.

Snapshot layout (all little-endian)::

    offset  size  field
    0       8     magic b"MHDSNAP\\0"
    8       4     format version (uint32)
    12      4     n (uint32)
    16      8     l (float64)
    24      8     t (float64)
    32      8     nu (float64)
    40      8     eta (float64)
    48      4     field count (uint32, always 2: u then b)
    52      ...   float64 payload, per field three components, each n^3
                  samples in x-fastest order
"""
from __future__ import annotations

import csv
import json
import math
import os
import re
import struct
from pathlib import Path

import numpy as np

from .monitor import DiagnosticRecord
from .solver import MhdState
from .spectral import make_grid

MAGIC = b"MHDSNAP\0"
VERSION = 1
_HEADER = struct.Struct("<8sIIddddI")


class SnapshotError(Exception):
    pass


class BadMagic(SnapshotError):
    pass


class VersionMismatch(SnapshotError):
    pass


class TruncatedPayload(SnapshotError):
    pass


class SizeMismatch(SnapshotError):
    pass


def _payload_bytes(n, fields):
    return fields * 3 * n**3 * 8


def write_snapshot(state: MhdState, path, nu=math.nan, eta=math.nan):
    g = state.grid
    header = _HEADER.pack(MAGIC, VERSION, g.n, g.l, state.t, nu, eta, 2)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        for fld in (state.u, state.b):
            for comp in fld:
                fh.write(np.asarray(comp, dtype="<f8").tobytes(order="F"))
    os.replace(tmp, path)


def read_header(buf: bytes) -> dict:
    if len(buf) < _HEADER.size:
        if not MAGIC.startswith(buf[: len(MAGIC)]):
            raise BadMagic("not a snapshot file (bad magic)")
        raise TruncatedPayload(f"truncated header: {len(buf)} of {_HEADER.size} bytes")
    magic, version, n, l, t, nu, eta, fields = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"not a snapshot file (magic {magic!r})")
    if version != VERSION:
        raise VersionMismatch(f"snapshot format version {version}, this reader handles {VERSION}")
    return {"version": version, "n": n, "l": l, "t": t, "nu": nu, "eta": eta, "fields": fields}


def read_snapshot(path, dissipation=0.0):
    """Load a snapshot; returns ``(state, header)``."""
    buf = Path(path).read_bytes()
    h = read_header(buf)
    payload = buf[_HEADER.size :]
    want = _payload_bytes(h["n"], h["fields"])
    if len(payload) != want:
        if len(payload) > want:
            raise SizeMismatch(f"payload has {len(payload) - want} trailing bytes beyond n={h['n']}")
        fits = round((len(payload) / (h["fields"] * 3 * 8)) ** (1 / 3))
        if fits > 0 and _payload_bytes(fits, h["fields"]) == len(payload):
            raise SizeMismatch(f"header declares n={h['n']} but payload holds n={fits} data")
        raise TruncatedPayload(f"truncated payload: {len(payload)} of {want} bytes")
    n = h["n"]
    data = np.frombuffer(payload, dtype="<f8").astype(float)
    comps = data.reshape(h["fields"] * 3, n**3)
    arrays = [c.reshape((n, n, n), order="F") for c in comps]
    grid = make_grid(n, h["l"])
    u = np.ascontiguousarray(np.stack(arrays[0:3]))
    b = np.ascontiguousarray(np.stack(arrays[3:6]))
    return MhdState(grid, u, b, h["t"], dissipation), h


# -- checkpoints -------------------------------------------------------------


def checkpoint_paths(directory, step):
    base = Path(directory) / f"ckpt_{step:08d}"
    return base.with_suffix(".snap"), base.with_suffix(".json")


def write_checkpoint(state, directory, step, config_hash, nu, eta):
    Path(directory).mkdir(parents=True, exist_ok=True)
    snap, meta = checkpoint_paths(directory, step)
    write_snapshot(state, snap, nu, eta)
    meta.write_text(
        json.dumps({"config_hash": config_hash, "step": step, "t": state.t, "dissipation": state.dissipation})
    )
    return snap


def read_checkpoint(path):
    """Accepts either file of a checkpoint pair; returns ``(state, meta)``."""
    path = Path(path)
    snap, meta_path = path.with_suffix(".snap"), path.with_suffix(".json")
    meta = json.loads(meta_path.read_text())
    state, _ = read_snapshot(snap, dissipation=meta["dissipation"])
    if state.t != meta["t"]:
        raise SnapshotError(f"checkpoint time mismatch: snapshot t={state.t}, metadata t={meta['t']}")
    return state, meta


# -- records file ------------------------------------------------------------

SCALARS = (
    "t",
    "l2_u",
    "l2_b",
    "l2_w",
    "l2_j",
    "sup_u",
    "sup_b",
    "sup_w",
    "grad_u_l2",
    "grad_b_l2",
    "energy_diss_accum",
)


def _fmt(x):
    return repr(float(x))


def _tag(x):
    return "inf" if math.isinf(x) else f"{x:g}"


def record_columns(shells, s_list, lp_exponents):
    cols = ["step", *SCALARS]
    for s in s_list:
        cols += [f"hs{_tag(s)}_u", f"hs{_tag(s)}_b"]
    for p in lp_exponents:
        cols += [f"lp{_tag(p)}_u", f"lp{_tag(p)}_grad_u", f"lp{_tag(p)}_w"]
    cols += [f"shell_sup_j{j:+03d}" for j in shells]
    return cols


def record_row(step, rec: DiagnosticRecord, s_list, lp_exponents):
    row = [str(step)] + [_fmt(getattr(rec, name)) for name in SCALARS]
    for s in s_list:
        row += [_fmt(v) for v in rec.hs[float(s)]]
    for p in lp_exponents:
        row += [_fmt(v) for v in rec.lp[float(p)]]
    row += [_fmt(v) for v in rec.shell_sup]
    return row


class RecordsWriter:
    """Append-only writer; every row is flushed so a crash leaves a valid prefix."""

    def __init__(self, path, shells, s_list, lp_exponents, resume_step=None):
        self.path = Path(path)
        self.s_list = tuple(float(s) for s in s_list)
        self.lp_exponents = tuple(float(p) for p in lp_exponents)
        header = record_columns(shells, self.s_list, self.lp_exponents)
        if resume_step is None:
            self.fh = open(self.path, "w", newline="")
            self._writer = csv.writer(self.fh, lineterminator="\n")
            self._writer.writerow(header)
        else:
            truncate_records(self.path, resume_step, header)
            self.fh = open(self.path, "a", newline="")
            self._writer = csv.writer(self.fh, lineterminator="\n")
        self.fh.flush()

    def write(self, step, rec):
        self._writer.writerow(record_row(step, rec, self.s_list, self.lp_exponents))
        self.fh.flush()

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def truncate_records(path, last_step, header):
    """Drop rows after ``last_step`` (and any partial trailing line)."""
    lines = Path(path).read_text().split("\n")
    if not lines or lines[0].split(",") != header:
        raise SnapshotError(f"records file {path} does not match the configured columns")
    keep = [lines[0]]
    for line in lines[1:]:
        fields = line.split(",")
        if len(fields) != len(header):
            break
        if int(fields[0]) > last_step:
            break
        keep.append(line)
    Path(path).write_text("\n".join(keep) + "\n")


def read_records(path):
    """Parse a records file back into ``(steps, records, shells)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if len(r) == len(header)]
    idx = {name: i for i, name in enumerate(header)}
    shell_cols = [name for name in header if name.startswith("shell_sup_j")]
    shells = [int(name[len("shell_sup_j") :]) for name in shell_cols]
    hs_tags = [m.group(1) for m in map(re.compile(r"hs(.+)_b").fullmatch, header) if m]
    lp_tags = [m.group(1) for m in map(re.compile(r"lp(.+)_w").fullmatch, header) if m]
    steps, records = [], []
    for r in rows:
        vals = {name: float(r[i]) for name, i in idx.items() if name != "step"}
        hs = {float(tag): (vals[f"hs{tag}_u"], vals[f"hs{tag}_b"]) for tag in hs_tags}
        lp = {float(tag): (vals[f"lp{tag}_u"], vals[f"lp{tag}_grad_u"], vals[f"lp{tag}_w"]) for tag in lp_tags}
        steps.append(int(r[idx["step"]]))
        records.append(
            DiagnosticRecord(
                **{name: vals[name] for name in SCALARS},
                shell_sup=np.array([vals[c] for c in shell_cols]),
                hs=hs,
                lp=lp,
            )
        )
    return steps, records, shells
