"""Trajectory persistence and delimited report output.

Binary trajectory layout (all little-endian):

    magic   4 bytes  b"BFNS"
    version u32      currently 1
    d       u8
    K       u32
    beta    f64
    mu      f64
    alpha   f64
    n_cut   f64      IEEE +inf for the unmodified system
    count   u64      number of snapshots

followed by ``count`` snapshots, each a f64 time and then, for every k in
lexicographic order over the full cube [-K, K]^d, the d complex components
as f64 (re, im) pairs.  Total size is therefore
53 + count * (8 + d * (2K+1)^d * 16) bytes, which the reader enforces.

Reading validates the stored fields: finiteness, an exactly zero mean mode,
exactly zero divergence and exact conjugate symmetry, all of which the
writer guarantees, so any corruption fails loudly.

CSV reports are RFC-4180 style with a decimal point, floats printed with 17
significant digits (full round-trip), and the resolved run configuration
embedded verbatim as a single leading comment line.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from . import fields as fl
from .errors import (
    TrajectoryCorruptionError,
    TrajectoryFormatError,
    TrajectoryIntegrityError,
    TrajectoryVersionError,
)
from .integrate import Trajectory

MAGIC = b"BFNS"
VERSION = 1
_HEADER = struct.Struct("<4sIBIddddQ")


def expected_size(d, K, count):
    return _HEADER.size + count * (8 + d * (2 * K + 1) ** d * 16)


def write_trajectory(traj, path):
    p = traj.header_params()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, p["d"], p["K"], p["beta"], p["mu"],
                              p["alpha"], p["n_cut"], len(traj.states)))
        for t, state in zip(traj.snap_times, traj.states):
            fh.write(struct.pack("<d", float(t)))
            lex = np.ascontiguousarray(np.moveaxis(state.coeffs, 0, -1))
            fh.write(lex.astype("<c16", copy=False).tobytes())


def read_trajectory(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise TrajectoryFormatError(f"file too short for a trajectory header: {path}")
    magic, version, d, K, beta, mu, alpha, n_cut, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TrajectoryFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise TrajectoryVersionError(f"unsupported trajectory version {version}")
    if d not in (2, 3) or K < 1:
        raise TrajectoryFormatError(f"implausible header: d={d}, K={K}")
    if len(data) != expected_size(d, K, count):
        raise TrajectoryCorruptionError(
            f"size mismatch: have {len(data)} bytes, header implies "
            f"{expected_size(d, K, count)}"
        )
    n_per = (2 * K + 1) ** d
    times = np.empty(count)
    states = []
    off = _HEADER.size
    for i in range(count):
        (times[i],) = struct.unpack_from("<d", data, off)
        off += 8
        raw = np.frombuffer(data, dtype="<c16", count=n_per * d, offset=off)
        off += n_per * d * 16
        coeffs = np.moveaxis(
            raw.reshape((2 * K + 1,) * d + (d,)), -1, 0
        ).astype(np.complex128)
        f = fl.SpectralField(d, K, np.ascontiguousarray(coeffs))
        rep = _integrity(f)
        if rep is not None:
            raise TrajectoryIntegrityError(f"snapshot {i} at t={times[i]}: {rep}")
        states.append(f)
    params = {"d": d, "K": K, "beta": beta, "mu": mu, "alpha": alpha, "n_cut": n_cut}
    return Trajectory(None, None, times, np.arange(count, dtype=np.int64),
                      states, params=params)


def _integrity(f):
    if not np.all(np.isfinite(f.coeffs.view(np.float64))):
        return "non-finite coefficients"
    rep = fl.invariant_report(f)
    if not rep["mean_free"]:
        return "nonzero mean mode"
    if not rep["solenoidal_exact"]:
        return f"stored field is not solenoidal (max |k.u_hat| = {rep['max_divergence']})"
    if rep["reality_rel_mismatch"] != 0.0:
        return "broken conjugate symmetry"
    return None


# ---------------------------------------------------------------------------
# CSV reports
# ---------------------------------------------------------------------------


def format_value(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def export_csv(path, header, rows, config_comment=None):
    """Write a delimited report: optional '# config: ...' comment line, then
    a header row and data rows, CRLF line endings, minimal quoting."""
    import csv

    with open(path, "w", newline="") as fh:
        if config_comment is not None:
            fh.write("# config: " + config_comment + "\r\n")
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(x) for x in row])


def read_csv(path):
    """Parse a report back: returns (config_comment or None, header, rows as
    lists of strings)."""
    import csv

    with open(path, "r", newline="") as fh:
        first = fh.readline()
        comment = None
        if first.startswith("# config: "):
            comment = first[len("# config: "):].rstrip("\r\n")
            rest = fh
        else:
            fh.seek(0)
            rest = fh
        reader = csv.reader(rest)
        rows = [row for row in reader if row]
    return comment, rows[0], rows[1:]
