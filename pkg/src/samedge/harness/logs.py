"""Per-step training records and their CSV serialisation.

Floats are written with 17 significant digits so a log round-trips exactly.
"""

import csv
import math
from dataclasses import dataclass, field

FLAG_NAMES = ("diverged", "zero_grad", "spectral_unconverged")


@dataclass
class StepRecord:
    step: int
    wall_s: float
    loss: float
    grad_norm: float
    uphill_grad_norm: float
    lambda_mags: tuple
    gd_edge: float
    sam_edge: float
    align_iterate: float
    align_uphill: float
    flags: frozenset = field(default_factory=frozenset)

    @property
    def diverged(self):
        return "diverged" in self.flags

    @property
    def lambda1(self):
        return self.lambda_mags[0] if self.lambda_mags else math.nan


def header(k):
    return (["step", "wall_s", "loss", "grad_norm", "uphill_grad_norm"]
            + [f"lambda{i + 1}" for i in range(k)]
            + ["gd_edge", "sam_edge", "align_iterate", "align_uphill", "flags"])


def _fmt(x):
    return format(float(x), ".17g")


def record_row(rec):
    return ([str(rec.step), _fmt(rec.wall_s), _fmt(rec.loss), _fmt(rec.grad_norm),
             _fmt(rec.uphill_grad_norm)]
            + [_fmt(x) for x in rec.lambda_mags]
            + [_fmt(rec.gd_edge), _fmt(rec.sam_edge), _fmt(rec.align_iterate),
               _fmt(rec.align_uphill),
               "|".join(f for f in FLAG_NAMES if f in rec.flags)])


class LogWriter:
    """Streams records to ``path`` as they are produced."""

    def __init__(self, path, k):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(header(k))

    def write(self, rec):
        self._writer.writerow(record_row(rec))
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_log(path, records, k):
    with LogWriter(path, k) as writer:
        for rec in records:
            writer.write(rec)


class LogFormatError(ValueError):
    pass


def read_columns(path):
    """Header and rows (as lists of strings) of a log file."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise LogFormatError(f"{path}: empty log")
    return rows[0], rows[1:]


def read_log(path):
    head, rows = read_columns(path)
    k = sum(1 for h in head if h.startswith("lambda"))
    if head != header(k):
        raise LogFormatError(f"{path}: unexpected header {head}")
    records = []
    for row in rows:
        if len(row) != len(head):
            raise LogFormatError(f"{path}: row has {len(row)} fields, expected {len(head)}")
        vals = [float(x) for x in row[1:-1]]
        records.append(StepRecord(
            step=int(row[0]), wall_s=vals[0], loss=vals[1], grad_norm=vals[2],
            uphill_grad_norm=vals[3], lambda_mags=tuple(vals[4:4 + k]),
            gd_edge=vals[4 + k], sam_edge=vals[5 + k], align_iterate=vals[6 + k],
            align_uphill=vals[7 + k],
            flags=frozenset(f for f in row[-1].split("|") if f)))
    return records
