"""On-disk formats: diagnostics CSV, field snapshots and run metadata.

Snapshot layout (plain text)::

    ndim n1 [n2 [n3]] h1 [h2 [h3]] t
    value_0
    value_1
    ...

values in C (row-major) order, each written with 17 significant digits so
that reading back reproduces the array bit for bit.
"""

import csv
import json
from dataclasses import asdict

import numpy as np

from .diagnostics import RECORD_FIELDS, Baseline, DiagnosticsRecord

_INT_FIELDS = {"n", "picard_iterations"}


def format_value(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for rec in records:
            writer.writerow([format_value(getattr(rec, name)) for name in RECORD_FIELDS])


def read_records(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RECORD_FIELDS:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        records = []
        for row in reader:
            values = {}
            for name, text in zip(header, row):
                if text == "":
                    values[name] = None
                elif name in _INT_FIELDS:
                    values[name] = int(text)
                else:
                    values[name] = float(text)
            records.append(DiagnosticsRecord(**values))
    return records


def write_snapshot(path, g, values, t):
    g.check(values)
    header = [str(g.ndim)] + [str(n) for n in g.dims] + ["%.17g" % h for h in g.spacing]
    header.append("%.17g" % t)
    with open(path, "w") as fh:
        fh.write(" ".join(header) + "\n")
        fh.write("\n".join("%.17g" % x for x in np.ravel(values)))
        fh.write("\n")


def read_snapshot(path):
    """Return ``(dims, spacing, t, values)`` with ``values`` shaped ``dims``."""
    with open(path) as fh:
        head = fh.readline().split()
        ndim = int(head[0])
        dims = tuple(int(x) for x in head[1:1 + ndim])
        spacing = tuple(float(x) for x in head[1 + ndim:1 + 2 * ndim])
        t = float(head[1 + 2 * ndim])
        values = np.array([float(line) for line in fh if line.strip()])
    if values.size != int(np.prod(dims)):
        raise ValueError(f"{path}: expected {int(np.prod(dims))} values, found {values.size}")
    return dims, spacing, t, values.reshape(dims)


def meta_path(csv_path):
    return str(csv_path) + ".meta.json"


def write_meta(csv_path, base, extra=None):
    data = {"baseline": asdict(base)}
    if extra:
        data.update(extra)
    with open(meta_path(csv_path), "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)


def read_meta(csv_path):
    with open(meta_path(csv_path)) as fh:
        data = json.load(fh)
    return Baseline(**data["baseline"]), data
