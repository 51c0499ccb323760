"""Run-directory layout: config copy, diagnostics stream, slices, summary."""
import json
import os

import numpy as np

FIELD_HEADER_1D = "x,U,phi,psi,E2,B"
FIELD_HEADER_RADIAL = "r,shell_density,E_mag"
MARKER_HEADER_1D = "tau,x,p1,p2,w"
MARKER_HEADER_3D = "tau,x1,x2,x3,p1,p2,p3,w"


def prepare_run_dir(path):
    for sub in ("fields", "markers"):
        os.makedirs(os.path.join(path, sub), exist_ok=True)
    return path


def write_csv(path, table, header):
    table = np.asarray(table, dtype=float)
    if table.ndim == 1:
        table = table[None, :]
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def marker_table(tau, markers):
    n = len(markers)
    width = 8 if markers.spherical else 5
    if n == 0:
        return np.zeros((0, width))
    x = markers.x.reshape(n, -1)
    return np.column_stack([np.full(n, tau), x, markers.p, markers.w])


def write_markers(path, tau, markers):
    header = MARKER_HEADER_3D if markers.spherical else MARKER_HEADER_1D
    write_csv(path, marker_table(tau, markers), header)


def snapshot_name(index):
    return f"{index:04d}.csv"


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
