"""File formats: JSON headers plus flat CSV or little-endian binary data.

Sample data is stored row-major with the time axis slowest.  Binary
payloads are little-endian complex128; CSV payloads carry two columns
(re, im), one row per sample, no header row.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .duality import DualSystem
from .errors import BadParams
from .grids import CoefficientArray, Decay, SampledField, UniformGrid
from .lattice_ops import GeneratorSystem

__all__ = [
    "save_field",
    "load_field",
    "save_coefficients",
    "load_coefficients",
    "save_system",
    "load_system",
    "save_dual",
    "load_dual",
    "save_gramian",
    "profile_to_csv",
    "write_json",
]


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _save_data(values, base, fmt):
    flat = np.ascontiguousarray(values, dtype="<c16").ravel()
    if fmt == "bin":
        data_file = base + ".bin"
        flat.tofile(data_file)
    elif fmt == "csv":
        data_file = base + ".csv"
        np.savetxt(
            data_file,
            np.column_stack([flat.real, flat.imag]),
            delimiter=",",
            fmt="%.17g",
        )
    else:
        raise BadParams(f"unknown data format {fmt!r}")
    return os.path.basename(data_file)


def _load_data(header, json_path, count):
    data_path = os.path.join(os.path.dirname(json_path), header["data_file"])
    if header["data_format"] == "bin":
        flat = np.fromfile(data_path, dtype="<c16")
    else:
        cols = np.loadtxt(data_path, delimiter=",", ndmin=2)
        flat = cols[:, 0] + 1j * cols[:, 1]
    if flat.size != count:
        raise BadParams(
            f"{data_path}: expected {count} samples, found {flat.size}"
        )
    return flat


def save_field(f, base, fmt="bin"):
    """Write ``base``.json plus ``base``.bin or ``base``.csv."""
    data_file = _save_data(f.values, base, fmt)
    header = {
        "kind": "sampled_field",
        "d": f.d,
        "h": f.h,
        "box": [list(f.grid.lo), list(f.grid.hi)],
        "decay": {
            "kind": f.decay.kind,
            "rate": f.decay.rate,
            "tail_mass": f.decay.tail_mass,
        },
        "shape": list(f.values.shape),
        "data_format": fmt,
        "data_file": data_file,
    }
    write_json(base + ".json", header)
    return base + ".json"


def load_field(json_path):
    h = _read_json(json_path)
    if h.get("kind") != "sampled_field":
        raise BadParams(f"{json_path} is not a sampled-field header")
    box = (tuple(h["box"][0]), tuple(h["box"][1]))
    grid = UniformGrid(h["d"], h["h"], box)
    flat = _load_data(h, json_path, int(np.prod(h["shape"])))
    decay = Decay(h["decay"]["kind"], h["decay"]["rate"], h["decay"]["tail_mass"])
    return SampledField(grid, flat.reshape(h["shape"]), decay)


def save_coefficients(c, base, fmt="bin"):
    data_file = _save_data(c.data, base, fmt)
    header = {
        "kind": "coefficient_array",
        "d": c.d_spatial,
        "offset": list(c.offset),
        "shape": list(c.data.shape),
        "data_format": fmt,
        "data_file": data_file,
    }
    write_json(base + ".json", header)
    return base + ".json"


def load_coefficients(json_path):
    h = _read_json(json_path)
    if h.get("kind") != "coefficient_array":
        raise BadParams(f"{json_path} is not a coefficient-array header")
    flat = _load_data(h, json_path, int(np.prod(h["shape"])))
    return CoefficientArray(h["d"], tuple(h["offset"]), flat.reshape(h["shape"]))


def save_system(system, base, fmt="bin"):
    """Manifest JSON plus one field file per generator."""
    entries = []
    for i, (g, label) in enumerate(zip(system.generators, system.labels)):
        fbase = f"{base}_gen{i}"
        save_field(g, fbase, fmt)
        entries.append(
            {"label": label, "field": os.path.basename(fbase) + ".json"}
        )
    write_json(
        base + ".json",
        {"kind": "generator_system", "generators": entries},
    )
    return base + ".json"


def load_system(json_path):
    h = _read_json(json_path)
    if h.get("kind") != "generator_system":
        raise BadParams(f"{json_path} is not a generator-system manifest")
    folder = os.path.dirname(json_path)
    gens, labels = [], []
    for e in h["generators"]:
        gens.append(load_field(os.path.join(folder, e["field"])))
        labels.append(e["label"])
    return GeneratorSystem(tuple(gens), tuple(labels))


def save_dual(dual, base, fmt="bin"):
    save_system(dual.system, base + "_system", fmt)
    write_json(
        base + ".json",
        {
            "kind": "dual_system",
            "system": os.path.basename(base) + "_system.json",
            "construction": dual.construction,
            "residual": dual.residual,
            "tail_mass": dual.tail_mass,
            "k0": dual.k0,
            "rank_tol": dual.rank_tol,
        },
    )
    return base + ".json"


def load_dual(json_path):
    h = _read_json(json_path)
    if h.get("kind") != "dual_system":
        raise BadParams(f"{json_path} is not a dual-system header")
    system = load_system(os.path.join(os.path.dirname(json_path), h["system"]))
    return DualSystem(
        system=system,
        construction=h["construction"],
        residual=h["residual"],
        tail_mass=h["tail_mass"],
        k0=h["k0"],
        rank_tol=h["rank_tol"],
    )


def save_gramian(G, base):
    """JSON index plus one binary block of fiber matrices."""
    data_file = _save_data(G.fibers, base, "bin")
    write_json(
        base + ".json",
        {
            "kind": "gramian_field",
            "d": G.freq.d,
            "n1": G.freq.n1,
            "n2": G.freq.n2,
            "J": G.freq.J,
            "rho": G.rho,
            "r": G.r,
            "s": G.s,
            "tail_bound": G.tail_bound,
            "self_adjoint": G.self_adjoint,
            "layout": "row-major over nodes, then (r, s) per fiber",
            "data_format": "bin",
            "data_file": data_file,
        },
    )
    return base + ".json"


def profile_to_csv(profile, path):
    """One row per node: flat node index, eigenvalues descending, rank."""
    lam = profile.eigenvalues
    r = lam.shape[-1]
    flat = lam.reshape(-1, r)
    ranks = profile.ranks.reshape(-1)
    with open(path, "w", encoding="utf-8") as fh:
        cols = ",".join(f"lambda{i+1}" for i in range(r))
        fh.write(f"node,{cols},rank\n")
        for i, (row, rk) in enumerate(zip(flat, ranks)):
            vals = ",".join(f"{v:.17g}" for v in row)
            fh.write(f"{i},{vals},{int(rk)}\n")
    return path
