"""On-disk exchange formats.

A *system bundle* is a directory of Matrix Market files plus a JSON
manifest describing shapes and roles.  Complex scalars in JSON payloads
are written as {"re": ..., "im": ...} objects so files stay portable.
"""

import hashlib
import json
import os

import numpy as np
import scipy.io as spio
import scipy.sparse as sps

from .exceptions import DimensionMismatch, InvalidConfig
from .systems import LqoSystem, ReducedLqoSystem

FORMAT_VERSION = 1


def complex_to_json(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def json_to_complex(obj):
    if isinstance(obj, dict):
        return complex(obj["re"], obj.get("im", 0.0))
    return complex(obj)


def carray_to_json(arr):
    arr = np.asarray(arr)
    if arr.ndim == 0:
        return complex_to_json(arr[()])
    return [carray_to_json(a) for a in arr]


def json_to_carray(obj):
    if isinstance(obj, dict):
        return json_to_complex(obj)
    return np.array([json_to_carray(o) for o in obj])


def _write_matrix(path, M):
    if sps.issparse(M):
        spio.mmwrite(path, M.tocoo())
    else:
        spio.mmwrite(path, np.atleast_2d(np.asarray(M)))


def _read_matrix(path):
    M = spio.mmread(path)
    return M.tocsr() if sps.issparse(M) else np.asarray(M)


def write_system_bundle(sys, outdir, name="system"):
    """Write a model as Matrix Market files plus manifest.json."""
    os.makedirs(outdir, exist_ok=True)
    files = {"E": "E.mtx", "A": "A.mtx", "B": "B.mtx", "C": "C.mtx",
             "M": [f"M_{k}.mtx" for k in range(sys.p)]}
    _write_matrix(os.path.join(outdir, files["E"]), sys.E)
    _write_matrix(os.path.join(outdir, files["A"]), sys.A)
    _write_matrix(os.path.join(outdir, files["B"]), sys.B)
    _write_matrix(os.path.join(outdir, files["C"]), sys.C)
    for k, M in enumerate(sys.Ms):
        _write_matrix(os.path.join(outdir, files["M"][k]), M)
    manifest = {
        "format_version": FORMAT_VERSION,
        "name": name,
        "kind": "reduced" if isinstance(sys, ReducedLqoSystem) else "full",
        "n": sys.n, "m": sys.m, "p": sys.p,
        "files": files,
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def read_system_bundle(indir):
    """Read a bundle written by :func:`write_system_bundle`."""
    mpath = os.path.join(indir, "manifest.json")
    with open(mpath) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise InvalidConfig(
            f"unsupported bundle format {manifest.get('format_version')!r}"
        )
    files = manifest["files"]
    load = lambda key: _read_matrix(os.path.join(indir, files[key]))
    E, A = load("E"), load("A")
    B = np.asarray(_dense(load("B")), dtype=float)
    C = np.asarray(_dense(load("C")), dtype=float)
    Ms = [_read_matrix(os.path.join(indir, f)) for f in files["M"]]
    cls = ReducedLqoSystem if manifest.get("kind") == "reduced" else LqoSystem
    sys = cls(E, A, B, C, Ms)
    if (sys.n, sys.m, sys.p) != (manifest["n"], manifest["m"], manifest["p"]):
        raise DimensionMismatch("bundle shapes disagree with its manifest")
    return sys, manifest


def _dense(M):
    return M.toarray() if sps.issparse(M) else M


def interpolation_data_to_json(data):
    return {
        "sigmas": carray_to_json(data.sigmas),
        "right": carray_to_json(data.right),
        "left": carray_to_json(data.left),
        "q": carray_to_json(data.q),
        "pair_index": data.pair_index.tolist(),
    }


def interpolation_data_from_json(obj):
    from .interpolation import InterpolationData
    return InterpolationData(
        json_to_carray(obj["sigmas"]),
        json_to_carray(obj["right"]),
        json_to_carray(obj["left"]),
        json_to_carray(obj["q"]),
        pair_index=np.asarray(obj["pair_index"], dtype=int),
    )


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_run_manifest(outdir, command, params, inputs=(), outputs=()):
    """Record a CLI run: command, parameters, and content hashes of the
    files it consumed and produced."""
    manifest = {
        "command": command,
        "params": params,
        "inputs": {os.path.basename(p): file_sha256(p) for p in inputs},
        "outputs": {os.path.basename(p): file_sha256(p) for p in outputs},
    }
    path = os.path.join(outdir, "run_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path
