"""Reading and writing datasets, truth sidecars and posterior draws."""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError
from .model import Dataset

__all__ = [
    "write_dataset_csv",
    "read_dataset_csv",
    "save_dataset",
    "load_dataset",
    "write_truth_json",
    "read_truth_json",
    "write_draws_csv",
    "write_summary_json",
    "dataset_hash",
]


def write_dataset_csv(data, path):
    """CSV with header ``y,x1,...,xp``; floats written with full precision."""
    path = Path(path)
    header = ["y"] + [f"x{j + 1}" for j in range(data.p)]
    table = np.column_stack([data.Y, data.X])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, table, delimiter=",", fmt="%.17g")
    return path


def read_dataset_csv(path):
    path = Path(path)
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
        if not header or header[0].strip() != "y":
            raise ConfigError(f"{path}: first column must be 'y'")
        expected = [f"x{j + 1}" for j in range(len(header) - 1)]
        if [h.strip() for h in header[1:]] != expected:
            raise ConfigError(f"{path}: predictor columns must be named x1..xp")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape[1] != len(header):
        raise DimensionError(f"{path}: rows have {table.shape[1]} fields, header has {len(header)}")
    return Dataset(table[:, 1:], table[:, 0])


def save_dataset(data, path):
    """Binary container (``.npz``) holding X, Y and any truth."""
    arrays = {"X": data.X, "Y": data.Y}
    if data.beta0 is not None:
        arrays["beta0"] = data.beta0
    if data.theta0 is not None:
        arrays["theta0"] = np.array(data.theta0)
    if data.T0 is not None:
        arrays["T0"] = data.T0
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return Path(path)


def load_dataset(path):
    with np.load(path) as z:
        theta0 = float(z["theta0"]) if "theta0" in z else None
        return Dataset(z["X"], z["Y"], z.get("beta0"), theta0, z.get("T0"))


def write_truth_json(data, path):
    doc = {
        "n": data.n,
        "p": data.p,
        "beta0": None if data.beta0 is None else data.beta0.tolist(),
        "theta0": data.theta0,
        "T0": None if data.T0 is None else data.T0.astype(int).tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1))
    return Path(path)


def read_truth_json(path):
    doc = json.loads(Path(path).read_text())
    beta0 = None if doc.get("beta0") is None else np.asarray(doc["beta0"], dtype=float)
    return beta0, doc.get("theta0"), doc.get("T0")


def write_draws_csv(draws, path):
    """One row per retained draw: scalars, then beta_j, then t_j."""
    p = draws.beta.shape[1]
    header = (["draw", "theta2", "delta1_sq", "delta2_sq", "phi_frac"]
              + [f"beta{j + 1}" for j in range(p)] + [f"t{j + 1}" for j in range(p)])
    table = np.column_stack([
        np.arange(len(draws)), draws.theta2, draws.delta1_sq, draws.delta2_sq,
        draws.phi_frac, draws.beta, draws.T,
    ])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, table, delimiter=",", fmt="%.17g")
    return Path(path)


def write_summary_json(draws, path, extra=None):
    doc = draws.summary()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1))
    return Path(path)


def dataset_hash(data):
    """Short content hash of ``(X, Y)``, used to confirm paired fits."""
    h = hashlib.blake2b(digest_size=12)
    h.update(np.asarray(data.X.shape, dtype=np.int64).tobytes())
    h.update(data.X.tobytes())
    h.update(data.Y.tobytes())
    return h.hexdigest()
