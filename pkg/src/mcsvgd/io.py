"""CSV readers and writers for datasets, particles and traces.

Lattice files hold labels ``1..K`` (converted to ``0..K-1`` in memory) or,
in raw-thickness mode, ice thickness values that are categorized on read.
Count files have a header whose first column is ``y``. Networks are an
``i,j`` edge list (0-based) plus a ``node,grade,sex`` attribute file.
"""

import csv
from pathlib import Path

import numpy as np

from .models.comp import CountRegressionData
from .models.ergm import Network
from .models.potts import Lattice, categorize_thickness


class DataError(ValueError):
    """Malformed or missing input data."""


def _rows(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]


def read_lattice(path, K: int = None, raw_thickness: bool = False) -> Lattice:
    rows = _rows(path)
    try:
        vals = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric lattice entry ({exc})") from None
    if vals.ndim != 2 or vals.size == 0:
        raise DataError(f"{path}: lattice rows must be non-empty and equally long")
    if raw_thickness:
        labels = categorize_thickness(vals)
        K = 4 if K is None else K
    else:
        if np.any(vals != np.round(vals)):
            raise DataError(f"{path}: lattice labels must be integers")
        labels = vals.astype(np.int64) - 1
        K = int(labels.max()) + 1 if K is None else K
    try:
        return Lattice(labels, int(K))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_lattice(lattice: Lattice, path) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows((lattice.values + 1).tolist())


def read_counts(path, nu: float) -> CountRegressionData:
    rows = _rows(path)
    if not rows or rows[0][0].strip() != "y":
        raise DataError(f"{path}: first header column must be 'y'")
    body = rows[1:]
    try:
        arr = np.array([[float(c) for c in r] for r in body]).reshape(len(body), len(rows[0]))
    except ValueError as exc:
        raise DataError(f"{path}: bad count row ({exc})") from None
    y = arr[:, 0]
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise DataError(f"{path}: counts must be non-negative integers")
    return CountRegressionData(y.astype(np.int64), arr[:, 1:], nu)


def write_counts(data: CountRegressionData, path, names=None) -> None:
    p = data.X.shape[1]
    names = names or [f"x{q + 1}" for q in range(p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", *names])
        for yi, xi in zip(data.y, data.X):
            w.writerow([int(yi), *[repr(float(v)) for v in xi]])


def read_network(edges_path, nodes_path, tau_d: float = 0.25, tau_s: float = 0.25) -> Network:
    nodes = _rows(nodes_path)
    if [c.strip() for c in nodes[0]] != ["node", "grade", "sex"]:
        raise DataError(f"{nodes_path}: header must be node,grade,sex")
    try:
        attr = np.array([[int(c) for c in r] for r in nodes[1:]], dtype=np.int64).reshape(-1, 3)
    except ValueError as exc:
        raise DataError(f"{nodes_path}: bad node row ({exc})") from None
    n = attr.shape[0]
    if sorted(attr[:, 0]) != list(range(n)):
        raise DataError(f"{nodes_path}: nodes must be numbered 0..{n - 1}")
    order = np.argsort(attr[:, 0])
    grade, sex = attr[order, 1], attr[order, 2]
    edges = _rows(edges_path)
    if [c.strip() for c in edges[0]] != ["i", "j"]:
        raise DataError(f"{edges_path}: header must be i,j")
    A = np.zeros((n, n), dtype=np.int64)
    for r in edges[1:]:
        try:
            i, j = int(r[0]), int(r[1])
        except (ValueError, IndexError):
            raise DataError(f"{edges_path}: bad edge row {r}") from None
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise DataError(f"{edges_path}: invalid edge ({i}, {j})")
        A[i, j] = A[j, i] = 1
    return Network(A, grade, sex, tau_d, tau_s)


def write_network(network: Network, edges_path, nodes_path) -> None:
    iu, ju = np.nonzero(np.triu(network.adjacency, 1))
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j"])
        w.writerows(zip(iu.tolist(), ju.tolist()))
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "grade", "sex"])
        for k in range(network.n_nodes):
            w.writerow([k, int(network.grade[k]), int(network.sex[k])])


def write_particles(particles, path) -> None:
    x = np.asarray(getattr(particles, "particles", particles), dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"theta_{q + 1}" for q in range(x.shape[1])])
        for row in x:
            w.writerow([repr(float(v)) for v in row])


def read_particles(path) -> np.ndarray:
    rows = _rows(path)
    header = [c.strip() for c in rows[0]]
    if header != [f"theta_{q + 1}" for q in range(len(header))]:
        raise DataError(f"{path}: header must be theta_1..theta_d")
    return np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))


TRACE_HEADER = ("iteration", "kl", "ksd", "ess_refresh_count", "elapsed_seconds")


def write_trace(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in records:
            w.writerow(["" if r.get(k) is None else r[k] for k in TRACE_HEADER])


def read_trace(path):
    rows = _rows(path)
    if tuple(c.strip() for c in rows[0]) != TRACE_HEADER:
        raise DataError(f"{path}: unexpected trace header")
    out = []
    for r in rows[1:]:
        rec = {}
        for k, v in zip(TRACE_HEADER, r):
            rec[k] = None if v == "" else (int(v) if k in ("iteration", "ess_refresh_count") else float(v))
        out.append(rec)
    return out
