"""Legacy-text unstructured-grid writer for deformed patch geometry.

Each element is sampled on a uniform parametric lattice of the requested
density and written as hexahedral cells (type 12) with the displacement
field attached as point-data vectors.  Floats carry 17 significant digits so
a text round trip is lossless.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .solver import Model
from .splines import nurbs_trivariate

VTK_HEXAHEDRON = 12


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def export_vtk(model: Model, u: np.ndarray, path, density: int = 1) -> None:
    """Write deformed geometry X + u sampled per element to ``path``."""
    if density < 1:
        raise ValidationError("sampling density must be >= 1")
    points = []
    disps = []
    cells = []
    for pi, patch in enumerate(model.patch_set.patches):
        for sx, ax, bx in patch.kv_xi.spans():
            for sy, ay, by in patch.kv_eta.spans():
                for sz, az, bz in patch.kv_zeta.spans():
                    base = len(points)
                    local = patch.local_indices((sx, sy, sz))
                    dofs = model.dof_map.element_dofs(pi, local)
                    u_mat = u[dofs].reshape(-1, 3)
                    n = density + 1
                    for i, x in enumerate(np.linspace(ax, bx, n)):
                        for j, y in enumerate(np.linspace(ay, by, n)):
                            for k, z in enumerate(np.linspace(az, bz, n)):
                                ev = nurbs_trivariate(patch, x, y, z)
                                d = ev.values @ u_mat
                                points.append(ev.point + d)
                                disps.append(d)
                    def pid(i, j, k):
                        return base + (i * n + j) * n + k
                    for i in range(density):
                        for j in range(density):
                            for k in range(density):
                                cells.append(
                                    (
                                        pid(i, j, k),
                                        pid(i + 1, j, k),
                                        pid(i + 1, j + 1, k),
                                        pid(i, j + 1, k),
                                        pid(i, j, k + 1),
                                        pid(i + 1, j, k + 1),
                                        pid(i + 1, j + 1, k + 1),
                                        pid(i, j + 1, k + 1),
                                    )
                                )
    lines = [
        "# vtk DataFile Version 3.0",
        "solid-beam deformed geometry",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(points)} double",
    ]
    for p in points:
        lines.append(" ".join(_fmt(v) for v in p))
    lines.append(f"CELLS {len(cells)} {9 * len(cells)}")
    for c in cells:
        lines.append("8 " + " ".join(str(v) for v in c))
    lines.append(f"CELL_TYPES {len(cells)}")
    lines.extend(str(VTK_HEXAHEDRON) for _ in cells)
    lines.append(f"POINT_DATA {len(points)}")
    lines.append("VECTORS displacement double")
    for d in disps:
        lines.append(" ".join(_fmt(v) for v in d))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Parse a file written by :func:`export_vtk`; test/verification oracle.

    Returns (points, cells, cell_types, displacements) as numpy arrays.
    """
    with open(path) as fh:
        tokens = fh.read().split("\n")
    idx = 0

    def expect(prefix):
        nonlocal idx
        while not tokens[idx].strip():
            idx += 1
        line = tokens[idx]
        if not line.startswith(prefix):
            raise ValidationError(f"expected {prefix!r}, found {line!r}")
        idx += 1
        return line

    expect("# vtk DataFile")
    idx += 1  # title
    expect("ASCII")
    expect("DATASET UNSTRUCTURED_GRID")
    n_pts = int(expect("POINTS").split()[1])
    points = np.array([[float(v) for v in tokens[idx + i].split()] for i in range(n_pts)])
    idx += n_pts
    header = expect("CELLS").split()
    n_cells = int(header[1])
    cells = []
    for i in range(n_cells):
        row = [int(v) for v in tokens[idx + i].split()]
        if row[0] != 8:
            raise ValidationError("only hexahedral cells are supported")
        cells.append(row[1:])
    idx += n_cells
    expect("CELL_TYPES")
    types = np.array([int(tokens[idx + i]) for i in range(n_cells)])
    idx += n_cells
    expect("POINT_DATA")
    expect("VECTORS displacement")
    disps = np.array([[float(v) for v in tokens[idx + i].split()] for i in range(n_pts)])
    return points, np.array(cells, dtype=int), types, disps
