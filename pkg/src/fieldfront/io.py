"""Mesh file IO: OBJ and OFF readers, OBJ and legacy-ASCII VTK writers."""

from __future__ import annotations

import os

import numpy as np

from .errors import MeshParseError
from .mesh import SurfaceMesh


def _fan(face):
    """Triangulate a polygonal face record by fanning from its first vertex."""
    return [(face[0], face[i], face[i + 1]) for i in range(1, len(face) - 1)]


def read_obj(path):
    vertices = []
    faces = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshParseError(f"{path}:{lineno}: short vertex record")
                vertices.append([float(c) for c in parts[1:4]])
            elif parts[0] == "f":
                try:
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                except ValueError as exc:
                    raise MeshParseError(f"{path}:{lineno}: bad face record") from exc
                if len(idx) < 3:
                    raise MeshParseError(f"{path}:{lineno}: face with <3 vertices")
                # OBJ indices are 1-based; negative indices count from the end
                idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                faces.extend(_fan(idx))
    if not vertices:
        raise MeshParseError(f"{path}: no vertices found")
    return np.asarray(vertices, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def read_off(path):
    with open(path) as fh:
        tokens = []
        for line in fh:
            stripped = line.split("#", 1)[0].strip()
            if stripped:
                tokens.extend(stripped.split())
    if not tokens or tokens[0] not in ("OFF", "COFF", "NOFF"):
        raise MeshParseError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # header + nv nf ne
        vertices = np.array(tokens[pos : pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            face = [int(t) for t in tokens[pos + 1 : pos + 1 + k]]
            if len(face) != k or k < 3:
                raise MeshParseError(f"{path}: malformed face record")
            faces.extend(_fan(face))
            pos += 1 + k
    except (ValueError, IndexError) as exc:
        raise MeshParseError(f"{path}: malformed OFF file") from exc
    return vertices, np.asarray(faces, dtype=np.int64)


def load_mesh(path, fmt=None) -> SurfaceMesh:
    """Load a surface mesh from an OBJ or OFF file.

    ``fmt`` may be "obj" or "off"; by default it is inferred from the
    file extension.
    """
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    fmt = fmt.lower()
    if fmt == "obj":
        vertices, faces = read_obj(path)
    elif fmt == "off":
        vertices, faces = read_off(path)
    else:
        raise MeshParseError(f"unsupported mesh format {fmt!r}")
    return SurfaceMesh(vertices, faces)


def write_obj(path, vertices, faces):
    """Write vertices and polygonal faces (triangles and/or quads) as OBJ."""
    with open(path, "w") as fh:
        for v in np.asarray(vertices):
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for face in faces:
            fh.write("f " + " ".join(str(int(i) + 1) for i in face) + "\n")


def write_vtk(path, vertices, faces, cell_data=None):
    """Write a legacy-ASCII VTK POLYDATA file with triangle/quad cells.

    ``cell_data`` maps scalar names to per-face float arrays.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = [list(map(int, f)) for f in faces]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write("fieldfront output\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(vertices)} double\n")
        for v in vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        size = sum(len(f) + 1 for f in faces)
        fh.write(f"POLYGONS {len(faces)} {size}\n")
        for f in faces:
            fh.write(" ".join(str(i) for i in [len(f), *f]) + "\n")
        if cell_data:
            fh.write(f"CELL_DATA {len(faces)}\n")
            for name, values in cell_data.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("\n".join(f"{float(x):.17g}" for x in values) + "\n")


def write_field_csv(path, field):
    """Dump a direction field as CSV rows of (vertex index, theta, order)."""
    with open(path, "w") as fh:
        fh.write("vertex,theta,order\n")
        for i, theta in enumerate(field.theta):
            fh.write(f"{i},{theta:.17g},{field.order}\n")
