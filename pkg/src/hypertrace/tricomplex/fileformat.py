"""Triangulation file format (UTF-8 JSON).

Top-level fields:

    name            manifold name
    tets            [{gluings: [{tet, perm[4]} x4], weights: [4 reals]}]
    edge_classes    [[(tet, [i, j], sign), ...], ...]   (derived data,
                    cross-checked against the gluings on load)
    equations       {edge_rows, completeness_rows, cusp_rows_meridian,
                     cusp_rows_longitude} with rows {coeffs: [[a,b,c]...],
                     rhs: int}; a row means
                     sum(a log z + b log 1/(1-z) + c log (z-1)/z) = i*pi*rhs
    shapes          optional [[re, im], ...] solved tetrahedron shapes
    material        optional {edge_lengths: [[6 reals] per tet]}
    cusps           optional cusp count
    cocycles        optional {name: [[4 reals] per tet]} named alternative
                    weight cocycles selectable at run time

Reals are written with 17 significant digits so that files round-trip
bit-exactly through JSON.
"""

from __future__ import annotations

import json

import numpy as np

from .combinatorics import CombTriangulation, Equations, EquationRow, TriangulationError


def _rows_from_json(lst, n_tets):
    return [EquationRow.from_dict(d, n_tets) for d in lst]


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TriangulationError(f"not valid JSON: {e}") from None
    try:
        name = doc["name"]
        tets = doc["tets"]
    except KeyError as e:
        raise TriangulationError(f"missing field {e}") from None

    gluing = []
    weights = []
    for k, tet in enumerate(tets):
        try:
            row = [(g["tet"], tuple(g["perm"])) for g in tet["gluings"]]
        except (KeyError, TypeError) as e:
            raise TriangulationError(f"tet {k}: malformed gluings ({e})") from None
        gluing.append(row)
        weights.append(tet.get("weights", [0.0, 0.0, 0.0, 0.0]))

    n = len(gluing)
    eq_doc = doc.get("equations", {})
    equations = Equations(
        edge_rows=_rows_from_json(eq_doc.get("edge_rows", []), n),
        completeness_rows=_rows_from_json(eq_doc.get("completeness_rows", []), n),
        cusp_rows_meridian=_rows_from_json(eq_doc.get("cusp_rows_meridian", []), n),
        cusp_rows_longitude=_rows_from_json(eq_doc.get("cusp_rows_longitude", []), n),
    )

    shapes = None
    if "shapes" in doc:
        shapes = np.array([complex(re, im) for re, im in doc["shapes"]])

    material = doc.get("material")
    material_lengths = None
    if material is not None:
        material_lengths = np.asarray(material["edge_lengths"], dtype=float)

    return CombTriangulation(
        name=name,
        gluing=gluing,
        weights=np.asarray(weights, dtype=float),
        equations=equations,
        shapes=shapes,
        material_lengths=material_lengths,
        cusps=doc.get("cusps"),
        cocycles=doc.get("cocycles"),
        edge_classes=doc.get("edge_classes"),
    )


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _format_real(x):
    return float(np.format_float_positional(x, precision=17, unique=True))


def dumps(tri: CombTriangulation):
    face_idx = tri.face_class_index()
    edge_classes = []
    for cyc in tri.edge_cycles:
        entries = []
        for c in cyc:
            _, sign = face_idx[(c.tet, c.exit_face)]
            entries.append([c.tet, list(c.slot), sign])
        edge_classes.append(entries)

    doc = {
        "name": tri.name,
        "tets": [
            {
                "gluings": [
                    {"tet": t, "perm": list(p)} for (t, p) in tri.gluing[k]
                ],
                "weights": [_format_real(w) for w in tri.weights[k]],
            }
            for k in range(tri.n_tets)
        ],
        "edge_classes": edge_classes,
        "equations": {
            "edge_rows": [r.as_dict() for r in tri.equations.edge_rows],
            "completeness_rows": [r.as_dict() for r in tri.equations.completeness_rows],
            "cusp_rows_meridian": [r.as_dict() for r in tri.equations.cusp_rows_meridian],
            "cusp_rows_longitude": [r.as_dict() for r in tri.equations.cusp_rows_longitude],
        },
        "cusps": tri.n_cusps,
    }
    if tri.shapes is not None:
        doc["shapes"] = [[_format_real(z.real), _format_real(z.imag)] for z in tri.shapes]
    if tri.material_lengths is not None:
        doc["material"] = {
            "edge_lengths": [[_format_real(x) for x in row] for row in tri.material_lengths]
        }
    if tri.cocycles:
        doc["cocycles"] = {
            name: [[_format_real(x) for x in row] for row in np.asarray(w, dtype=float)]
            for name, w in tri.cocycles.items()
        }
    return json.dumps(doc, indent=1)


def dump(tri, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(tri))
