"""Hyperboloid-model primitives.

Everything lives in Minkowski space R^{1,3} with the bilinear form of
signature (-,+,+,+):

    <x, y> = -x0*y0 + x1*y1 + x2*y2 + x3*y3

Conventions used throughout the package:

* points of H^3 are vectors with <x,x> = -1 and x0 > 0 (forward sheet);
* unit tangent directions satisfy <v,v> = +1 and <x,v> = 0;
* geodesic planes are given by a spacelike unit normal n; the side with
  <x,n> < 0 is "inside";
* ideal points / horospheres are future-pointing lightlike vectors;
* isometries are 4x4 matrices M with M^T J M = J, det M = +1, preserving
  the forward sheet, where J = diag(-1,1,1,1).

The boundary at infinity is identified with CC u {oo} through the
Hermitian-matrix model: the lightlike vector of zeta in CC is

    light_from_uhs(zeta) = ((|z|^2+1)/2, Re z, Im z, (|z|^2-1)/2)

and oo maps to (1/2, 0, 0, 1/2).  This identification is fixed once and
for all; every projection to the boundary plane in the package uses it.

All functions accept arrays with a trailing axis of length 4 and
broadcast over leading axes.  Kernels are dtype-generic: pass float32
arrays to run the whole pipeline in single precision.
"""

from __future__ import annotations

import numpy as np

J_DIAG = np.array([-1.0, 1.0, 1.0, 1.0])
J = np.diag(J_DIAG)

# default f64 tolerances; f32 callers scale these by ~1e7/1e9 as needed
TOL_POINT = 1e-9
TOL_ISOMETRY = 1e-8

# guard against re-hitting the entry face of a tetrahedron
T_MIN = 1e-9


class GeometryError(ValueError):
    """Raised when numeric data violates a hyperboloid-model invariant."""


def minkowski_dot(a, b):
    """Minkowski pairing -a0*b0 + a1*b1 + a2*b2 + a3*b3, broadcasting."""
    a = np.asarray(a)
    b = np.asarray(b)
    return (a * b * J_DIAG.astype(a.dtype)).sum(axis=-1)


def normalize_point(x):
    """Rescale x onto the <x,x> = -1 sheet (keeps x0 > 0)."""
    x = np.asarray(x)
    s = np.sqrt(-minkowski_dot(x, x))
    return x / s[..., None]


def normalize_direction(x, v):
    """Project v back to the unit tangent space at x (Minkowski Gram-Schmidt)."""
    v = v + minkowski_dot(v, x)[..., None] * x
    s = np.sqrt(minkowski_dot(v, v))
    return v / s[..., None]


def check_point(x, tol=TOL_POINT):
    x = np.asarray(x, dtype=float)
    if abs(minkowski_dot(x, x) + 1.0) > tol:
        raise GeometryError(f"not on the hyperboloid: <x,x> = {minkowski_dot(x, x)}")
    if x[0] <= 0:
        raise GeometryError("point on the backward sheet")
    return x


def check_direction(x, v, tol=TOL_POINT):
    v = np.asarray(v, dtype=float)
    if abs(minkowski_dot(v, v) - 1.0) > tol:
        raise GeometryError(f"direction not unit: <v,v> = {minkowski_dot(v, v)}")
    if abs(minkowski_dot(x, v)) > tol:
        raise GeometryError(f"direction not tangent: <x,v> = {minkowski_dot(x, v)}")
    return v


def check_plane(n, tol=TOL_POINT):
    n = np.asarray(n, dtype=float)
    if abs(minkowski_dot(n, n) - 1.0) > tol:
        raise GeometryError(f"plane normal not spacelike unit: {minkowski_dot(n, n)}")
    return n


def check_light(l, tol=TOL_POINT):
    l = np.asarray(l, dtype=float)
    scale = max(1.0, float((l * l).sum()))
    if abs(minkowski_dot(l, l)) > tol * scale:
        raise GeometryError(f"vector not lightlike: <l,l> = {minkowski_dot(l, l)}")
    if l[0] <= 0:
        raise GeometryError("lightlike vector not future-pointing")
    return l


def check_isometry(m, tol=TOL_ISOMETRY):
    m = np.asarray(m, dtype=float)
    err = np.abs(m.T @ J @ m - J).max()
    if err > tol:
        raise GeometryError(f"matrix does not preserve the form, error {err}")
    if np.linalg.det(m) < 0:
        raise GeometryError("isometry is orientation-reversing")
    if m[0, 0] <= 0:
        raise GeometryError("isometry swaps the sheets")
    return m


def geodesic_at(x, v, t):
    """Flow (x, v) along the geodesic for arclength t.

    Returns (x cosh t + v sinh t, x sinh t + v cosh t); broadcasts over
    leading axes of x, v and over t.  Computed on the null basis x +- v
    as ((x+v) e^t + (x-v) e^-t)/2, which keeps forward-then-backward
    round trips accurate for t up to ~20 (the cosh/sinh form loses all
    precision there because cosh t and sinh t round to the same float).
    """
    x = np.asarray(x)
    v = np.asarray(v)
    t = np.asarray(t, dtype=x.dtype)
    a = np.exp(t)[..., None]
    b = np.exp(-t)[..., None]
    up = (x + v) * a
    um = (x - v) * b
    return (up + um) / 2, (up - um) / 2


def exit_parameter(x, v, n, t_min=T_MIN):
    """Arclength at which the ray (x, v) crosses the plane n, or None.

    Solves <x,n> cosh t + <v,n> sinh t = 0 for the smallest t > t_min,
    i.e. tanh t = -<x,n>/<v,n>.  The ray is assumed to start inside or on
    the plane (<x,n> <= tol); crossing requires <v,n> > -<x,n> >= 0.
    """
    a = float(minkowski_dot(x, n))
    b = float(minkowski_dot(v, n))
    if b <= 0.0:
        return None
    r = -a / b
    if r >= 1.0 or r < 0.0:
        return None
    t = float(np.arctanh(r))
    if t <= t_min:
        return None
    return t


def dist_point_to_ideal_geodesic(x, l1, l2):
    """Hyperbolic distance from x to the geodesic with ideal endpoints l1, l2.

    Parameterizing the geodesic as (e^t l1 + e^-t l2)/sqrt(-2<l1,l2>) and
    minimizing -<x, gamma(t)> gives

        cosh^2 d = -2 <x,l1> <x,l2> / <l1,l2>

    (the variant with the opposite sign that circulates in the literature
    fails the on-line case; this form is validated against a golden-section
    minimizer in the test suite).  Vectorized over leading axes.
    """
    p = minkowski_dot(x, l1)
    q = minkowski_dot(x, l2)
    s = minkowski_dot(l1, l2)
    if np.any(np.abs(s) < 1e-14 * np.sqrt(np.abs(p * q) + 1e-30)):
        raise GeometryError("degenerate edge: ideal endpoints are proportional")
    c2 = -2.0 * p * q / s
    c2 = np.maximum(c2, 1.0)
    return np.arccosh(np.sqrt(c2))


def klein_project(x):
    """Klein-ball coordinates (x1/x0, x2/x0, x3/x0)."""
    x = np.asarray(x)
    return x[..., 1:] / x[..., 0:1]


def klein_lift(k):
    """Inverse of klein_project: Klein-ball point -> hyperboloid point."""
    k = np.asarray(k, dtype=float)
    r2 = (k * k).sum(axis=-1)
    if np.any(r2 >= 1.0):
        raise GeometryError("Klein coordinates outside the unit ball")
    x0 = 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([x0[..., None], k * x0[..., None]], axis=-1)


def light_from_uhs(zeta):
    """Lightlike vector of the boundary point zeta in CC u {oo}."""
    if zeta is None or (isinstance(zeta, complex) and np.isinf(zeta)) or zeta == np.inf:
        return np.array([0.5, 0.0, 0.0, 0.5])
    z = complex(zeta)
    m = abs(z) ** 2
    return np.array([(m + 1.0) / 2.0, z.real, z.imag, (m - 1.0) / 2.0])


def light_to_cp1(l):
    """Homogeneous CP^1 coordinates (a, b) of a lightlike vector.

    Two algebraically equivalent representations exist, (x1+i*x2, x0-x3)
    and (x0+x3, x1-i*x2); picking the larger one keeps points near 0 and
    near oo equally stable (the smaller pair is pure cancellation noise
    there).
    """
    l = np.asarray(l, dtype=float)
    a1 = l[..., 1] + 1j * l[..., 2]
    b1 = l[..., 0] - l[..., 3] + 0j
    a2 = l[..., 0] + l[..., 3] + 0j
    b2 = l[..., 1] - 1j * l[..., 2]
    use2 = (np.abs(a2) + np.abs(b2)) > (np.abs(a1) + np.abs(b1))
    a = np.where(use2, a2, a1)
    b = np.where(use2, b2, b1)
    return a, b


def uhs_from_light(l):
    """Boundary point in CC u {oo} of a lightlike vector (projective inverse)."""
    a, b = light_to_cp1(l)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = a / b
    bad = np.abs(b) <= 1e-13 * np.abs(a)
    if np.ndim(z) == 0:
        return complex(np.inf) if bad else complex(z)
    return np.where(bad, np.inf + 0j, z)


def plane_through_ideal(l1, l2, l3, inside=None):
    """Geodesic plane through three ideal points.

    Returns the spacelike unit normal n with <li, n> = 0.  If `inside` is
    given (a point or lightlike vector), n is co-oriented so that
    <inside, n> < 0.
    """
    a = np.stack([l1, l2, l3]) @ J
    _, sing, vt = np.linalg.svd(a)
    if sing[-1] < 1e-9 * sing[0]:
        raise GeometryError("ideal points do not span a plane")
    n = vt[-1]
    nn = minkowski_dot(n, n)
    if nn <= 0:
        raise GeometryError("degenerate plane normal")
    n = n / np.sqrt(nn)
    if inside is not None and minkowski_dot(np.asarray(inside, dtype=float), n) > 0:
        n = -n
    return n


# ---------------------------------------------------------------------------
# SL(2,C) <-> SO+(1,3)

_PAULI = [
    np.array([[1, 0], [0, 1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def _hermitian_to_vec(h):
    return np.array(
        [
            (h[0, 0].real + h[1, 1].real) / 2.0,
            h[0, 1].real,
            h[0, 1].imag,
            (h[0, 0].real - h[1, 1].real) / 2.0,
        ]
    )


def sl2c_to_so13(a):
    """The SO+(1,3) matrix of a in SL(2,C), acting by X -> a X a^*."""
    a = np.asarray(a, dtype=complex)
    cols = [_hermitian_to_vec(a @ _PAULI[k] @ a.conj().T) for k in range(4)]
    return np.stack(cols, axis=1)


def mobius_take_triple(src, dst):
    """SL(2,C) matrix sending three boundary points to three boundary points.

    Points are given in CC u {oo} (np.inf allowed).  The Mobius map with
    src[i] -> dst[i] is unique; the returned matrix is normalized to
    det = 1 (sign ambiguity is irrelevant after sl2c_to_so13).
    """

    def as_vec(z):
        if z == np.inf:
            return np.array([1.0 + 0j, 0.0 + 0j])
        return np.array([complex(z), 1.0 + 0j])

    def std_to(points):
        # matrix taking (0, oo, 1) to the given triple
        p0, p1, p2 = (as_vec(z) for z in points)
        m = np.stack([p1, p0], axis=1)
        lam = np.linalg.solve(m, p2)
        return np.stack([lam[0] * p1, lam[1] * p0], axis=1)

    a = std_to(dst) @ np.linalg.inv(std_to(src))
    d = np.linalg.det(a)
    return a / np.sqrt(d)


def isometry_taking_ideal_triangle(src_uhs, dst_uhs):
    """4x4 isometry sending three ideal points to three ideal points."""
    return sl2c_to_so13(mobius_take_triple(src_uhs, dst_uhs))


# ---------------------------------------------------------------------------
# frames

def frame_orthonormalize(p, axes):
    """Gram-Schmidt a 3-frame at p; returns (p, [e1, e2, e3]) normalized."""
    p = normalize_point(p)
    out = []
    for a in axes:
        v = a + minkowski_dot(a, p) * p
        for e in out:
            v = v - minkowski_dot(v, e) * e
        n = minkowski_dot(v, v)
        if n <= 1e-14:
            raise GeometryError("degenerate frame")
        out.append(v / np.sqrt(n))
    return p, out


def frame_matrix(p, axes):
    """Column matrix [p | e1 | e2 | e3]; satisfies F^T J F = J."""
    return np.stack([p] + list(axes), axis=1)


def local_isometry(frame, local):
    """Conjugate a local 4x4 isometry into world coordinates: F A F^{-1}."""
    f = frame
    f_inv = J @ f.T @ J
    return f @ local @ f_inv


def translation_along(axis, t):
    """Local boost by arclength t along local axis 1, 2 or 3."""
    m = np.eye(4)
    m[0, 0] = np.cosh(t)
    m[axis, axis] = np.cosh(t)
    m[0, axis] = np.sinh(t)
    m[axis, 0] = np.sinh(t)
    return m


def rotation_in(axis_a, axis_b, angle):
    """Local rotation by `angle` in the (axis_a, axis_b) plane (axes 1..3)."""
    m = np.eye(4)
    c, s = np.cos(angle), np.sin(angle)
    m[axis_a, axis_a] = c
    m[axis_b, axis_b] = c
    m[axis_a, axis_b] = -s
    m[axis_b, axis_a] = s
    return m
