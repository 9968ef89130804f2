"""Reference shape functions: linear triangles and bicubic Hermite rectangles."""

import numpy as np

#: local vertex order of a rectangle, as (x-end, y-end) flags
RECT_CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))
#: per-vertex DOF kinds of the Hermite element
HERMITE_DOFS = ("u", "ux", "uy", "uxy")


def hermite_1d(xi, order=0):
    """Cubic Hermite functions on [0, 1] and their derivatives.

    Columns are ``H0`` (value at 0), ``H1`` (slope at 0), ``H2`` (value at
    1) and ``H3`` (slope at 1).
    """
    xi = np.asarray(xi, float)
    if order == 0:
        cols = (1 - 3 * xi**2 + 2 * xi**3, xi - 2 * xi**2 + xi**3,
                3 * xi**2 - 2 * xi**3, -xi**2 + xi**3)
    elif order == 1:
        cols = (-6 * xi + 6 * xi**2, 1 - 4 * xi + 3 * xi**2,
                6 * xi - 6 * xi**2, -2 * xi + 3 * xi**2)
    elif order == 2:
        cols = (-6 + 12 * xi, -4 + 6 * xi, 6 - 12 * xi, -2 + 6 * xi)
    else:
        raise ValueError("order must be 0, 1 or 2")
    return np.stack(cols, axis=-1)


def _local_table():
    # (x-function, y-function, x-length power, y-length power) for 16 local DOFs
    table = []
    for ix, iy in RECT_CORNERS:
        vx, sx = (0, 1) if ix == 0 else (2, 3)
        vy, sy = (0, 1) if iy == 0 else (2, 3)
        table += [(vx, vy, 0, 0), (sx, vy, 1, 0), (vx, sy, 0, 1), (sx, sy, 1, 1)]
    return np.array(table)


_TABLE = _local_table()


def hermite_rect(xi, eta, hx, hy, dx=0, dy=0):
    """Derivative ``∂x^dx ∂y^dy`` of the 16 bicubic Hermite functions.

    Parameters
    ----------
    xi, eta : array_like
        Reference coordinates in [0, 1].
    hx, hy : float
        Cell side lengths.

    Returns
    -------
    ndarray of shape (npts, 16)
        Local DOF order: for each corner in ``RECT_CORNERS``, the DOFs
        ``u, u_x, u_y, u_xy``.
    """
    Hx = hermite_1d(np.atleast_1d(xi), dx)
    Hy = hermite_1d(np.atleast_1d(eta), dy)
    fx, fy, px, py = _TABLE.T
    scale = hx ** (px - dx) * hy ** (py - dy)
    return Hx[:, fx] * Hy[:, fy] * scale


def hermite_hessian_matrix(hx, hy, n_gauss=4):
    """Local matrix of ``∫ u_xx v_xx + 2 u_xy v_xy + u_yy v_yy`` on one cell."""
    g, w = np.polynomial.legendre.leggauss(n_gauss)
    g = 0.5 * (g + 1)
    w = 0.5 * w
    X, Y = np.meshgrid(g, g, indexing="ij")
    W = np.outer(w, w).ravel() * hx * hy
    xi, eta = X.ravel(), Y.ravel()
    Bxx = hermite_rect(xi, eta, hx, hy, 2, 0)
    Bxy = hermite_rect(xi, eta, hx, hy, 1, 1)
    Byy = hermite_rect(xi, eta, hx, hy, 0, 2)
    return (Bxx.T * W) @ Bxx + 2 * (Bxy.T * W) @ Bxy + (Byy.T * W) @ Byy


def p1_stiffness(coords):
    """Stiffness matrices of linear triangles, shape (nc, 3, 3).

    ``coords`` has shape (nc, 3, 2) with counterclockwise vertices.
    """
    a, b, c = coords[:, 0], coords[:, 1], coords[:, 2]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    # gradients of barycentric coordinates: rotated opposite edges / (2 area)
    e = np.stack([c - b, a - c, b - a], axis=1)
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2 * area)[:, None, None]
    return np.einsum("cik,cjk->cij", grads, grads) * area[:, None, None]
