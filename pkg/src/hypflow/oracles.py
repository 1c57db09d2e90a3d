"""Independent coordinate-based reference computations.

The flow solver works with hand-reduced orthonormal-frame expressions.
This module rebuilds the same quantities by brute force in polar
coordinates at n = 3 — explicit Christoffel symbols, full index loops,
no frame reduction — so the two routes share no algebra.  It exists for
verification only and is deliberately slow.

All reference callables take node values and exact profile derivatives
(a, a', a'', b, b', b'') so that they carry no finite-difference error
of their own.
"""

from __future__ import annotations

import functools

import numpy as np
import sympy as sp

__all__ = [
    "reference_rhs_n3",
    "reference_deturck_n3",
    "reference_ricci_n3",
    "ricci_frame_components",
    "radial_ricci_frame",
    "random_profile",
]

_N = 3  # coordinate machinery is built for n = 3 (one explicit sphere)


@functools.lru_cache(maxsize=None)
def _machinery(hyperbolic: bool):
    rho, th, ph = sp.symbols("rho theta phi", positive=True)
    x = (rho, th, ph)
    w = sp.sinh(rho) if hyperbolic else rho
    A = sp.Function("A")(rho)
    B = sp.Function("B")(rho)

    sphere = (sp.Integer(1), sp.sin(th) ** 2)
    h = sp.diag(1, *(w**2 * s for s in sphere))
    g = sp.diag(A, *(B * w**2 * s for s in sphere))
    hinv = h.inv()
    ginv = g.inv()

    def christoffel(met, metinv):
        G = [[[sp.Integer(0)] * 3 for _ in range(3)] for _ in range(3)]
        for k in range(3):
            for i in range(3):
                for j in range(3):
                    G[k][i][j] = sum(
                        metinv[k, l]
                        * (
                            sp.diff(met[l, i], x[j])
                            + sp.diff(met[l, j], x[i])
                            - sp.diff(met[i, j], x[l])
                        )
                        for l in range(3)
                    ) / 2
        return G

    hG = christoffel(h, hinv)
    gG = christoffel(g, ginv)

    # S[c][i][j] = covariant derivative (w.r.t. h) of g
    S = [
        [
            [
                sp.diff(g[i, j], x[c])
                - sum(hG[e][c][i] * g[e, j] + hG[e][c][j] * g[i, e] for e in range(3))
                for j in range(3)
            ]
            for i in range(3)
        ]
        for c in range(3)
    ]

    def nabla_s(d, c, i, j):
        t = sp.diff(S[c][i][j], x[d])
        t -= sum(hG[e][d][c] * S[e][i][j] for e in range(3))
        t -= sum(hG[e][d][i] * S[c][e][j] for e in range(3))
        t -= sum(hG[e][d][j] * S[c][i][e] for e in range(3))
        return t

    def laplacian(i, j):
        return sum(ginv[c, d] * nabla_s(d, c, i, j) for c in range(3) for d in range(3))

    def quadratic(i, j):
        tot = sp.Integer(0)
        for a_ in range(3):
            for b_ in range(3):
                if ginv[a_, b_] == 0:
                    continue
                for p in range(3):
                    for q in range(3):
                        if ginv[p, q] == 0:
                            continue
                        gg = ginv[a_, b_] * ginv[p, q]
                        tot += gg * (
                            S[i][p][a_] * S[j][q][b_]
                            + 2 * S[a_][j][p] * S[q][i][b_]
                            - 2 * S[a_][j][p] * S[b_][i][q]
                            - 2 * S[j][p][a_] * S[b_][i][q]
                            - 2 * S[i][p][a_] * S[b_][j][q]
                        )
        return tot / 2

    def zeroth(i, j):
        trace = sum(ginv[k, l] * (h[k, l] - g[k, l]) for k in range(3) for l in range(3))
        return 2 * g[i, j] * trace + 2 * (g[i, j] - h[i, j])

    adot = laplacian(0, 0) + quadratic(0, 0)
    bdot = (laplacian(1, 1) + quadratic(1, 1)) / w**2
    if hyperbolic:
        adot += zeroth(0, 0)
        bdot += zeroth(1, 1) / w**2

    # gauge field: contravariant radial component of the Christoffel difference
    v_expr = sum(ginv[r, s] * (gG[0][r][s] - hG[0][r][s]) for r in range(3) for s in range(3))

    # Ricci tensor of g, straight from the curvature of the coordinate metric
    def ricci(i, j):
        out = sp.Integer(0)
        for k in range(3):
            out += sp.diff(gG[k][i][j], x[k]) - sp.diff(gG[k][i][k], x[j])
            for l in range(3):
                out += gG[k][k][l] * gG[l][i][j] - gG[k][j][l] * gG[l][i][k]
        return out

    ric_r = ricci(0, 0)
    ric_ang = ricci(1, 1) / w**2

    a0, a1, a2, b0, b1, b2 = sp.symbols("a0 a1 a2 b0 b1 b2")
    subs = [
        (sp.Derivative(A, (rho, 2)), a2),
        (sp.Derivative(A, rho), a1),
        (sp.Derivative(B, (rho, 2)), b2),
        (sp.Derivative(B, rho), b1),
        (A, a0),
        (B, b0),
        (th, sp.pi / 2),
    ]
    args = (rho, a0, a1, a2, b0, b1, b2)

    def build(expr):
        return sp.lambdify(args, expr.subs(subs), modules="numpy", cse=True)

    return {
        "adot": build(adot),
        "bdot": build(bdot),
        "deturck": build(v_expr),
        "ric_r": build(ric_r),
        "ric_ang": build(ric_ang),
    }


def reference_rhs_n3(hyperbolic, rho, a, a1, a2, b, b1, b2):
    """Evolution right-hand side (da/dt, db/dt) from the coordinate route."""
    m = _machinery(bool(hyperbolic))
    return (
        np.asarray(m["adot"](rho, a, a1, a2, b, b1, b2), dtype=float),
        np.asarray(m["bdot"](rho, a, a1, a2, b, b1, b2), dtype=float),
    )


def reference_deturck_n3(hyperbolic, rho, a, a1, b, b1):
    """Contravariant radial gauge field from coordinate Christoffels."""
    m = _machinery(bool(hyperbolic))
    zero = np.zeros_like(np.asarray(rho, dtype=float))
    return np.asarray(m["deturck"](rho, a, a1, zero, b, b1, zero), dtype=float)


def reference_ricci_n3(hyperbolic, rho, a, a1, a2, b, b1, b2):
    """Frame Ricci components (radial, angular) from coordinate curvature."""
    m = _machinery(bool(hyperbolic))
    return (
        np.asarray(m["ric_r"](rho, a, a1, a2, b, b1, b2), dtype=float),
        np.asarray(m["ric_ang"](rho, a, a1, a2, b, b1, b2), dtype=float),
    )


# --------------------------------------------------------------------------
# closed-form Ricci of a rotationally symmetric metric (any n)
# --------------------------------------------------------------------------

def ricci_frame_components(n, hyperbolic, rho, a, a1, a2, b, b1, b2):
    """Frame Ricci of g = a drho^2 + b w^2 sigma via phi = sqrt(b) w.

    Ric_rr = -(n-1) [phi''/phi - a' phi' / (2 a phi)]
    Ric_ang = [-phi phi''/a + phi phi' a'/(2a^2) - (n-2)(phi'^2/a - 1)] / w^2
    """
    rho = np.asarray(rho, dtype=float)
    if hyperbolic:
        w, wp, wpp = np.sinh(rho), np.cosh(rho), np.sinh(rho)
    else:
        w, wp, wpp = rho, np.ones_like(rho), np.zeros_like(rho)
    sb = np.sqrt(b)
    phi = sb * w
    phi1 = b1 / (2 * sb) * w + sb * wp
    phi2 = (b2 / (2 * sb) - b1**2 / (4 * b * sb)) * w + b1 / sb * wp + sb * wpp
    ric_r = -(n - 1) * (phi2 / phi - a1 * phi1 / (2 * a * phi))
    ric_ang = (
        -phi * phi2 / a + phi * phi1 * a1 / (2 * a**2) - (n - 2) * (phi1**2 / a - 1.0)
    ) / w**2
    return ric_r, ric_ang


def radial_ricci_frame(state):
    """Frame Ricci of a grid state, profile derivatives by central differences.

    Valid on interior nodes only; entries 0 and m are NaN.
    """
    from .radial_flow import _one_sided_central

    dr = state.grid.dr
    a1 = _one_sided_central(state.a, dr)
    b1 = _one_sided_central(state.b, dr)
    a2 = np.full_like(state.a, np.nan)
    b2 = np.full_like(state.b, np.nan)
    a2[1:-1] = (state.a[2:] - 2 * state.a[1:-1] + state.a[:-2]) / dr**2
    b2[1:-1] = (state.b[2:] - 2 * state.b[1:-1] + state.b[:-2]) / dr**2
    rho = state.grid.nodes
    with np.errstate(invalid="ignore", divide="ignore"):
        ric_r, ric_ang = ricci_frame_components(
            state.geom.n, state.geom.hyperbolic, rho,
            state.a, a1, a2, state.b, b1, b2,
        )
    ric_r[[0, -1]] = np.nan
    ric_ang[[0, -1]] = np.nan
    return ric_r, ric_ang


# --------------------------------------------------------------------------
# analytic random profiles (value + exact derivatives)
# --------------------------------------------------------------------------

def random_profile(rng, R, amplitude=0.05, terms=3):
    """Random smooth admissible profile pair with exact derivatives.

    Both profiles are even in rho, satisfy a - b = O(rho^2) at the
    origin, and match h to second order at rho = R.  Returns a dict of
    callables a, a1, a2, b, b1, b2 of a numpy radius array.
    """
    rho = sp.Symbol("rho", positive=True)
    damp = sp.exp(-(rho**2)) * (1 - (rho / R) ** 2) ** 2
    even = sum(
        sp.Rational(int(rng.integers(-100, 101)), 100) * rho ** (2 * k)
        for k in range(terms)
    )
    diff_even = sum(
        sp.Rational(int(rng.integers(-100, 101)), 100) * rho ** (2 * k)
        for k in range(terms - 1)
    )
    a_expr = 1 + amplitude * even * damp
    b_expr = a_expr + amplitude * rho**2 * diff_even * damp
    out = {}
    for name, expr in (("a", a_expr), ("b", b_expr)):
        out[name] = sp.lambdify(rho, expr, modules="numpy")
        out[name + "1"] = sp.lambdify(rho, sp.diff(expr, rho), modules="numpy")
        out[name + "2"] = sp.lambdify(rho, sp.diff(expr, rho, 2), modules="numpy")
    return out
