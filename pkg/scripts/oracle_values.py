"""Regenerate the reference numbers frozen into the test suite.

Independent of the package: curvature by symbolic differentiation (sympy),
Bessel zeros by bisection in 40-digit arithmetic (mpmath), log coefficients by
high-precision evaluation of the closed forms. Run with ``python scripts/oracle_values.py``.
"""

import mpmath as mp
import sympy as sp


def poly_metric_arrays():
    # g_ij(x) = c_ij + L_ijk x_k + 1/2 Q_ijkl x_k x_l ; same formula as tests/oracles.py
    c = [[2.0, 0.1, 0.0], [0.1, 3.0, 0.2], [0.0, 0.2, 1.0]]
    L = [[[((i + j + 1) * (k + 2) % 5 - 2) / 10 for k in range(3)] for j in range(3)]
         for i in range(3)]
    Q = [[[[((i + j + 2) * (k + l + 1) % 7 - 3) / 20 for l in range(3)] for k in range(3)]
          for j in range(3)] for i in range(3)]
    return c, L, Q


def curvature(g, xs):
    n = len(xs)
    ginv = g.inv()
    gam = [[[sum(ginv[i, a] * (sp.diff(g[a, j], xs[k]) + sp.diff(g[a, k], xs[j])
                               - sp.diff(g[j, k], xs[a])) for a in range(n)) / 2
             for k in range(n)] for j in range(n)] for i in range(n)]
    # R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{ka} G^a_{lj} - G^i_{la} G^a_{kj}
    R = [[[[sp.diff(gam[i][l][j], xs[k]) - sp.diff(gam[i][k][j], xs[l])
            + sum(gam[i][k][a] * gam[a][l][j] - gam[i][l][a] * gam[a][k][j] for a in range(n))
            for l in range(n)] for k in range(n)] for j in range(n)] for i in range(n)]
    return ginv, gam, R


def invariants_at(g, xs, point):
    n = len(xs)
    sub = dict(zip(xs, point))
    ginv, gam, R = curvature(g, xs)
    gN = sp.Matrix(g.subs(sub)).evalf(30)
    giN = sp.Matrix(ginv.subs(sub)).evalf(30)
    RN = [[[[sp.N(R[i][j][k][l].subs(sub), 30) for l in range(n)] for k in range(n)]
            for j in range(n)] for i in range(n)]
    Rlow = [[[[sum(gN[i, a] * RN[a][j][k][l] for a in range(n)) for l in range(n)]
              for k in range(n)] for j in range(n)] for i in range(n)]
    ric = [[sum(RN[i][j][i][l] for i in range(n)) for l in range(n)] for j in range(n)]
    scal = sum(giN[j, l] * ric[j][l] for j in range(n) for l in range(n))
    ric_up = [[sum(giN[a, j] * giN[b, l] * ric[j][l] for j in range(n) for l in range(n))
               for b in range(n)] for a in range(n)]
    ric_sq = sum(ric[a][b] * ric_up[a][b] for a in range(n) for b in range(n))
    up = Rlow
    for _ in range(4):
        up = _raise_first(up, giN, n)
    riem_sq = sum(Rlow[i][j][k][l] * up[i][j][k][l]
                  for i in range(n) for j in range(n) for k in range(n) for l in range(n))
    gamN = [[[sp.N(gam[i][j][k].subs(sub), 30) for k in range(n)] for j in range(n)]
            for i in range(n)]
    return {"scal": scal, "ric_sq": ric_sq, "riem_sq": riem_sq, "gamma": gamN, "R": Rlow}


def _raise_first(T, giN, n):
    # raise index 0 and rotate it to the back: (a, b, c, d) -> (b, c, d, a')
    return [[[[sum(T[p][b][c][d] * giN[p, a] for p in range(n)) for a in range(n)]
              for d in range(n)] for c in range(n)] for b in range(n)]


def poly_metric_oracle():
    xs = sp.symbols("x0:3")
    c, L, Q = poly_metric_arrays()
    g = sp.zeros(3, 3)
    for i in range(3):
        for j in range(3):
            e = sp.nsimplify(c[i][j])
            e += sum(sp.nsimplify(L[i][j][k]) * xs[k] for k in range(3))
            e += sum(sp.nsimplify(Q[i][j][k][l]) * xs[k] * xs[l]
                     for k in range(3) for l in range(3)) / 2
            g[i, j] = e
    point = [sp.Rational(3, 10), sp.Rational(-1, 5), sp.Rational(1, 2)]
    out = invariants_at(g, xs, point)
    print("polynomial metric at (0.3, -0.2, 0.5)")
    print("  scal     ", out["scal"])
    print("  |Ric|^2  ", out["ric_sq"])
    print("  |R|^2    ", out["riem_sq"])
    print("  G^0_12   ", out["gamma"][0][1][2])
    print("  R_0101   ", out["R"][0][1][0][1])
    print("  R_0212   ", out["R"][0][2][1][2])


def wedge_oracle():
    r, th, p1, p2 = sp.symbols("r theta p1 p2", positive=True)
    rho = sp.Rational(13, 10)
    g = sp.diag(1, 1, r ** 2 * rho ** 2, r ** 2 * rho ** 2 * sp.sin(p1) ** 2)
    point = [sp.Rational(2, 5), sp.Integer(1), sp.Rational(7, 10), sp.Integer(2)]
    out = invariants_at(g, [r, th, p1, p2], point)
    print("m = 4 wedge over S^2(1.3) at r = 0.4, phi1 = 0.7")
    print("  scal     ", out["scal"])
    print("  |Ric|^2  ", out["ric_sq"])
    print("  |R|^2    ", out["riem_sq"])


def bessel_oracle():
    mp.mp.dps = 40
    for nu, a, b in [(0, 2, 3), (1, 3, 4), (1, 157, 158.5)]:
        f = lambda x: mp.besselj(nu, x)
        lo, hi = mp.mpf(a), mp.mpf(b)
        assert f(lo) * f(hi) < 0
        for _ in range(140):
            mid = (lo + hi) / 2
            if f(lo) * f(mid) <= 0:
                hi = mid
            else:
                lo = mid
        print(f"  j_({nu}) in [{a}, {b}]:", mp.nstr((lo + hi) / 2, 25))


def log_coefficient_oracle():
    mp.mp.dps = 30
    for rho in ("0.8", "1.25", "1.5"):
        p = mp.mpf(rho)
        c = -(4 * mp.pi) ** mp.mpf(-2.5) * mp.pi ** 3 * p ** 3 * (p ** -2 - 1) ** 2
        alt = -mp.sqrt(mp.pi) * (p ** 2 - 1) ** 2 / (32 * p)
        print(f"  c(S^3({rho}))", mp.nstr(c, 20), " closed form:", mp.nstr(alt, 20))
    vol = 1
    c_torus = -(2 * mp.pi * 180) / (720 * (4 * mp.pi) ** mp.mpf(2.5)) * vol
    print("  c(T^3 unit)", mp.nstr(c_torus, 20))
    s0 = (4 * mp.pi) ** mp.mpf(-2.5) * mp.sqrt(mp.pi) / 2 * 2 * mp.pi ** 2 * mp.mpf(0.5) ** 4
    print("  sigma_0(d=3, m=5, S^3, r=0.5)", mp.nstr(s0, 20))


if __name__ == "__main__":
    poly_metric_oracle()
    wedge_oracle()
    print("Bessel zeros (bisection)")
    bessel_oracle()
    print("log coefficients")
    log_coefficient_oracle()
