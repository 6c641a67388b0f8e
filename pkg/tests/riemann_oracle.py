"""Independent reference solution for the 1D Riemann problem.

Classic exact solver (Toro ch. 4): Newton iteration on the star-region
pressure, then sampling by similarity variable xi = x/t. Used as the
oracle for shock-tube runs; written against the gas-dynamics equations
directly, sharing no code with the solver under test.
"""

import numpy as np


def exact_riemann(rhoL, uL, pL, rhoR, uR, pR, gamma, xi):
    """Sample the exact solution at similarity coordinates xi = x/t.

    Returns (rho, u, p) arrays over xi.
    """
    xi = np.asarray(xi, dtype=float)
    aL = np.sqrt(gamma * pL / rhoL)
    aR = np.sqrt(gamma * pR / rhoR)
    gp1 = gamma + 1.0
    gm1 = gamma - 1.0

    def f_side(p, rhoK, pK, aK):
        if p > pK:  # shock branch
            A = 2.0 / (gp1 * rhoK)
            B = gm1 / gp1 * pK
            return (p - pK) * np.sqrt(A / (p + B))
        # rarefaction branch
        return 2.0 * aK / gm1 * ((p / pK) ** (gm1 / (2 * gamma)) - 1.0)

    def fprime(p, rhoK, pK, aK):
        if p > pK:
            A = 2.0 / (gp1 * rhoK)
            B = gm1 / gp1 * pK
            return np.sqrt(A / (B + p)) * (1.0 - (p - pK) / (2.0 * (B + p)))
        return 1.0 / (rhoK * aK) * (p / pK) ** (-gp1 / (2 * gamma))

    du = uR - uL
    p = max(1e-8, 0.5 * (pL + pR) - 0.125 * du * (rhoL + rhoR) * (aL + aR))
    for _ in range(60):
        f = f_side(p, rhoL, pL, aL) + f_side(p, rhoR, pR, aR) + du
        df = fprime(p, rhoL, pL, aL) + fprime(p, rhoR, pR, aR)
        dp = f / df
        p = max(1e-10, p - dp)
        if abs(dp) < 1e-14 * p:
            break
    pstar = p
    ustar = 0.5 * (uL + uR) + 0.5 * (
        f_side(pstar, rhoR, pR, aR) - f_side(pstar, rhoL, pL, aL))

    rho = np.empty_like(xi)
    u = np.empty_like(xi)
    pr = np.empty_like(xi)
    for n, s in enumerate(xi):
        if s <= ustar:  # left of the contact
            if pstar > pL:  # left shock
                sL = uL - aL * np.sqrt(
                    gp1 / (2 * gamma) * pstar / pL + gm1 / (2 * gamma))
                if s < sL:
                    rho[n], u[n], pr[n] = rhoL, uL, pL
                else:
                    r = rhoL * ((pstar / pL + gm1 / gp1)
                                / (gm1 / gp1 * pstar / pL + 1.0))
                    rho[n], u[n], pr[n] = r, ustar, pstar
            else:  # left rarefaction
                astarL = aL * (pstar / pL) ** (gm1 / (2 * gamma))
                head = uL - aL
                tail = ustar - astarL
                if s < head:
                    rho[n], u[n], pr[n] = rhoL, uL, pL
                elif s > tail:
                    r = rhoL * (pstar / pL) ** (1.0 / gamma)
                    rho[n], u[n], pr[n] = r, ustar, pstar
                else:  # inside the fan
                    u[n] = 2.0 / gp1 * (aL + gm1 / 2.0 * uL + s)
                    a = 2.0 / gp1 * (aL + gm1 / 2.0 * (uL - s))
                    rho[n] = rhoL * (a / aL) ** (2.0 / gm1)
                    pr[n] = pL * (a / aL) ** (2.0 * gamma / gm1)
        else:  # right of the contact
            if pstar > pR:  # right shock
                sR = uR + aR * np.sqrt(
                    gp1 / (2 * gamma) * pstar / pR + gm1 / (2 * gamma))
                if s > sR:
                    rho[n], u[n], pr[n] = rhoR, uR, pR
                else:
                    r = rhoR * ((pstar / pR + gm1 / gp1)
                                / (gm1 / gp1 * pstar / pR + 1.0))
                    rho[n], u[n], pr[n] = r, ustar, pstar
            else:  # right rarefaction
                astarR = aR * (pstar / pR) ** (gm1 / (2 * gamma))
                head = uR + aR
                tail = ustar + astarR
                if s > head:
                    rho[n], u[n], pr[n] = rhoR, uR, pR
                elif s < tail:
                    r = rhoR * (pstar / pR) ** (1.0 / gamma)
                    rho[n], u[n], pr[n] = r, ustar, pstar
                else:
                    u[n] = 2.0 / gp1 * (-aR + gm1 / 2.0 * uR + s)
                    a = 2.0 / gp1 * (aR - gm1 / 2.0 * (uR - s))
                    rho[n] = rhoR * (a / aR) ** (2.0 / gm1)
                    pr[n] = pR * (a / aR) ** (2.0 * gamma / gm1)
    return rho, u, pr


def cell_averaged_density(centers, h, t, left, right, gamma, sub=9):
    """Exact-solution density averaged over each cell by midpoint subsampling.

    A finite-volume scheme carries cell averages; comparing pointwise values
    across a shock misstates the error by O(1) in the crossing cell.
    """
    offsets = (np.arange(sub) + 0.5) / sub - 0.5
    avg = np.zeros_like(centers)
    for off in offsets:
        x = centers + off * h
        xi = (x - 0.5) / t
        rho, _, _ = exact_riemann(*left, *right, gamma, xi)
        avg += rho
    return avg / sub
