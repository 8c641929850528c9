"""Independent numerical oracles built only on closed-form potentials and mpmath."""
import mpmath as mp

DPS = 60


def _shift(p, idx, h):
    q = list(p)
    q[idx] += h
    return q


def ddbar(f, p, a, b, h):
    """Central-difference d_a dbar_b f at real coordinates p = (x1, y1, x2, y2, ...)."""
    xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1

    def mixed(u, v):
        return (
            f(_shift(_shift(p, u, h), v, h))
            - f(_shift(_shift(p, u, h), v, -h))
            - f(_shift(_shift(p, u, -h), v, h))
            + f(_shift(_shift(p, u, -h), v, -h))
        ) / (4 * h * h)

    return (mixed(xa, xb) + mixed(ya, yb) + 1j * (mixed(xa, yb) - mixed(ya, xb))) / 4


def einstein_lambda_fd(potential, n, point, h_inner=mp.mpf("1e-20"), h_outer=mp.mpf("1e-5")):
    """Return (lambda, residual) at a complex point from nested finite differences.

    ``potential`` maps a list of complex mpmath numbers to a real mpmath number.
    lambda is read off the trace of ``d dbar (-log det g) = (lambda/2) g``.
    """
    with mp.workdps(DPS):
        def phi(real):
            zs = [mp.mpc(real[2 * i], real[2 * i + 1]) for i in range(n)]
            return potential(zs)

        def metric(real):
            return mp.matrix([[ddbar(phi, real, a, b, h_inner) for b in range(n)] for a in range(n)])

        def neg_logdet(real):
            return -mp.log(mp.re(mp.det(metric(real))))

        p = []
        for c in point:
            p.extend([mp.mpf(c.real), mp.mpf(c.imag)])
        ric = [[ddbar(neg_logdet, p, a, b, h_outer) for b in range(n)] for a in range(n)]
        g = metric(p)
        half = sum(ric[a][a] for a in range(n)) / sum(g[a, a] for a in range(n))
        resid = max(abs(ric[a][b] - half * g[a, b]) for a in range(n) for b in range(n))
        return float(mp.re(2 * half)), float(resid)


def fs_potential(zs):
    return mp.log(1 + sum(abs(z) ** 2 for z in zs))


def flat_potential(zs):
    return sum(abs(z) ** 2 for z in zs)


def hyperbolic_potential(zs):
    return -mp.log(1 - abs(zs[0]) ** 2)
