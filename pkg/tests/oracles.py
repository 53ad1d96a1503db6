"""Independent reference computations used by the tests.

Nothing here imports the code under test.
"""
import math

import numpy as np

# 2*pi/3 + 2*sin(2*pi/3), evaluated to 30 digits: the example2 (a=4, b=1) minimum
EXAMPLE2_MIN = 3.82644590996207278


def eig2x2(m):
    """Closed-form eigenvalues of a symmetric 2x2 matrix, ascending."""
    a, b, c = m[0][0], m[0][1], m[1][1]
    mean = 0.5 * (a + c)
    r = math.hypot(0.5 * (a - c), b)
    return [mean - r, mean + r]


def det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def affine_sequence(alpha0, alpha_star, rho, n):
    """First n step-sizes of a = a* - rho (a - a*), iterated by hand."""
    out = [alpha0]
    for _ in range(n - 1):
        out.append(alpha_star - rho * (out[-1] - alpha_star))
    return out


def wilson_reference(k, n, z=1.959963984540054):
    """Textbook Wilson score interval."""
    p = k / n
    centre = p + z * z / (2 * n)
    spread = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    denom = 1 + z * z / n
    return (centre - spread) / denom, (centre + spread) / denom


def example0_map(x, y, alpha):
    """Descent map for example0 written out coordinate-wise."""
    return x - alpha * x, y - alpha * (y**3 - y)


def brute_force_minimum(fn, lo, hi, n=2_000_001):
    xs = np.linspace(lo, hi, n)
    return xs[np.argmin(fn(xs))]
