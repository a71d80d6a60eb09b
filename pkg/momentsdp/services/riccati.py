"""
Riccati reference solution for the scalar linear-quadratic regulator

    dx = (a x + b u) dt + g dw,    cost E[ int_0^T (q x^2 + r u^2) dt + psi x(T)^2 ].
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiccatiSolution:
    times: np.ndarray
    P: np.ndarray
    gain: np.ndarray
    second_moment: np.ndarray
    cost: float


def lqr_riccati_oracle(a: float, b: float, q: float, r: float, psi: float, sigma2: float, g2: float,
                       T: float, steps: int = 400, mean: float = 0.0) -> RiccatiSolution:
    """
    Optimal gain K(t) = -b P(t) / r and cost of the scalar LQR problem.

    -dP/dt = 2 a P - b^2 P^2 / r + q with P(T) = psi, and the optimal cost is
    P(0) E[x(0)^2] + int_0^T g^2 P(t) dt.

    Args:
        a, b: Drift coefficients
        q, r, psi: Running state, running input and terminal weights
        sigma2: Variance of x(0)
        g2: Squared diffusion coefficient
        T: Horizon
        steps: Grid intervals for the returned trajectories
        mean: Mean of x(0)

    Returns:
        RiccatiSolution: P, gain and E[x^2] under the optimal law on linspace(0, T, steps + 1)
    """
    if r <= 0:
        raise ValueError("input weight r must be positive")

    # integrate backwards in s = T - t; the second component accumulates int g^2 P
    def backward(s, y):
        P = y[0]
        return [2 * a * P - b * b * P * P / r + q, g2 * P]

    sol = solve_ivp(backward, (0.0, T), [psi, 0.0], method='RK45', rtol=1e-11, atol=1e-13, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"Riccati integration failed: {sol.message}")

    times = np.linspace(0.0, T, steps + 1)
    P = sol.sol(T - times)[0]
    gain = -b * P / r
    m2 = mean * mean + sigma2
    cost = float(sol.sol(T)[0] * m2 + sol.sol(T)[1])

    def closed_loop(t, y):
        K = -b * sol.sol(T - t)[0] / r
        return [2 * (a + b * K) * y[0] + g2]

    forward = solve_ivp(closed_loop, (0.0, T), [m2], t_eval=times, rtol=1e-11, atol=1e-13)
    logger.debug(f"Riccati oracle: P(0)={P[0]:.8g}, cost={cost:.8g}")
    return RiccatiSolution(times, P, gain, forward.y[0], cost)


__all__ = ['RiccatiSolution', 'lqr_riccati_oracle']
