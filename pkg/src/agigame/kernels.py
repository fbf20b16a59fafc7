"""Per-step numeric kernels, in a numba flavour and a numpy flavour.

Both flavours take and return float64 arrays indexed by player slot. The
module-level names (``capability_next`` etc.) point at whichever flavour
``_accel.USE_NUMBA`` selected; ``NUMBA`` and ``NUMPY`` expose both for
benchmarks and cross-checks.
"""

from types import SimpleNamespace

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------- numpy


def _np_capability_next(T, r, c, e, s, alpha, gamma):
    return T + alpha * r * c * e * (1.0 + gamma * s)


def _np_knowledge_next(K, s, T, beta):
    return K + beta * float(np.dot(s, T))


def _np_security(V, T):
    return float(np.dot(V, T))


def _np_stage_utilities(T, K, S, s, r, V, access, lam, mu, phi, sigma, xi, eta, theta):
    rivals = T.sum() - T
    econ = lam * T + access * (mu * K + phi * s * K)
    sec = sigma * S - xi * rivals
    cost = eta * r * r + theta * (1.0 - V)
    return econ, sec, cost


def _np_discounted_sum(u, delta):
    return float(np.dot(u, delta ** np.arange(u.shape[0], dtype=np.float64)))


def _np_theorem1_grid(beta, gamma, xi, mu, theta, delta, lam, alpha):
    c1 = beta > gamma + xi / mu
    c2 = theta <= mu * beta / delta
    c3 = xi >= lam * alpha / delta
    return c1, c2, c3


# ---------------------------------------------------------------- numba


@njit
def _nb_capability_next(T, r, c, e, s, alpha, gamma):
    out = np.empty_like(T)
    for i in range(T.shape[0]):
        out[i] = T[i] + alpha * r[i] * c[i] * e[i] * (1.0 + gamma * s[i])
    return out


@njit
def _nb_knowledge_next(K, s, T, beta):
    acc = 0.0
    for i in range(T.shape[0]):
        acc += s[i] * T[i]
    return K + beta * acc


@njit
def _nb_security(V, T):
    acc = 0.0
    for i in range(T.shape[0]):
        acc += V[i] * T[i]
    return acc


@njit
def _nb_stage_utilities(T, K, S, s, r, V, access, lam, mu, phi, sigma, xi, eta, theta):
    n = T.shape[0]
    total_T = 0.0
    for i in range(n):
        total_T += T[i]
    econ = np.empty(n)
    sec = np.empty(n)
    cost = np.empty(n)
    for i in range(n):
        econ[i] = lam * T[i] + access[i] * (mu * K + phi * s[i] * K)
        sec[i] = sigma * S - xi * (total_T - T[i])
        cost[i] = eta * r[i] * r[i] + theta * (1.0 - V[i])
    return econ, sec, cost


@njit
def _nb_discounted_sum(u, delta):
    acc = 0.0
    w = 1.0
    for t in range(u.shape[0]):
        acc += w * u[t]
        w *= delta
    return acc


@njit
def _nb_theorem1_grid(beta, gamma, xi, mu, theta, delta, lam, alpha):
    n = beta.shape[0]
    c1 = np.empty(n, dtype=np.bool_)
    c2 = np.empty(n, dtype=np.bool_)
    c3 = np.empty(n, dtype=np.bool_)
    for i in range(n):
        c1[i] = beta[i] > gamma[i] + xi[i] / mu[i]
        c2[i] = theta[i] <= mu[i] * beta[i] / delta[i]
        c3[i] = xi[i] >= lam[i] * alpha[i] / delta[i]
    return c1, c2, c3


NUMPY = SimpleNamespace(
    capability_next=_np_capability_next,
    knowledge_next=_np_knowledge_next,
    security=_np_security,
    stage_utilities=_np_stage_utilities,
    discounted_sum=_np_discounted_sum,
    theorem1_grid=_np_theorem1_grid,
)

NUMBA = SimpleNamespace(
    capability_next=_nb_capability_next,
    knowledge_next=_nb_knowledge_next,
    security=_nb_security,
    stage_utilities=_nb_stage_utilities,
    discounted_sum=_nb_discounted_sum,
    theorem1_grid=_nb_theorem1_grid,
)

ACTIVE = NUMBA if USE_NUMBA else NUMPY
BACKEND = "numba" if USE_NUMBA else "numpy"

capability_next = ACTIVE.capability_next
knowledge_next = ACTIVE.knowledge_next
security = ACTIVE.security
stage_utilities = ACTIVE.stage_utilities
discounted_sum = ACTIVE.discounted_sum
theorem1_grid = ACTIVE.theorem1_grid
