"""State-affine and linear reservoir systems with certified convergence data.

Two system families are implemented:

* ``SASSystem`` — the non-homogeneous state-affine system
  ``x_t = p(z_t) x_{t-1} + q(z_t)``, ``y_t = W^T x_t`` with matrix-polynomial
  coefficients and scalar inputs confined to ``I = [-1, 1]``.  Construction demands a
  certified contraction margin: the norm certificate of ``p`` must show
  ``M_p_upper < 1 - eps``, which yields the echo state property, a hard state bound
  ``||x_t|| <= K2 / (1 - K1)`` and geometric forgetting of initial conditions.

* ``LinearSystem`` — ``x_t = A x_{t-1} + c z_t`` with a polynomial readout
  ``y_t = h(x_t)`` and vector inputs.  Construction requires ``sigma_max(A) < 1 - eps``
  unless ``A`` is nilpotent, in which case the system has exact finite memory and the
  spectral constraint is waived.

Each system offers two solution paths whose agreement is a core correctness check: the
plain recursion from a caller-supplied initial state, and the contraction series
``x_t = sum_{j>=0} (prod_{k=0}^{j-1} p(z_{t-k})) q(z_{t-j})`` truncated at a certified
tail.  The truncated series is evaluated in nested (Horner) form
``q_0 + P_0 (q_1 + P_1 (q_2 + ...))`` — algebraically identical to the partial sum but
needing only matrix-vector work.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .polynomials import (
    MatrixPolynomial,
    NormCertificate,
    ScalarPolynomial,
    norm_certificate,
    poly_eval,
    poly_from_json,
    poly_to_json,
    scalar_poly_eval,
    scalar_poly_from_json,
    scalar_poly_to_json,
    spectral_norm,
)
from .sequences import BoundedSequence

__all__ = [
    "SASSystem",
    "LinearSystem",
    "Trajectory",
    "sas_run_recursion",
    "sas_run_series",
    "sas_functional",
    "sas_state",
    "sas_terminal_states_batch",
    "state_bound",
    "linear_run",
    "linear_functional",
    "linear_state",
    "evaluate_filter",
    "fmp_lipschitz_constant",
    "fmp_weighting",
    "esp_margin",
    "default_washout",
    "system_to_json",
    "system_from_json",
    "trajectory_to_csv",
]


@dataclass(frozen=True)
class Trajectory:
    """Simulated states and outputs aligned to the input window (oldest first).

    ``washout_len`` marks the prefix whose states still depend on the initial
    condition beyond ``truncation_tail_bound``; downstream training should discard it.
    """

    states: np.ndarray  # (T, N)
    outputs: np.ndarray  # (T,)
    washout_len: int
    truncation_tail_bound: float

    def __post_init__(self) -> None:
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        outputs = np.asarray(self.outputs, dtype=float).ravel()
        if states.shape[0] != outputs.shape[0]:
            raise ValueError("states and outputs must have equal length")
        if self.truncation_tail_bound < 0.0:
            raise ValueError("truncation_tail_bound must be >= 0")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "outputs", outputs)

    @property
    def times(self) -> np.ndarray:
        """Time labels -(T-1), ..., -1, 0 matching the window alignment."""
        T = self.states.shape[0]
        return np.arange(-(T - 1), 1)


# ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class SASSystem:
    """Non-homogeneous state-affine reservoir with linear readout.

    Use :meth:`create`, which computes and checks the norm certificates; the raw
    constructor trusts its arguments.
    """

    p: MatrixPolynomial
    q: MatrixPolynomial
    W: np.ndarray
    eps: float
    p_cert: NormCertificate
    q_cert: NormCertificate

    @classmethod
    def create(
        cls,
        p: MatrixPolynomial,
        q: MatrixPolynomial,
        W,
        eps: float,
        grid_step: float = 0.01,
    ) -> "SASSystem":
        if p.rows != p.cols:
            raise ValueError("p must be square")
        if q.rows != p.rows or q.cols != 1:
            raise ValueError("q must be N x 1 with N matching p")
        W = np.asarray(W, dtype=float).ravel()
        if W.size != p.rows:
            raise ValueError("readout W must have length N")
        if not (0.0 < eps < 1.0):
            raise ValueError("margin eps must lie in (0, 1)")
        p_cert = norm_certificate(p, grid_step=grid_step)
        q_cert = norm_certificate(q, grid_step=grid_step)
        if not p_cert.M_p_upper < 1.0 - eps:
            raise ValueError(
                f"echo state precondition failed: certified M_p upper bound "
                f"{p_cert.M_p_upper:.6g} is not below 1 - eps = {1.0 - eps:.6g}"
            )
        return cls(p=p, q=q, W=W, eps=eps, p_cert=p_cert, q_cert=q_cert)

    @property
    def N(self) -> int:
        return self.p.rows

    @property
    def K1(self) -> float:
        """Certified contraction factor: upper bound of sup ||p(z)||_2."""
        return self.p_cert.M_p_upper

    @property
    def K2(self) -> float:
        """Certified upper bound of sup ||q(z)||_2."""
        return self.q_cert.M_p_upper

    def with_readout(self, W) -> "SASSystem":
        W = np.asarray(W, dtype=float).ravel()
        if W.size != self.N:
            raise ValueError("readout W must have length N")
        return SASSystem(
            p=self.p, q=self.q, W=W, eps=self.eps,
            p_cert=self.p_cert, q_cert=self.q_cert,
        )


@dataclass(frozen=True)
class LinearSystem:
    """Linear reservoir ``x_t = A x_{t-1} + c z_t`` with polynomial readout."""

    A: np.ndarray
    c: np.ndarray
    h: ScalarPolynomial
    eps: float
    sigma: float
    diagonal: bool
    nilpotent: bool
    nilpotency_index: int | None

    @classmethod
    def create(cls, A, c, h: ScalarPolynomial, eps: float) -> "LinearSystem":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        N = A.shape[0]
        c = np.asarray(c, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != N:
            raise ValueError("c must have N rows")
        if h.arity != N:
            raise ValueError("readout arity must equal the state dimension")
        if not (0.0 < eps < 1.0):
            raise ValueError("margin eps must lie in (0, 1)")
        sigma = spectral_norm(A)
        diagonal = bool(np.all(A == np.diag(np.diagonal(A))))
        nilpotent, index = _nilpotency_of_matrix(A)
        if not nilpotent and not sigma < 1.0 - eps:
            raise ValueError(
                f"sigma_max(A) = {sigma:.6g} is not below 1 - eps = {1.0 - eps:.6g}"
            )
        return cls(
            A=A, c=c, h=h, eps=eps, sigma=sigma,
            diagonal=diagonal, nilpotent=nilpotent, nilpotency_index=index,
        )

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.c.shape[1]

    def with_readout(self, h: ScalarPolynomial) -> "LinearSystem":
        if h.arity != self.N:
            raise ValueError("readout arity must equal the state dimension")
        return LinearSystem(
            A=self.A, c=self.c, h=h, eps=self.eps, sigma=self.sigma,
            diagonal=self.diagonal, nilpotent=self.nilpotent,
            nilpotency_index=self.nilpotency_index,
        )


def _nilpotency_of_matrix(A: np.ndarray, tol: float = 0.0) -> tuple[bool, int | None]:
    power = np.array(A)
    for k in range(1, A.shape[0] + 1):
        if np.max(np.abs(power)) <= tol:
            return True, k
        power = power @ A
    return False, None


# ---------------------------------------------------------------------------------
# SAS simulation


def _check_sas_input(z: BoundedSequence) -> None:
    if z.dim != 1:
        raise ValueError("state-affine systems take scalar inputs")
    if np.max(np.abs(z.window)) > 1.0 + 1e-12:
        raise ValueError("input entry outside [-1, 1]")


def state_bound(s: SASSystem) -> float:
    """Certified invariant-ball radius K2 / (1 - K1); every state stays inside."""
    if s.K2 == 0.0:
        return 0.0
    return s.K2 / (1.0 - s.K1)


def sas_run_recursion(
    s: SASSystem,
    z: BoundedSequence,
    x_init=None,
    washout: int = 0,
) -> Trajectory:
    """Iterate ``x_t = p(z_t) x_{t-1} + q(z_t)`` across the window from ``x_init``.

    The first ``washout`` states depend on the initial condition up to
    ``2 * state_bound * (1 - eps)**washout`` (geometric forgetting with contraction
    factor K1 <= 1 - eps); that value is recorded as the truncation tail bound.
    """
    _check_sas_input(z)
    if washout < 0:
        raise ValueError("washout must be >= 0")
    sb = state_bound(s)
    if x_init is None:
        x = np.zeros(s.N)
    else:
        x = np.asarray(x_init, dtype=float).ravel()
        if x.size != s.N:
            raise ValueError("x_init must have length N")
        if np.linalg.norm(x) > sb + 1.0:
            raise ValueError("x_init lies outside the sanity cap state_bound + 1")
    T = z.length
    states = np.empty((T, s.N))
    for t in range(T):
        zt = float(z.window[t, 0])
        x = poly_eval(s.p, zt) @ x + poly_eval(s.q, zt)[:, 0]
        states[t] = x
    outputs = states @ s.W
    tail = 2.0 * sb * (1.0 - s.eps) ** washout
    return Trajectory(
        states=states, outputs=outputs, washout_len=washout,
        truncation_tail_bound=tail,
    )


def _series_terms(s: SASSystem, tol: float) -> tuple[int, float]:
    """Smallest J with K2 * K1**(J+1) / (1 - K1) < tol, and that tail value."""
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    K1, K2 = s.K1, s.K2

    def tail(j: int) -> float:
        return K2 * K1 ** (j + 1) / (1.0 - K1)

    if K2 == 0.0 or K1 == 0.0:
        return 0, 0.0
    J = 0
    if tail(0) >= tol:
        # log-formula guess, then exact integer fix-up
        J = max(0, int(math.ceil(math.log(tol * (1.0 - K1) / K2) / math.log(K1))) - 1)
        while tail(J) >= tol:
            J += 1
        while J > 0 and tail(J - 1) < tol:
            J -= 1
    return J, tail(J)


def _series_state(s: SASSystem, z: BoundedSequence, k0: int, J: int) -> np.ndarray:
    """Truncated series at the window slot whose newest-first offset is ``k0``.

    Nested evaluation of sum_{j<=J} (p(z_{-k0}) ... p(z_{-k0-j+1})) q(z_{-k0-j}).
    """
    zJ = float(z.entry(k0 + J)[0])
    acc = poly_eval(s.q, zJ)[:, 0]
    for j in range(J - 1, -1, -1):
        zj = float(z.entry(k0 + j)[0])
        acc = poly_eval(s.p, zj) @ acc + poly_eval(s.q, zj)[:, 0]
    return acc


def sas_run_series(s: SASSystem, z: BoundedSequence, tol: float) -> Trajectory:
    """Evaluate the contraction series at every window slot, tail below ``tol``.

    Entries older than the window are supplied by the sequence's extension rule, so
    the result is the exact filter value up to the certified truncation tail.
    """
    _check_sas_input(z)
    J, tail = _series_terms(s, tol)
    T = z.length
    states = np.empty((T, s.N))
    for t in range(T):
        states[t] = _series_state(s, z, T - 1 - t, J)
    outputs = states @ s.W
    return Trajectory(
        states=states, outputs=outputs, washout_len=0, truncation_tail_bound=tail
    )


def sas_functional(s: SASSystem, z: BoundedSequence, tol: float = 1e-9) -> float:
    """W^T (series state at t = 0); absolute error at most ||W|| * tol."""
    _check_sas_input(z)
    J, _ = _series_terms(s, tol)
    return float(s.W @ _series_state(s, z, 0, J))


def sas_terminal_states_batch(s: SASSystem, Z: np.ndarray) -> np.ndarray:
    """Recursion from the zero state for a batch of scalar input windows.

    ``Z`` has shape (B, T), oldest first; returns the (B, N) terminal states.  The
    initial-condition error of each row is at most K1**T * state_bound.  This is the
    fast path used for harvesting training features.
    """
    Z = np.asarray(Z, dtype=float)
    if np.max(np.abs(Z)) > 1.0 + 1e-12:
        raise ValueError("input entry outside [-1, 1]")
    B, T = Z.shape
    pc = [np.array(c) for c in s.p.coeffs]
    qc = [np.array(c[:, 0]) for c in s.q.coeffs]
    X = np.zeros((B, s.N))
    for t in range(T):
        zt = Z[:, t][:, None]
        if pc:
            acc = X @ pc[-1].T
            for cmat in reversed(pc[:-1]):
                acc = acc * zt + X @ cmat.T
        else:
            acc = np.zeros_like(X)
        if qc:
            qacc = np.broadcast_to(qc[-1], (B, s.N)).copy()
            for cvec in reversed(qc[:-1]):
                qacc = qacc * zt + cvec
        else:
            qacc = np.zeros_like(X)
        X = acc + qacc
    return X


# ---------------------------------------------------------------------------------
# linear simulation


def linear_run(s: LinearSystem, z: BoundedSequence, tol: float = 1e-9) -> Trajectory:
    """Evaluate ``x_t = sum_i A^i c z_{t-i}`` at every window slot.

    Nilpotent systems use the exact finite sum (index terms, zero tail); otherwise the
    sum is truncated at the smallest J with
    ``M * sigma_max(c) * sigma**(J+1) / (1 - sigma) < tol``.
    """
    if z.dim != s.input_dim:
        raise ValueError(f"input dim {z.dim} does not match c with {s.input_dim} columns")
    if s.nilpotent:
        J = s.nilpotency_index - 1
        tail = 0.0
    else:
        if tol is None or tol <= 0.0:
            raise ValueError("tol must be > 0 for non-nilpotent systems")
        sig_c = spectral_norm(s.c)
        bound = z.bound * sig_c
        if bound == 0.0 or s.sigma == 0.0:
            J, tail = 0, 0.0
        else:
            J = 0
            while bound * s.sigma ** (J + 1) / (1.0 - s.sigma) >= tol:
                J += 1
            tail = bound * s.sigma ** (J + 1) / (1.0 - s.sigma)
    # A^i c, i = 0..J
    mats = [np.array(s.c)]
    for _ in range(J):
        mats.append(s.A @ mats[-1])
    T = z.length
    states = np.empty((T, s.N))
    for t in range(T):
        k0 = T - 1 - t
        x = np.zeros(s.N)
        for i, m in enumerate(mats):
            x += m @ z.entry(k0 + i)
        states[t] = x
    outputs = np.array([scalar_poly_eval(s.h, x) for x in states])
    return Trajectory(
        states=states, outputs=outputs, washout_len=0, truncation_tail_bound=tail
    )


def linear_functional(s: LinearSystem, z: BoundedSequence, tol: float = 1e-9) -> float:
    """h(state at t = 0)."""
    traj = linear_run(s, z, tol=tol)
    return float(traj.outputs[-1])


def sas_state(s: SASSystem, z: BoundedSequence, tol: float = 1e-9) -> np.ndarray:
    """Series state at t = 0 (the readout-free value of the filter)."""
    _check_sas_input(z)
    J, _ = _series_terms(s, tol)
    return _series_state(s, z, 0, J)


def linear_state(s: LinearSystem, z: BoundedSequence, tol: float = 1e-9) -> np.ndarray:
    """State sum_i A^i c z_{-i} at t = 0, exact for nilpotent systems."""
    if z.dim != s.input_dim:
        raise ValueError(f"input dim {z.dim} does not match c with {s.input_dim} columns")
    if s.nilpotent:
        J = s.nilpotency_index - 1
    else:
        if tol <= 0.0:
            raise ValueError("tol must be > 0 for non-nilpotent systems")
        bound = z.bound * spectral_norm(s.c)
        J = 0
        if bound > 0.0 and s.sigma > 0.0:
            while bound * s.sigma ** (J + 1) / (1.0 - s.sigma) >= tol:
                J += 1
    x = np.zeros(s.N)
    m = np.array(s.c)
    for i in range(J + 1):
        if i > 0:
            m = s.A @ m
        x += m @ z.entry(i)
    return x


def evaluate_filter(f, z: BoundedSequence, tol: float = 1e-9) -> float:
    """Evaluate any filter-like object at time 0 on the history ``z``.

    Dispatches on the two concrete system types; everything else (composed runners,
    target filters, trained models) is expected to provide ``evaluate(z, tol)``.
    """
    if isinstance(f, SASSystem):
        return sas_functional(f, z, tol=tol)
    if isinstance(f, LinearSystem):
        return linear_functional(f, z, tol=tol)
    ev = getattr(f, "evaluate", None)
    if ev is None:
        raise TypeError(f"cannot evaluate object of type {type(f).__name__} as a filter")
    return float(ev(z, tol))


# ---------------------------------------------------------------------------------
# certified constants


def fmp_lipschitz_constant(s: SASSystem, rho: float) -> float:
    """Fading-memory modulus: |H(z) - H(s)| <= C * ||z - s||_w for w_t = K1**(rho t).

    C = ||W|| * (L_q + M_q * L_p / (1 - K1**rho)) / (1 - K1**(1-rho)).

    The two terms track the two ways the series x = sum_j (prod_{k<j} p) q can move:
    the q-argument changing (Lipschitz L_q per step, geometric weight K1**j against
    the w_t = K1**(rho t) discount), and each p-factor changing (Lipschitz L_p,
    telescoped over the product, against the certified magnitude M_q of the q term
    it multiplies).  Every factor is a certified upper bound, so the guarantee is
    sound; a varying p forces a nonzero C even when q is constant.  With K1 = 0 the
    filter depends on z_0 only and C degenerates to ||W|| * L_q.
    """
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    normW = float(np.linalg.norm(s.W))
    L_q = s.q_cert.M_pprime  # sqrt(N) * certified sup ||q'(z)||_2
    lam = s.K1
    if lam == 0.0:
        return normW * L_q
    L_p = s.p_cert.M_pprime
    M_q = s.q_cert.M_p_upper
    return (
        normW
        * (L_q + M_q * L_p / (1.0 - lam**rho))
        / (1.0 - lam ** (1.0 - rho))
    )


def fmp_weighting(s: SASSystem, rho: float):
    """The weighting sequence w_t = K1**(rho t) paired with the modulus above."""
    from .sequences import WeightingSequence

    lam = s.K1 if s.K1 > 0.0 else 0.5  # any w with w_0 = 1 works in the degenerate case
    return WeightingSequence.exponential_power(lam, rho)


def esp_margin(system) -> float:
    """1 - (certified contraction factor); positive except for nilpotent systems."""
    if isinstance(system, SASSystem):
        return 1.0 - system.K1
    if isinstance(system, LinearSystem):
        margin = 1.0 - system.sigma
        if system.nilpotent:
            return max(margin, 0.0)
        return margin
    raise TypeError(f"unsupported system type {type(system).__name__}")


def default_washout(s: SASSystem, tol: float) -> int:
    """Smallest T with (1 - eps)**T * 2 * state_bound < tol."""
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    sb = state_bound(s)
    if 2.0 * sb < tol:
        return 0
    T = max(0, int(math.ceil(math.log(tol / (2.0 * sb)) / math.log(1.0 - s.eps))))
    while 2.0 * sb * (1.0 - s.eps) ** T >= tol:
        T += 1
    while T > 0 and 2.0 * sb * (1.0 - s.eps) ** (T - 1) < tol:
        T -= 1
    return T


# ---------------------------------------------------------------------------------
# serialization


def system_to_json(system, parents=None) -> dict:
    if isinstance(system, SASSystem):
        doc = {
            "type": "sas",
            "p": poly_to_json(system.p),
            "q": poly_to_json(system.q),
            "W": [float(v) for v in system.W],
            "eps": float(system.eps),
        }
    elif isinstance(system, LinearSystem):
        doc = {
            "type": "linear",
            "A": [[float(v) for v in row] for row in system.A],
            "c": [[float(v) for v in row] for row in system.c],
            "h": scalar_poly_to_json(system.h),
            "eps": float(system.eps),
        }
    else:
        raise TypeError(f"unsupported system type {type(system).__name__}")
    if parents is not None:
        doc["parents"] = list(parents)
    return doc


def system_from_json(doc: dict, grid_step: float = 0.01):
    kind = doc.get("type")
    if kind == "sas":
        return SASSystem.create(
            p=poly_from_json(doc["p"]),
            q=poly_from_json(doc["q"]),
            W=np.asarray(doc["W"], dtype=float),
            eps=float(doc["eps"]),
            grid_step=grid_step,
        )
    if kind == "linear":
        return LinearSystem.create(
            A=np.asarray(doc["A"], dtype=float),
            c=np.asarray(doc["c"], dtype=float),
            h=scalar_poly_from_json(doc["h"]),
            eps=float(doc["eps"]),
        )
    raise ValueError(f"unknown system type {kind!r}")


def trajectory_to_csv(traj: Trajectory) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    N = traj.states.shape[1]
    writer.writerow(["t"] + [f"x_{i + 1}" for i in range(N)] + ["y"])
    for t, x, y in zip(traj.times, traj.states, traj.outputs):
        writer.writerow([int(t)] + [repr(float(v)) for v in x] + [repr(float(y))])
    return out.getvalue()
