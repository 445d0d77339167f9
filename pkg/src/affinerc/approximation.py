"""Training pipeline, candidate families, sup-error reports, separation witnesses.

The approximation workflow is: sample a candidate reservoir from a declared family,
harvest its terminal states on a batch of training inputs, fit the readout by
(regularized) linear regression, then measure the empirical sup error against the
target on held-out inputs.  The empirical sup over a finite input set is a *lower*
bound of the true sup norm and is always reported together with the input count.

Families
--------
SAS_eps  random dense matrix-polynomial coefficients, rescaled so that the
         coefficient-norm sums hit 0.95 * (1 - eps) — comfortably certifiable.
NS_eps   nilpotent state-affine: p(z) = z * J with strictly upper-triangular J.
L_eps    dense linear reservoir with sigma_max(A) = 0.95 * (1 - eps).
DL_eps   diagonal A with entries uniform in (-(1-eps), 1-eps).
NL       the order-N delay-line shift matrix (nilpotent) with random c.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .polynomials import (
    MatrixPolynomial,
    ScalarPolynomial,
    scalar_poly_eval,
    spectral_norm,
)
from .sequences import BoundedSequence
from .systems import (
    LinearSystem,
    SASSystem,
    evaluate_filter,
    linear_state,
    sas_state,
    sas_terminal_states_batch,
    state_bound,
)

__all__ = [
    "TargetFilter",
    "FamilySpec",
    "TrainedModel",
    "SupError",
    "WitnessResult",
    "IllConditionedError",
    "sample_candidate",
    "harvest_states",
    "train_readout",
    "sup_error",
    "separation_witness",
    "approximate",
    "ApproximationResult",
    "CurveRow",
    "generate_uniform_inputs",
    "monomial_exponents",
    "monomial_features",
    "target_linear_iir",
    "target_finite_volterra",
    "target_tanh_of_linear",
    "target_bounded_arma",
]


# ---------------------------------------------------------------------------------
# targets


@dataclass(frozen=True)
class TargetFilter:
    """Opaque causal, time-invariant functional with a declared input bound."""

    name: str
    bound: float
    fn: object  # BoundedSequence -> float

    def evaluate(self, z: BoundedSequence, tol: float = 1e-9) -> float:
        return float(self.fn(z))


def target_linear_iir(A, c, h: ScalarPolynomial, eps: float = 0.05, bound: float = 1.0,
                      tol: float = 1e-12) -> TargetFilter:
    """The functional of a linear reservoir with polynomial readout."""
    system = LinearSystem.create(A=A, c=c, h=h, eps=eps)

    def fn(z: BoundedSequence) -> float:
        return scalar_poly_eval(system.h, linear_state(system, z, tol=tol))

    return TargetFilter(name="linear_iir", bound=bound, fn=fn)


def target_finite_volterra(memory: int, k0: float = 0.0, k1=None, k2=None, k3=None,
                           bound: float = 1.0) -> TargetFilter:
    """Finite Volterra functional of order <= 3 on scalar inputs.

    H(z) = k0 + sum_i k1[i] z_{-i} + sum_{ij} k2[i,j] z_{-i} z_{-j}
         + sum_{ijl} k3[i,j,l] z_{-i} z_{-j} z_{-l},   all indices < memory.
    """
    k1 = None if k1 is None else np.asarray(k1, dtype=float)
    k2 = None if k2 is None else np.asarray(k2, dtype=float)
    k3 = None if k3 is None else np.asarray(k3, dtype=float)

    def fn(z: BoundedSequence) -> float:
        u = z.values_newest_first(memory)[:, 0]
        out = k0
        if k1 is not None:
            out += float(k1 @ u)
        if k2 is not None:
            out += float(u @ k2 @ u)
        if k3 is not None:
            out += float(np.einsum("ijl,i,j,l->", k3, u, u, u))
        return out

    return TargetFilter(name="finite_volterra", bound=bound, fn=fn)


def target_tanh_of_linear(weights, bound: float = 1.0) -> TargetFilter:
    """H(z) = tanh(sum_i w_i z_{-i}) — a saturating fading-memory nonlinearity."""
    w = np.asarray(weights, dtype=float)

    def fn(z: BoundedSequence) -> float:
        u = z.values_newest_first(w.size)[:, 0]
        return math.tanh(float(w @ u))

    return TargetFilter(name="tanh_of_linear", bound=bound, fn=fn)


def target_bounded_arma(ar, ma, clip: float, bound: float = 1.0) -> TargetFilter:
    """ARMA recursion driven by the input, hard-clipped to +-clip each step."""
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)

    def fn(z: BoundedSequence) -> float:
        u = z.window[:, 0]
        y = np.zeros(u.size)
        for t in range(u.size):
            acc = u[t]
            for i, phi in enumerate(ar, start=1):
                if t - i >= 0:
                    acc += phi * y[t - i]
            for j, theta in enumerate(ma, start=1):
                if t - j >= 0:
                    acc += theta * u[t - j]
            y[t] = min(max(acc, -clip), clip)
        return float(y[-1])

    return TargetFilter(name="bounded_arma", bound=bound, fn=fn)


# ---------------------------------------------------------------------------------
# candidate families


FAMILIES = ("SAS_eps", "NS_eps", "L_eps", "DL_eps", "NL")


@dataclass(frozen=True)
class FamilySpec:
    family: str
    N: int
    deg_p: int = 1
    deg_q: int = 1
    eps: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if self.deg_p < 0 or self.deg_q < 0:
            raise ValueError("degrees must be >= 0")


def _scaled_poly(rng, rows: int, cols: int, deg: int, target: float) -> MatrixPolynomial:
    """Random coefficients rescaled so the coefficient-norm sum equals ``target``."""
    coeffs = [rng.standard_normal((rows, cols)) for _ in range(deg + 1)]
    total = sum(spectral_norm(c) for c in coeffs)
    if total > 0.0:
        coeffs = [c * (target / total) for c in coeffs]
    return MatrixPolynomial.from_coeffs(coeffs, rows=rows, cols=cols)


def _shift_matrix(n: int) -> np.ndarray:
    """Delay-line shift: ones on the subdiagonal, so states stack recent inputs."""
    A = np.zeros((n, n))
    for i in range(1, n):
        A[i, i - 1] = 1.0
    return A


def sample_candidate(spec: FamilySpec):
    """Draw one admissible system from the family, deterministically in the seed."""
    rng = np.random.default_rng(spec.seed)
    target = 0.95 * (1.0 - spec.eps)
    N = spec.N
    if spec.family == "SAS_eps":
        p = _scaled_poly(rng, N, N, spec.deg_p, target)
        q = _scaled_poly(rng, N, 1, spec.deg_q, target)
        W = rng.standard_normal(N)
        return SASSystem.create(p=p, q=q, W=W, eps=spec.eps, grid_step=0.25)
    if spec.family == "NS_eps":
        J = np.triu(rng.standard_normal((N, N)), k=1)
        nrm = spectral_norm(J)
        if nrm > 0.0:
            J = J * (target / nrm)
        p = MatrixPolynomial.from_coeffs([np.zeros((N, N)), J], rows=N, cols=N)
        q = _scaled_poly(rng, N, 1, spec.deg_q, target)
        W = rng.standard_normal(N)
        return SASSystem.create(p=p, q=q, W=W, eps=spec.eps, grid_step=0.25)
    if spec.family == "L_eps":
        A = rng.standard_normal((N, N))
        sig = spectral_norm(A)
        if sig > 0.0:
            A = A * (target / sig)
        c = rng.standard_normal((N, 1))
        h = ScalarPolynomial.linear_form(rng.standard_normal(N))
        return LinearSystem.create(A=A, c=c, h=h, eps=spec.eps)
    if spec.family == "DL_eps":
        A = np.diag(rng.uniform(-(1.0 - spec.eps), 1.0 - spec.eps, size=N))
        c = rng.standard_normal((N, 1))
        h = ScalarPolynomial.linear_form(rng.standard_normal(N))
        return LinearSystem.create(A=A, c=c, h=h, eps=spec.eps)
    # NL: exact delay line, nilpotent of index N
    A = _shift_matrix(N)
    c = rng.standard_normal((N, 1))
    h = ScalarPolynomial.linear_form(rng.standard_normal(N))
    return LinearSystem.create(A=A, c=c, h=h, eps=spec.eps)


# ---------------------------------------------------------------------------------
# feature harvesting and readout training


def monomial_exponents(arity: int, degree: int) -> list:
    """Exponent tuples of the monomials of degree 1..``degree`` in ``arity`` variables.

    The constant monomial is deliberately absent: a zero state must map to a zero
    feature row, so trained polynomial readouts carry no intercept.
    """
    out = []
    for d in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(arity), d):
            alpha = [0] * arity
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return out


def monomial_features(states: np.ndarray, degree: int) -> np.ndarray:
    """Map raw states (B, N) to monomial features of degree 1..``degree``."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    cols = []
    for alpha in monomial_exponents(states.shape[1], degree):
        col = np.ones(states.shape[0])
        for i, e in enumerate(alpha):
            if e:
                col = col * states[:, i] ** e
        cols.append(col)
    return np.stack(cols, axis=1)


def _terminal_state(system, z: BoundedSequence, tol: float) -> np.ndarray:
    if isinstance(system, SASSystem):
        return sas_state(system, z, tol=tol)
    if isinstance(system, LinearSystem):
        return linear_state(system, z, tol=tol)
    raise TypeError(f"unsupported system type {type(system).__name__}")


def harvest_states(system, inputs, tol: float = 1e-9, readout_degree: int | None = None):
    """Design matrix of terminal states, one row per input.

    SAS systems with equal-length input windows go through the batched recursion
    (valid once the window dominates the washout length); anything else falls back to
    the per-input certified evaluation.  With ``readout_degree`` set, rows are the
    monomial features of the terminal state up to that degree.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("need at least one input")
    for i, z in enumerate(inputs):
        try:
            if isinstance(system, SASSystem):
                if z.dim != 1:
                    raise ValueError("state-affine systems take scalar inputs")
                if np.max(np.abs(z.window)) > 1.0 + 1e-12:
                    raise ValueError("input entry outside [-1, 1]")
            elif isinstance(system, LinearSystem):
                if z.dim != system.input_dim:
                    raise ValueError("input dimension mismatch")
        except ValueError as exc:
            raise ValueError(f"input {i} is not admissible: {exc}") from exc

    if isinstance(system, SASSystem):
        T = inputs[0].length
        same = all(z.length == T for z in inputs)
        converged = state_bound(system) * system.K1 ** T < tol if same else False
        if same and converged:
            Z = np.stack([z.window[:, 0] for z in inputs])
            rows = sas_terminal_states_batch(system, Z)
        else:
            rows = np.stack([sas_state(system, z, tol=tol) for z in inputs])
    else:
        rows = np.stack([_terminal_state(system, z, tol) for z in inputs])

    if readout_degree is not None:
        rows = monomial_features(rows, readout_degree)
    return rows


class IllConditionedError(ValueError):
    """Unregularized regression rejected on an ill-conditioned design matrix."""


def train_readout(features, targets, lam_reg: float) -> np.ndarray:
    """Ridge weights (X^T X + lam I)^{-1} X^T y via a stable stacked least squares.

    ``lam_reg = 0`` is permitted only when the normal-equation condition number is
    below 1e12; otherwise an :class:`IllConditionedError` asks for regularization.
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(targets, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError("row count of features must match targets")
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    if lam_reg < 0.0:
        raise ValueError("lam_reg must be >= 0")
    if lam_reg == 0.0:
        svals = np.linalg.svd(X, compute_uv=False)
        smin = float(svals[-1])
        cond = math.inf if smin == 0.0 else (float(svals[0]) / smin) ** 2
        if cond >= 1e12:
            raise IllConditionedError(
                f"normal equations have condition estimate {cond:.3g} >= 1e12; "
                "pass lam_reg > 0"
            )
        w, *_ = np.linalg.lstsq(X, y, rcond=None)
        return w
    F = X.shape[1]
    Xa = np.vstack([X, math.sqrt(lam_reg) * np.eye(F)])
    ya = np.concatenate([y, np.zeros(F)])
    w, *_ = np.linalg.lstsq(Xa, ya, rcond=None)
    return w


@dataclass(frozen=True)
class TrainedModel:
    """Reservoir plus trained readout weights (over states or monomial features)."""

    system: object
    readout: np.ndarray
    readout_degree: int | None
    lam_reg: float
    train_error: float
    test_error: float
    tol: float = 1e-9

    def evaluate(self, z: BoundedSequence, tol: float | None = None) -> float:
        tol = self.tol if tol is None else tol
        x = _terminal_state(self.system, z, tol)
        if self.readout_degree is None:
            return float(self.readout @ x)
        feats = monomial_features(x[None, :], self.readout_degree)[0]
        return float(self.readout @ feats)


@dataclass(frozen=True)
class SupError:
    value: float
    n_inputs: int


def sup_error(model, target, test_inputs, tol: float = 1e-9) -> SupError:
    """Empirical sup |model - target| over the inputs; a lower bound of the true sup."""
    test_inputs = list(test_inputs)
    if not test_inputs:
        raise ValueError("need at least one test input")
    worst = 0.0
    for z in test_inputs:
        diff = abs(evaluate_filter(model, z, tol=tol) - evaluate_filter(target, z, tol=tol))
        worst = max(worst, diff)
    return SupError(value=worst, n_inputs=len(test_inputs))


# ---------------------------------------------------------------------------------
# separation witnesses


@dataclass(frozen=True)
class WitnessResult:
    system: LinearSystem
    method: str
    t0: int
    i0: int
    b: float | None
    value_z1: float
    value_z2: float

    @property
    def separation(self) -> float:
        return abs(self.value_z1 - self.value_z2)


def _first_difference(z1: BoundedSequence, z2: BoundedSequence):
    depth = max(z1.length, z2.length) + 1  # one slot past both windows decides the tails
    for t in range(depth):
        d = z1.entry(t) - z2.entry(t)
        nz = np.flatnonzero(d)
        if nz.size:
            return t, int(nz[0])
    return None


def separation_witness(
    z1: BoundedSequence,
    z2: BoundedSequence,
    method: str = "nilpotent_shift",
    eps: float = 0.05,
    grid_points: int = 4001,
    witness_tol: float = 1e-12,
) -> WitnessResult:
    """An explicit linear reservoir whose outputs provably differ on z1 and z2.

    ``nilpotent_shift`` builds the delay line of dimension t0+1 reading the first
    differing entry back out — the output difference is that entry difference,
    exactly.  ``diagonal_scan`` scans the one-dimensional diagonal family
    f(b) = sum_j b^j (z1 - z2)^{(i0)}_{-j} over a grid of b in (-1+eps, 1-eps) and
    returns the first b whose value clears ``witness_tol``.
    """
    if z1.dim != z2.dim:
        raise ValueError("sequences must share their dimension")
    hit = _first_difference(z1, z2)
    if hit is None:
        raise ValueError("sequences indistinguishable at this resolution")
    t0, i0 = hit

    if method == "nilpotent_shift":
        N = t0 + 1
        A = _shift_matrix(N)
        c = np.zeros((N, z1.dim))
        c[0, i0] = 1.0
        h = ScalarPolynomial.coordinate(N, N - 1)
        system = LinearSystem.create(A=A, c=c, h=h, eps=eps)
        # exact: the readout is z^{(i0)}_{-t0}
        v1 = float(z1.entry(t0)[i0])
        v2 = float(z2.entry(t0)[i0])
        return WitnessResult(
            system=system, method=method, t0=t0, i0=i0, b=None,
            value_z1=v1, value_z2=v2,
        )

    if method != "diagonal_scan":
        raise ValueError("method must be 'nilpotent_shift' or 'diagonal_scan'")

    depth = max(z1.length, z2.length)
    s = np.array([float(z1.entry(t)[i0] - z2.entry(t)[i0]) for t in range(depth)])
    s_ext = float(z1.extension_value()[i0] - z2.extension_value()[i0])

    def f(b: float) -> float:
        head = float(np.polyval(s[::-1], b))  # sum_j b^j s_j
        return head + s_ext * b**depth / (1.0 - b)

    for b in np.linspace(-1.0 + eps, 1.0 - eps, grid_points):
        val = f(float(b))
        if abs(val) > witness_tol:
            b = float(b)
            c = np.zeros((1, z1.dim))
            c[0, i0] = 1.0
            system = LinearSystem.create(
                A=np.array([[b]]), c=c, h=ScalarPolynomial.coordinate(1, 0),
                eps=min(eps, 0.5 * (1.0 - abs(b))),
            )
            # f(b) is the exact output difference of the diagonal system
            g1 = float(np.polyval(np.array([float(z1.entry(t)[i0]) for t in range(depth)])[::-1], b)
                       + float(z1.extension_value()[i0]) * b**depth / (1.0 - b))
            return WitnessResult(
                system=system, method=method, t0=t0, i0=i0, b=b,
                value_z1=g1, value_z2=g1 - val,
            )
    raise ValueError("sequences indistinguishable at this resolution")


# ---------------------------------------------------------------------------------
# the approximation driver


def generate_uniform_inputs(
    n: int, window: int, bound: float = 1.0, seed: int = 0, extension: str = "zero"
):
    """n scalar input histories with entries i.i.d. uniform in [-bound, bound]."""
    rng = np.random.default_rng((seed, 0x75))
    return [
        BoundedSequence(window=rng.uniform(-bound, bound, size=(window, 1)),
                        bound=bound, extension=extension)
        for _ in range(n)
    ]


@dataclass(frozen=True)
class CurveRow:
    family: str
    N: int
    restart: int
    train_err: float
    test_err: float
    seed: int


@dataclass(frozen=True)
class ApproximationResult:
    best: TrainedModel
    best_row: CurveRow
    rows: tuple

    def curve(self) -> list:
        """Per-(family, N) minimum test error, in schedule order."""
        seen: dict = {}
        order = []
        for r in self.rows:
            key = (r.family, r.N)
            if key not in seen:
                seen[key] = r.test_err
                order.append(key)
            else:
                seen[key] = min(seen[key], r.test_err)
        return [(fam, N, seen[(fam, N)]) for fam, N in order]

    def to_csv(self) -> str:
        lines = ["family,N,restart,train_err,test_err,seed"]
        for r in self.rows:
            lines.append(
                f"{r.family},{r.N},{r.restart},{r.train_err!r},{r.test_err!r},{r.seed}"
            )
        return "\n".join(lines) + "\n"


def _fit_candidate(system, target, train_inputs, train_targets, test_inputs,
                   test_targets, lam_reg, tol, readout_degree):
    X = harvest_states(system, train_inputs, tol=tol, readout_degree=readout_degree)
    w = train_readout(X, train_targets, lam_reg)
    train_err = float(np.max(np.abs(X @ w - train_targets)))
    Xt = harvest_states(system, test_inputs, tol=tol, readout_degree=readout_degree)
    test_err = float(np.max(np.abs(Xt @ w - test_targets)))
    return TrainedModel(
        system=system, readout=w, readout_degree=readout_degree, lam_reg=lam_reg,
        train_error=train_err, test_error=test_err, tol=tol,
    )


def approximate(
    target: TargetFilter,
    schedule,
    n_train: int = 512,
    n_test: int = 128,
    window: int = 256,
    restarts: int = 8,
    lam_reg: float = 1e-6,
    tol: float = 1e-9,
    seed: int = 0,
    readout_degree: int | None = None,
    input_generator=None,
    budget: int | None = None,
    planted=None,
) -> ApproximationResult:
    """Sample/train/evaluate across the schedule; return the best model and curve.

    ``planted`` systems are appended to the candidate pool (restart indices continue
    past ``restarts`` under family label "planted").  Deterministic given the seeds;
    ties in test error break toward the earlier candidate.  ``budget`` caps the total
    number of candidate evaluations.
    """
    schedule = list(schedule)
    if not schedule:
        raise ValueError("schedule must be non-empty")
    if input_generator is None:
        bound = min(1.0, target.bound)

        def input_generator(n, win, s):
            return generate_uniform_inputs(n, win, bound=bound, seed=s)

    train_inputs = input_generator(n_train, window, seed * 2 + 1)
    test_inputs = input_generator(n_test, window, seed * 2 + 2)
    train_targets = np.array([target.evaluate(z) for z in train_inputs])
    test_targets = np.array([target.evaluate(z) for z in test_inputs])

    rows: list = []
    best: TrainedModel | None = None
    best_row: CurveRow | None = None
    evaluations = 0

    def consider(model: TrainedModel, row: CurveRow):
        nonlocal best, best_row
        rows.append(row)
        if best is None or model.test_error < best.test_error:
            best, best_row = model, row

    for spec in schedule:
        for r in range(restarts):
            if budget is not None and evaluations >= budget:
                break
            cand_seed = spec.seed * 100003 + r
            system = sample_candidate(replace(spec, seed=cand_seed))
            model = _fit_candidate(
                system, target, train_inputs, train_targets, test_inputs,
                test_targets, lam_reg, tol, readout_degree,
            )
            evaluations += 1
            consider(model, CurveRow(
                family=spec.family, N=spec.N, restart=r,
                train_err=model.train_error, test_err=model.test_error,
                seed=cand_seed,
            ))
        if budget is not None and evaluations >= budget:
            break

    for i, system in enumerate(planted or []):
        if budget is not None and evaluations >= budget:
            break
        model = _fit_candidate(
            system, target, train_inputs, train_targets, test_inputs,
            test_targets, lam_reg, tol, readout_degree,
        )
        evaluations += 1
        consider(model, CurveRow(
            family="planted", N=system.N, restart=restarts + i,
            train_err=model.train_error, test_err=model.test_error, seed=-1,
        ))

    if best is None:
        raise ValueError("budget exhausted before any candidate was evaluated")
    return ApproximationResult(best=best, best_row=best_row, rows=tuple(rows))
