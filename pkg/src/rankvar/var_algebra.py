"""VAR(p) models and the linear algebra behind the lag-window statistics.

A model is parametrized by theta = (vec A_1', ..., vec A_p1')' with
column-major vec.  Null models of order p0 < p1 carry trailing zero blocks.
The operator matrices M, P, Q and T = M'P'Q' translate the d^2 p1 central
sequence into the span of the first n - 1 lagged cross-covariances; they are
built from the Green matrices of the autoregressive operator A(L) and of its
right inverse D(L), following the triangular recursions those operators
satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import InputError, NumericalError

__all__ = [
    "VarModel",
    "OperatorMatrices",
    "vec",
    "unvec",
    "simulate_var",
    "residuals",
    "fit_constrained_ls",
    "green_matrices",
    "build_operator_matrices",
]


def vec(m: np.ndarray) -> np.ndarray:
    """Column-major vectorization (stacks columns)."""
    return np.asarray(m, dtype=float).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`vec` for a d x d matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != d * d:
        raise InputError(f"cannot unvec length {v.size} into {d}x{d}")
    return v.reshape(d, d, order="F")


@dataclass(frozen=True)
class VarModel:
    """A VAR model in null form.

    Parameters
    ----------
    d : int
        Dimension of the observed series.
    p0 : int
        Null order: the number of leading coefficient blocks that may be
        nonzero.
    p1 : int
        Alternative order, p1 >= p0.  Blocks p0+1..p1 of theta must be zero.
    theta : (p1 * d**2,) array
        Stacked (vec A_1, ..., vec A_p1), column-major.
    """

    d: int
    p0: int
    p1: int
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise InputError(f"need d >= 1, got {self.d}")
        if not 0 <= self.p0 <= self.p1:
            raise InputError(f"need 0 <= p0 <= p1, got p0={self.p0}, p1={self.p1}")
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if theta.size != self.p1 * self.d ** 2:
            raise InputError(
                f"theta has {theta.size} entries, expected p1*d^2 = {self.p1 * self.d ** 2}"
            )
        if not np.all(np.isfinite(theta)):
            raise InputError("theta contains non-finite entries")
        tail = theta[self.p0 * self.d ** 2:]
        if tail.size and np.any(tail != 0.0):
            raise InputError("null form requires zero blocks beyond p0")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_matrices(cls, matrices, p1: int | None = None) -> "VarModel":
        """Build a model from a sequence of d x d coefficient matrices.

        The sequence length sets p0; trailing zero blocks pad the parameter
        out to p1 when a larger alternative order is requested.
        """
        mats = [np.asarray(a, dtype=float) for a in matrices]
        if not mats:
            raise InputError("need at least one coefficient matrix")
        d = mats[0].shape[0]
        for a in mats:
            if a.shape != (d, d):
                raise InputError(f"coefficient blocks must all be {d}x{d}")
        p0 = len(mats)
        if p1 is None:
            p1 = p0
        theta = np.concatenate(
            [vec(a) for a in mats] + [np.zeros((p1 - p0) * d * d)]
        )
        return cls(d=d, p0=p0, p1=p1, theta=theta)

    def coefficient(self, i: int) -> np.ndarray:
        """The d x d matrix A_i, 1-based."""
        if not 1 <= i <= self.p1:
            raise InputError(f"lag {i} outside 1..{self.p1}")
        d2 = self.d ** 2
        return unvec(self.theta[(i - 1) * d2: i * d2], self.d)

    @property
    def a_list(self) -> list[np.ndarray]:
        """Coefficient matrices A_1..A_p0 (the possibly nonzero blocks)."""
        return [self.coefficient(i) for i in range(1, self.p0 + 1)]

    def spectral_radius(self) -> float:
        """Spectral radius of the companion matrix of A_1..A_p0."""
        if self.p0 == 0:
            return 0.0
        d, p = self.d, self.p0
        comp = np.zeros((d * p, d * p))
        for i, a in enumerate(self.a_list):
            comp[:d, i * d:(i + 1) * d] = a
        if p > 1:
            comp[d:, :-d] = np.eye(d * (p - 1))
        return float(np.max(np.abs(np.linalg.eigvals(comp))))

    def is_stationary(self, tol: float = 1e-10) -> bool:
        return self.spectral_radius() < 1.0 - tol


def _require_stationary(model: VarModel) -> None:
    if not model.is_stationary():
        raise NumericalError(
            f"model is not stationary (companion spectral radius "
            f"{model.spectral_radius():.6f})"
        )


def simulate_var(
    model: VarModel,
    n: int,
    innovations: np.ndarray,
    burn_in: int = 200,
) -> np.ndarray:
    """Generate n observations of X_t = sum_i A_i X_{t-i} + eps_t.

    The recursion starts from zero initial values and runs for burn_in + n
    steps; the first burn_in rows are discarded, so ``innovations`` must
    supply burn_in + n rows.  Pass ``burn_in=0`` to keep the transient
    (useful for exact inverse-filtering checks).
    """
    if n < 1 or burn_in < 0:
        raise InputError(f"need n >= 1 and burn_in >= 0, got {n}, {burn_in}")
    eps = np.asarray(innovations, dtype=float)
    total = n + burn_in
    if eps.ndim != 2 or eps.shape != (total, model.d):
        raise InputError(
            f"innovations must be ({total}, {model.d}), got {eps.shape}"
        )
    _require_stationary(model)
    a_t = [a.T for a in model.a_list]
    x = eps.copy()
    for t in range(total):
        for i, at in enumerate(a_t, start=1):
            if t - i >= 0:
                x[t] += x[t - i] @ at
    return x[burn_in:]


def residuals(x: np.ndarray, model: VarModel) -> np.ndarray:
    """Residuals Z_t = X_t - sum_{i=1}^{p0} A_i X_{t-i}, zero initial values.

    Output has the same n rows as the input; the first p0 rows use only the
    available lags.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.d:
        raise InputError(f"series must be (n, {model.d}), got {x.shape}")
    z = x.copy()
    for i, a in enumerate(model.a_list, start=1):
        if i < x.shape[0]:
            z[i:] -= x[:-i] @ a.T
    return z


def fit_constrained_ls(
    x: np.ndarray,
    p0: int,
    p1: int | None = None,
    discretize: bool = True,
) -> VarModel:
    """Constrained least-squares fit of a VAR(p0) inside a VAR(p1) frame.

    The series is demeaned and X_t regressed on (X_{t-1}, ..., X_{t-p0})
    without intercept; the estimate is returned in null form with trailing
    zero blocks up to p1.  For p0 = 0 there is nothing to fit and the zero
    model is returned.

    The root-n-consistent estimate is optionally rounded to a lattice of
    pitch n^{-1/2}/100, fine enough to be numerically inert while making the
    estimator take finitely many values on bounded sets.

    Raises
    ------
    NumericalError
        If the regressor matrix is rank deficient.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InputError(f"series must be 2-d, got shape {x.shape}")
    n, d = x.shape
    if p0 < 0:
        raise InputError(f"need p0 >= 0, got {p0}")
    if p1 is None:
        p1 = p0
    if p1 < max(p0, 1):
        raise InputError(f"need p1 >= max(p0, 1), got p0={p0}, p1={p1}")
    if n <= d * p0 + 10:
        raise InputError(f"need n > d*p0 + 10 = {d * p0 + 10}, got n={n}")
    if not np.all(np.isfinite(x)):
        raise InputError("series contains non-finite entries")
    if p0 == 0:
        return VarModel(d=d, p0=0, p1=p1, theta=np.zeros(p1 * d * d))

    xc = x - x.mean(axis=0)
    # Design row t is (X_{t-1}', ..., X_{t-p0}') for t = p0..n-1.
    design = np.hstack([xc[p0 - i: n - i] for i in range(1, p0 + 1)])
    target = xc[p0:]
    b, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < d * p0:
        raise NumericalError(
            f"regressor matrix is rank deficient ({rank} < {d * p0})"
        )
    theta = np.concatenate(
        [vec(b[(i - 1) * d: i * d].T) for i in range(1, p0 + 1)]
        + [np.zeros((p1 - p0) * d * d)]
    )
    if discretize:
        pitch = n ** -0.5 / 100.0
        theta = np.round(theta / pitch) * pitch
    return VarModel(d=d, p0=p0, p1=p1, theta=theta)


def green_matrices(model: VarModel, horizon: int) -> np.ndarray:
    """Green matrices G_0..G_horizon of the operator A(L).

    G_0 = I and G_u = sum_{i=1}^{p0} A_i G_{u-i} for u >= 1 (G_u = 0 for
    u < 0), so that A(L) applied to the sequence returns zero at all lags
    u >= 1.  Stationarity makes the sequence geometrically decaying.

    Returns a (horizon + 1, d, d) array.
    """
    if horizon < 0:
        raise InputError(f"need horizon >= 0, got {horizon}")
    _require_stationary(model)
    d = model.d
    a_list = model.a_list
    g = np.zeros((horizon + 1, d, d))
    g[0] = np.eye(d)
    for u in range(1, horizon + 1):
        for i, a in enumerate(a_list, start=1):
            if u - i >= 0:
                g[u] += a @ g[u - i]
    return g


@dataclass(frozen=True)
class OperatorMatrices:
    """The matrices mapping lagged cross-covariances to the central sequence.

    Attributes
    ----------
    M : (d^2 p1, d^2 p1) array
        Block lower-triangular Kronecker expansion of the Green matrices,
        block (r, c) = kron(G_{r-c}', I_d) for r >= c; full rank.
    P : (d^2 p1, d^2 p1) array
        Inverse-Casorati block; the identity for the default fundamental
        system.
    Q : (d^2 (n-1), d^2 p1) array
        Identity block of size d^2 (p1 - p0) on top, the Kronecker-expanded
        fundamental solutions below; rows vanish beyond ``effective_lags``.
    T : (d^2 p1, d^2 (n-1)) array
        M' P' Q'.
    greens : (p1 + 1, d, d) array
        Green matrices of A(L) used to build M.
    effective_lags : int
        Largest lag i with a nonzero block row Q_i; statistics may ignore
        all later lags.
    """

    M: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    T: np.ndarray = field(repr=False)
    greens: np.ndarray = field(repr=False)
    effective_lags: int = 0

    def t_block(self, i: int) -> np.ndarray:
        """T_i, the d^2 p1 x d^2 block of T at lag i (1-based)."""
        d2 = self.greens.shape[1] ** 2
        return self.T[:, (i - 1) * d2: i * d2]

    def q_block(self, i: int) -> np.ndarray:
        """Q_i, the d^2 x d^2 p1 block row of Q at lag i (1-based)."""
        d2 = self.greens.shape[1] ** 2
        return self.Q[(i - 1) * d2: i * d2]


def _d_coefficients(greens: np.ndarray, p0: int) -> list[np.ndarray]:
    """Coefficients D_1..D_p0 of the right inverse D(L) of A(L)'.

    Solved by forward substitution in the triangular system
    D_r' = -G_r - sum_{c=1}^{r-1} G_{r-c} D_c'.
    """
    d_t: list[np.ndarray] = []
    for r in range(1, p0 + 1):
        acc = -greens[r].copy()
        for c in range(1, r):
            acc -= greens[r - c] @ d_t[c - 1]
        d_t.append(acc)
    return [m.T for m in d_t]


def _fundamental_rows(
    model: VarModel,
    n: int,
    d_coeffs: list[np.ndarray],
    fundamental: str,
) -> tuple[list[np.ndarray], int]:
    """Rows [psi_t^{(1)} ... psi_t^{(p0)}] of the fundamental system.

    Rows are indexed t = p1 - p0 + 1, ..., and extended forward by
    psi_t = -sum_i D_i psi_{t-i}.  The initial window is either the
    identity basis (Casorati matrix = I) or the Green matrices of D(L).
    Extension stops once p0 consecutive rows fall below 1e-12 in max norm
    (all later rows are then negligible) or at t = n - 1.
    """
    d, p0, p1 = model.d, model.p0, model.p1
    rows: list[np.ndarray] = []
    if fundamental == "identity":
        for a in range(1, p0 + 1):
            row = np.zeros((d, d * p0))
            row[:, (a - 1) * d: a * d] = np.eye(d)
            rows.append(row)
    elif fundamental == "green":
        # H_0 = I, H_u = -sum_i D_i H_{u-i}: Green matrices of D(L).
        h = [np.eye(d)]
        for u in range(1, p0):
            acc = np.zeros((d, d))
            for i, di in enumerate(d_coeffs, start=1):
                if u - i >= 0:
                    acc -= di @ h[u - i]
            h.append(acc)
        for a in range(1, p0 + 1):
            row = np.zeros((d, d * p0))
            for j in range(1, a + 1):
                row[:, (j - 1) * d: j * d] = h[a - j]
            rows.append(row)
    else:
        raise InputError(f"unknown fundamental system {fundamental!r}")

    # Forward extension to t = n - 1 with early truncation.
    t_max = n - 1 - (p1 - p0)
    quiet = 0
    while len(rows) < t_max:
        row = np.zeros((d, d * p0))
        for i, di in enumerate(d_coeffs, start=1):
            row -= di @ rows[-i]
        if np.max(np.abs(row)) < 1e-12:
            quiet += 1
            if quiet >= p0:
                break
        else:
            quiet = 0
        rows.append(row)
    # Drop the trailing all-quiet rows; they are zero for all purposes.
    while len(rows) > p0 and np.max(np.abs(rows[-1])) < 1e-12:
        rows.pop()
    effective = (p1 - p0) + len(rows)
    return rows, effective


def build_operator_matrices(
    model: VarModel,
    n: int,
    fundamental: str = "identity",
) -> OperatorMatrices:
    """Assemble M, P, Q and T = M'P'Q' for a stationary null model.

    M is the Kronecker-expanded block triangular matrix of the Green
    matrices of A(L).  Q stacks an identity block of size d^2 (p1 - p0)
    over the Kronecker-expanded fundamental solutions of the D(L)
    recursion; P undoes the Casorati matrix of the chosen fundamental
    system at horizon p1.  The product T is invariant to that choice; the
    default identity window makes P = I.

    Parameters
    ----------
    model : VarModel
        Stationary null model (blocks beyond p0 zero).
    n : int
        Sample size; must exceed p1 + 1.
    fundamental : {"identity", "green"}
        Initial window of the fundamental system.  "green" exists to
        exercise the invariance of T and has no practical advantage.
    """
    d, p0, p1 = model.d, model.p0, model.p1
    if p1 < 1:
        raise InputError("need p1 >= 1 to build operator matrices")
    if n <= p1 + 1:
        raise InputError(f"need n > p1 + 1 = {p1 + 1}, got n={n}")
    _require_stationary(model)
    d2 = d * d
    greens = green_matrices(model, p1)

    m = np.zeros((d2 * p1, d2 * p1))
    eye_d = np.eye(d)
    for r in range(1, p1 + 1):
        for c in range(1, r + 1):
            m[(r - 1) * d2: r * d2, (c - 1) * d2: c * d2] = np.kron(
                greens[r - c].T, eye_d
            )

    q = np.zeros((d2 * (n - 1), d2 * p1))
    head = d2 * (p1 - p0)
    q[:head, :head] = np.eye(head)
    p_mat = np.eye(d2 * p1)

    if p0 > 0:
        d_coeffs = _d_coefficients(greens, p0)
        rows, effective = _fundamental_rows(model, n, d_coeffs, fundamental)
        for k, row in enumerate(rows):
            t = p1 - p0 + 1 + k  # lag index of this block row
            q[(t - 1) * d2: t * d2, head:] = np.kron(row, eye_d)
        if fundamental != "identity":
            # Casorati matrix at horizon p1: rows t = p1-p0+1 .. p1.
            casorati = np.vstack([np.kron(rows[a], eye_d) for a in range(p0)])
            p_mat[head:, head:] = np.linalg.inv(casorati)
    else:
        if fundamental not in ("identity", "green"):
            raise InputError(f"unknown fundamental system {fundamental!r}")
        effective = p1

    t_mat = m.T @ p_mat.T @ q.T
    return OperatorMatrices(
        M=m, P=p_mat, Q=q, T=t_mat, greens=greens, effective_lags=effective
    )
