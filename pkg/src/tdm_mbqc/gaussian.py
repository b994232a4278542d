"""Gaussian-state engine in the covariance-matrix formalism.

Conventions used throughout the package:

* quadratures are ordered in blocks, ``(x_1, ..., x_n, p_1, ..., p_n)``;
* hbar = 1, and every mean/covariance is stored in *vacuum units*: means in
  units of sqrt(hbar/2), covariances in units of hbar/2, so the vacuum has an
  identity covariance matrix and ``[x, p] = 2i`` in these units.

The array-level helpers (``apply_arrays``, ``loss_arrays``, ``homodyne_arrays``
and ``tensor_arrays``) broadcast over a leading batch axis so that thousands of
shots can be conditioned at once. :class:`GaussianState` wraps them for the
single-state case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HBAR = 1.0
VACUUM_VARIANCE = HBAR / 2

SYMMETRY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-10
UNCERTAINTY_TOL = 1e-9


class GaussianError(ValueError):
    """Raised for ill-formed states, maps or mode selections."""


def symplectic_form(n: int) -> np.ndarray:
    """Return the 2n x 2n symplectic form for block (x..., p...) ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def is_symplectic(s: np.ndarray, tol: float = SYMPLECTIC_TOL) -> bool:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
        return False
    omega = symplectic_form(s.shape[0] // 2)
    scale = max(1.0, float(np.abs(s).max()) ** 2)
    return bool(np.abs(s.T @ omega @ s - omega).max() <= tol * scale)


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of ``cov`` in vacuum units, sorted ascending.

    The moduli of the eigenvalues of ``i * Omega @ cov`` come in equal pairs;
    one of each pair is returned.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[-1] // 2
    eig = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov))
    return np.sort(eig)[::2]


def _quadrature_index(modes: Sequence[int], n: int) -> np.ndarray:
    modes = list(modes)
    return np.array(modes + [n + m for m in modes], dtype=int)


def _check_modes(modes: Sequence[int], n: int) -> list[int]:
    modes = [int(m) for m in modes]
    if len(set(modes)) != len(modes):
        raise GaussianError(f"repeated mode index in {modes}")
    for m in modes:
        if not 0 <= m < n:
            raise GaussianError(f"mode {m} out of range for {n}-mode state")
    return modes


def embed(s: np.ndarray, c: np.ndarray | None, modes: Sequence[int], n: int):
    """Embed a map acting on ``modes`` into the full 2n-dimensional space."""
    idx = _quadrature_index(modes, n)
    full = np.eye(2 * n)
    full[np.ix_(idx, idx)] = s
    shift = np.zeros(2 * n)
    if c is not None:
        shift[idx] = c
    return full, shift


# ---------------------------------------------------------------------------
# array-level operations (broadcast over leading batch axes)
# ---------------------------------------------------------------------------


def apply_arrays(mean, cov, s, c, modes, n):
    full, shift = embed(s, c, modes, n)
    mean = mean @ full.T + shift
    cov = full @ cov @ full.T
    return mean, cov


def loss_arrays(mean, cov, eta, modes, n):
    if not 0.0 <= eta <= 1.0:
        raise GaussianError(f"transmissivity must lie in [0, 1], got {eta}")
    idx = _quadrature_index(modes, n)
    gain = np.ones(2 * n)
    gain[idx] = np.sqrt(eta)
    added = np.zeros(2 * n)
    added[idx] = 1.0 - eta
    mean = mean * gain
    cov = cov * np.outer(gain, gain) + np.diag(added)
    return mean, cov


def tensor_arrays(mean_a, cov_a, mean_b, cov_b):
    """Product state of (a, b), modes of ``b`` appended after those of ``a``."""
    na = mean_a.shape[-1] // 2
    nb = mean_b.shape[-1] // 2
    n = na + nb
    batch = np.broadcast_shapes(mean_a.shape[:-1], mean_b.shape[:-1])
    cbatch = np.broadcast_shapes(cov_a.shape[:-2], cov_b.shape[:-2])
    idx_a = _quadrature_index(range(na), n)
    idx_b = _quadrature_index(range(na, n), n)

    mean = np.zeros(batch + (2 * n,))
    mean[..., idx_a] = mean_a
    mean[..., idx_b] = mean_b
    cov = np.zeros(cbatch + (2 * n, 2 * n))
    cov[..., idx_a[:, None], idx_a[None, :]] = cov_a
    cov[..., idx_b[:, None], idx_b[None, :]] = cov_b
    return mean, cov


def delete_mode_arrays(mean, cov, mode, n):
    keep = [i for i in range(2 * n) if i not in (mode, n + mode)]
    return mean[..., keep], cov[..., keep, :][..., keep]


def homodyne_arrays(mean, cov, mode, theta, z, n):
    """Measure x(theta) on ``mode`` and condition the rest of the state.

    ``theta`` and ``z`` (standard-normal draws) may be scalars or arrays with
    the batch shape of ``mean``. Returns ``(outcome, mean, cov)`` with the
    measured mode removed. The covariance stays unbatched when ``theta`` is a
    scalar and ``cov`` is unbatched.
    """
    theta = np.asarray(theta, dtype=float)
    h = np.zeros(theta.shape + (2 * n,))
    h[..., mode] = np.cos(theta)
    h[..., n + mode] = np.sin(theta)

    cov_h = np.einsum("...ij,...j->...i", cov, h)
    var = np.einsum("...i,...i->...", h, cov_h)
    if np.any(var <= 0):
        raise GaussianError("measured quadrature has non-positive variance")
    mu = np.einsum("...i,...i->...", h, mean)
    outcome = mu + np.sqrt(var) * z

    gain = cov_h / var[..., None]
    mean = mean + gain * (outcome - mu)[..., None]
    cov = cov - cov_h[..., :, None] * gain[..., None, :]
    mean, cov = delete_mode_arrays(mean, cov, mode, n)
    return outcome, mean, cov


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an n-mode Gaussian state.

    Both arrays are stored read-only; every operation returns a new state.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean)
        cov = _frozen(self.cov)
        if mean.ndim != 1 or mean.shape[0] % 2 or mean.shape[0] == 0:
            raise GaussianError(f"mean must have shape (2n,), got {mean.shape}")
        if cov.shape != (mean.shape[0],) * 2:
            raise GaussianError(
                f"cov shape {cov.shape} does not match mean shape {mean.shape}"
            )
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL * scale:
            raise GaussianError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.cov)

    def is_physical(self, tol: float = UNCERTAINTY_TOL) -> bool:
        """Check the uncertainty relation (all symplectic eigenvalues >= 1)."""
        return bool(np.all(self.symplectic_eigenvalues() >= 1.0 - tol))

    def is_pure(self, tol: float = UNCERTAINTY_TOL) -> bool:
        return bool(np.all(np.abs(self.symplectic_eigenvalues() - 1.0) <= tol))

    def marginal(self, modes: Sequence[int]) -> "GaussianState":
        modes = _check_modes(modes, self.n_modes)
        idx = _quadrature_index(modes, self.n_modes)
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def tensor(self, other: "GaussianState") -> "GaussianState":
        mean, cov = tensor_arrays(self.mean, self.cov, other.mean, other.cov)
        return GaussianState(mean, cov)


@dataclass(frozen=True)
class SymplecticMap:
    """Gaussian unitary ``q -> s @ q + c`` (displacement in vacuum units)."""

    s: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self):
        s = _frozen(self.s)
        if not is_symplectic(s):
            raise GaussianError("matrix is not symplectic")
        c = np.zeros(s.shape[0]) if self.c is None else np.asarray(self.c, float)
        if c.shape != (s.shape[0],):
            raise GaussianError(f"displacement shape {c.shape} != ({s.shape[0]},)")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "c", _frozen(c))

    @property
    def n_modes(self) -> int:
        return self.s.shape[0] // 2

    def then(self, other: "SymplecticMap") -> "SymplecticMap":
        """Map applying ``self`` first, then ``other``."""
        return SymplecticMap(other.s @ self.s, other.s @ self.c + other.c)


@dataclass(frozen=True)
class QuadratureSelector:
    """Quadrature x(theta) = cos(theta) x + sin(theta) p of one mode."""

    mode: int
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "mode", int(self.mode))
        object.__setattr__(self, "theta", float(self.theta) % (2 * np.pi))

    def vector(self, n: int) -> np.ndarray:
        h = np.zeros(2 * n)
        h[self.mode] = np.cos(self.theta)
        h[n + self.mode] = np.sin(self.theta)
        return h


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def vacuum(n: int) -> GaussianState:
    if n < 1:
        raise GaussianError("need at least one mode")
    return GaussianState(np.zeros(2 * n), np.eye(2 * n))


def squeezed_vacuum(r: float, axis: str = "x") -> GaussianState:
    """Single-mode squeezed vacuum; the ``axis`` quadrature has variance e^{-2r}."""
    if r < 0:
        raise GaussianError("squeezing parameter must be non-negative")
    if axis not in ("x", "p"):
        raise GaussianError(f"axis must be 'x' or 'p', got {axis!r}")
    small, large = np.exp(-2 * r), np.exp(2 * r)
    diag = [small, large] if axis == "x" else [large, small]
    return GaussianState(np.zeros(2), np.diag(diag))


def beamsplitter_5050(symmetric: bool = False) -> SymplecticMap:
    """Balanced beamsplitter on two modes (a, b).

    The default is the measurement convention, ``A = (a + b)/sqrt2`` and
    ``B = (b - a)/sqrt2``, so ``a = (A - B)/sqrt2`` and ``b = (A + B)/sqrt2``.
    ``symmetric=True`` gives ``((a + b)/sqrt2, (a - b)/sqrt2)``, which is the
    convention used to build EPR pairs.
    """
    if symmetric:
        o = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    else:
        o = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2)
    zero = np.zeros((2, 2))
    return SymplecticMap(np.block([[o, zero], [zero, o]]))


def epr_pair(r_x: float, r_p: float | None = None) -> GaussianState:
    """Two-mode squeezed state from an x- and a p-squeezed vacuum.

    Nullifier variances: Var(x1 + x2) = 2 e^{-2 r_x} and
    Var(p1 - p2) = 2 e^{-2 r_p}, in vacuum units.
    """
    r_p = r_x if r_p is None else r_p
    pair = squeezed_vacuum(r_x, "x").tensor(squeezed_vacuum(r_p, "p"))
    return apply(pair, beamsplitter_5050(symmetric=True), [0, 1])


# ---------------------------------------------------------------------------
# channels and measurements
# ---------------------------------------------------------------------------


def apply(state: GaussianState, op: SymplecticMap, modes: Sequence[int]) -> GaussianState:
    """Apply ``op`` to the listed ``modes`` of ``state``."""
    modes = _check_modes(modes, state.n_modes)
    if op.n_modes != len(modes):
        raise GaussianError(
            f"{op.n_modes}-mode map cannot act on {len(modes)} mode(s)"
        )
    mean, cov = apply_arrays(state.mean, state.cov, op.s, op.c, modes, state.n_modes)
    return GaussianState(mean, (cov + cov.T) / 2)


def loss(state: GaussianState, eta: float, modes: Sequence[int] | None = None) -> GaussianState:
    """Pure-loss channel with transmissivity ``eta`` on ``modes`` (default all)."""
    modes = range(state.n_modes) if modes is None else modes
    modes = _check_modes(modes, state.n_modes)
    mean, cov = loss_arrays(state.mean, state.cov, eta, modes, state.n_modes)
    return GaussianState(mean, cov)


def homodyne_sample(
    state: GaussianState, sel: QuadratureSelector, rng: np.random.Generator
) -> tuple[float, GaussianState | None]:
    """Sample a homodyne outcome and return the conditioned remaining state.

    The measured mode is removed; ``None`` is returned when nothing remains.
    """
    _check_modes([sel.mode], state.n_modes)
    z = rng.standard_normal()
    outcome, mean, cov = homodyne_arrays(
        state.mean, state.cov, sel.mode, sel.theta, z, state.n_modes
    )
    if state.n_modes == 1:
        return float(outcome), None
    return float(outcome), GaussianState(mean, (cov + cov.T) / 2)


def homodyne_condition(
    state: GaussianState, sel: QuadratureSelector, outcome: float
) -> GaussianState | None:
    """Condition on a given outcome (deterministic counterpart of sampling)."""
    _check_modes([sel.mode], state.n_modes)
    h = sel.vector(state.n_modes)
    var = h @ state.cov @ h
    z = (outcome - h @ state.mean) / np.sqrt(var)
    _, mean, cov = homodyne_arrays(
        state.mean, state.cov, sel.mode, sel.theta, z, state.n_modes
    )
    if state.n_modes == 1:
        return None
    return GaussianState(mean, (cov + cov.T) / 2)


def quadrature_moments(
    state: GaussianState, sels: Sequence[QuadratureSelector]
) -> tuple[np.ndarray, np.ndarray]:
    """Exact mean vector and covariance matrix of the selected quadratures."""
    for sel in sels:
        _check_modes([sel.mode], state.n_modes)
    h = np.array([sel.vector(state.n_modes) for sel in sels])
    return h @ state.mean, h @ state.cov @ h.T


def commutator_magnitude(a: np.ndarray, b: np.ndarray) -> float:
    """|<[a.q, b.q]>| in units of hbar, for coefficient vectors over physical quadratures.

    ``a`` and ``b`` are in block ordering over the same modes; ``[x, p]`` gives 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] % 2:
        raise GaussianError("coefficient vectors must share an even length")
    return float(abs(a @ symplectic_form(a.shape[0] // 2) @ b)) * HBAR
