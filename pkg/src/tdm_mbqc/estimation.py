"""Statistics of reference/output correlations: S matrices, nullifiers, entanglement.

Quadratures of the output mode form subsystem A and those of the reference
mode subsystem B. Variances are in vacuum units throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy import stats

from . import gaussian as g
from .chain import ChainConfig, JointMoments, ShotRecords

SIGNIFICANCE_SE = 2.0


class EstimationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# S matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SEstimate:
    s_hat: np.ndarray
    stderr: np.ndarray
    n_events: int

    def within(self, target, n_se: float = 3.0) -> np.ndarray:
        """Elementwise |s_hat - target| < n_se * stderr (exact match allowed when stderr is 0)."""
        diff = np.abs(self.s_hat - np.asarray(target))
        return diff <= n_se * self.stderr + 1e-12


def epr_denominators(cfg: ChainConfig) -> tuple[float, float]:
    """(<x_in x_ref>, <p_in p_ref>) of the resource pair as seen by the reference bin.

    Includes resource loss on both halves and detection loss on the reference.
    """
    st = g.loss(g.epr_pair(cfg.r_x, cfg.r_p), cfg.eta_resource)
    scale = np.sqrt(cfg.eta_detect)
    return float(st.cov[0, 1] * scale), float(st.cov[2, 3] * scale)


def calibrate_denominators(identity_records: Mapping[tuple[int, int], ShotRecords]) -> tuple[float, float]:
    """Denominators estimated from a zero-step run, where the output is the input itself.

    Needs the diagonal (0, 0) and (1, 1) record sets of :func:`estimate_s`.
    """
    out = []
    for j in (0, 1):
        rec = identity_records[(j, j)]
        if rec.schedule.n_steps != 0:
            raise EstimationError("calibration needs records from a chain with no gate bins")
        out.append(float(np.mean(rec.out * rec.ref)))
    return out[0], out[1]


def estimate_s(
    records: Mapping[tuple[int, int], ShotRecords] | JointMoments,
    denominators: tuple[float, float],
    relative_to: str = "input",
) -> SEstimate:
    """S_ij = <xi_out^i xi_ref^j> / <xi_in^j xi_ref^j>.

    ``records`` maps (i, j) (0 = x, 1 = p) to shots measured with the output
    bin at that quadrature i and the reference bin at quadrature j, or is the
    exact :class:`JointMoments` of a chain. The default returns S relative to
    the input mode; ``relative_to="reference"`` multiplies by diag(-1, 1) as
    x_ref = -x_in.

    Args:
        records: per-(i, j) shot records or analytic joint moments.
        denominators: (<x_in x_ref>, <p_in p_ref>).
        relative_to: "input" or "reference".

    Returns:
        SEstimate with sample-mean ratios and their standard errors.
    """
    den = np.asarray(denominators, dtype=float)
    if den.shape != (2,) or np.any(np.abs(den) < 1e-15):
        raise EstimationError(f"denominators must be two nonzero numbers, got {denominators!r}")
    s = np.zeros((2, 2))
    se = np.zeros((2, 2))
    if isinstance(records, JointMoments):
        s = records.cov[2:, :2] / den[None, :]
        n_events = 0
    else:
        counts = []
        for i in (0, 1):
            for j in (0, 1):
                if (i, j) not in records:
                    raise EstimationError(f"missing records for S element ({i}, {j})")
                rec = records[(i, j)]
                _check_basis(rec.schedule.theta_out, i * np.pi / 2, "output")
                _check_basis(rec.schedule.theta_ref, j * np.pi / 2, "reference")
                prod = rec.out * rec.ref
                s[i, j] = prod.mean() / den[j]
                se[i, j] = prod.std(ddof=1) / np.sqrt(len(prod)) / abs(den[j])
                counts.append(len(prod))
        n_events = int(min(counts))
    if relative_to == "reference":
        s = s @ np.diag([-1.0, 1.0])
    elif relative_to != "input":
        raise EstimationError(f"relative_to must be 'input' or 'reference', got {relative_to!r}")
    return SEstimate(s, se, n_events)


def _check_basis(actual: float, expected: float, label: str) -> None:
    if abs(np.sin(actual - expected)) > 1e-9 or np.cos(actual - expected) < 0:
        raise EstimationError(
            f"{label} bin measured at {np.rad2deg(actual):.6g} deg, expected {np.rad2deg(expected):.6g} deg"
        )


# ---------------------------------------------------------------------------
# nullifiers
# ---------------------------------------------------------------------------


def _basis(vec) -> tuple[float, float]:
    """(theta, weight) with weight * x(theta) equal to vec . (x, p)."""
    cx, cp = float(vec[0]), float(vec[1])
    return float(np.arctan2(cp, cx)), float(np.hypot(cx, cp))


@dataclass(frozen=True)
class NullifierSpec:
    """delta = zeta_out . (x_out, p_out) + zeta_ref . (x_ref, p_ref) for each nullifier.

    ``delta1`` and ``delta2`` are (out vector, ref vector) pairs.
    """

    delta1: tuple
    delta2: tuple
    name: str = ""

    def __post_init__(self):
        for label in ("delta1", "delta2"):
            out, ref = (np.asarray(v, dtype=float) for v in getattr(self, label))
            if out.shape != (2,) or ref.shape != (2,):
                raise EstimationError(f"{label} coefficient vectors must have length 2")
            if not np.any(out) and not np.any(ref):
                raise EstimationError(f"{label} has no nonzero coefficients")
            object.__setattr__(self, label, (out, ref))

    def bases(self, which: int) -> tuple[float, float]:
        """(theta_ref, theta_out) needed to measure nullifier ``which`` (1 or 2)."""
        out, ref = self.delta1 if which == 1 else self.delta2
        return _basis(ref)[0], _basis(out)[0]

    def row(self, which: int) -> np.ndarray:
        """Coefficients over (x_ref, p_ref, x_out, p_out)."""
        out, ref = self.delta1 if which == 1 else self.delta2
        return np.concatenate([ref, out])


def _xp(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient vectors of x(theta) and p(theta) = cos p - sin x."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c, s]), np.array([-s, c])


def rotation_nullifiers(phi: float) -> NullifierSpec:
    xr, pr = _xp(-phi / 2)
    r2 = np.sqrt(2.0)
    return NullifierSpec((xr / r2, xr / r2), (pr / r2, -pr / r2), f"rotation({np.rad2deg(phi):g})")


def squeezing_nullifiers(phi: float) -> NullifierSpec:
    c, s = np.cos(phi), np.sin(phi)
    return NullifierSpec(
        (np.array([c, 0.0]), np.array([0.0, -s])),
        (np.array([0.0, s]), np.array([-c, 0.0])),
        f"squeezing({np.rad2deg(phi):g})",
    )


def shear_nullifiers(phi: float) -> NullifierSpec:
    _, pphi = _xp(phi)
    r2 = np.sqrt(2.0)
    x = np.array([1.0, 0.0])
    return NullifierSpec((x / r2, x / r2), (pphi / r2, -pphi / r2), f"shear({np.rad2deg(phi):g})")


def identity_nullifiers() -> NullifierSpec:
    return shear_nullifiers(0.0)


NULLIFIER_FAMILIES: dict[str, Callable[[float], NullifierSpec]] = {
    "rotation": rotation_nullifiers,
    "squeeze_rot": squeezing_nullifiers,
    "shear": shear_nullifiers,
}


@dataclass(frozen=True)
class NullifierVariances:
    var1: float
    var2: float
    err1: float
    err2: float

    @property
    def sum(self) -> float:
        return self.var1 + self.var2

    @property
    def err_sum(self) -> float:
        return float(np.hypot(self.err1, self.err2))


def _variance_with_error(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    d = x - x.mean()
    var = float(d @ d / (n - 1))
    m4 = float(np.mean(d**4))
    return var, float(np.sqrt(max(m4 - var**2, 0.0) / n))


def _nullifier_samples(rec: ShotRecords, out_vec, ref_vec) -> np.ndarray:
    th_ref, w_ref = _basis(ref_vec)
    th_out, w_out = _basis(out_vec)
    for label, th, w, actual in (
        ("reference", th_ref, w_ref, rec.schedule.theta_ref),
        ("output", th_out, w_out, rec.schedule.theta_out),
    ):
        if w > 0 and abs(np.sin(actual - th)) > 1e-9:
            raise EstimationError(
                f"{label} bin measured at {np.rad2deg(actual):.6g} deg but the nullifier "
                f"needs {np.rad2deg(th):.6g} deg"
            )
    # x(theta + pi) = -x(theta)
    sr = np.sign(np.cos(rec.schedule.theta_ref - th_ref)) if w_ref else 0.0
    so = np.sign(np.cos(rec.schedule.theta_out - th_out)) if w_out else 0.0
    return w_out * so * rec.out + w_ref * sr * rec.ref


def nullifier_variance(
    records: tuple[ShotRecords, ShotRecords] | JointMoments, spec: NullifierSpec
) -> NullifierVariances:
    """Variances of the two nullifiers.

    Args:
        records: shot records measured in the bases of delta1 and delta2
            (see :meth:`NullifierSpec.bases`), or exact joint moments.
        spec: the nullifier pair.

    Returns:
        NullifierVariances; errors are zero for analytic moments.
    """
    if isinstance(records, JointMoments):
        return NullifierVariances(records.variance(spec.row(1)), records.variance(spec.row(2)), 0.0, 0.0)
    rec1, rec2 = records
    v1, e1 = _variance_with_error(_nullifier_samples(rec1, *spec.delta1))
    v2, e2 = _variance_with_error(_nullifier_samples(rec2, *spec.delta2))
    return NullifierVariances(v1, v2, e1, e2)


def inseparability_threshold(spec: NullifierSpec) -> float:
    """|<[zeta_A, xi_A]>| + |<[zeta_B, xi_B]>| expressed in vacuum units."""
    a = g.commutator_magnitude(spec.delta1[0], spec.delta2[0])
    b = g.commutator_magnitude(spec.delta1[1], spec.delta2[1])
    return (a + b) / g.VACUUM_VARIANCE


@dataclass(frozen=True)
class InseparabilityReport:
    var1: float
    var2: float
    err1: float
    err2: float
    sum: float
    err_sum: float
    threshold: float

    @property
    def margin(self) -> float:
        """threshold - sum; positive means the criterion is satisfied."""
        return self.threshold - self.sum

    @property
    def passed(self) -> bool:
        # sufficient criterion only: False means inconclusive, never separable
        return self.sum < self.threshold

    @property
    def near_threshold(self) -> bool:
        return abs(self.margin) < SIGNIFICANCE_SE * self.err_sum

    @property
    def passed_upper_bound(self) -> bool:
        """Pass even at sum + 2 SE."""
        return self.sum + SIGNIFICANCE_SE * self.err_sum < self.threshold


def verify(records, spec: NullifierSpec) -> InseparabilityReport:
    nv = nullifier_variance(records, spec)
    return InseparabilityReport(
        nv.var1, nv.var2, nv.err1, nv.err2, nv.sum, nv.err_sum, inseparability_threshold(spec)
    )


# ---------------------------------------------------------------------------
# resampling and predictions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    estimate: float
    stderr: float
    low: float
    high: float


def bootstrap(
    data,
    statistic: Callable[[np.ndarray], float],
    n_resamples: int = 1000,
    seed: int | None = 0,
    confidence: float = 0.68,
) -> BootstrapResult:
    """Percentile bootstrap of a scalar statistic of 1-D ``data``.

    Args:
        data: samples, shape (n,).
        statistic: function of a 1-D array returning a float.
        n_resamples: number of resamples (>= 2).
        seed: RNG seed; equal seeds give identical intervals.
        confidence: interval level.

    Returns:
        BootstrapResult with the bootstrap standard error and percentile interval.
    """
    if int(n_resamples) != n_resamples or n_resamples < 2:
        raise EstimationError(f"n_resamples must be an integer >= 2, got {n_resamples!r}")
    x = np.asarray(data, dtype=float)
    est = float(statistic(x))
    if np.ptp(x) == 0:
        return BootstrapResult(est, 0.0, est, est)
    res = stats.bootstrap(
        (x,),
        lambda s, axis=-1: np.apply_along_axis(statistic, axis, s),
        n_resamples=int(n_resamples),
        method="percentile",
        confidence_level=confidence,
        random_state=np.random.default_rng(seed),
        vectorized=True,
    )
    ci = res.confidence_interval
    return BootstrapResult(est, float(res.standard_error), float(ci.low), float(ci.high))


def predict_multistep_variance(n: int, r_x: float, r_p: float | None = None) -> tuple[float, float]:
    """Nullifier variances (x, p) of an n-step identity chain, lossless.

    Each teleportation adds one resource nullifier's worth of noise to the
    initial pair, giving (n + 1) e^{-2r} in vacuum units.
    """
    if n < 0:
        raise EstimationError("n must be non-negative")
    r_p = r_x if r_p is None else r_p
    return (n + 1) * float(np.exp(-2 * r_x)), (n + 1) * float(np.exp(-2 * r_p))
