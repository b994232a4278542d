"""Time-domain teleportation chain: EPR stream, dual homodyne bins, feedforward.

Circuit per gate step k (all covariances in vacuum units):

* EPR(k) supplies an ancilla pair (v, w) with nullifiers x_v + x_w, p_v - p_w;
* a 50:50 beamsplitter mixes the propagating mode u (port 1) with v (port 2)
  into A = (u + v)/sqrt2 and B = (v - u)/sqrt2;
* A and B are homodyned at theta_a and theta_b, w becomes the new
  propagating mode.

EPR(0) supplies (reference, input). The reference bin mixes the reference with
an unused EPR half and reports (m_A - m_B)/sqrt2; the output bin mixes the
propagating mode (port 2) with an unused half and reports (m_A + m_B)/sqrt2.

Two routes compute the same statistics. :func:`run_analytic` tracks every
quadrature as a linear combination of independent unit-variance noise sources
(Heisenberg picture), so the joint moments are exact. :func:`run_sampled`
conditions a small batched Gaussian state on each homodyne draw in time order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import gaussian as g
from .gates import REFERENCE_SIGN, AnglePair, GateError, sequence_map, v_map

FEEDFORWARD_MODES = ("in_circuit", "postprocess", "none")
CHUNK_SHOTS = 4096
SQRT2 = np.sqrt(2.0)


class ChainError(ValueError):
    pass


def r_from_db(db: float) -> float:
    """Squeezing parameter whose squeezed variance is ``db`` relative to vacuum.

    Negative dB means squeezing, e.g. -4 dB gives e^{-2r} = 10^{-0.4}.
    """
    return -0.5 * np.log(10.0 ** (db / 10.0))


def db_from_ratio(ratio: float) -> float:
    return float(10.0 * np.log10(ratio))


@dataclass(frozen=True)
class PhaseNoise:
    """Finite-resolution phase driver plus Gaussian jitter (degrees)."""

    bits: int = 7
    jitter_sigma: float = 0.5

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ChainError(f"phase_noise.bits must be an integer >= 1, got {self.bits!r}")
        if self.jitter_sigma < 0:
            raise ChainError("phase_noise.jitter_sigma must be non-negative")

    @property
    def step(self) -> float:
        return 2 * np.pi / 2**self.bits

    def quantize(self, theta):
        return np.round(np.asarray(theta) / self.step) * self.step


@dataclass(frozen=True)
class ChainConfig:
    n_steps: int = 1
    r_x: float = float(r_from_db(-4.0))
    r_p: float = float(r_from_db(-4.0))
    eta_resource: float = 1.0
    eta_detect: float = 1.0
    phase_noise: PhaseNoise | None = None
    delta_t: float = 40.0

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ChainError(f"n_steps must be an integer >= 0, got {self.n_steps!r}")
        for name in ("eta_resource", "eta_detect"):
            eta = getattr(self, name)
            if not 0.0 <= eta <= 1.0:
                raise ChainError(f"{name} must lie in [0, 1], got {eta!r}")
        if self.r_x < 0 or self.r_p < 0:
            raise ChainError("squeezing parameters must be non-negative")

    @classmethod
    def from_db(cls, squeezing_db: float = -4.0, **kw) -> "ChainConfig":
        r = float(r_from_db(squeezing_db))
        return cls(r_x=r, r_p=r, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChainConfig":
        d = dict(d)
        pn = d.get("phase_noise")
        if isinstance(pn, dict):
            d["phase_noise"] = PhaseNoise(**pn)
        return cls(**d)


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReferenceBin:
    theta: float


@dataclass(frozen=True)
class GateBin:
    angles: AnglePair


@dataclass(frozen=True)
class OutputBin:
    theta: float


@dataclass(frozen=True)
class MeasurementSchedule:
    """Reference bin, gate bins, output bin, in time order."""

    bins: tuple

    def __post_init__(self):
        bins = tuple(self.bins)
        object.__setattr__(self, "bins", bins)
        if len(bins) < 2:
            raise ChainError("a schedule needs a reference bin and an output bin")
        if not isinstance(bins[0], ReferenceBin):
            raise ChainError("first bin must be the reference bin")
        if not isinstance(bins[-1], OutputBin):
            raise ChainError("last bin must be the output bin")
        for i, b in enumerate(bins[1:-1], start=1):
            if not isinstance(b, GateBin):
                raise ChainError(f"bin {i} must be a gate bin, got {type(b).__name__}")

    @classmethod
    def build(
        cls, gates: Sequence[AnglePair], theta_ref: float = 0.0, theta_out: float = 0.0
    ) -> "MeasurementSchedule":
        return cls((ReferenceBin(theta_ref), *[GateBin(a) for a in gates], OutputBin(theta_out)))

    @property
    def gates(self) -> list[AnglePair]:
        return [b.angles for b in self.bins[1:-1]]

    @property
    def n_steps(self) -> int:
        return len(self.bins) - 2

    @property
    def theta_ref(self) -> float:
        return self.bins[0].theta

    @property
    def theta_out(self) -> float:
        return self.bins[-1].theta

    def with_bases(self, theta_ref: float, theta_out: float) -> "MeasurementSchedule":
        return MeasurementSchedule.build(self.gates, theta_ref, theta_out)

    def to_rows(self) -> list[dict]:
        """Plain rows (degrees) for CSV/JSON export."""
        rows = [{"bin": 0, "role": "reference", "theta_a": np.rad2deg(self.theta_ref), "theta_b": None}]
        for k, ap in enumerate(self.gates, start=1):
            a, b = ap.degrees()
            rows.append({"bin": k, "role": "gate", "theta_a": a, "theta_b": b})
        rows.append({"bin": self.n_steps + 1, "role": "output",
                     "theta_a": np.rad2deg(self.theta_out), "theta_b": None})
        return [{k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()}
                for r in rows]

    @classmethod
    def from_rows(cls, rows: Sequence[dict]) -> "MeasurementSchedule":
        bins = []
        for r in rows:
            role = r["role"]
            if role == "reference":
                bins.append(ReferenceBin(np.deg2rad(float(r["theta_a"]))))
            elif role == "output":
                bins.append(OutputBin(np.deg2rad(float(r["theta_a"]))))
            elif role == "gate":
                bins.append(GateBin(AnglePair.from_degrees(float(r["theta_a"]), float(r["theta_b"]))))
            else:
                raise ChainError(f"unknown bin role {role!r}")
        return cls(tuple(bins))


def check_schedule(cfg: ChainConfig, schedule: MeasurementSchedule) -> None:
    if schedule.n_steps != cfg.n_steps:
        raise ChainError(
            f"schedule has {schedule.n_steps} gate bins but config has n_steps={cfg.n_steps}"
        )


@dataclass(frozen=True)
class ChainElement:
    kind: str  # "epr", "beamsplitter", "homodyne"
    step: int
    detail: str


@dataclass(frozen=True)
class ChainLayout:
    """Lazily enumerated circuit description of a chain."""

    n_steps: int

    @property
    def n_epr_pairs(self) -> int:
        return self.n_steps + 1

    @property
    def n_beamsplitters(self) -> int:
        return self.n_steps

    def elements(self) -> Iterator[ChainElement]:
        yield ChainElement("epr", 0, "reference + input")
        for k in range(1, self.n_steps + 1):
            yield ChainElement("epr", k, "ancilla pair (v, w)")
            yield ChainElement("beamsplitter", k, "propagating mode (port 1) x ancilla v (port 2)")
            yield ChainElement("homodyne", k, "port A at theta_a, port B at theta_b; w propagates")

    def __iter__(self):
        return self.elements()


def build_chain(cfg: ChainConfig) -> ChainLayout:
    return ChainLayout(cfg.n_steps)


def effective_map(schedule: MeasurementSchedule, relative_to: str = "input") -> np.ndarray:
    """Ideal output map of the gate bins, vs the input or vs the reference mode."""
    s = sequence_map(schedule.gates)
    if relative_to == "input":
        return s
    if relative_to == "reference":
        return s @ REFERENCE_SIGN
    raise ChainError(f"relative_to must be 'input' or 'reference', got {relative_to!r}")


# ---------------------------------------------------------------------------
# feedforward
# ---------------------------------------------------------------------------


def _outcome_matrix(ap: AnglePair) -> np.ndarray:
    ca, sa = np.cos(ap.theta_a), np.sin(ap.theta_a)
    cb, sb = np.cos(ap.theta_b), np.sin(ap.theta_b)
    return np.array([[-ca, sa], [-cb, sb]])


@dataclass(frozen=True)
class FeedforwardGains:
    """``step[k]`` displaces mode w_k by step[k] @ (m_A, m_B) right after bin k;
    ``final[k]`` is the equivalent correction applied to the output mode."""

    step: tuple
    final: tuple

    def output_correction(self, outcomes: np.ndarray, theta_out: float, eta_detect: float = 1.0):
        """Correction to a measured x_out(theta_out) given outcomes (..., n, 2)."""
        if not self.final:
            return np.zeros(np.shape(outcomes)[:-2])
        f = np.stack(self.final)  # (n, 2, 2)
        disp = np.einsum("kij,...kj->...i", f, outcomes)
        h = np.array([np.cos(theta_out), np.sin(theta_out)])
        return np.sqrt(eta_detect) * disp @ h


def feedforward_gains(
    schedule: MeasurementSchedule | Sequence[AnglePair], eta_detect: float = 1.0
) -> FeedforwardGains:
    """Displacement gains that cancel the outcome-dependent part of each step.

    Raw output of a step is w = M^-1 N u + sqrt2 M^-1 m - ..., with M the matrix
    of measured basis vectors; the gain -sqrt2 M^-1 removes the m term. Outcomes
    recorded after detection loss are rescaled by 1/sqrt(eta_detect).
    """
    gates = schedule.gates if isinstance(schedule, MeasurementSchedule) else list(schedule)
    if eta_detect <= 0:
        raise ChainError("feedforward needs eta_detect > 0")
    steps = []
    for ap in gates:
        if abs(np.sin(ap.theta_a - ap.theta_b)) < 1e-12:
            raise GateError("degenerate angle pair")
        steps.append(-SQRT2 * np.linalg.inv(_outcome_matrix(ap)) / np.sqrt(eta_detect))
    finals = []
    tail = np.eye(2)
    for k in range(len(gates) - 1, -1, -1):
        finals.append(tail @ steps[k])
        tail = tail @ v_map(gates[k])
    return FeedforwardGains(tuple(steps), tuple(reversed(finals)))


# ---------------------------------------------------------------------------
# analytic route: Heisenberg propagation over noise sources
# ---------------------------------------------------------------------------

# source kinds
SQUEEZED, ANTI, VACUUM = 0, 1, 2


class _Sources:
    """Registry of independent unit-variance noise sources."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.count = 0
        self.kind = np.zeros(capacity, dtype=int)
        self.group = np.zeros(capacity, dtype=int)

    def new(self, kind: int, group: int, scale: float = 1.0) -> np.ndarray:
        if self.count >= self.capacity:
            raise ChainError("source registry overflow")
        v = np.zeros(self.capacity)
        v[self.count] = scale
        self.kind[self.count] = kind
        self.group[self.count] = group
        self.count += 1
        return v

    def epr(self, cfg: ChainConfig, group: int) -> tuple[np.ndarray, np.ndarray]:
        """Two modes (2, capacity) of a lossy EPR pair."""
        xs = self.new(SQUEEZED, group, np.exp(-cfg.r_x))
        pa = self.new(ANTI, group, np.exp(cfg.r_x))
        xa = self.new(ANTI, group, np.exp(cfg.r_p))
        ps = self.new(SQUEEZED, group, np.exp(-cfg.r_p))
        m1 = np.stack([xs + xa, pa + ps]) / SQRT2
        m2 = np.stack([xs - xa, pa - ps]) / SQRT2
        return self.loss(m1, cfg.eta_resource, group), self.loss(m2, cfg.eta_resource, group)

    def loss(self, mode: np.ndarray, eta: float, group: int) -> np.ndarray:
        if eta >= 1.0:
            return mode
        k = np.sqrt(1 - eta)
        return np.sqrt(eta) * mode + np.stack([self.new(VACUUM, group, k), self.new(VACUUM, group, k)])


@dataclass(frozen=True)
class JointMoments:
    """Exact moments of the measured (x_ref, p_ref, x_out, p_out), vacuum units.

    ``coeffs`` holds the source coefficients of those four quadratures and
    ``outcomes`` those of the gate-bin outcomes (n_steps, 2, n_sources).
    """

    mean: np.ndarray
    cov: np.ndarray
    coeffs: np.ndarray = field(repr=False)
    outcomes: np.ndarray = field(repr=False)
    source_kind: np.ndarray = field(repr=False)
    source_group: np.ndarray = field(repr=False)

    def quadrature(self, w_ref, w_out) -> np.ndarray:
        """Coefficient row of w_ref . (x_ref, p_ref) + w_out . (x_out, p_out)."""
        return np.concatenate([np.asarray(w_ref, float), np.asarray(w_out, float)])

    def covariance(self, a, b) -> float:
        return float(np.asarray(a) @ self.cov @ np.asarray(b))

    def variance(self, a) -> float:
        return self.covariance(a, a)


def _propagate(cfg: ChainConfig, schedule: MeasurementSchedule, feedforward: str):
    if feedforward not in FEEDFORWARD_MODES:
        raise ChainError(f"feedforward must be one of {FEEDFORWARD_MODES}, got {feedforward!r}")
    n = schedule.n_steps
    src = _Sources(12 * n + 16)
    ref, prop = src.epr(cfg, 0)
    eta_d = cfg.eta_detect
    gains = feedforward_gains(schedule, eta_d) if feedforward != "none" else None
    outcome_rows = []
    for k, ap in enumerate(schedule.gates, start=1):
        v, w = src.epr(cfg, k)
        a = src.loss((prop + v) / SQRT2, eta_d, k)
        b = src.loss((v - prop) / SQRT2, eta_d, k)
        m = np.stack([
            np.cos(ap.theta_a) * a[0] + np.sin(ap.theta_a) * a[1],
            np.cos(ap.theta_b) * b[0] + np.sin(ap.theta_b) * b[1],
        ])
        outcome_rows.append(m)
        prop = w
        if feedforward == "in_circuit":
            prop = prop + gains.step[k - 1] @ m
    if feedforward == "postprocess":
        for k, m in enumerate(outcome_rows):
            prop = prop + gains.final[k] @ m
    ref = src.loss(ref, eta_d, 0)
    out = src.loss(prop, eta_d, n + 1)
    coeffs = np.concatenate([ref, out])[:, : src.count]
    outcomes = (np.stack(outcome_rows)[:, :, : src.count] if outcome_rows
                else np.zeros((0, 2, src.count)))
    return coeffs, outcomes, src.kind[: src.count], src.group[: src.count]


def run_analytic(
    cfg: ChainConfig, schedule: MeasurementSchedule, feedforward: str = "postprocess"
) -> JointMoments:
    """Exact joint moments of the reference and output quadratures.

    Detection loss on the reference and output bins is folded into the
    quadratures, so the result is what the logical measurements report.
    Phase noise is not included here; see :func:`run_sampled`.
    """
    check_schedule(cfg, schedule)
    coeffs, outcomes, kind, group = _propagate(cfg, schedule, feedforward)
    cov = coeffs @ coeffs.T
    return JointMoments(np.zeros(4), (cov + cov.T) / 2, coeffs, outcomes, kind, group)


def outcome_output_covariance(
    cfg: ChainConfig,
    schedule: MeasurementSchedule,
    feedforward: str = "postprocess",
    limit: bool = True,
) -> np.ndarray:
    """cov(gate outcomes, corrected output quadratures) given the input state.

    Returns an array (n_steps, 2, 2): [k, i, j] = cov(m_k^i, out_j). Sources of
    the input pair are conditioned out. With ``limit`` the finite-squeezing
    sources are dropped as well (infinite-squeezing limit), where a correct
    feedforward makes this exactly zero.
    """
    check_schedule(cfg, schedule)
    coeffs, outcomes, kind, group = _propagate(cfg, schedule, feedforward)
    keep = group != 0
    if limit:
        keep &= kind != SQUEEZED
    out = coeffs[2:, keep]
    m = outcomes[:, :, keep]
    return np.einsum("kis,js->kij", m, out)


# ---------------------------------------------------------------------------
# sampled route
# ---------------------------------------------------------------------------


@dataclass
class ShotRecords:
    """Columnar per-shot records.

    ``ref_pair``/``out_pair`` are the raw (m_A, m_B) of the reference/output
    bins, ``gate_outcomes`` the raw gate-bin outcomes (shots, n_steps, 2),
    ``ref`` and ``out`` the logical measurements with feedforward applied.
    """

    schedule: MeasurementSchedule
    config: ChainConfig
    seed: int
    feedforward: str
    ref_pair: np.ndarray
    out_pair: np.ndarray
    gate_outcomes: np.ndarray
    ref: np.ndarray
    out: np.ndarray

    def __len__(self) -> int:
        return len(self.ref)

    @property
    def out_raw(self) -> np.ndarray:
        return (self.out_pair[:, 0] + self.out_pair[:, 1]) / SQRT2

    def shot(self, i: int) -> dict:
        return {
            "ref": float(self.ref[i]),
            "out": float(self.out[i]),
            "gates": self.gate_outcomes[i].tolist(),
            "seed": self.seed,
        }

    def header(self) -> dict:
        return {
            "seed": self.seed,
            "feedforward": self.feedforward,
            "config": self.config.to_dict(),
            "schedule": self.schedule.to_rows(),
        }

    def to_csv(self, path) -> None:
        n = self.schedule.n_steps
        cols = ["ref_a", "ref_b"]
        for k in range(1, n + 1):
            cols += [f"g{k}_a", f"g{k}_b"]
        cols += ["out_a", "out_b", "x_ref", "x_out"]
        data = np.column_stack([
            self.ref_pair, self.gate_outcomes.reshape(len(self), 2 * n), self.out_pair,
            self.ref, self.out,
        ])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "ShotRecords":
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ChainError(f"{path}: missing record header line")
            meta = json.loads(first[2:])
            data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        schedule = MeasurementSchedule.from_rows(meta["schedule"])
        n = schedule.n_steps
        return cls(
            schedule=schedule,
            config=ChainConfig.from_dict(meta["config"]),
            seed=int(meta["seed"]),
            feedforward=meta["feedforward"],
            ref_pair=data[:, 0:2],
            out_pair=data[:, 2 + 2 * n: 4 + 2 * n],
            gate_outcomes=data[:, 2: 2 + 2 * n].reshape(-1, n, 2),
            ref=data[:, 4 + 2 * n],
            out=data[:, 5 + 2 * n],
        )


def _unused_half(cfg: ChainConfig) -> tuple[np.ndarray, np.ndarray]:
    st = g.loss(g.epr_pair(cfg.r_x, cfg.r_p), cfg.eta_resource).marginal([1])
    return st.mean, st.cov


def _actual_angles(theta: float, n: int, cfg: ChainConfig, rng) -> tuple[float, np.ndarray | float]:
    """(programmed angle, per-shot realised angle)."""
    pn = cfg.phase_noise
    if pn is None:
        return theta, theta
    prog = float(pn.quantize(theta))
    if pn.jitter_sigma == 0:
        return prog, prog
    return prog, prog + np.deg2rad(pn.jitter_sigma) * rng.standard_normal(n)


_BS = g.beamsplitter_5050().s


def _measure_pair(mean, cov, n_modes, mode_a, mode_b, ta, tb, rng, shots):
    """Homodyne modes a then b (indices before removal); returns outcomes and state."""
    za = rng.standard_normal(shots)
    ma, mean, cov = g.homodyne_arrays(mean, cov, mode_a, ta, za, n_modes)
    n_modes -= 1
    if mode_b > mode_a:
        mode_b -= 1
    zb = rng.standard_normal(shots)
    mb, mean, cov = g.homodyne_arrays(mean, cov, mode_b, tb, zb, n_modes)
    return ma, mb, mean, cov


def _sample_chunk(cfg, schedule, shots, rng, feedforward, gains):
    eta_d = cfg.eta_detect
    epr = g.loss(g.epr_pair(cfg.r_x, cfg.r_p), cfg.eta_resource)
    dm, dc = _unused_half(cfg)
    mean = np.broadcast_to(epr.mean, (shots, 4)).copy()
    cov = epr.cov.copy()

    # reference bin: modes [ref, in, dummy]; ref in port 1
    mean, cov = g.tensor_arrays(mean, cov, dm, dc)
    mean, cov = g.apply_arrays(mean, cov, _BS, None, [0, 2], 3)
    mean, cov = g.loss_arrays(mean, cov, eta_d, [0, 2], 3)
    _, ta = _actual_angles(schedule.theta_ref, shots, cfg, rng)
    _, tb = _actual_angles(schedule.theta_ref, shots, cfg, rng)
    ra, rb, mean, cov = _measure_pair(mean, cov, 3, 0, 2, ta, tb, rng, shots)

    n = schedule.n_steps
    gate_out = np.zeros((shots, n, 2))
    for k, ap in enumerate(schedule.gates):
        # modes [prop, v, w]
        mean, cov = g.tensor_arrays(mean, cov, epr.mean, epr.cov)
        mean, cov = g.apply_arrays(mean, cov, _BS, None, [0, 1], 3)
        mean, cov = g.loss_arrays(mean, cov, eta_d, [0, 1], 3)
        _, ta = _actual_angles(ap.theta_a, shots, cfg, rng)
        _, tb = _actual_angles(ap.theta_b, shots, cfg, rng)
        ma, mb, mean, cov = _measure_pair(mean, cov, 3, 0, 1, ta, tb, rng, shots)
        gate_out[:, k, 0], gate_out[:, k, 1] = ma, mb
        if feedforward == "in_circuit":
            mean = mean + gate_out[:, k, :] @ gains.step[k].T

    # output bin: modes [prop, dummy]; prop in port 2
    mean, cov = g.tensor_arrays(mean, cov, dm, dc)
    mean, cov = g.apply_arrays(mean, cov, _BS, None, [1, 0], 2)
    mean, cov = g.loss_arrays(mean, cov, eta_d, [0, 1], 2)
    _, ta = _actual_angles(schedule.theta_out, shots, cfg, rng)
    _, tb = _actual_angles(schedule.theta_out, shots, cfg, rng)
    oa, ob, mean, cov = _measure_pair(mean, cov, 2, 1, 0, ta, tb, rng, shots)

    ref = (ra - rb) / SQRT2
    out = (oa + ob) / SQRT2
    if feedforward == "postprocess" and n:
        out = out + gains.output_correction(gate_out, _programmed(schedule.theta_out, cfg), eta_d)
    return np.column_stack([ra, rb]), np.column_stack([oa, ob]), gate_out, ref, out


def _programmed(theta: float, cfg: ChainConfig) -> float:
    return theta if cfg.phase_noise is None else float(cfg.phase_noise.quantize(theta))


def _programmed_schedule(cfg: ChainConfig, schedule: MeasurementSchedule) -> MeasurementSchedule:
    gates = [AnglePair(_programmed(a.theta_a, cfg), _programmed(a.theta_b, cfg)) for a in schedule.gates]
    return MeasurementSchedule.build(gates, schedule.theta_ref, schedule.theta_out)


def derive_seed(seed: int | None) -> int:
    """Return ``seed`` or, when None, fresh entropy that can be recorded for replay."""
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    return int(seed)


def run_sampled(
    cfg: ChainConfig,
    schedule: MeasurementSchedule,
    n_shots: int,
    seed: int | None = None,
    feedforward: str = "postprocess",
    threads: int = 1,
) -> ShotRecords:
    """Monte Carlo shots by sequential homodyne conditioning.

    Shots are split into fixed-size chunks, each with its own child seed, so
    the records do not depend on ``threads``.
    """
    check_schedule(cfg, schedule)
    if int(n_shots) != n_shots or n_shots < 1:
        raise ChainError(f"n_shots must be a positive integer, got {n_shots!r}")
    if feedforward not in FEEDFORWARD_MODES:
        raise ChainError(f"feedforward must be one of {FEEDFORWARD_MODES}, got {feedforward!r}")
    if threads < 1:
        raise ChainError("threads must be >= 1")
    seed = derive_seed(seed)
    gains = feedforward_gains(_programmed_schedule(cfg, schedule), cfg.eta_detect)
    sizes = [CHUNK_SHOTS] * (n_shots // CHUNK_SHOTS)
    if n_shots % CHUNK_SHOTS:
        sizes.append(n_shots % CHUNK_SHOTS)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(i):
        rng = np.random.default_rng(children[i])
        return _sample_chunk(cfg, schedule, sizes[i], rng, feedforward, gains)

    if threads == 1:
        parts = [work(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, range(len(sizes))))
    ref_pair, out_pair, gate_out, ref, out = (np.concatenate(p) for p in zip(*parts))
    return ShotRecords(schedule, cfg, seed, feedforward, ref_pair, out_pair, gate_out, ref, out)


def identity_schedule(n_steps: int, theta_ref: float = 0.0, theta_out: float = 0.0) -> MeasurementSchedule:
    return MeasurementSchedule.build([AnglePair(0.0, np.pi / 2)] * n_steps, theta_ref, theta_out)
