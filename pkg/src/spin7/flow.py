"""Time integration of the harmonic 4-form flow and its diagnostics.

The evolution law is d(phi)/dt = (Div T) diamond phi, realized pointwise as
a rotation update phi <- rotate(exp(dt * G), phi) with generator
G = pi7(Div T): the exponential keeps every grid value exactly on the
rotation orbit of the Cayley form, so the induced metric stays the
identity up to exponential-map round-off no matter how long the run.
A raw componentwise Euler step is available behind a flag for comparison;
it drifts off the orbit and exists only as a benchmark.

Time steps obey the parabolic restriction dt = cfl * h^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import algebra, lattice, orbit
from .algebra import metric_from_form, pi7, pi21, unpack4, pack4
from .heat import heat_weights
from .lattice import LatticeSpec

__all__ = [
    "FlowState",
    "FlowConfig",
    "DiagRecord",
    "FlowAbort",
    "SolitonSchedule",
    "initial_data",
    "flow_step",
    "run_flow",
    "RunResult",
    "diagnostics",
    "metric_drift",
    "energy_gradient_check",
    "torsion_evolution_residual",
    "quartic_terms",
    "theta_functional",
    "entropy",
    "soliton_schedule",
    "soliton_residual",
    "parabolic_rescale",
    "convexity_gap",
    "fit_type1_exponent",
    "DIAG_COLUMNS",
]


class FlowAbort(RuntimeError):
    """Raised when the integrator hits NaN/Inf or the blow-up guard."""


@dataclass
class FlowState:
    """A 4-form field on the lattice plus the simulation clock.

    phi is canonical storage, shape grid_shape + (70,).  metric_scale is the
    uniform conformal factor of the induced metric (1 except for states
    produced by parabolic_rescale).
    """

    spec: LatticeSpec
    phi: np.ndarray
    t: float = 0.0
    step: int = 0
    metric_scale: float = 1.0

    def phi_dense(self) -> np.ndarray:
        return unpack4(self.phi)

    def torsion(self) -> np.ndarray:
        return lattice.torsion(self.spec, self.phi, self.metric_scale)

    def copy(self) -> "FlowState":
        return replace(self, phi=self.phi.copy())


@dataclass(frozen=True)
class FlowConfig:
    """Run description: lattice, initial data, stepping and cadences."""

    spec: LatticeSpec
    family: str = "rotation-field"
    params: dict = field(default_factory=dict)
    seed: int = 0
    cfl: float = 0.1
    t_end: float | None = None
    max_steps: int | None = 1000
    diag_cadence: int = 10
    checkpoint_cadence: int = 0          # 0: only the final checkpoint
    div_tol: float = 1e-8
    blowup_factor: float = 1e6
    integrator: str = "lie-euler"        # or "euler" (benchmark only)

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.t_end is None and self.max_steps is None:
            raise ValueError("need t_end or max_steps")
        if self.integrator not in ("lie-euler", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.diag_cadence < 1:
            raise ValueError("diag_cadence must be >= 1")

    @property
    def dt(self) -> float:
        return self.cfl * self.spec.spacing ** 2


DIAG_COLUMNS = ("t", "E", "dEdt", "negDivT2", "maxT", "bianchi", "ricci",
                "scalar", "metric_drift", "omega21_defect")


@dataclass(frozen=True)
class DiagRecord:
    t: float
    E: float
    dEdt: float
    negDivT2: float
    maxT: float
    bianchi: float
    ricci: float
    scalar: float
    metric_drift: float
    omega21_defect: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in DIAG_COLUMNS)


# ---------------------------------------------------------------------------
# initial data

def _pi7_unit_generator(rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((8, 8))
    a = pi7(a - a.T, algebra.PHI0)
    return a / np.sqrt(np.sum(a * a))


def _profile(spec: LatticeSpec, kind: str, params: dict):
    """Periodic scalar profile theta(x) on the grid."""
    xs = lattice.grid_coordinates(spec)
    eps = float(params.get("eps", 0.05))
    l = spec.period
    if kind == "sine":
        axis = int(params.get("axis", 0))
        mode = int(params.get("mode", 1))
        return eps * np.sin(2.0 * np.pi * mode * xs[axis] / l)
    if kind == "bump":
        width = float(params.get("width", l / 16.0))
        centers = params.get("center", [l / 2.0] * spec.n_axes)
        out = np.ones(spec.grid_shape)
        for x, c in zip(xs, centers):
            # Gaussian in the periodic chordal distance (L/pi) sin(pi d / L),
            # smooth on the torus and localized at scale `width`
            d = np.sin(np.pi * (x - c) / l) * l / np.pi
            out = out * np.exp(-d * d / (2.0 * width**2))
        return eps * out
    raise ValueError(f"unknown profile {kind!r}")


def initial_data(family: str, params: dict, spec: LatticeSpec, seed: int = 0,
                 validate: bool = True) -> FlowState:
    """Construct admissible initial data; deterministic per seed.

    Families:
      constant        the Cayley form everywhere (zero torsion)
      rotation-field  exp(theta(x) A) . Phi0, A a seeded 7-summand generator;
                      profile "sine" (default) or "bump"
      bryant-wave     spinor parametrization along a periodic sphere curve
      random-smooth   exp(A(x)) . Phi0, A a low-frequency random 7-summand field
    """
    rng = np.random.default_rng(seed)
    params = dict(params or {})
    phi0c = pack4(algebra.PHI0)
    if family == "constant":
        phi = np.broadcast_to(phi0c, spec.grid_shape + (70,)).copy()
    elif family == "rotation-field":
        gen = _pi7_unit_generator(rng)
        theta = _profile(spec, params.pop("profile", "sine"), params)
        rot = orbit.so8_exp(theta[..., None, None] * gen)
        phi = pack4(orbit.rotate_form(rot, algebra.PHI0))
    elif family == "bryant-wave":
        eps = float(params.get("eps", 0.5))
        axis = int(params.get("axis", 0))
        u = rng.standard_normal(8)
        u[0] = 0.0
        u /= np.linalg.norm(u)
        x = lattice.grid_coordinates(spec)[axis]
        s = eps * np.sin(2.0 * np.pi * x / spec.period)
        f = np.cos(s)
        xvec = np.sin(s)[..., None] * u
        phi = pack4(orbit.bryant_form(f, xvec))
    elif family == "random-smooth":
        eps = float(params.get("eps", 0.05))
        kmax = int(params.get("kmax", 2))
        n_gen = int(params.get("n_generators", 3))
        xs = lattice.grid_coordinates(spec)
        a_field = np.zeros(spec.grid_shape + (8, 8))
        for _ in range(n_gen):
            gen = _pi7_unit_generator(rng)
            phase = np.zeros(spec.grid_shape)
            for x in xs:
                k = int(rng.integers(1, kmax + 1))
                phase = phase + 2.0 * np.pi * k * x / spec.period + rng.uniform(0, 2 * np.pi)
            a_field = a_field + (eps * np.sin(phase))[..., None, None] * gen
        phi = pack4(orbit.rotate_form(orbit.so8_exp(a_field), algebra.PHI0))
    else:
        raise ValueError(f"unknown initial-data family {family!r}")
    state = FlowState(spec=spec, phi=phi)
    if validate:
        drift = metric_drift(state)
        if not drift < 1e-8:
            raise ValueError(f"initial data failed admissibility: metric drift {drift:.3e}")
    return state


# ---------------------------------------------------------------------------
# stepping

def _generator(state: FlowState, t_field: np.ndarray | None = None,
               phi_dense: np.ndarray | None = None) -> np.ndarray:
    """pi7-projected divergence of torsion, the pointwise update generator."""
    if phi_dense is None:
        phi_dense = state.phi_dense()
    if t_field is None:
        t_field = lattice.torsion(state.spec, state.phi, state.metric_scale,
                                  phi_dense=phi_dense)
    return lattice.div_torsion(state.spec, t_field, metric_scale=state.metric_scale,
                               project=True, phi_dense=phi_dense)


def _apply_generator(state: FlowState, gen: np.ndarray, dt: float,
                     raw_euler: bool, phi_d: np.ndarray) -> FlowState:
    # one index of the generator is raised when acting on the form
    gen_matrix = (dt / state.metric_scale) * gen
    if raw_euler:
        new_dense = phi_d + algebra.diamond(gen_matrix, phi_d)
    else:
        new_dense = orbit.rotate_form(orbit.so8_exp(gen_matrix, check=False), phi_d)
    return FlowState(spec=state.spec, phi=pack4(new_dense), t=state.t + dt,
                     step=state.step + 1, metric_scale=state.metric_scale)


def flow_step(state: FlowState, dt: float, raw_euler: bool = False) -> FlowState:
    """One forward step; rotation update unless raw_euler (benchmark mode)."""
    phi_d = state.phi_dense()
    gen = _generator(state, phi_dense=phi_d)
    if not np.all(np.isfinite(gen)):
        raise FlowAbort(f"non-finite update generator at t={state.t:.6g}, step {state.step}")
    return _apply_generator(state, gen, dt, raw_euler, phi_d)


def metric_drift(state: FlowState) -> float:
    """Max over grid and entries of |metric_from_form(phi) - s * identity|."""
    g = metric_from_form(state.phi_dense())
    return float(np.abs(g - state.metric_scale * np.eye(8)).max())


def diagnostics(state: FlowState, prev: tuple[float, float] | None = None) -> DiagRecord:
    """One diagnostics row; prev = (t, E) of the previous record for dEdt."""
    spec, s = state.spec, state.metric_scale
    phi_d = state.phi_dense()
    t_field = lattice.torsion(spec, state.phi, s, phi_dense=phi_d)
    gen = _generator(state, t_field, phi_dense=phi_d)
    e = lattice.energy(spec, t_field, s)
    neg_div2 = -lattice.integrate(spec, np.einsum("...ab,...ab->...", gen, gen) / s**2, s)
    if prev is None or state.t == prev[0]:
        dedt = 0.0
    else:
        dedt = (e - prev[1]) / (state.t - prev[0])
    gen_defect = pi21(gen, phi_d, metric_scale=s)
    return DiagRecord(
        t=state.t,
        E=e,
        dEdt=dedt,
        negDivT2=neg_div2,
        maxT=lattice.max_torsion(spec, t_field, s),
        bianchi=lattice.bianchi_residual(spec, t_field),
        ricci=lattice.ricci_residual(spec, t_field),
        scalar=lattice.scalar_residual(spec, t_field),
        metric_drift=metric_drift(state),
        omega21_defect=float(np.sqrt(np.max(np.sum(gen_defect**2, axis=(-1, -2))))),
    )


@dataclass
class RunResult:
    records: list
    state: FlowState
    exit_reason: str
    checkpoints: list


def run_flow(config: FlowConfig, state: FlowState | None = None,
             prev_record: tuple[float, float] | None = None,
             on_record=None, on_checkpoint=None) -> RunResult:
    """Drive the flow from config (or a resumed state) to a stopping condition.

    Records are emitted at steps divisible by diag_cadence, computed from the
    absolute step counter so a resumed run reproduces the uninterrupted
    series.  Stopping: t_end / max_steps, convergence (sup |Div T| below
    div_tol), or the blow-up guard max|T| > blowup_factor / h.
    """
    if state is None:
        state = initial_data(config.family, config.params, config.spec, config.seed)
    dt = config.dt
    records: list[DiagRecord] = []
    checkpoints: list[FlowState] = []
    prev = prev_record
    blowup_ceiling = config.blowup_factor / config.spec.spacing

    def emit(st: FlowState) -> DiagRecord:
        nonlocal prev
        rec = diagnostics(st, prev)
        prev = (rec.t, rec.E)
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        return rec

    def take_checkpoint(st: FlowState):
        if checkpoints and checkpoints[-1].step == st.step:
            return
        checkpoints.append(st.copy())
        if on_checkpoint is not None:
            on_checkpoint(st, prev)

    exit_reason = "max_steps"
    if state.step % config.diag_cadence == 0 and prev_record is None:
        emit(state)
    while True:
        if config.max_steps is not None and state.step >= config.max_steps:
            exit_reason = "max_steps"
            break
        if config.t_end is not None and state.t >= config.t_end - 1e-15 * max(1.0, abs(config.t_end)):
            exit_reason = "t_end"
            break
        phi_d = state.phi_dense()
        t_field = lattice.torsion(config.spec, state.phi, state.metric_scale,
                                  phi_dense=phi_d)
        sup_t = lattice.max_torsion(config.spec, t_field, state.metric_scale)
        if not math.isfinite(sup_t):
            raise FlowAbort(f"non-finite torsion at step {state.step}")
        if sup_t > blowup_ceiling:
            exit_reason = "blowup_guard"
            break
        gen = _generator(state, t_field, phi_dense=phi_d)
        if not np.all(np.isfinite(gen)):
            raise FlowAbort(f"non-finite update generator at step {state.step}")
        sup_div = float(np.sqrt(np.max(np.sum(gen * gen, axis=(-1, -2)))))
        if sup_div < config.div_tol:
            exit_reason = "converged"
            break
        state = _apply_generator(state, gen, dt, config.integrator == "euler", phi_d)
        if state.step % config.diag_cadence == 0:
            emit(state)
        if config.checkpoint_cadence and state.step % config.checkpoint_cadence == 0:
            take_checkpoint(state)
    if not records or records[-1].t != state.t:
        emit(state)
    take_checkpoint(state)
    return RunResult(records=records, state=state, exit_reason=exit_reason,
                     checkpoints=checkpoints)


# ---------------------------------------------------------------------------
# variational and evolution checks

def energy_gradient_check(state: FlowState, direction: np.ndarray, eps: float) -> float:
    """Relative error between the finite-difference energy derivative and
    the first-variation prediction -integral <Div T, X> (full contraction).

    direction is a pointwise 2-form field X, expected in the 7-summand.
    """
    spec, s = state.spec, state.metric_scale
    phi_d = state.phi_dense()
    t_field = state.torsion()
    div = lattice.div_torsion(spec, t_field, state.phi, metric_scale=s, project=True)
    predicted = -lattice.integrate(
        spec, np.einsum("...ab,...ab->...", div, direction) / s**2, s)
    energies = []
    for sign in (+1.0, -1.0):
        rot = orbit.so8_exp(sign * eps / s * direction, check=False)
        phi_eps = pack4(orbit.rotate_form(rot, phi_d))
        t_eps = lattice.torsion(spec, phi_eps, s)
        energies.append(lattice.energy(spec, t_eps, s))
    fd = (energies[0] - energies[1]) / (2.0 * eps)
    denom = max(abs(predicted), 1e-300)
    return abs(fd - predicted) / denom


def quartic_terms(t_field: np.ndarray) -> np.ndarray:
    """The two quartic contractions in the |T|^2 evolution equation:
    16 T_{a;bp} T_{m;bc} T_{a;pq} T_{m;qc} + 16 T_{a;bp} T_{m;bc} T_{a;cq} T_{m;pq}.
    """
    q1 = np.einsum("...abp,...mbc,...apq,...mqc->...", t_field, t_field, t_field, t_field)
    q2 = np.einsum("...abp,...mbc,...acq,...mpq->...", t_field, t_field, t_field, t_field)
    return 16.0 * (q1 + q2)


def torsion_evolution_residual(prev: FlowState, mid: FlowState, nxt: FlowState) -> float:
    """Max-norm residual of the flat-torus |T|^2 evolution equation
    2 d|T|^2/dt = 2 lap |T|^2 - 4 |grad T|^2 + quartic terms,
    with the time derivative by central difference across three states.
    """
    spec = mid.spec
    if prev.spec != spec or nxt.spec != spec:
        raise ValueError("states live on different lattices")
    tsq = []
    for st in (prev, mid, nxt):
        tf = st.torsion()
        tsq.append(np.einsum("...mab,...mab->...", tf, tf))
    dt_minus, dt_plus = mid.t - prev.t, nxt.t - mid.t
    ddt = (tsq[2] - tsq[0]) / (dt_plus + dt_minus)
    t_field = mid.torsion()
    gt = lattice.fd_gradient_generic(spec, t_field)
    grad_sq = np.einsum("...imab,...imab->...", gt, gt)
    rhs = 2.0 * lattice.fd_laplacian(spec, tsq[1]) - 4.0 * grad_sq + quartic_terms(t_field)
    return float(np.abs(2.0 * ddt - rhs).max())


# ---------------------------------------------------------------------------
# localized torsion functionals

def theta_functional(states, center: tuple[int, ...], t0: float) -> np.ndarray:
    """(t0 - t) * integral of |T|^2 against the backward heat kernel,
    one value per state; requires every state time below t0."""
    out = []
    for st in states:
        tau = t0 - st.t
        if tau <= 0:
            raise ValueError(f"state time {st.t} is not below the horizon {t0}")
        w = heat_weights(st.spec, center, tau, st.metric_scale)
        tf = st.torsion()
        tsq = np.einsum("...mab,...mab->...", tf, tf) / st.metric_scale**3
        out.append(tau * lattice.integrate(st.spec, tsq * w, st.metric_scale))
    return np.array(out)


def entropy(state: FlowState, sigma: float, t_samples: int = 16, x_stride: int = 1) -> float:
    """max over sampled centers and scales t in (0, sigma] of
    t * integral |T|^2 u_{(x,t)}; a lower bound that is nondecreasing
    under sampling refinement."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    spec = state.spec
    tf = state.torsion()
    tsq = np.einsum("...mab,...mab->...", tf, tf) / state.metric_scale**3
    taus = sigma * np.power(2.0, -np.arange(t_samples, dtype=float)[::-1])
    centers = np.ndindex(*(max(1, spec.points // max(1, x_stride)),) * spec.n_axes)
    best = 0.0
    for cidx in centers:
        c = tuple(i * x_stride for i in cidx)
        for tau in taus:
            w = heat_weights(spec, c, float(tau), state.metric_scale)
            val = float(tau) * lattice.integrate(spec, tsq * w, state.metric_scale)
            if val > best:
                best = val
    return best


# ---------------------------------------------------------------------------
# solitons

@dataclass(frozen=True)
class SolitonSchedule:
    """Explicit self-similarity data (rho, alpha, anchor, interval).

    For c = +-1 the dilation is rho(t) = |t|^p with alpha(t) = -+2p/t,
    anchored at t_hat = -2pc where alpha(t_hat) = 1, valid on the side of
    t_hat away from the origin.  Note t = 0 lies outside that interval and
    rho(0) = 0 there: the unit-dilation normalization at the time origin is
    only attainable in the steady case c = 0 (rho = alpha = 1 identically),
    even though the source material states it for all three cases.
    """

    c: int
    p: float
    t_hat: float
    interval: tuple[float, float]

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        if self.c == 0:
            return np.ones_like(t)
        return np.abs(t) ** self.p

    def alpha(self, t):
        t = np.asarray(t, dtype=float)
        if self.c == 0:
            return np.ones_like(t)
        return -self.c * 2.0 * self.p / t

    def check_invariants(self, n: int = 64) -> float:
        """Max violation of alpha(t_hat) = 1, the pointwise relation
        alpha = -(2/c) (log rho)' on the interval interior (c != 0), and
        rho(0) = 1 in the steady case."""
        errs = [abs(float(self.alpha(self.t_hat)) - 1.0)]
        if self.c == 0:
            errs.append(abs(float(self.rho(0.0)) - 1.0))
        else:
            lo, hi = self.interval
            lo = max(lo, self.t_hat - 10.0) if np.isinf(lo) else lo
            hi = min(hi, self.t_hat + 10.0) if np.isinf(hi) else hi
            ts = np.linspace(lo, hi, n)
            ts = ts[np.abs(ts) > 1e-6]
            dlog = self.p / ts  # (log rho)' for rho = |t|^p
            errs.append(float(np.abs(self.alpha(ts) + (2.0 / self.c) * dlog).max()))
        return max(errs)


def soliton_schedule(c: int, p: float = 0.5) -> SolitonSchedule:
    """Explicit (rho, alpha, t_hat, interval) for c in {-1, 0, 1}:
    c=+-1: rho=|t|^p, alpha=-+2p/t on the side of t_hat=-2pc; c=0: constants."""
    if c not in (-1, 0, 1):
        raise ValueError("c must be -1, 0 or 1")
    if not p > 0:
        raise ValueError("p must be positive")
    if c == 0:
        return SolitonSchedule(c=0, p=p, t_hat=0.0, interval=(-np.inf, np.inf))
    t_hat = -2.0 * p * c
    interval = (-np.inf, t_hat) if c == 1 else (t_hat, np.inf)
    return SolitonSchedule(c=c, p=p, t_hat=t_hat, interval=interval)


def soliton_residual(state: FlowState, x_field: np.ndarray) -> float:
    """Max-norm of Div T - X . T - pi7(skew grad X), zero for steady solitons.

    x_field is a vector field on the grid, shape grid_shape + (8,).
    Defined for unscaled states (metric_scale 1), the only ones runs produce.
    """
    spec = state.spec
    if state.metric_scale != 1.0:
        raise ValueError("soliton_residual expects an unscaled state")
    t_field = state.torsion()
    div = lattice.div_torsion(spec, t_field, state.phi, project=True)
    x_hook_t = np.einsum("...m,...mab->...ab", x_field, t_field)
    k = spec.n_axes
    gx_compact = np.stack(
        [lattice._d1(x_field, ax, spec.spacing, spec.stencil_order) for ax in range(k)],
        axis=k)
    gx = lattice._embed_m_axis(spec, gx_compact, gx_compact.ndim - 2)
    skew = 0.5 * (gx - np.swapaxes(gx, -1, -2))
    nabla7 = pi7(skew, state.phi_dense())
    return float(np.abs(div - x_hook_t - nabla7).max())


def convexity_gap(states, lowest_eigenvalue: float | None = None):
    """Descriptive check of the energy-convexity bound along a run:
    d^2E/dt^2 >= integral (Lam - 3 |T|^2) |Div T|^2, with Lam the first
    nonzero eigenvalue of the rough Laplacian on 2-forms; on the flat torus
    Lam = (2 pi / L)^2 for the lowest mode.

    Takes three consecutive states; returns (lhs, rhs, gap) with
    gap = lhs - rhs (nonnegative when the bound holds).
    """
    prev, mid, nxt = states
    spec = mid.spec
    if lowest_eigenvalue is None:
        lowest_eigenvalue = (2.0 * np.pi / spec.period) ** 2
    es = []
    for st in (prev, mid, nxt):
        es.append(lattice.energy(spec, st.torsion(), st.metric_scale))
    dtm, dtp = mid.t - prev.t, nxt.t - mid.t
    d2e = (es[2] - 2 * es[1] + es[0]) / (dtm * dtp)
    t_field = mid.torsion()
    div = lattice.div_torsion(spec, t_field, mid.phi, project=True)
    tsq = np.einsum("...mab,...mab->...", t_field, t_field)
    div_sq = np.einsum("...ab,...ab->...", div, div)
    rhs = lattice.integrate(spec, (lowest_eigenvalue - 3.0 * tsq) * div_sq)
    return d2e, rhs, d2e - rhs


def fit_type1_exponent(times, sup_torsion, blowup_time: float):
    """Least-squares slope of log sup|T| against log(tau - t); descriptive.

    A self-similar first-kind singularity gives slope -1/2 (sup|T| growing
    like 1/sqrt(tau - t)); smooth decaying runs give slope near 0.
    """
    times = np.asarray(times, dtype=float)
    sup_torsion = np.asarray(sup_torsion, dtype=float)
    mask = (blowup_time - times > 0) & (sup_torsion > 0)
    if mask.sum() < 2:
        raise ValueError("need at least two usable samples before the blow-up time")
    x = np.log(blowup_time - times[mask])
    y = np.log(sup_torsion[mask])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# parabolic rescaling

def parabolic_rescale(state: FlowState, c: float):
    """Rescaled state (phi -> c^4 phi, metric -> c^2 g, t -> c^2 t) plus an
    exactness report for the torsion and divergence scaling identities."""
    if not c > 0:
        raise ValueError("rescale factor must be positive")
    spec, s = state.spec, state.metric_scale
    new = FlowState(spec=spec, phi=c**4 * state.phi, t=c * c * state.t,
                    step=state.step, metric_scale=c * c * s)
    t_old = state.torsion()
    t_new = new.torsion()
    div_old = lattice.div_torsion(spec, t_old, state.phi, metric_scale=s, project=True)
    div_new = lattice.div_torsion(spec, t_new, new.phi, metric_scale=new.metric_scale,
                                  project=True)
    scale = max(float(np.abs(t_old).max()), 1e-300)
    dscale = max(float(np.abs(div_old).max()), 1e-300)
    gt_old = lattice.fd_gradient_generic(spec, t_old)
    gt_new = lattice.fd_gradient_generic(spec, t_new)

    def g_norm(arr, ms, n_lower):
        return float(np.sqrt(np.sum(arr * arr) / ms**n_lower))

    report = {
        "torsion_scaling": float(np.abs(t_new - c * c * t_old).max()) / scale,
        "divergence_scaling": float(np.abs(div_new - div_old).max()) / dscale,
        # |grad^j T|_g scales by c^-(1+j): compare squared norms
        "norm_scaling_j0": abs(g_norm(t_new, new.metric_scale, 3)
                               - g_norm(t_old, s, 3) / c),
        "norm_scaling_j1": abs(g_norm(gt_new, new.metric_scale, 4)
                               - g_norm(gt_old, s, 4) / c**2),
    }
    return new, report
