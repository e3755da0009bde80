"""Black-box optimizers for pulse shaping.

Two search problems, two tools:

* the 2-parameter chirp search for a single pulse uses grid-restricted
  Bayesian optimization (Gaussian-process surrogate, RBF kernel, UCB
  acquisition) over a 100x100 grid of (gamma1, gamma2) in [0, 1]^2;
* the 5-parameter double-pulse search (both chirp pairs plus the pulse-delay
  offset, unrestricted sign) uses a standard (mu/mu_w, lambda) CMA-ES.

Both optimizers are deterministic for a fixed seed and tolerate isolated
objective failures by scoring them as worst-possible instead of aborting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .model import MolecularModel
from .propagator import (
    PropagationConfig,
    PropagationError,
    PropagationResult,
    propagate_many,
)
from .pulse import ChirpedPulse, PulseTrain, single
from .spectrum import BoundSpectrum, MissingRungReport, fit_anharmonicity


class OptimizeError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizationRun:
    method: str
    best_params: np.ndarray
    best_score: float
    history: list                     # dicts: {"index", "params", "score", ...}
    metadata: dict = field(default_factory=dict)


def export_history_csv(path, run: OptimizationRun, param_names=None) -> None:
    if not run.history:
        raise OptimizeError("empty optimization history")
    dim = len(np.atleast_1d(run.history[0]["params"]))
    names = list(param_names) if param_names else [f"p{i}" for i in range(dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["evaluation"] + names + ["score"])
        for rec in run.history:
            params = np.atleast_1d(rec["params"])
            writer.writerow(
                [rec["index"]] + [repr(float(v)) for v in params] + [repr(float(rec["score"]))]
            )


# --------------------------------------------------------------------------
# Objectives
# --------------------------------------------------------------------------


def excited_score(result, n_dissoc: int) -> float:
    """Level-weighted occupation sum_{i<=n} (i/n) |c_i|^2 of the final state.

    Accepts a PropagationResult or a RunSummary (method or plain array).
    """
    pops = result.final_populations
    if callable(pops):
        pops = pops()
    pops = np.asarray(pops, float)
    if pops.size == 0:
        raise OptimizeError("result carries no bound-level populations")
    if n_dissoc < 1 or n_dissoc >= pops.size:
        raise OptimizeError(f"n_dissoc {n_dissoc} outside populated levels")
    i = np.arange(n_dissoc + 1)
    return float(np.sum((i / n_dissoc) * pops[: n_dissoc + 1]))


@dataclass(frozen=True)
class ObjectiveSpec:
    variant: str                      # "ExcitedPlusDissociated" | "DissociatedOnly"
    n_dissoc: int

    def __post_init__(self):
        if self.variant not in ("ExcitedPlusDissociated", "DissociatedOnly"):
            raise OptimizeError(f"unknown objective variant {self.variant!r}")

    def value(self, result) -> float:
        if self.variant == "DissociatedOnly":
            return float(result.dissociation_probability)
        return excited_score(result, self.n_dissoc) + float(
            result.dissociation_probability
        )


# --------------------------------------------------------------------------
# Grid-restricted Bayesian optimization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSearchSpace2D:
    """(gamma1, gamma2) candidates on a uniform grid of 0.01 steps in [0,1)^2."""

    resolution: float = 0.01
    points_per_axis: int = 100

    def candidates(self) -> np.ndarray:
        axis = np.arange(self.points_per_axis) * self.resolution
        g1, g2 = np.meshgrid(axis, axis, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])


class GaussianProcessSurrogate:
    """Zero-mean GP with an RBF kernel and fixed observation noise.

    The signal variance tracks the sample variance of the (centered)
    observations; the lengthscale is refit by marginal likelihood over a
    small logarithmic grid, which is ample for a 10^4-point search grid.
    """

    LENGTHSCALES = (0.03, 0.1, 0.3, 1.0)

    def __init__(self, noise_variance: float = 1e-6):
        self.noise_variance = noise_variance
        self.x = np.empty((0, 2))
        self.y = np.empty(0)
        self.lengthscale = 0.1
        self._chol = None
        self._alpha = None
        self._y_mean = 0.0
        self.signal_variance = 1.0

    def _kernel(self, a: np.ndarray, b: np.ndarray, ls: float) -> np.ndarray:
        d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
        return self.signal_variance * np.exp(-0.5 * d2 / ls**2)

    def fit(self, x: np.ndarray, y: np.ndarray) -> None:
        self.x = np.asarray(x, float)
        self.y = np.asarray(y, float)
        self._y_mean = float(np.mean(self.y))
        yc = self.y - self._y_mean
        var = float(np.var(yc))
        self.signal_variance = var if var > 1e-12 else 1.0
        best_ll, best_ls, best_chol, best_alpha = -np.inf, None, None, None
        n = len(yc)
        for ls in self.LENGTHSCALES:
            k = self._kernel(self.x, self.x, ls) + self.noise_variance * np.eye(n)
            chol = np.linalg.cholesky(k)
            alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, yc))
            ll = (
                -0.5 * float(yc @ alpha)
                - float(np.sum(np.log(np.diag(chol))))
                - 0.5 * n * np.log(2.0 * np.pi)
            )
            if ll > best_ll:
                best_ll, best_ls, best_chol, best_alpha = ll, ls, chol, alpha
        self.lengthscale = best_ls
        self._chol = best_chol
        self._alpha = best_alpha

    def posterior(self, x_query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at query points."""
        x_query = np.asarray(x_query, float)
        if self.x.shape[0] == 0:
            return (
                np.zeros(len(x_query)),
                np.full(len(x_query), self.signal_variance),
            )
        ks = self._kernel(self.x, x_query, self.lengthscale)
        mean = self._y_mean + ks.T @ self._alpha
        v = np.linalg.solve(self._chol, ks)
        var = self.signal_variance - np.sum(v * v, axis=0)
        return mean, np.clip(var, 0.0, None)


def bo_optimize(
    objective,
    space: GridSearchSpace2D | None = None,
    iterations: int = 50,
    kappa: float = 2.0,
    seed: int = 0,
    n_initial: int = 5,
) -> OptimizationRun:
    """Sequential UCB Bayesian optimization over the candidate grid.

    ``objective`` maps a (gamma1, gamma2) array to a scalar to *maximize*.
    Failed or non-finite evaluations are recorded as the worst value seen so
    far (0.0 if none yet) and the search continues.
    """
    if iterations < 1:
        raise OptimizeError("iterations must be >= 1")
    space = space or GridSearchSpace2D()
    cand = space.candidates()
    n_cand = len(cand)
    halton = qmc.Halton(d=2, seed=seed)
    init_pts = halton.random(n_initial)
    init_idx = []
    for pt in init_pts:
        ij = np.round(pt / space.resolution).astype(int) % space.points_per_axis
        idx = int(ij[0] * space.points_per_axis + ij[1])
        while idx in init_idx:          # collision on the grid: step forward
            idx = (idx + 1) % n_cand
        init_idx.append(idx)

    evaluated: dict[int, float] = {}
    history = []
    failures = 0

    def run_point(idx: int, order: int) -> None:
        nonlocal failures
        x = cand[idx]
        try:
            val = float(objective(x))
            ok = np.isfinite(val)
        except (ArithmeticError, np.linalg.LinAlgError, PropagationError):
            ok = False
        if not ok:
            failures += 1
            val = min(evaluated.values(), default=0.0)
        evaluated[idx] = val
        history.append({"index": order, "params": x.copy(), "score": val, "ok": ok})

    for order, idx in enumerate(init_idx):
        run_point(idx, order)

    gp = GaussianProcessSurrogate()
    for it in range(iterations):
        obs_idx = np.fromiter(evaluated.keys(), int)
        gp.fit(cand[obs_idx], np.array([evaluated[i] for i in obs_idx]))
        free = np.setdiff1d(np.arange(n_cand), obs_idx, assume_unique=False)
        if free.size == 0:
            break
        mean, var = gp.posterior(cand[free])
        acq = mean + kappa * np.sqrt(var)
        run_point(int(free[np.argmax(acq)]), len(history))

    if failures == len(history):
        raise OptimizeError("every objective evaluation failed")
    best_idx = max(evaluated, key=lambda i: evaluated[i])
    best_val = evaluated[best_idx]
    ties = [i for i, v in evaluated.items() if v == best_val]
    return OptimizationRun(
        method="bo-ucb",
        best_params=cand[best_idx].copy(),
        best_score=best_val,
        history=history,
        metadata={
            "kappa": kappa,
            "seed": seed,
            "iterations": iterations,
            "n_initial": n_initial,
            "failures": failures,
            "tie_count": len(ties),
            "gp_lengthscale": gp.lengthscale,
        },
    )


# --------------------------------------------------------------------------
# CMA-ES
# --------------------------------------------------------------------------


@dataclass
class CmaEsState:
    """Full strategy state; defaults follow the standard published settings."""

    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_cov: np.ndarray
    generation: int
    lam: int
    seed: int
    best_params: np.ndarray | None = None
    best_score: float = -np.inf

    @property
    def dim(self) -> int:
        return len(self.mean)


def _cma_constants(dim: int, lam: int):
    mu = lam // 2
    raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mueff = 1.0 / np.sum(weights**2)
    cc = (4.0 + mueff / dim) / (dim + 4.0 + 2.0 * mueff / dim)
    cs = (mueff + 2.0) / (dim + mueff + 5.0)
    c1 = 2.0 / ((dim + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dim + 2.0) ** 2 + mueff))
    damps = 1.0 + 2.0 * max(0.0, np.sqrt((mueff - 1.0) / (dim + 1.0)) - 1.0) + cs
    chi_n = np.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))
    return weights, mueff, cc, cs, c1, cmu, damps, chi_n


def _cov_sqrt(cov: np.ndarray):
    """(B, D, C^{1/2}, C^{-1/2}) with eigenvalues floored for positive definiteness."""
    cov = 0.5 * (cov + cov.T)
    evals, b = np.linalg.eigh(cov)
    evals = np.clip(evals, 1e-14, None)
    d = np.sqrt(evals)
    return b, d, (b * d) @ b.T, (b / d) @ b.T


def cmaes_init(x0, sigma0: float, lam: int = 16, seed: int = 0) -> CmaEsState:
    x0 = np.asarray(x0, float)
    if sigma0 <= 0:
        raise OptimizeError("sigma0 must be positive")
    dim = len(x0)
    return CmaEsState(
        mean=x0.copy(),
        sigma=float(sigma0),
        cov=np.eye(dim),
        p_sigma=np.zeros(dim),
        p_cov=np.zeros(dim),
        generation=0,
        lam=lam,
        seed=seed,
    )


def cmaes_step(state: CmaEsState, objective, vectorized: bool = False) -> list:
    """One generation: sample, rank, update.  Returns per-individual history.

    Sampling RNG is keyed by (seed, generation), so a resumed run continues
    on the exact trajectory of an uninterrupted one.
    """
    dim, lam = state.dim, state.lam
    weights, mueff, cc, cs, c1, cmu, damps, chi_n = _cma_constants(dim, lam)
    mu = lam // 2
    rng = np.random.default_rng([state.seed, state.generation])
    b, d, c_sqrt, c_inv_sqrt = _cov_sqrt(state.cov)
    z = rng.standard_normal((lam, dim))
    y = z @ ((b * d).T)                  # y_i = B D z_i
    xs = state.mean + state.sigma * y

    if vectorized:
        vals = np.asarray(objective(xs), float)
    else:
        vals = np.empty(lam)
        for i in range(lam):
            try:
                vals[i] = float(objective(xs[i]))
            except (ArithmeticError, np.linalg.LinAlgError, PropagationError):
                vals[i] = np.nan
    vals = np.where(np.isfinite(vals), vals, -np.inf)

    order = np.argsort(-vals, kind="stable")
    records = [
        {
            "index": state.generation * lam + int(i),
            "params": xs[i].copy(),
            "score": float(vals[i]),
            "generation": state.generation,
        }
        for i in range(lam)
    ]
    top = order[0]
    if vals[top] > state.best_score:
        state.best_score = float(vals[top])
        state.best_params = xs[top].copy()

    sel = order[:mu]
    y_w = weights @ y[sel]
    state.mean = state.mean + state.sigma * y_w

    state.p_sigma = (1.0 - cs) * state.p_sigma + np.sqrt(
        cs * (2.0 - cs) * mueff
    ) * (c_inv_sqrt @ y_w)
    ps_norm = np.linalg.norm(state.p_sigma)
    gen1 = state.generation + 1
    h_sigma = float(
        ps_norm / np.sqrt(1.0 - (1.0 - cs) ** (2.0 * gen1)) / chi_n
        < 1.4 + 2.0 / (dim + 1.0)
    )
    state.p_cov = (1.0 - cc) * state.p_cov + h_sigma * np.sqrt(
        cc * (2.0 - cc) * mueff
    ) * y_w

    rank_mu = (weights[:, None] * y[sel]).T @ y[sel]
    delta_h = (1.0 - h_sigma) * cc * (2.0 - cc)
    state.cov = (
        (1.0 - c1 - cmu) * state.cov
        + c1 * (np.outer(state.p_cov, state.p_cov) + delta_h * state.cov)
        + cmu * rank_mu
    )
    state.sigma = state.sigma * np.exp((cs / damps) * (ps_norm / chi_n - 1.0))
    state.generation = gen1
    return records


def cmaes_optimize(
    objective,
    x0,
    sigma0: float,
    generations: int = 150,
    lam: int = 16,
    seed: int = 0,
    vectorized: bool = False,
    state: CmaEsState | None = None,
    on_generation=None,
) -> OptimizationRun:
    """Maximize ``objective`` over R^dim; deterministic for a fixed seed.

    Pass ``state`` (from :func:`load_cmaes_checkpoint`) to resume; remaining
    generations are run until ``generations`` total.
    """
    if state is None:
        state = cmaes_init(x0, sigma0, lam=lam, seed=seed)
    history = []
    while state.generation < generations:
        history.extend(cmaes_step(state, objective, vectorized=vectorized))
        if on_generation is not None:
            on_generation(state)
    return OptimizationRun(
        method="cma-es",
        best_params=state.best_params.copy()
        if state.best_params is not None
        else np.asarray(x0, float),
        best_score=state.best_score,
        history=history,
        metadata={"seed": state.seed, "lam": state.lam, "generations": generations},
    )


def save_cmaes_checkpoint(path, state: CmaEsState) -> None:
    """Plain-text checkpoint: 'key value...' lines with full-precision floats."""
    lines = [
        f"generation {state.generation}",
        f"lam {state.lam}",
        f"seed {state.seed}",
        f"sigma {float(state.sigma)!r}",
        "mean " + " ".join(repr(float(v)) for v in state.mean),
        "p_sigma " + " ".join(repr(float(v)) for v in state.p_sigma),
        "p_cov " + " ".join(repr(float(v)) for v in state.p_cov),
        f"best_score {float(state.best_score)!r}",
    ]
    if state.best_params is not None:
        lines.append("best_params " + " ".join(repr(float(v)) for v in state.best_params))
    for row in state.cov:
        lines.append("cov_row " + " ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_cmaes_checkpoint(path) -> CmaEsState:
    fields: dict[str, list] = {"cov_row": []}
    for raw in open(path):
        parts = raw.split()
        if not parts:
            continue
        key, vals = parts[0], parts[1:]
        if key == "cov_row":
            fields["cov_row"].append([float(v) for v in vals])
        else:
            fields[key] = vals
    try:
        state = CmaEsState(
            mean=np.array([float(v) for v in fields["mean"]]),
            sigma=float(fields["sigma"][0]),
            cov=np.array(fields["cov_row"]),
            p_sigma=np.array([float(v) for v in fields["p_sigma"]]),
            p_cov=np.array([float(v) for v in fields["p_cov"]]),
            generation=int(fields["generation"][0]),
            lam=int(fields["lam"][0]),
            seed=int(fields["seed"][0]),
            best_score=float(fields["best_score"][0]),
            best_params=np.array([float(v) for v in fields["best_params"]])
            if "best_params" in fields
            else None,
        )
    except KeyError as exc:
        raise OptimizeError(f"checkpoint {path} is missing field {exc}") from exc
    return state


# --------------------------------------------------------------------------
# Pulse-shaping drivers
# --------------------------------------------------------------------------


def _reference_frequency(spectrum: BoundSpectrum) -> float:
    """Fitted harmonic frequency w0 of the ladder, used as the chirp reference."""
    hi = min(10, spectrum.n_dissoc - 1)
    w0, _, _ = fit_anharmonicity(spectrum, fit_range=(0, hi))
    return w0


def _main_pulse(e0, alpha, g1, g2, omega0) -> ChirpedPulse:
    sigma = 1.0 / np.sqrt(2.0 * alpha)
    return ChirpedPulse(
        e0=e0, alpha=alpha, t0=4.0 * sigma, omega0=omega0, gamma1=g1, gamma2=g2
    )


@dataclass(frozen=True)
class SinglePulseOptimum:
    gamma1: float
    gamma2: float
    score: float
    run: OptimizationRun
    omega0: float


def optimize_single_pulse(
    model: MolecularModel,
    spectrum: BoundSpectrum,
    e0: float,
    alpha: float,
    config: PropagationConfig,
    seed: int = 0,
    iterations: int = 50,
    kappa: float = 2.0,
    omega0: float | None = None,
) -> SinglePulseOptimum:
    """Chirp-pair search maximizing excited population plus dissociation."""
    if omega0 is None:
        omega0 = _reference_frequency(spectrum)
    spec = ObjectiveSpec(variant="ExcitedPlusDissociated", n_dissoc=spectrum.n_dissoc)

    def objective(g):
        train = single(_main_pulse(e0, alpha, float(g[0]), float(g[1]), omega0))
        summary = propagate_many(model, spectrum, [train], config)[0]
        return spec.value(summary)

    run = bo_optimize(objective, iterations=iterations, kappa=kappa, seed=seed)
    return SinglePulseOptimum(
        gamma1=float(run.best_params[0]),
        gamma2=float(run.best_params[1]),
        score=run.best_score,
        run=run,
        omega0=omega0,
    )


@dataclass(frozen=True)
class DspOptimum:
    gamma1_main: float
    gamma2_main: float
    gamma1_dsp: float
    gamma2_dsp: float
    delta_t0: float
    score: float
    run: OptimizationRun
    omega0_main: float
    omega0_dsp: float


def dsp_train(
    e0_main,
    alpha_main,
    g1_main,
    g2_main,
    omega0_main,
    e0_dsp,
    alpha_dsp,
    g1_dsp,
    g2_dsp,
    omega0_dsp,
    delta_t0,
    phase_dsp: float = 0.0,
) -> PulseTrain:
    """Main pulse plus the double-stepping pulse offset by delta_t0."""
    main = _main_pulse(e0_main, alpha_main, g1_main, g2_main, omega0_main)
    dsp = ChirpedPulse(
        e0=e0_dsp,
        alpha=alpha_dsp,
        t0=main.t0 + delta_t0,
        omega0=omega0_dsp,
        gamma1=g1_dsp,
        gamma2=g2_dsp,
        phase=phase_dsp,
    )
    return PulseTrain(pulses=(main, dsp), labels=("main", "dsp"))


def dsp_reference_frequency(spectrum: BoundSpectrum, rung_index: int) -> float:
    """Two-step transition frequency bridging the interrupted rung."""
    r = rung_index
    if r - 1 < 0 or r + 1 > spectrum.n_dissoc:
        raise OptimizeError(f"rung index {r} leaves no bracketing levels")
    return float(spectrum.energies[r + 1] - spectrum.energies[r - 1])


def optimize_dsp(
    model: MolecularModel,
    spectrum: BoundSpectrum,
    e0_main: float,
    alpha_main: float,
    e0_dsp: float,
    alpha_dsp: float,
    rung: MissingRungReport | None,
    config: PropagationConfig,
    seed: int = 0,
    generations: int = 150,
    lam: int = 16,
    initial_gammas: tuple[float, float] = (0.5, 0.5),
    omega0_main: float | None = None,
    rung_index: int | None = None,
    state: CmaEsState | None = None,
    checkpoint_path=None,
) -> DspOptimum:
    """Five-parameter double-pulse search maximizing dissociation only.

    The search vector is (g1_main, g2_main, g1_dsp, g2_dsp, u) where the
    delay is delta_t0 = u * sigma_main / 0.3, so the shared CMA step size
    0.15 corresponds to 0.15 on the chirps and 0.5 sigma_main on the delay.
    """
    if rung_index is None:
        if rung is None or not rung.is_missing:
            raise OptimizeError(
                "no missing rung detected; pass rung_index to override"
            )
        rung_index = rung.trap_level
    if omega0_main is None:
        omega0_main = _reference_frequency(spectrum)
    omega0_dsp = dsp_reference_frequency(spectrum, rung_index)
    sigma_main = 1.0 / np.sqrt(2.0 * alpha_main)
    dt0_scale = sigma_main / 0.3

    def trains_for(xs: np.ndarray) -> list[PulseTrain]:
        return [
            dsp_train(
                e0_main, alpha_main, x[0], x[1], omega0_main,
                e0_dsp, alpha_dsp, x[2], x[3], omega0_dsp,
                x[4] * dt0_scale,
            )
            for x in xs
        ]

    def batch_objective(xs: np.ndarray) -> np.ndarray:
        summaries = propagate_many(model, spectrum, trains_for(xs), config)
        return np.array([s.dissociation_probability for s in summaries])

    x0 = np.array([initial_gammas[0], initial_gammas[1], 0.5, 0.5, 0.0])
    on_gen = None
    if checkpoint_path is not None:
        on_gen = lambda st: save_cmaes_checkpoint(checkpoint_path, st)
    run = cmaes_optimize(
        batch_objective,
        x0,
        sigma0=0.15,
        generations=generations,
        lam=lam,
        seed=seed,
        vectorized=True,
        state=state,
        on_generation=on_gen,
    )
    p = run.best_params
    return DspOptimum(
        gamma1_main=float(p[0]),
        gamma2_main=float(p[1]),
        gamma1_dsp=float(p[2]),
        gamma2_dsp=float(p[3]),
        delta_t0=float(p[4] * dt0_scale),
        score=run.best_score,
        run=run,
        omega0_main=omega0_main,
        omega0_dsp=omega0_dsp,
    )
