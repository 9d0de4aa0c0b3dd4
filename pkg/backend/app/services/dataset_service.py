# backend/app/services/dataset_service.py
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from app.config import settings
from app.core.exceptions import DivergedError, GenerationAbortedError
from app.schemas.dataset import Dataset, DatasetHeader
from app.schemas.pde_components import (
    BoundaryKind,
    BoundarySpec,
    Family,
    PDEComponents,
    RobinParams,
    Sample,
    Side,
)
from app.schemas.solver_specs import HeterNSSpec
from app.schemas.string_problem import SineSeries, StringProblem
from app.schemas.task_spec import ConditionGroup, TaskSpec
from app.services.component_service import component_service
from app.services.solvers.advection import solve_advection_exact
from app.services.solvers.family1d import family_components, sample_1d_pde, solve_1d_family
from app.services.solvers.initial_conditions import gaussian_random_field, sample_trig_superposition
from app.services.solvers.navier_stokes import SpectralTorus, heterns_force, solve_ns2d_spectral
from app.services.string_oracle import evaluate_grid

logger = logging.getLogger(__name__)

ADVECTION_SYMBOLS = r"\partial_t u + \beta \partial_x u = 0"
HETERNS_SYMBOLS = r"\partial_t w + u \cdot \nabla w = \nu \Delta w + f(x)"
STRING_SYMBOLS = r"\partial_{tt} u = a^2 \partial_{xx} u + f(x)"


def sample_seed(seed: int, index: int, retry: int = 0) -> np.random.SeedSequence:
    """Independent stream per (run seed, sample index, retry)."""
    return np.random.SeedSequence(seed, spawn_key=(index, retry))


def _random_sine_series(rng: np.random.Generator, L: float, n_waves: int, max_mode: int) -> SineSeries:
    modes = rng.integers(1, max_mode + 1, size=n_waves)
    amplitudes = rng.uniform(-1.0, 1.0, size=n_waves)
    total = np.sum(np.abs(amplitudes))
    return SineSeries(amplitudes / total if total > 0 else amplitudes, modes, L)


def draw_string_problem(seed_seq: np.random.SeedSequence, a: float, task: TaskSpec) -> StringProblem:
    """Sine-series displacement and a time-independent sine-series load; the string starts at rest."""
    rng = np.random.default_rng(seed_seq)
    L = task.string_length
    T = task.grid.t_range[1]
    phi = _random_sine_series(rng, L, task.ic_waves, task.ic_max_mode)
    load = _random_sine_series(rng, L, task.ic_waves, task.ic_max_mode)
    return StringProblem(a=a, L=L, T=T, phi=phi, psi=None, f=lambda x, t: 0.5 * load(x))


class DatasetService:
    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max(1, max_workers or settings.UNISOLVER_THREADS)

    def generate_dataset(self, task: TaskSpec, n_samples: Optional[int] = None,
                         rng_seed: Optional[int] = None) -> Dataset:
        """
        Build a dataset deterministically from (task, n_samples, seed).

        Samples are assigned to condition groups round-robin. A diverged solve
        is redrawn with the next retry stream; if more than
        `task.max_divergence_rate` of all attempts diverge, generation aborts.
        """
        n_samples = n_samples if n_samples is not None else task.n_samples
        seed = rng_seed if rng_seed is not None else task.seed
        groups = task.condition_groups()
        logger.info(f"Generating {n_samples} {task.family.value} samples over {len(groups)} condition groups (seed {seed})")

        def work(index: int) -> Tuple[Sample, int]:
            return self._generate_one(task, groups[index % len(groups)], seed, index)

        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            results = list(pool.map(work, range(n_samples)))

        samples = [sample for sample, _ in results]
        retries = int(sum(r for _, r in results))
        rate = retries / (n_samples + retries)
        if retries:
            logger.warning(f"{retries} diverged solves were redrawn (divergence rate {rate:.1%})")
        if rate > task.max_divergence_rate:
            raise GenerationAbortedError(
                f"divergence rate {rate:.1%} exceeds the allowed {task.max_divergence_rate:.1%}"
            )

        header = DatasetHeader(
            family=task.family,
            grid=task.grid,
            coefficient_names=task.coefficient_names,
            condition_groups=groups,
            retries=retries,
            storage_dtype=task.storage_dtype,
        )
        return Dataset(header=header, samples=samples)

    def _generate_one(self, task: TaskSpec, group: ConditionGroup, seed: int, index: int) -> Tuple[Sample, int]:
        for retry in range(task.max_retries_per_sample + 1):
            seed_seq = sample_seed(seed, index, retry)
            try:
                sample = self._build_sample(task, group, seed_seq)
            except DivergedError as exc:
                logger.info(f"Sample {index} retry {retry} (sub-seed {seed_seq.spawn_key}) diverged: {exc.message}")
                continue
            violations = component_service.validate(sample, task.grid)
            if violations:
                raise GenerationAbortedError(f"sample {index} failed validation: {violations}")
            return sample, retry
        raise GenerationAbortedError(f"sample {index} diverged {task.max_retries_per_sample + 1} times in a row")

    def _build_sample(self, task: TaskSpec, group: ConditionGroup, seed_seq: np.random.SeedSequence) -> Sample:
        builders = {
            Family.ADVECTION: self._advection_sample,
            Family.FAMILY1D: self._family1d_sample,
            Family.HETERNS_MINI: self._heterns_sample,
            Family.STRING: self._string_sample,
        }
        return builders[task.family](task, group, seed_seq)

    def _advection_sample(self, task: TaskSpec, group: ConditionGroup, seed_seq) -> Sample:
        rng = np.random.default_rng(seed_seq)
        grid = task.grid
        length = grid.x_range[1] - grid.x_range[0]
        u0 = sample_trig_superposition(rng, length, task.ic_waves, task.ic_max_mode)(grid.x_points())
        beta = group.values["beta"]
        components = PDEComponents(
            symbols=ADVECTION_SYMBOLS,
            coefficients={"beta": beta},
            boundary=BoundarySpec.periodic(1),
        )
        return Sample(input=u0, output=solve_advection_exact(u0, beta, grid), components=components,
                      split=group.split, family=Family.ADVECTION)

    def _family1d_sample(self, task: TaskSpec, group: ConditionGroup, seed_seq) -> Sample:
        spec = sample_1d_pde(seed_seq, task.grid, task.ic_waves, task.ic_max_mode)
        output = solve_1d_family(spec)
        return Sample(input=spec.g.copy(), output=output, components=family_components(spec),
                      split=group.split, family=Family.FAMILY1D)

    def _heterns_sample(self, task: TaskSpec, group: ConditionGroup, seed_seq) -> Sample:
        rng = np.random.default_rng(seed_seq)
        n = task.grid.n_x
        nu, omega = group.values["nu"], group.values["omega"]
        force = heterns_force(omega, n)
        spec = HeterNSSpec(
            nu=nu,
            omega=omega,
            w0=gaussian_random_field(rng, n, task.grf_max_mode),
            force=force,
            T=task.grid.t_range[1] - task.grid.t_range[0],
            n_t=task.grid.n_t,
        )
        frames = solve_ns2d_spectral(spec, SpectralTorus(n))
        components = PDEComponents(
            symbols=HETERNS_SYMBOLS,
            coefficients={"nu": nu, "omega": omega},
            boundary=BoundarySpec.periodic(2),
            force=force,
        )
        return Sample(input=frames[:task.frames_in], output=frames[task.frames_in:], components=components,
                      split=group.split, family=Family.HETERNS_MINI)

    def _string_sample(self, task: TaskSpec, group: ConditionGroup, seed_seq) -> Sample:
        problem = draw_string_problem(seed_seq, group.values["a"], task)
        xs = task.grid.x_points()
        ts = task.grid.t_points()
        fixed = RobinParams(alpha=1.0, beta=0.0, gamma=0.0)
        components = PDEComponents(
            symbols=STRING_SYMBOLS,
            coefficients={"a": problem.a},
            boundary=BoundarySpec(
                sides={Side.LEFT: BoundaryKind.DIRICHLET, Side.RIGHT: BoundaryKind.DIRICHLET},
                robin={Side.LEFT: fixed, Side.RIGHT: fixed},
            ),
            force=problem.f(xs, 0.0),
            boundary_values=np.zeros(task.grid.n_x),
        )
        return Sample(input=problem.phi(xs), output=evaluate_grid(problem, xs, ts, task.quad),
                      components=components, split=group.split, family=Family.STRING)


dataset_service = DatasetService()


def generate_dataset(task: TaskSpec, n_samples: Optional[int] = None, rng_seed: Optional[int] = None) -> Dataset:
    return dataset_service.generate_dataset(task, n_samples, rng_seed)

