# backend/app/core/presets.py
"""Reference configurations: the full-size HeterNS model, desk-scale defaults and benchmark coefficient lists."""
from app.schemas.model_config import ModelConfig
from app.schemas.pde_components import Family, GridSpec
from app.schemas.task_spec import TaskSpec
from app.schemas.train_config import TrainConfig
from app.services.solvers.navier_stokes import OOD_OMEGAS, TRAIN_OMEGAS

HETERNS_TRAIN_NUS = (1e-5, 5e-5, 1e-4, 5e-4, 1e-3)
HETERNS_OOD_NUS = (8e-6, 3e-5, 8e-5, 3e-4, 8e-4, 2e-3)
HETERNS_TRAIN_OMEGAS = TRAIN_OMEGAS
HETERNS_OOD_OMEGAS = OOD_OMEGAS

ALPHA_SENSITIVITY = (0.25, 0.5, 0.75)

ADVECTION_TRAIN_BETAS = (0.2, 0.5, 1.0)
ADVECTION_OOD_BETAS = (0.35, 0.75)

FULL_HETERNS_MODEL = ModelConfig(
    task_mode="frames",
    d_feature=256,
    n_layers=8,
    n_heads=8,
    d_head=32,
    patch=4,
    in_channels=10,
    out_channels=1,
    d_cond=256,
)

DESK_MODEL = ModelConfig()

DESK_TRAIN = TrainConfig(batch_size=16, epochs=200, lr_init=5e-4)

FULL_HETERNS_TRAIN = TrainConfig(batch_size=16, epochs=300, lr_init=5e-4)


def advection_task(n_samples: int = 400, seed: int = 0, n_x: int = 32, n_t: int = 16) -> TaskSpec:
    """beta-conditioned advection on the periodic unit interval with held-out betas."""
    return TaskSpec(
        family=Family.ADVECTION,
        n_samples=n_samples,
        seed=seed,
        grid=GridSpec(dims=1, n_x=n_x, n_t=n_t, x_range=(0.0, 1.0), t_range=(0.0, 1.0), periodic=True),
        conditions={"beta": list(ADVECTION_TRAIN_BETAS)},
        ood_conditions={"beta": list(ADVECTION_OOD_BETAS)},
    )


def heterns_mini_task(n_samples: int = 60, seed: int = 0, n: int = 64, nus=(1e-3,), omegas=TRAIN_OMEGAS,
                      ood_omegas=(), frames_in: int = 10, frames_out: int = 1, T: float = 1.1) -> TaskSpec:
    return TaskSpec(
        family=Family.HETERNS_MINI,
        n_samples=n_samples,
        seed=seed,
        grid=GridSpec(dims=2, n_x=n, n_y=n, n_t=frames_in + frames_out, t_range=(0.0, T), periodic=True),
        conditions={"nu": list(nus), "omega": list(omegas)},
        ood_conditions={"omega": list(ood_omegas)} if ood_omegas else {},
        frames_in=frames_in,
        frames_out=frames_out,
    )
