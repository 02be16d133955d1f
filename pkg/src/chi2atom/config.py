"""Experiment configuration models.

One pydantic model per named experiment; unknown keys are rejected
everywhere (``extra="forbid"``), all rates are non-negative, and every
field is expressed in kappa_ref units. The same models validate CLI config
files and service requests.
"""

from __future__ import annotations

from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LevelsParams(StrictModel):
    """Eigenlevels of the N-excitation blocks of the artificial atom."""

    kind: Literal["degenerate", "non-degenerate"] = "degenerate"
    g: float = Field(1.0, ge=0)
    n_max: int = Field(2, ge=0)
    delta_a: float = 0.0
    delta_b: float = 0.0
    delta_c: float = 0.0


class SpectroscopyParams(StrictModel):
    """Steady-state |20> population versus drive detuning (vacuum Rabi splitting)."""

    g_values: list[float] = Field(default=[4.0, 8.0], min_length=1)
    drive_amplitude: float = Field(0.2, ge=0)
    kappa_a: float = Field(1.0, ge=0)
    kappa_c: float = Field(1.0, ge=0)
    delta_max: float = Field(9.0, gt=0)
    n_delta: int = Field(181, ge=16)

    @field_validator("g_values")
    @classmethod
    def _positive(cls, v):
        if any(g < 0 for g in v):
            raise ValueError("couplings must be non-negative")
        return v


class RabiParams(StrictModel):
    """Driven |10> population oscillation of the blockaded atom."""

    g: float = Field(80.0, ge=0)
    drive_amplitudes: list[float] = Field(default=[10.0, 20.0], min_length=1)
    kappa_a: float = Field(1.0, ge=0)
    kappa_c: float = Field(1.0, ge=0)
    t_end: float = Field(1.0, gt=0)
    n_t: int = Field(1601, ge=32)


class Scatter2Params(StrictModel):
    """Two-photon scattering of a separable Gaussian input."""

    g: float = Field(3.0, ge=0)
    kappa_a0: float = Field(1.0, ge=0)
    kappa_a1: float = Field(3.0, ge=0)
    kappa_c0: float = Field(1.0, ge=0)
    kappa_c1: float = Field(1.0, ge=0)
    sigma: float = Field(0.5, gt=0)
    n_grid: int = Field(201, ge=16)
    grid_halfwidth: float | None = Field(None, gt=0)
    with_oracle: bool = False


class StoreParams(StrictModel):
    """Single-photon storage through the antenna with the shaped drive."""

    kappa_d0: float = Field(2.0, ge=0)
    kappa_d1: float = Field(2000.0, ge=0)
    kappa_b: float = Field(0.0, ge=0)
    duration: float = Field(10.0, gt=0)
    pulse_shape: Literal["gaussian", "sine", "sine2", "skew", "flattop"] = "gaussian"
    n_samples: int = Field(4001, ge=128)
    drive_cap_factor: float = Field(5.0, gt=0)
    decay_matched_drive: bool = False


class RetrieveParams(StrictModel):
    """Single-photon retrieval onto a target pulse shape."""

    kappa_d0: float = Field(2.0, ge=0)
    kappa_d1: float = Field(2000.0, ge=0)
    kappa_b: float = Field(0.0, ge=0)
    duration: float = Field(10.0, gt=0)
    pulse_shape: Literal["gaussian", "sine", "sine2", "skew", "flattop"] = "gaussian"
    n_samples: int = Field(4001, ge=128)
    drive_cap_factor: float = Field(5.0, gt=0)
    decay_matched_drive: bool = False


class CzParams(StrictModel):
    """Full control-Z sequence at one nonlinear coupling."""

    g: float = Field(100.0, gt=0)
    pulse_duration: float = Field(10.0, gt=0)
    kappa_a0: float = Field(1.0, ge=0)
    kappa_b0: float = Field(1.0, ge=0)
    kappa_c0: float = Field(1.0, ge=0)
    kappa_d0: float = Field(2.0, ge=0)
    kappa_d1: float = Field(2000.0, ge=0)
    hold: float | None = Field(None, ge=0)
    scatter_drive: float | None = Field(None, gt=0)
    drive_cap: float | None = Field(None, gt=0)
    samples_per_window: int = Field(1600, ge=256)


class SweepParams(CzParams):
    """Log-spaced sweep of the control-Z over the nonlinear coupling."""

    g_min: float = Field(1.0, gt=0)
    g_max: float = Field(200.0, gt=0)
    n_g: int = Field(10, ge=2)
    jobs: int = Field(1, ge=1)


ExperimentName = Literal["levels", "spectroscopy", "rabi", "scatter2",
                         "store", "retrieve", "cz", "sweep"]

ParamsUnion = Union[LevelsParams, SpectroscopyParams, RabiParams, Scatter2Params,
                    StoreParams, RetrieveParams, CzParams, SweepParams]

PARAMS_BY_EXPERIMENT: dict[str, type[StrictModel]] = {
    "levels": LevelsParams,
    "spectroscopy": SpectroscopyParams,
    "rabi": RabiParams,
    "scatter2": Scatter2Params,
    "store": StoreParams,
    "retrieve": RetrieveParams,
    "cz": CzParams,
    "sweep": SweepParams,
}


class ExperimentConfig(StrictModel):
    """A named experiment plus its parameter block.

    The params block is validated against the experiment's model during
    construction, so unknown keys fail before any computation; defaults are
    materialized into ``params``.
    """

    experiment: ExperimentName
    params: dict = Field(default_factory=dict)

    @model_validator(mode="after")
    def _resolve_params(self):
        model = PARAMS_BY_EXPERIMENT[self.experiment]
        try:
            self.params = model.model_validate(self.params).model_dump()
        except ValidationError as exc:
            raise ValueError(f"invalid parameters for experiment {self.experiment!r}: {exc}") from exc
        return self

    def resolved_params(self) -> StrictModel:
        return PARAMS_BY_EXPERIMENT[self.experiment].model_validate(self.params)

    def resolved(self) -> "ExperimentConfig":
        return ExperimentConfig(experiment=self.experiment, params=dict(self.params))
