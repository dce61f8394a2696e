# kinetics.py
"""Parameters, reaction kinetics and homogeneous steady state of the delayed
ligand-internalisation (LI) Schnakenberg model.

    u_t = d_u/L_x^2 u_xx + d_u/L_y^2 u_yy + a - u - 2u^2 v + 3 û^2 v̂
    v_t = d_v/L_x^2 v_xx + d_v/L_y^2 v_yy + b - u^2 v

with û = u(x, y, t - tau) and v̂ = v(x, y, t - tau) on the unit square.
"""
import logging
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from exceptions import invalid_value_from

logger = logging.getLogger(__name__)


class ModelParams(BaseModel):
    """Full parameter tuple of the LI model. Validated once here; every other
    module trusts an instance it is handed."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    a: float = Field(default=0.1, gt=0, description="Production rate of the activator")
    b: float = Field(default=0.9, gt=0, description="Production rate of the inhibitor")
    d_u: float = Field(default=0.01, gt=0, description="Activator diffusion coefficient")
    d_v: float = Field(default=0.2, gt=0, description="Inhibitor diffusion coefficient")
    L_x: float = Field(default=1.0, gt=0, description="Horizontal domain scale")
    L_y: float = Field(default=0.2, gt=0, description="Vertical domain scale")
    tau: float = Field(default=0.0, ge=0, description="Gene-expression delay")

    def replace(self, **changes) -> "ModelParams":
        """Copy with some fields changed, re-running validation."""
        return make_params(**{**self.model_dump(), **changes})


class SteadyState(BaseModel):
    model_config = ConfigDict(frozen=True)

    u_star: float = Field(description="Activator equilibrium concentration")
    v_star: float = Field(description="Inhibitor equilibrium concentration")


@dataclass(frozen=True)
class KineticsJacobian:
    """Partial derivatives of (f, g) at the steady state, split into the
    instantaneous and the delayed arguments."""

    f_u: float
    f_v: float
    f_u_delayed: float
    f_v_delayed: float
    g_u: float
    g_v: float


def make_params(**values) -> ModelParams:
    """Build ModelParams, raising InvalidValue instead of pydantic's error."""
    try:
        return ModelParams(**values)
    except ValidationError as e:
        raise invalid_value_from(e, "model parameters") from e


def steady_state(params: ModelParams) -> SteadyState:
    total = params.a + params.b
    return SteadyState(u_star=total, v_star=params.b / total**2)


def reaction_rates(u, v, u_delayed, v_delayed, params: ModelParams):
    """Reaction parts (f, g). Works on scalars and numpy arrays alike."""
    u2v = u * u * v
    f = params.a - u - 2.0 * u2v + 3.0 * u_delayed * u_delayed * v_delayed
    g = params.b - u2v
    return f, g


def linearization(params: ModelParams) -> KineticsJacobian:
    ss = steady_state(params)
    uv = ss.u_star * ss.v_star
    u2 = ss.u_star**2
    return KineticsJacobian(
        f_u=-1.0 - 4.0 * uv,
        f_v=-2.0 * u2,
        f_u_delayed=6.0 * uv,
        f_v_delayed=3.0 * u2,
        g_u=-2.0 * uv,
        g_v=-u2,
    )
