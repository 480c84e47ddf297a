"""Ogden hyperelastic model for the printed filament and unstretched lengths.

Uniaxial, incompressible loading: the transverse stretches are
``lambda_2 = lambda_3 = lambda ** -0.5`` so each Ogden term contributes
``mu_i * (lambda**(alpha_i - 1) - lambda**(-alpha_i/2 - 1))`` to the nominal
stress.  Stress is in MPa, area in mm^2, so ``F = sigma * A`` is in N.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StressRangeError, ValidationError
from .formfind import FormFindResult

# TPU constants fitted to uniaxial tests; A from filament volume conservation.
TPU_MU = (81634.0, -5.64, -6.26)
TPU_ALPHA = (0.0024, 7.04, -13.6)
TPU_FILAMENT_AREA = 1.75  # mm^2, datasheet value
TPU_FILAMENT_LENGTH = 1.62  # m of filament consumed
TPU_EDGE_LENGTH = 36.22  # m of edge printed


def cross_section_area(A_f: float, L_f: float, L_e: float) -> float:
    """Effective printed-edge area from conservation of volume, ``A_f * L_f / L_e``."""
    if not (A_f > 0 and L_f > 0 and L_e > 0):
        raise ValidationError("cross_section_area inputs must be positive")
    return A_f * L_f / L_e


@dataclass(frozen=True)
class MaterialModel:
    ogden_mu: tuple = TPU_MU
    ogden_alpha: tuple = TPU_ALPHA
    area: float = field(default_factory=lambda: cross_section_area(
        TPU_FILAMENT_AREA, TPU_FILAMENT_LENGTH, TPU_EDGE_LENGTH))
    filament_area: float = TPU_FILAMENT_AREA
    lambda_max: float = 1.5

    def __post_init__(self):
        mu = tuple(float(v) for v in self.ogden_mu)
        al = tuple(float(v) for v in self.ogden_alpha)
        if len(mu) != len(al) or not mu:
            raise ValidationError("ogden_mu and ogden_alpha must have equal, nonzero length")
        object.__setattr__(self, "ogden_mu", mu)
        object.__setattr__(self, "ogden_alpha", al)
        if not self.area > 0 or not self.filament_area > 0:
            raise ValidationError("areas must be positive")
        if not self.lambda_max > 1:
            raise ValidationError("lambda_max must exceed 1")
        lam = np.linspace(1.0, self.lambda_max, 2001)
        s = _nominal_stress(self._mu, self._alpha, lam)
        if np.any(np.diff(s) <= 0):
            raise ValidationError("Ogden stress is not strictly increasing on (1, lambda_max]")

    @property
    def _mu(self) -> np.ndarray:
        return np.asarray(self.ogden_mu)

    @property
    def _alpha(self) -> np.ndarray:
        return np.asarray(self.ogden_alpha)

    @property
    def extrusion_ratio(self) -> float:
        """Filament length fed per mm of printed edge."""
        return self.area / self.filament_area

    @property
    def sigma_max(self) -> float:
        return float(ogden_stress(self, self.lambda_max))


def _nominal_stress(mu, alpha, lam):
    lam = np.asarray(lam, dtype=float)[..., None]
    terms = mu * (lam ** (alpha - 1.0) - lam ** (-alpha / 2.0 - 1.0))
    return terms.sum(axis=-1)


def strain_energy(model: MaterialModel, lam):
    """``S = sum mu_i/alpha_i (l1^a + l2^a + l3^a - 3)`` with ``l2 = l3 = l1**-0.5``."""
    lam = np.asarray(lam, dtype=float)[..., None]
    mu, al = model._mu, model._alpha
    return (mu / al * (lam ** al + 2.0 * lam ** (-al / 2.0) - 3.0)).sum(axis=-1)


def _check_stretch(model, lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)) or np.any(lam > model.lambda_max):
        raise ValidationError(f"stretch outside (0, {model.lambda_max}]")
    return lam


def ogden_stress(model: MaterialModel, lam):
    """Nominal (first Piola) uniaxial stress in MPa at stretch ``lam``."""
    lam = _check_stretch(model, lam)
    out = _nominal_stress(model._mu, model._alpha, lam)
    return float(out) if out.ndim == 0 else out


def ogden_tangent(model: MaterialModel, lam):
    """d(sigma)/d(lambda), used by the equilibrium solver."""
    lam = np.asarray(lam, dtype=float)[..., None]
    mu, al = model._mu, model._alpha
    d = mu * ((al - 1.0) * lam ** (al - 2.0) + (al / 2.0 + 1.0) * lam ** (-al / 2.0 - 2.0))
    out = d.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def stretch_from_stress(model: MaterialModel, sigma, tol: float = 1e-14):
    """Invert the stress curve by bisection on ``lambda in [1, lambda_max]``."""
    sigma = np.asarray(sigma, dtype=float)
    smax = model.sigma_max
    if np.any(sigma < 0) or np.any(~np.isfinite(sigma)):
        raise ValidationError("stress must be finite and nonnegative")
    if np.any(sigma > smax):
        raise StressRangeError(
            f"stress exceeds calibrated range (sigma_max = {smax:.4g} MPa)", sigma_max=smax)
    lo = np.ones_like(sigma)
    hi = np.full_like(sigma, model.lambda_max)
    mu, al = model._mu, model._alpha
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        above = _nominal_stress(mu, al, mid) > sigma
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= tol):
            break
    lam = 0.5 * (lo + hi)
    lam = np.where(sigma == 0, 1.0, lam)
    return float(lam) if lam.ndim == 0 else lam


def strain_from_stress(model: MaterialModel, sigma):
    """Engineering strain ``eps`` with ``ogden_stress(1 + eps) == sigma``."""
    lam = stretch_from_stress(model, sigma)
    return lam - 1.0


def unstretched_lengths(result: FormFindResult, model: MaterialModel,
                        area: Optional[float] = None) -> np.ndarray:
    """``l0 = l / (1 + eps(F/A))`` per cable; struts keep ``l0 = l``."""
    A = model.area if area is None else area
    net = result.network
    l = result.lengths
    sigma = result.tensions / A
    l0 = np.array(l, dtype=float)
    cable = ~net.is_strut
    if np.any(cable & (sigma < 0)):
        i = int(np.flatnonzero(cable & (sigma < 0))[0])
        raise StressRangeError(f"cable edge {i} is in compression (F = {result.tensions[i]:.4g} N)",
                               edge=i)
    smax = model.sigma_max
    over = np.flatnonzero(cable & (sigma > smax))
    if over.size:
        i = int(over[0])
        raise StressRangeError(
            f"edge {i}: stress {sigma[i]:.4g} MPa exceeds calibrated range "
            f"(sigma_max = {smax:.4g} MPa)", sigma_max=smax, edge=i)
    if cable.any():
        eps = np.atleast_1d(strain_from_stress(model, sigma[cable]))
        l0[cable] = l[cable] / (1.0 + eps)
    return l0


def material_to_dict(model: MaterialModel) -> dict:
    return {"mu": list(model.ogden_mu), "alpha": list(model.ogden_alpha),
            "area_mm2": model.area, "lambda_max": model.lambda_max,
            "filament_area_mm2": model.filament_area}


def material_from_dict(doc: dict) -> MaterialModel:
    try:
        return MaterialModel(
            ogden_mu=tuple(doc["mu"]), ogden_alpha=tuple(doc["alpha"]),
            area=float(doc["area_mm2"]), lambda_max=float(doc.get("lambda_max", 1.5)),
            filament_area=float(doc.get("filament_area_mm2", TPU_FILAMENT_AREA)))
    except KeyError as exc:
        raise ValidationError(f"material file missing field {exc}") from exc


PRESETS = {"tpu": MaterialModel}


def load_material(spec) -> MaterialModel:
    """A preset name (``"tpu"``), a path to a material JSON file, or a dict."""
    if spec is None:
        return MaterialModel()
    if isinstance(spec, MaterialModel):
        return spec
    if isinstance(spec, dict):
        return material_from_dict(spec)
    if str(spec) in PRESETS:
        return PRESETS[str(spec)]()
    with open(spec) as fh:
        return material_from_dict(json.load(fh))
