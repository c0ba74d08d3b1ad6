"""Path loss, Rayleigh fading, device placement and SINR."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class PathLossModel:
    beta: float = 3.6
    alpha: float = 1.0
    r_crit: float = 1.0

    def __post_init__(self):
        if self.beta <= 2.0:
            raise ValueError("path-loss exponent must exceed 2")
        if self.r_crit <= 0.0:
            raise ValueError("critical distance must be positive")


@dataclass(frozen=True)
class FadingModel:
    # exponential rate; mean power gain is 1 / lam
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError("fading rate must be positive")


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    noise_power_dbm: float
    target_sinr_db: float

    @property
    def snr_1m(self) -> float:
        """Linear transmit-to-noise ratio ``rho_tm / gamma``."""
        return float(db_to_linear(self.tx_power_dbm - self.noise_power_dbm))

    @property
    def noise_to_tx(self) -> float:
        return 1.0 / self.snr_1m

    @property
    def zeta(self) -> float:
        return float(db_to_linear(self.target_sinr_db))


@dataclass(frozen=True)
class CellGeometry:
    r_min: float
    r_max: float

    def __post_init__(self):
        if not (self.r_max > self.r_min > 0.0):
            raise ValueError("cell needs r_max > r_min > 0")


def path_loss(model: PathLossModel, r):
    r = np.maximum(np.asarray(r, dtype=float), model.r_crit)
    g = model.alpha * r ** (-model.beta)
    return g if g.ndim else float(g)


def r_max_from_budget(budget: LinkBudget, model: PathLossModel) -> float:
    """Distance at which the noise-limited SNR equals the target exactly."""
    margin_db = budget.tx_power_dbm - budget.noise_power_dbm - budget.target_sinr_db
    if margin_db <= 0.0:
        raise ValueError(f"infeasible link budget ({margin_db:g} dB margin)")
    r = (model.alpha * db_to_linear(margin_db)) ** (1.0 / model.beta)
    return float(r)


def radius_from_uniform(cell: CellGeometry, u):
    """Inverse cdf of the area-uniform radius on the annulus."""
    u = np.asarray(u, dtype=float)
    r = np.sqrt(cell.r_min**2 + u * (cell.r_max**2 - cell.r_min**2))
    return r if r.ndim else float(r)


def sample_device_radius(cell: CellGeometry, rng: np.random.Generator, size=None):
    return radius_from_uniform(cell, rng.random(size))


def fading_from_uniform(model: FadingModel, u):
    u = np.asarray(u, dtype=float)
    h = -np.log1p(-u) / model.lam
    return h if h.ndim else float(h)


def sample_fading(model: FadingModel, rng: np.random.Generator, size=None):
    return rng.exponential(1.0 / model.lam, size)


def sinr_faded(
    h0: float,
    r0: float,
    interferers: Iterable[tuple[float, float, float]],
    budget: LinkBudget,
    model: PathLossModel,
) -> float:
    """SINR of the packet of interest; interferers are ``(h_k, r_k, X_k)`` triples."""
    interference = sum(h * path_loss(model, r) * x for h, r, x in interferers)
    return h0 * path_loss(model, r0) / (interference + budget.noise_to_tx)


def sinr_power_controlled(x_sigma, snr):
    """SINR when every packet arrives with the same energy density."""
    if np.any(np.asarray(snr) <= 0):
        raise ValueError("snr must be positive")
    return 1.0 / (x_sigma + 1.0 / snr)
