"""Sigfox and LoRaWAN parameter packs and their composite evaluators.

Sigfox is a single 2D game (ultra narrow band packets at random frequencies)
evaluated with path loss and fading. LoRaWAN is seven orthogonal 1D games,
one per spreading factor, each with three channels, evaluated under perfect
power control; devices in the annulus ``(r_{SF-1}, r_SF]`` use spreading
factor SF.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .channel import CellGeometry, FadingModel, LinkBudget, PathLossModel, r_max_from_budget
from .engine import Scenario
from .geometry import ResourceGrid, collision_probability
from .mixed import ConvolutionPlan, MixedDistribution, ccdf, convolve_power, from_overlap_law

SPREADING_FACTORS = tuple(range(6, 13))


@dataclass(frozen=True)
class SigfoxPreset:
    T: float = 617.0
    F: float = 40e3
    dt: float = 1.76
    df: float = 100.0
    tx_power_dbm: float = 14.0
    noise_power_dbm: float = -154.0
    target_sinr_db: float = 33.0
    beta: float = 3.6
    r_crit: float = 1.0
    alpha: float = 1.0
    fading_rate: float = 1.0
    r_min: float = 1.0
    channels: int = 1
    # published cell radius, kept for reference only; r_max is recomputed from the budget
    reported_r_max_km: float = 5.2

    @property
    def grid(self) -> ResourceGrid:
        return ResourceGrid(T=self.T, F=self.F, dt=self.dt, df=self.df)

    @property
    def budget(self) -> LinkBudget:
        return LinkBudget(self.tx_power_dbm, self.noise_power_dbm, self.target_sinr_db)

    @property
    def path(self) -> PathLossModel:
        return PathLossModel(beta=self.beta, alpha=self.alpha, r_crit=self.r_crit)

    @property
    def r_max(self) -> float:
        return r_max_from_budget(self.budget, self.path)


def sigfox_scenario(preset: SigfoxPreset, n_devices: int, n_rep: int = 1) -> Scenario:
    return Scenario(
        grid=preset.grid,
        budget=preset.budget,
        path=preset.path,
        fading=FadingModel(preset.fading_rate),
        cell=CellGeometry(preset.r_min, preset.r_max),
        n_devices=n_devices,
        n_rep=n_rep,
    )


@dataclass(frozen=True)
class SfRow:
    sf: int
    sensitivity_dbm: float
    zeta_db: float
    range_km: float
    p_sf: float
    payload_bytes: int
    dt_s: float
    bitrate_kbps: float
    period_s: float


LORA_TABLE = (
    SfRow(6, -121, 21, 1.13, 0.13, 242, 0.233, 8.309, 23.3),
    SfRow(7, -124, 18, 1.37, 0.06, 242, 0.400, 4.840, 40.0),
    SfRow(8, -127, 15, 1.67, 0.09, 242, 0.707, 2.738, 70.7),
    SfRow(9, -130, 12, 2.02, 0.13, 115, 0.677, 1.359, 67.7),
    SfRow(10, -133, 9, 2.45, 0.19, 51, 0.698, 0.585, 69.8),
    SfRow(11, -135, 7, 2.78, 0.17, 51, 1.561, 0.261, 156.1),
    SfRow(12, -137, 5, 3.16, 0.23, 51, 2.793, 0.146, 279.3),
)


@dataclass(frozen=True)
class LoRaPreset:
    rows: tuple = LORA_TABLE
    channels: int = 3
    bandwidth_hz: float = 125e3
    tx_power_dbm: float = 14.0
    noise_power_dbm: float = -117.0
    shadow_margin_db: float = 10.0
    penetration_loss_db: float = 15.0
    beta: float = 3.6
    r_min: float = 1.0
    period_factor: float = 100.0
    # "table": annuli from the printed ranges; "budget": recomputed ranges
    range_source: str = "table"
    # "random": uniform channel per device; "equal": N_SF/3 devices per channel
    channel_split: str = "random"
    # "rounded": round(N p_SF) devices per SF; "binomial": each other device lands
    # in the tagged device's annulus with probability p_SF
    count_model: str = "rounded"

    def __post_init__(self):
        if [r.sf for r in self.rows] != list(SPREADING_FACTORS):
            raise ValueError("need one row per spreading factor 6..12")
        if self.range_source not in ("table", "budget"):
            raise ValueError(f"unknown range_source {self.range_source!r}")
        if self.channel_split not in ("random", "equal"):
            raise ValueError(f"unknown channel_split {self.channel_split!r}")
        if self.count_model not in ("rounded", "binomial"):
            raise ValueError(f"unknown count_model {self.count_model!r}")

    @property
    def path(self) -> PathLossModel:
        return PathLossModel(beta=self.beta)

    def zeta_db(self) -> np.ndarray:
        """Target SINR per SF rebuilt from sensitivities and margins."""
        margins = self.shadow_margin_db + self.penetration_loss_db
        return np.array([r.sensitivity_dbm - self.noise_power_dbm + margins for r in self.rows])

    def budget(self, row: SfRow) -> LinkBudget:
        return LinkBudget(self.tx_power_dbm, self.noise_power_dbm, row.zeta_db)

    def ranges_m(self) -> np.ndarray:
        if self.range_source == "table":
            return np.array([r.range_km * 1e3 for r in self.rows])
        return np.array([r_max_from_budget(self.budget(r), self.path) for r in self.rows])

    def p_sf(self) -> np.ndarray:
        return annulus_probabilities(self.ranges_m(), self.r_min)

    def periods(self) -> np.ndarray:
        return np.array([self.period_factor * r.dt_s for r in self.rows])

    def grid(self, row: SfRow) -> ResourceGrid:
        return ResourceGrid(T=self.period_factor * row.dt_s, F=self.bandwidth_hz, dt=row.dt_s,
                            df=self.bandwidth_hz)

    def collision_probabilities(self) -> np.ndarray:
        return np.array([collision_probability(self.grid(r)) for r in self.rows])


def annulus_probabilities(ranges, r_min: float) -> np.ndarray:
    """Area fraction of each annulus ``(r_{i-1}, r_i]`` with ``r_{-1} = r_min``."""
    r = np.concatenate(([r_min], np.asarray(ranges, dtype=float)))
    if np.any(np.diff(r) <= 0):
        raise ValueError("ranges must be strictly increasing and above r_min")
    area = np.diff(r**2)
    p = area / area.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return p


def _channel_law(preset: LoRaPreset, row: SfRow, bins: int) -> MixedDistribution:
    law = from_overlap_law(preset.grid(row), bins)
    if preset.channel_split == "equal":
        return law
    share = 1.0 / preset.channels
    return MixedDistribution(1.0 - share * (1.0 - law.atom0), law.support_max, law.mass * share)


def lorawan_op_per_sf(preset: LoRaPreset, n_devices: int, n_rep: int = 1, theta=0.0,
                      bins: int = 256) -> np.ndarray:
    """Outage per spreading factor under perfect power control.

    ``theta`` (scalar or one value per SF) is the tolerated aggregate overlap;
    at zero any overlap is fatal and the closed-form atom is used.
    """
    if n_devices < 1:
        raise ValueError("need at least one device")
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (len(preset.rows),))
    pcs = preset.collision_probabilities()
    p = preset.p_sf()
    out = np.empty(len(preset.rows))
    for i, row in enumerate(preset.rows):
        if theta[i] < 0:
            out[i] = 1.0
            continue
        c = pcs[i] if preset.channel_split == "equal" else pcs[i] / preset.channels
        if preset.count_model == "binomial":
            if theta[i] > 0:
                raise ValueError("nonzero theta needs count_model='rounded'")
            if preset.channel_split == "equal":
                raise ValueError("binomial counts assume random channel choice")
            out[i] = (-np.expm1((n_devices - 1) * np.log1p(-p[i] * c))) ** n_rep
            continue
        k = int(np.floor(n_devices * p[i] + 0.5))
        if preset.channel_split == "equal":
            k = int(np.floor(k / preset.channels + 0.5))
        k = max(k - 1, 0)
        if k == 0:
            out[i] = 0.0
        elif theta[i] == 0.0:
            out[i] = (-np.expm1(k * np.log1p(-c))) ** n_rep
        else:
            law = convolve_power(_channel_law(preset, row, bins), ConvolutionPlan(k, bins_per_unit=bins))
            out[i] = ccdf(law, theta[i]) ** n_rep
    return out


def lorawan_throughput(preset: LoRaPreset, n_devices: int, n_rep: int = 1, theta=0.0):
    """Total and per-SF delivered packets per second."""
    op = lorawan_op_per_sf(preset, n_devices, n_rep, theta)
    per_sf = preset.channels * n_devices * preset.p_sf() * (1.0 - op) / (preset.periods() * n_rep)
    return float(per_sf.sum()), per_sf


def lorawan_global_op(preset: LoRaPreset, n_devices: int, n_rep: int = 1, theta=0.0) -> float:
    return float(np.dot(lorawan_op_per_sf(preset, n_devices, n_rep, theta), preset.p_sf()))


def lorawan_mc(preset: LoRaPreset, n_devices: int, trials: int, rng: np.random.Generator,
               n_rep: int = 1):
    """Direct simulation of the LoRaWAN cell at ``theta = 0``.

    The tagged device falls in annulus SF with probability ``p_SF``; the other
    ``N - 1`` devices are spread multinomially over the annuli and uniformly
    over the channels, and placed uniformly in time. Returns per-SF outage,
    the global outage and its standard error.
    """
    p = preset.p_sf()
    sf_idx = rng.choice(len(p), size=trials, p=p)
    co_sf = rng.binomial(n_devices - 1, p[sf_idx])
    if preset.channel_split == "equal":
        same = co_sf // preset.channels
    else:
        same = rng.binomial(co_sf, 1.0 / preset.channels)
    spans = np.array([preset.grid(r).n_t - 1.0 for r in preset.rows])
    span = spans[sf_idx]
    u0 = rng.random(trials) * span
    owner = np.repeat(np.arange(trials), same)
    uk = rng.random(owner.size) * span[owner]
    hit = np.abs(uk - u0[owner]) < 1.0
    lost = np.bincount(owner, weights=hit.astype(float), minlength=trials) > 0
    per_sf = np.array([lost[sf_idx == i].mean() if np.any(sf_idx == i) else np.nan for i in range(len(p))])
    counts = np.bincount(sf_idx, minlength=len(p))
    op_sf = per_sf**n_rep
    glob = float(np.dot(p, op_sf))
    var_q = per_sf * (1 - per_sf) / np.maximum(counts, 1)
    grad = p * n_rep * per_sf ** (n_rep - 1)
    se = float(np.sqrt(np.sum(grad**2 * var_q)))
    return op_sf, glob, max(se, 1.0 / trials)


# JSON documents

_PRESET_TYPES = {"sigfox": SigfoxPreset, "lorawan": LoRaPreset}


def preset_to_dict(preset) -> dict:
    kind = "sigfox" if isinstance(preset, SigfoxPreset) else "lorawan"
    d = dataclasses.asdict(preset)
    if kind == "lorawan":
        d["rows"] = [dataclasses.asdict(r) for r in preset.rows]
    return {"preset": kind, **d}


def _strict(cls, data: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown fields for {cls.__name__}: {sorted(unknown)}")
    return data


def preset_from_dict(data: dict):
    data = dict(data)
    kind = data.pop("preset", None)
    if kind not in _PRESET_TYPES:
        raise ValueError(f"'preset' must be one of {sorted(_PRESET_TYPES)}")
    cls = _PRESET_TYPES[kind]
    _strict(cls, data)
    if kind == "lorawan" and "rows" in data:
        data["rows"] = tuple(SfRow(**_strict(SfRow, r)) for r in data["rows"])
    return cls(**data)


def preset_to_json(preset) -> str:
    return json.dumps(preset_to_dict(preset), indent=2, sort_keys=True) + "\n"


def preset_from_json(text: str):
    return preset_from_dict(json.loads(text))


def get_preset(name: str):
    try:
        return _PRESET_TYPES[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}") from None
