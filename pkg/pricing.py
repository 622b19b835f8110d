#!/usr/bin/env python3
"""
TAC Pricing - Track access charge schemes and their decision-vector encoding
Maps proportional, path-based and time-varying schemes to λ_r(t)
"""

import bisect
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from network import Path

logger = logging.getLogger(__name__)

PROPORTIONAL = "proportional"
PATH_BASED = "path-based"
TIME_VARYING = "time-varying"
VARIANTS = (PROPORTIONAL, PATH_BASED, TIME_VARYING)

# Charges cannot exceed 25% of the operator's reference costs
DEFAULT_BOUNDS = (0.0, 0.25)


class SchemeError(ValueError):
    """Malformed TAC scheme or decision vector"""


@dataclass(frozen=True)
class TacScheme:
    """
    Decision variables p_r(t) as a fraction of c_ℓ.

    Only the fields of the active variant are populated: `p` for
    proportional, `path_values` for path-based, `grid` plus `grid_values`
    (one row of k interval values per path) for time-varying.
    """
    variant: str
    p: Optional[float] = None
    path_values: Dict[str, float] = field(default_factory=dict)
    grid: Tuple[float, ...] = ()
    grid_values: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    bounds: Tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SchemeError(f"Unknown scheme variant '{self.variant}'")
        lo, hi = self.bounds
        if lo > hi:
            raise SchemeError(f"Scheme bounds {self.bounds} are inverted")

        if self.variant == PROPORTIONAL:
            if self.p is None:
                raise SchemeError("Proportional scheme needs p")
            values = [self.p]
        elif self.variant == PATH_BASED:
            if not self.path_values:
                raise SchemeError("Path-based scheme needs at least one path value")
            values = list(self.path_values.values())
        else:
            self._check_grid()
            values = [v for row in self.grid_values.values() for v in row]

        out = [v for v in values if not lo <= v <= hi]
        if out:
            raise SchemeError(f"Charge fractions {out} fall outside bounds [{lo}, {hi}]")

    def _check_grid(self):
        grid = self.grid
        if len(grid) < 2 or grid[0] != 0.0:
            raise SchemeError("Time-varying grid must start at 0 and have at least one interval")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise SchemeError("Time-varying grid must be strictly increasing")
        if not self.grid_values:
            raise SchemeError("Time-varying scheme needs values for at least one path")
        k = len(grid) - 1
        for path_id, row in self.grid_values.items():
            if len(row) != k:
                raise SchemeError(f"Path '{path_id}' has {len(row)} interval values, grid has {k}")

    @classmethod
    def proportional(cls, p: float, bounds=DEFAULT_BOUNDS) -> 'TacScheme':
        return cls(PROPORTIONAL, p=float(p), bounds=tuple(bounds))

    @classmethod
    def path_based(cls, values: Dict[str, float], bounds=DEFAULT_BOUNDS) -> 'TacScheme':
        return cls(PATH_BASED, path_values={k: float(v) for k, v in values.items()}, bounds=tuple(bounds))

    @classmethod
    def time_varying(cls, grid: Sequence[float], values: Dict[str, Sequence[float]],
                     bounds=DEFAULT_BOUNDS) -> 'TacScheme':
        return cls(
            TIME_VARYING,
            grid=tuple(float(g) for g in grid),
            grid_values={k: tuple(float(v) for v in row) for k, row in values.items()},
            bounds=tuple(bounds),
        )

    @property
    def horizon(self) -> Optional[float]:
        return self.grid[-1] if self.grid else None

    def interval_index(self, t: float) -> int:
        """j-1 such that t ∈ [δ_{j-1}, δ_j); the last interval is closed"""
        if not self.grid:
            return 0
        if t < 0 or t > self.grid[-1]:
            raise SchemeError(f"t={t} lies outside the scheme horizon [0, {self.grid[-1]}]")
        idx = bisect.bisect_right(self.grid, t) - 1
        return min(idx, len(self.grid) - 2)

    def p_at(self, path_id: str, t: float) -> float:
        if self.variant == PROPORTIONAL:
            return self.p
        if self.variant == PATH_BASED:
            if path_id not in self.path_values:
                raise SchemeError(f"Path-based scheme has no value for path '{path_id}'")
            return self.path_values[path_id]
        if path_id not in self.grid_values:
            raise SchemeError(f"Time-varying scheme has no values for path '{path_id}'")
        return self.grid_values[path_id][self.interval_index(t)]

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'variant': self.variant, 'bounds': list(self.bounds)}
        if self.variant == PROPORTIONAL:
            data['p'] = self.p
        elif self.variant == PATH_BASED:
            data['values'] = dict(sorted(self.path_values.items()))
        else:
            data['grid'] = list(self.grid)
            data['values'] = {k: list(v) for k, v in sorted(self.grid_values.items())}
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TacScheme':
        variant = data.get('variant')
        bounds = tuple(data.get('bounds', DEFAULT_BOUNDS))
        try:
            if variant == PROPORTIONAL:
                return cls.proportional(data['p'], bounds)
            if variant == PATH_BASED:
                return cls.path_based(data['values'], bounds)
            if variant == TIME_VARYING:
                return cls.time_varying(data['grid'], data['values'], bounds)
        except KeyError as e:
            raise SchemeError(f"Scheme of variant '{variant}' is missing field {e}") from e
        raise SchemeError(f"Unknown scheme variant '{variant}'")


def lambda_at(scheme: TacScheme, path: Path, t: float, c_ell: float,
              t_max: Optional[float] = None) -> float:
    """λ_r(t) = p_r(t)·c_ℓ/τ̄_r in €/(t·km·h)"""
    horizon = t_max if t_max is not None else scheme.horizon
    if t < 0 or (horizon is not None and t > horizon):
        raise SchemeError(f"t={t} lies outside the horizon [0, {horizon}]")
    return scheme.p_at(path.id, t) * c_ell / path.reference_time_h


@dataclass(frozen=True)
class VectorLayout:
    """How a flat decision vector maps to (path, interval) coordinates"""
    variant: str
    path_ids: Tuple[str, ...] = ()
    grid: Tuple[float, ...] = ()
    bounds: Tuple[float, float] = DEFAULT_BOUNDS

    @property
    def dimension(self) -> int:
        if self.variant == PROPORTIONAL:
            return 1
        if self.variant == PATH_BASED:
            return len(self.path_ids)
        return len(self.path_ids) * (len(self.grid) - 1)

    def coordinates(self) -> List[Tuple[str, Optional[int]]]:
        if self.variant == PROPORTIONAL:
            return [('*', None)]
        if self.variant == PATH_BASED:
            return [(p, None) for p in self.path_ids]
        k = len(self.grid) - 1
        return [(p, j) for p in self.path_ids for j in range(k)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'variant': self.variant,
            'dimension': self.dimension,
            'coordinates': [[p, j] for p, j in self.coordinates()],
            'grid': list(self.grid),
            'bounds': list(self.bounds),
        }


@dataclass(frozen=True)
class DecisionVector:
    values: Tuple[float, ...]
    layout: VectorLayout

    def __post_init__(self):
        if len(self.values) != self.layout.dimension:
            raise SchemeError(
                f"Vector has {len(self.values)} values, layout expects {self.layout.dimension}"
            )


def layout_for(variant: str, path_ids: Sequence[str], grid: Sequence[float] = (),
               bounds=DEFAULT_BOUNDS) -> VectorLayout:
    if variant not in VARIANTS:
        raise SchemeError(f"Unknown scheme variant '{variant}'")
    if variant == TIME_VARYING and len(grid) < 2:
        raise SchemeError("Time-varying layout needs a grid")
    return VectorLayout(
        variant=variant,
        path_ids=tuple(sorted(path_ids)) if variant != PROPORTIONAL else (),
        grid=tuple(float(g) for g in grid) if variant == TIME_VARYING else (),
        bounds=tuple(bounds),
    )


def equal_grid(t_max: float, intervals: int) -> Tuple[float, ...]:
    """δ_0 = 0 < ... < δ_k = T_max with equal widths"""
    if intervals < 1:
        raise SchemeError(f"Need at least one interval, got {intervals}")
    return tuple(t_max * j / intervals for j in range(intervals + 1))


def to_vector(scheme: TacScheme) -> DecisionVector:
    if scheme.variant == PROPORTIONAL:
        layout = layout_for(PROPORTIONAL, (), bounds=scheme.bounds)
        return DecisionVector((scheme.p,), layout)
    if scheme.variant == PATH_BASED:
        layout = layout_for(PATH_BASED, scheme.path_values.keys(), bounds=scheme.bounds)
        return DecisionVector(tuple(scheme.path_values[p] for p in layout.path_ids), layout)
    layout = layout_for(TIME_VARYING, scheme.grid_values.keys(), scheme.grid, scheme.bounds)
    values = tuple(v for p in layout.path_ids for v in scheme.grid_values[p])
    return DecisionVector(values, layout)


def from_vector(layout: VectorLayout, values: Sequence[float]) -> TacScheme:
    values = [float(v) for v in values]
    if len(values) != layout.dimension:
        raise SchemeError(f"Vector has {len(values)} values, layout expects {layout.dimension}")
    if layout.variant == PROPORTIONAL:
        return TacScheme.proportional(values[0], layout.bounds)
    if layout.variant == PATH_BASED:
        return TacScheme.path_based(dict(zip(layout.path_ids, values)), layout.bounds)
    k = len(layout.grid) - 1
    rows = {p: values[i * k:(i + 1) * k] for i, p in enumerate(layout.path_ids)}
    return TacScheme.time_varying(layout.grid, rows, layout.bounds)


REVENUE_BASES = ("train", "tonkm")


def packet_charge(lambda_value: float, travel_time_h: float, delta_f: float,
                  freight_tons: float = 1.0, length_km: float = 1.0,
                  basis: str = "train") -> float:
    """
    TAC paid by one packet: λ·τ·Δf on the `train` basis, or λ·τ·tons·ℓ_r
    on the `tonkm` basis, which gives euros for λ in €/(t·km·h).
    """
    if basis == "train":
        return lambda_value * travel_time_h * delta_f
    if basis == "tonkm":
        return lambda_value * travel_time_h * freight_tons * length_km
    raise SchemeError(f"Unknown revenue basis '{basis}', expected one of {REVENUE_BASES}")
