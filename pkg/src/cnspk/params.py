"""Parameter manifest and immutable parameter sets for the CNS model.

The model is driven by 27 named physiological parameters.  Their canonical
order, descriptions, units, reference values and admissible ranges live in a
single manifest shipped with the package (``data/manifest.csv``).  Everything
else in the library — validation, estimation bounds, CSV round-trips, the
HTTP manifest endpoint — derives from that one table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterator, Mapping

import numpy as np

from .errors import NumericDomainError, UnknownParameterError

__all__ = [
    "ParamSpec",
    "ParameterSet",
    "PARAM_SPECS",
    "PARAM_NAMES",
    "PARAM_INDEX",
    "manifest_rows",
]


@dataclass(frozen=True)
class ParamSpec:
    """One row of the parameter manifest.

    Attributes
    ----------
    name : str
        Canonical parameter name (case-sensitive).
    description : str
        Human-readable meaning of the parameter.
    unit : str
        Physical unit; ``"-"`` for dimensionless quantities.
    ref_value : float
        Reference (default) value.
    min : float
        Lower edge of the admissible range used for estimation bounds.
    max : float
        Upper edge of the admissible range used for estimation bounds.
    """

    name: str
    description: str
    unit: str
    ref_value: float
    min: float
    max: float


def _load_manifest() -> tuple[ParamSpec, ...]:
    text = resources.files("cnspk.data").joinpath("manifest.csv").read_text(encoding="utf-8")
    reader = csv.DictReader(text.splitlines())
    specs = []
    for row in reader:
        specs.append(
            ParamSpec(
                name=row["name"],
                description=row["description"],
                unit=row["unit"],
                ref_value=float(row["ref_value"]),
                min=float(row["min"]),
                max=float(row["max"]),
            )
        )
    return tuple(specs)


PARAM_SPECS: tuple[ParamSpec, ...] = _load_manifest()
PARAM_NAMES: tuple[str, ...] = tuple(s.name for s in PARAM_SPECS)
PARAM_INDEX: dict[str, int] = {name: i for i, name in enumerate(PARAM_NAMES)}

_REF_VALUES = np.array([s.ref_value for s in PARAM_SPECS], dtype=np.float64)

# Validation classes, keyed by name prefix.  Volumes must be strictly
# positive; unbound fractions live in (0, 1]; flows, permeability-surface
# products and clearances are non-negative; partition/ratio factors are
# strictly positive.
_VOLUME = frozenset(n for n in PARAM_NAMES if n.startswith("V_"))
_FRACTION = frozenset(n for n in PARAM_NAMES if n.startswith("fu_"))
_NONNEG = frozenset(
    n for n in PARAM_NAMES if n.startswith(("Q_", "PS", "CL_"))
)
_POSITIVE = frozenset(
    n for n in PARAM_NAMES if n.startswith(("lambda_", "Kp_"))
)


def manifest_rows() -> list[dict[str, object]]:
    """Return the manifest as a list of plain dicts (one per parameter).

    Useful for serialisation: the HTTP service and the CLI expose the
    manifest verbatim through this accessor.
    """
    return [
        {
            "name": s.name,
            "description": s.description,
            "unit": s.unit,
            "ref_value": s.ref_value,
            "min": s.min,
            "max": s.max,
        }
        for s in PARAM_SPECS
    ]


def domain_error(name: str, value: float) -> str | None:
    """Explain why ``value`` is unusable for parameter ``name``, or None.

    The domain rules are structural (what keeps the model equations well
    defined), not the narrower plausibility ranges of the manifest.
    """
    if not math.isfinite(value):
        return f"parameter {name!r} must be finite, got {value!r}"
    if name in _VOLUME:
        if value <= 0.0:
            return f"volume parameter {name!r} must be > 0, got {value!r}"
    elif name in _FRACTION:
        if not (0.0 < value <= 1.0):
            return f"unbound fraction {name!r} must lie in (0, 1], got {value!r}"
    elif name in _NONNEG:
        if value < 0.0:
            return f"parameter {name!r} must be >= 0, got {value!r}"
    elif name in _POSITIVE:
        if value <= 0.0:
            return f"parameter {name!r} must be > 0, got {value!r}"
    return None


def _validate(values: np.ndarray) -> None:
    for i, name in enumerate(PARAM_NAMES):
        problem = domain_error(name, values[i])
        if problem is not None:
            raise NumericDomainError(problem)


class ParameterSet:
    """Immutable, validated vector of the 27 model parameters.

    Construct one from the manifest reference values, from a mapping of
    name/value overrides, or by perturbing an existing set.  Instances
    behave like a read-only mapping from parameter name to value and also
    expose the values as a canonically ordered numpy array for the
    numerical core.

    Parameters
    ----------
    values : Mapping[str, float]
        Complete mapping with exactly one value per manifest parameter.
        Unknown names raise :class:`UnknownParameterError`; missing names
        raise :class:`UnknownParameterError` as well, naming the absentee.

    Examples
    --------
    >>> p = ParameterSet.reference()
    >>> p["PSB"]
    0.2
    >>> q = p.with_value("PSB", 2.0)
    >>> q["PSB"], p["PSB"]
    (2.0, 0.2)
    """

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[str, float]):
        unknown = sorted(set(values) - set(PARAM_NAMES))
        if unknown:
            raise UnknownParameterError(
                f"unknown parameter name(s): {', '.join(unknown)}"
            )
        missing = [n for n in PARAM_NAMES if n not in values]
        if missing:
            raise UnknownParameterError(
                f"missing parameter(s): {', '.join(missing)}"
            )
        arr = np.array([float(values[n]) for n in PARAM_NAMES], dtype=np.float64)
        _validate(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "_values", arr)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ParameterSet is immutable")

    # -- construction ------------------------------------------------------

    @classmethod
    def reference(cls) -> "ParameterSet":
        """Parameter set holding the manifest reference values."""
        obj = cls.__new__(cls)
        arr = _REF_VALUES.copy()
        arr.setflags(write=False)
        object.__setattr__(obj, "_values", arr)
        return obj

    @classmethod
    def from_mapping(
        cls, overrides: Mapping[str, float], *, base: "ParameterSet | None" = None
    ) -> "ParameterSet":
        """Build a set from ``base`` (default: reference) plus overrides.

        Parameters
        ----------
        overrides : Mapping[str, float]
            Values replacing the base entries.  Names must exist in the
            manifest.
        base : ParameterSet, optional
            Starting point; the manifest reference values when omitted.
        """
        start = base if base is not None else cls.reference()
        merged = start.to_dict()
        unknown = sorted(set(overrides) - set(PARAM_NAMES))
        if unknown:
            raise UnknownParameterError(
                f"unknown parameter name(s): {', '.join(unknown)}"
            )
        merged.update({k: float(v) for k, v in overrides.items()})
        return cls(merged)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "ParameterSet":
        """Build a set from a length-27 array in canonical manifest order."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (len(PARAM_NAMES),):
            raise NumericDomainError(
                f"expected {len(PARAM_NAMES)} values, got shape {arr.shape}"
            )
        _validate(arr)
        obj = cls.__new__(cls)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(obj, "_values", arr)
        return obj

    @classmethod
    def _unchecked(cls, values: np.ndarray) -> "ParameterSet":
        # Internal: skip domain validation.  Finite-difference probes may
        # step a parameter a hair past its formal domain edge (e.g. a
        # fraction of 1.01 when the base sits exactly at 1.0); the model
        # equations remain well defined there.
        arr = np.asarray(values, dtype=np.float64).copy()
        arr.setflags(write=False)
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_values", arr)
        return obj

    def with_value(self, name: str, value: float) -> "ParameterSet":
        """Return a copy with ``name`` replaced by ``value``."""
        return self.with_values({name: value})

    def with_values(self, overrides: Mapping[str, float]) -> "ParameterSet":
        """Return a copy with every entry of ``overrides`` replaced."""
        return ParameterSet.from_mapping(overrides, base=self)

    # -- mapping protocol --------------------------------------------------

    def __getitem__(self, name: str) -> float:
        try:
            return float(self._values[PARAM_INDEX[name]])
        except KeyError:
            raise UnknownParameterError(f"unknown parameter name: {name!r}") from None

    def __contains__(self, name: object) -> bool:
        return name in PARAM_INDEX

    def __iter__(self) -> Iterator[str]:
        return iter(PARAM_NAMES)

    def __len__(self) -> int:
        return len(PARAM_NAMES)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParameterSet):
            return NotImplemented
        return bool(np.array_equal(self._values, other._values))

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        shown = ", ".join(f"{n}={self[n]:.6g}" for n in list(PARAM_NAMES)[:3])
        return f"ParameterSet({shown}, ... {len(PARAM_NAMES)} parameters)"

    # -- export ------------------------------------------------------------

    def to_dict(self) -> dict[str, float]:
        """Name→value mapping in canonical manifest order."""
        return {n: float(self._values[i]) for i, n in enumerate(PARAM_NAMES)}

    def to_array(self) -> np.ndarray:
        """Values as a read-only float64 array in canonical manifest order."""
        return self._values
