"""Parse and validate `key = value` experiment configuration files."""

import argparse

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from .dynamics import DynSystem, NotMonicError
from .poly import Polynomial, PolynomialError
from .potential import Circle, DiscreteMeasure, Interval, Shape, model_equilibrium
from .rootfind import Rect
from .utils import str_to_bool


EXPERIMENTS = (
    "dyn-figure",
    "dyn-verify",
    "binomial-verify",
    "ortho-verify",
    "sparsity",
    "potential-report",
    "convex-verify",
)

FAMILIES = ("iterates", "binomial", "orthogonal", "monomial", "chebyshev")

DEFAULT_TOLERANCES = {
    "root": 1e-10,
    "distance": 1e-6,
    "orthogonality": 1e-8,
    "fejer": 1e-7,
}

# Default windows for experiments that have a natural one
DEFAULT_WINDOWS = {
    "dyn-figure": Rect.from_bounds(-1.5, 1.5, -1.5, 1.5),
    "binomial-verify": Rect.from_bounds(-0.5, 0.5, -0.5, 0.5),
}

REQUIRED_KEYS = {
    "dyn-figure": ("poly", "ks"),
    "dyn-verify": ("poly", "window", "ks", "m"),
    "binomial-verify": ("ks", "m"),
    "ortho-verify": ("ks",),
    "sparsity": ("family", "window", "ks"),
    "potential-report": ("family", "probes", "ks"),
    "convex-verify": ("window", "ks", "m"),
}


class ConfigError(Exception):
    """Indicate an invalid configuration file."""

    def __init__(self, message: str, line: Optional[int] = None, field_name=None):
        location = f"line {line}: " if line is not None else ""
        subject = f"`{field_name}`: " if field_name else ""
        super().__init__(f"{location}{subject}{message}")
        self.line = line
        self.field = field_name


def _decimals(value: str, count: Optional[int] = None) -> list[float]:
    numbers = [float(token) for token in value.split()]
    if count is not None and len(numbers) != count:
        raise ValueError(f"expected {count} numbers, got {len(numbers)}")
    return numbers


def _complex(value: str) -> complex:
    """A complex number written as `re im` (or just `re`)."""
    numbers = _decimals(value)
    if len(numbers) not in (1, 2):
        raise ValueError(f"expected `re im`, got `{value}`")
    return complex(*numbers)


def _window(value: str) -> Rect:
    return Rect.from_bounds(*_decimals(value, 4))


def _shape(value: str) -> Shape:
    kind, _, rest = value.partition(" ")
    if kind == "circle":
        numbers = _decimals(rest)
        if len(numbers) == 1:
            return Circle(numbers[0])
        return Circle(numbers[0], complex(*_decimals(rest, 3)[1:]))
    if kind == "interval":
        return Interval(*_decimals(rest, 2))
    raise ValueError(f"unknown shape `{kind}` (expected circle or interval)")


def _choice(options: tuple[str, ...]) -> Callable[[str], str]:
    def parse(value: str) -> str:
        if value not in options:
            raise ValueError(f"`{value}` is not one of {', '.join(options)}")
        return value

    return parse


def _integers(value: str) -> list[int]:
    return [int(token) for token in value.split()]


# Keys that may be repeated; each occurrence appends its values
LIST_PARSERS: dict[str, Callable[[str], list]] = {
    "poly": lambda value: [_complex(value)],
    "atoms": lambda value: [_complex(value)],
    "probes": lambda value: [_complex(value)],
    "weights": _decimals,
    "ks": _integers,
    "window": lambda value: [_window(value)],
}

SCALAR_PARSERS: dict[str, Callable[[str], object]] = {
    "experiment": _choice(EXPERIMENTS),
    "family": _choice(FAMILIES),
    "c": _complex,
    "shape": _shape,
    "nodes": int,
    "m": int,
    "k": int,
    "depth": int,
    "grid": int,
    "bound": int,
    "out": Path,
    "max_iter": int,
    "workers": int,
    "verbose": str_to_bool,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description."""

    # pylint: disable=too-many-instance-attributes

    experiment: str
    family: Optional[str] = None
    poly: tuple[complex, ...] = ()
    atoms: tuple[complex, ...] = ()
    weights: tuple[float, ...] = ()
    c: complex = 1 + 0j
    shape: Optional[Shape] = None
    nodes: int = 64
    windows: tuple[Rect, ...] = ()
    ks: tuple[int, ...] = ()
    m: int = 0
    depth: int = 4
    grid: int = 512
    bound: Optional[int] = None
    output_dir: Path = Path(".")
    probes: tuple[complex, ...] = ()
    max_iter: int = 500
    workers: int = 1
    verbose: bool = False
    tolerances: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"Unknown experiment `{self.experiment}`")
        if self.ks and any(k < 1 for k in self.ks):
            raise ValueError(f"ks must be positive: {self.ks}")
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])):
            raise ValueError(f"ks must be strictly increasing: {self.ks}")
        if self.m < 0:
            raise ValueError(f"m must be nonnegative, got {self.m}")
        for name in ("depth", "grid", "nodes", "max_iter", "workers"):
            if getattr(self, name) < (0 if name == "depth" else 1):
                raise ValueError(f"{name} is out of range: {getattr(self, name)}")
        if self.weights and len(self.weights) != len(self.atoms):
            raise ValueError(
                f"{len(self.weights)} weights given for {len(self.atoms)} atoms"
            )

    @property
    def window(self) -> Rect:
        """The first configured window, or the experiment's default."""
        if self.windows:
            return self.windows[0]
        return DEFAULT_WINDOWS[self.experiment]

    def tol(self, name: str) -> float:
        """Tolerance `tol.<name>` with its default."""
        return self.tolerances.get(name, DEFAULT_TOLERANCES.get(name))

    def polynomial(self) -> Polynomial:
        return Polynomial(self.poly)

    def system(self) -> DynSystem:
        return DynSystem.from_polynomial(self.polynomial(), self.max_iter)

    def measure(self) -> DiscreteMeasure:
        """The configured atoms, or the quadrature surrogate of the shape."""
        if self.atoms:
            if self.weights:
                return DiscreteMeasure.from_arrays(self.atoms, self.weights)
            return DiscreteMeasure.uniform(self.atoms)
        return model_equilibrium(self.shape, self.nodes)


def _check_requirements(config: ExperimentConfig, lines: dict[str, int]):
    """Raise ConfigError for keys the chosen experiment needs but lacks."""
    present = set(lines) | ({"ks"} if config.ks else set())

    for key in REQUIRED_KEYS[config.experiment]:
        if key not in present:
            raise ConfigError(
                f"required by experiment {config.experiment}", field_name=key
            )

    family = config.family
    if config.experiment in ("dyn-figure", "dyn-verify"):
        family = "iterates"
    elif config.experiment == "ortho-verify":
        family = "orthogonal"

    if family == "iterates":
        if "poly" not in lines:
            raise ConfigError("required by the iterates family", field_name="poly")
        try:
            config.system()
        except (NotMonicError, PolynomialError, ValueError) as err:
            raise ConfigError(str(err), lines["poly"], "poly") from err

    if family == "orthogonal" and not (config.atoms or config.shape):
        raise ConfigError("orthogonal families need atoms or a shape", field_name="atoms")

    if (
        config.experiment == "potential-report"
        and family == "orthogonal"
        and config.shape is None
    ):
        raise ConfigError(
            "the orthogonal potential target needs a shape", field_name="shape"
        )

    if config.experiment == "convex-verify":
        for window in config.windows:
            # The Chebyshev roots fill [-1, 1]
            if (
                window.lo.imag <= 0 <= window.hi.imag
                and window.lo.real <= 1
                and window.hi.real >= -1
            ):
                raise ConfigError(
                    f"{window} meets [-1, 1]", lines["window"], "window"
                )


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text into a validated ExperimentConfig."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    tolerances: dict[str, float] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue

        key, separator, value = content.partition("=")
        key, value = key.strip(), value.strip()
        if not separator or not key:
            raise ConfigError(f"expected `key = value`, got `{content}`", number)

        try:
            if key.startswith("tol."):
                tolerances[key[4:]] = float(value)
            elif key in LIST_PARSERS:
                values.setdefault(key, []).extend(LIST_PARSERS[key](value))
            elif key in SCALAR_PARSERS:
                if key in values:
                    raise ValueError(f"already set on line {lines[key]}")
                values[key] = SCALAR_PARSERS[key](value)
            else:
                raise ConfigError("unknown key", number, key)
        except (ValueError, TypeError, argparse.ArgumentTypeError) as err:
            raise ConfigError(str(err), number, key) from err

        lines.setdefault(key, number)

    if "experiment" not in values:
        raise ConfigError("missing", field_name="experiment")

    if "k" in values:
        if "ks" in values:
            raise ConfigError("give either k or ks", lines["k"], "k")
        values["ks"] = [values.pop("k")]

    renames = {"window": "windows", "out": "output_dir"}
    arguments = {
        renames.get(key, key): tuple(value) if isinstance(value, list) else value
        for key, value in values.items()
    }

    try:
        config = ExperimentConfig(tolerances=tolerances, **arguments)
    except ValueError as err:
        raise ConfigError(str(err)) from err

    _check_requirements(config, lines)
    return config


def load_config(path: Path, output_dir: Optional[Path] = None) -> ExperimentConfig:
    """Read a configuration file; `output_dir` overrides its `out` key."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err

    config = parse_config(text)
    if output_dir is not None:
        config = replace(config, output_dir=output_dir)
    return config
