"""Run experiments from a configuration file and write their data."""

import argparse
import csv
import json
import logging
import sys

from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .divisor import (
    Divisor,
    convergence_check,
    corollary_check,
    potential_convergence_report,
    sparsity_report,
)
from .dynamics import (
    WindowNotInBasinError,
    escape_grid,
    green_critical_points,
    green_escape,
    precritical_points,
)
from .families import (
    DegreeTooLargeError,
    FamilyHandle,
    SupportTooSmallError,
    gen_binomial,
    gen_chebyshev_roots,
    gen_iterates,
    gen_monomial,
    gen_orthogonal,
)
from .logging import NOTICE, LoggingMixin, setup_logging
from .poly import EscapeError
from .potential import (
    DiscreteMeasure,
    Interval,
    PathThroughSupportError,
    model_potential,
    potential_at,
)
from .rootfind import (
    BoundaryUnsafeError,
    ConvergenceError,
    RootSet,
    count_zeros_winding,
    differentiated,
    locate_zeros_subdivision,
)
from .utils import format_decimal, in_convex_hull, map_ordered


EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (
    BoundaryUnsafeError,
    ConvergenceError,
    EscapeError,
    WindowNotInBasinError,
    DegreeTooLargeError,
    SupportTooSmallError,
    PathThroughSupportError,
)


def write_csv(path: Path, fieldnames: list[str], rows: Iterable[dict]):
    """Write rows with 17 significant digits for every float."""
    with path.open(mode="w", encoding="utf-8", newline="") as outfile:
        writer = csv.DictWriter(outfile, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({
                key: format_decimal(value) if isinstance(value, float) else value
                for key, value in row.items()
            })


def write_roots_csv(path: Path, roots: RootSet):
    """roots_k<k>.csv: one row per distinct root, sorted by (re, im)."""
    write_csv(
        path,
        ["re", "im", "multiplicity"],
        (
            {"re": location.real, "im": location.imag, "multiplicity": mult}
            for location, mult in roots.roots
        ),
    )


def build_family(config: ExperimentConfig, k_max: int) -> FamilyHandle:
    """The family named in the configuration."""
    builders: dict[str, Callable[[], FamilyHandle]] = {
        "iterates": lambda: gen_iterates(config.system()),
        "binomial": lambda: gen_binomial(config.c),
        "orthogonal": lambda: gen_orthogonal(config.measure(), k_max),
        "monomial": lambda: gen_monomial(k_max),
        "chebyshev": lambda: gen_chebyshev_roots(k_max),
    }
    return builders[config.family]()


def target_potential(config: ExperimentConfig) -> Callable[[complex], float]:
    """The limit potential each family's normalized log-moduli approach."""
    if config.family == "iterates":
        system = config.system()
        return lambda z: green_escape(system, z)
    if config.family == "binomial":
        halves = DiscreteMeasure(((config.c, 0.5), (-config.c, 0.5)))
        return lambda z: potential_at(halves, z)
    if config.family == "monomial":
        origin = DiscreteMeasure(((0, 1.0),))
        return lambda z: potential_at(origin, z)

    shape = config.shape if config.family == "orthogonal" else Interval(-1.0, 1.0)
    return lambda z: model_potential(shape, z)


class ExperimentRunner(LoggingMixin):
    """Carry out one configured experiment."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.passed = True

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        """Log one PASS/FAIL line and fold it into the overall verdict."""
        self.passed = self.passed and passed
        self.logger.log(
            NOTICE, "%s: %s%s", "PASS" if passed else "FAIL", name,
            f" ({detail})" if detail else "",
        )
        return passed

    def run(self) -> bool:
        """Write all outputs; True if every assertion passed."""
        experiments = {
            "dyn-figure": self.dyn_figure,
            "dyn-verify": self.dyn_verify,
            "binomial-verify": self.binomial_verify,
            "ortho-verify": self.ortho_verify,
            "sparsity": self.sparsity,
            "potential-report": self.potential_report,
            "convex-verify": self.convex_verify,
        }

        self.config.output_dir.mkdir(parents=True, exist_ok=True)
        self.logger.info(
            "Running %s into %s", self.config.experiment, self.config.output_dir
        )

        report = experiments[self.config.experiment]()
        report = {"experiment": self.config.experiment, **report, "pass": self.passed}

        report_file = self.config.output_dir / "report.json"
        report_file.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        return self.passed

    def _derivative_roots(self, family: FamilyHandle, k: int) -> RootSet:
        return locate_zeros_subdivision(
            differentiated(family.jet_function(k), self.config.m),
            self.config.window,
            self.config.tol("root"),
        )

    def dyn_figure(self) -> dict:
        """Roots of (P^k)^(m), critical points of g, and a Julia grid."""
        config = self.config
        system = config.system()
        family = gen_iterates(system)
        window = config.window

        roots = map_ordered(
            lambda k: self._derivative_roots(family, k), config.ks, config.workers
        )
        for k, rootset in zip(config.ks, roots):
            self.logger.info("k=%d: %d roots of the derivative", k, rootset.total)
            write_roots_csv(config.output_dir / f"roots_k{k}.csv", rootset)

        critical = sorted(
            (
                point
                for point in precritical_points(system, config.depth)
                if window.contains(point.location)
            ),
            key=lambda point: (point.location.real, point.location.imag),
        )
        write_csv(
            config.output_dir / "critical_points.csv",
            ["re", "im", "multiplicity", "depth"],
            (
                {
                    "re": point.location.real,
                    "im": point.location.imag,
                    "multiplicity": point.order,
                    "depth": point.depth,
                }
                for point in critical
            ),
        )

        re = np.linspace(window.lo.real, window.hi.real, config.grid)
        im = np.linspace(window.lo.imag, window.hi.imag, config.grid)
        green, steps = escape_grid(system, re, im)
        write_csv(
            config.output_dir / "julia_grid.csv",
            ["re", "im", "green_value", "escaped_step"],
            (
                {
                    "re": float(re[i]),
                    "im": float(im[j]),
                    "green_value": float(green[i, j]),
                    "escaped_step": int(steps[i, j]),
                }
                for i in range(re.size)
                for j in range(im.size)
            ),
        )

        return {
            "rows": [
                {"k": k, "count": rootset.total}
                for k, rootset in zip(config.ks, roots)
            ],
            "critical_points": len(critical),
        }

    def dyn_verify(self) -> dict:
        """Exactly s*m roots of (P^k)^(m) in a window holding s critical points of g."""
        config = self.config
        system = config.system()
        family = gen_iterates(system)

        s = green_critical_points(system, config.window, config.depth).total

        def count(k: int) -> int:
            return count_zeros_winding(
                differentiated(family.jet_function(k), config.m), config.window
            )

        rows = []
        for k, t_k in zip(config.ks, map_ordered(count, config.ks, config.workers)):
            passed = self.check(
                f"t_{k} = s*m", t_k == s * config.m, f"t_k={t_k}, s={s}, m={config.m}"
            )
            rows.append({"s": s, "m": config.m, "k": k, "t_k": t_k, "pass": passed})
        return {"rows": rows}

    def binomial_verify(self) -> dict:
        """Second-derivative roots of (z^2 - c^2)^k against the limit critical point."""
        config = self.config
        window = config.window
        family = gen_binomial(config.c)

        entries = ((0j, 1),) if window.contains(0j) else ()
        limit = Divisor(window, entries)

        rows = []
        for row in convergence_check(
            family, limit, config.m, window, config.ks,
            config.tol("root"), config.workers,
        ):
            expected = None
            if config.m == 1:
                expected = 0.0
            elif config.m == 2:
                expected = 2 * abs(config.c) / np.sqrt(2 * row.k - 1)

            passed = row.count_match and (
                expected is None
                or abs(row.distance - expected) <= config.tol("distance")
            )
            self.check(
                f"k={row.k} matching distance", passed,
                f"distance={row.distance}, expected={expected}",
            )
            rows.append({**row.to_json(), "expected": expected})
        return {"rows": rows}

    def ortho_verify(self) -> dict:
        """Orthogonality and Fejer localization of an orthogonal family."""
        config = self.config
        measure = config.measure()
        family = gen_orthogonal(measure, max(config.ks))

        rows = []
        for k in config.ks:
            residual = family.orthogonality_residual(k)
            roots = family.roots(k)
            inside = bool(
                in_convex_hull(roots, measure.points, config.tol("fejer")).all()
            )
            self.check(
                f"k={k} orthogonality", residual < config.tol("orthogonality"),
                f"residual={residual:.3g}",
            )
            self.check(f"k={k} roots in convex hull of atoms", inside)
            rows.append(
                {"k": k, "orthogonality_residual": residual, "fejer_inside": inside}
            )
        return {"rows": rows}

    def sparsity(self) -> dict:
        """Zero counts in a window; bounded counts indicate a root-sparse window."""
        config = self.config
        family = build_family(config, max(config.ks))
        report = sparsity_report(family, config.window, config.ks, config.workers)
        if config.bound is not None:
            self.check(
                f"zero count at most {config.bound}",
                report.max <= config.bound,
                f"max={report.max}",
            )
        return report.to_json()

    def potential_report(self) -> dict:
        """Deviation of the normalized log-moduli from the limit potential."""
        config = self.config
        family = build_family(config, max(config.ks))
        rows = potential_convergence_report(
            family, target_potential(config), config.probes, config.ks, config.workers
        )

        tolerance = config.tol("potential")
        for row in rows:
            if row.at_root:
                self.logger.warning("k=%d: probes %s hit roots", row.k, row.at_root)
            if tolerance is not None:
                self.check(
                    f"k={row.k} potential deviation",
                    row.max_deviation is not None and row.max_deviation <= tolerance,
                    f"max_deviation={row.max_deviation}",
                )
        return {"rows": [row.to_json() for row in rows]}

    def convex_verify(self) -> dict:
        """xi_{k,m} - xi_k vanishes on windows off the convex hull of the roots."""
        config = self.config
        family = gen_chebyshev_roots(max(config.ks))
        ms = range(1, config.m + 1)

        rows = []
        for window in config.windows:
            for row in corollary_check(family, window, ms, config.ks, config.workers):
                self.check(
                    f"k={row.k}, m={row.m} on {window}", row.vanishes,
                    f"+{row.positive_total}/-{row.negative_total}",
                )
                rows.append({
                    "window": [
                        window.lo.real, window.hi.real, window.lo.imag, window.hi.imag
                    ],
                    "k": row.k,
                    "m": row.m,
                    "positive_total": row.positive_total,
                    "negative_total": row.negative_total,
                })
        return {"rows": rows}


def run(config: ExperimentConfig) -> int:
    """Run one experiment and return its exit status."""
    try:
        passed = ExperimentRunner(config).run()
    except NUMERICAL_ERRORS:
        logging.getLogger(__name__).exception("Numerical failure")
        return EXIT_NUMERICAL

    return EXIT_PASS if passed else EXIT_FAIL


def main(config_file: Path, output_dir: Optional[Path] = None) -> int:
    """Load a configuration file and run it."""
    try:
        config = load_config(config_file, output_dir)
    except ConfigError as err:
        logging.getLogger(__name__).error("Invalid configuration %s: %s", config_file, err)
        return EXIT_CONFIG

    if config.verbose:
        setup_logging(verbose=True)
    return run(config)


def entrypoint():
    """Main entrypoint."""
    parser = argparse.ArgumentParser(
        description="Run a root-counting experiment from a configuration file."
    )
    parser.add_argument("config", type=Path)
    parser.add_argument(
        "--out", type=Path, default=None, help="Override the output directory"
    )
    parser.add_argument("--verbose", action="store_true", help="Log debug details")

    args = parser.parse_args()
    setup_logging(verbose=args.verbose)

    sys.exit(main(args.config, args.out))
