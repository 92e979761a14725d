"""Local plugin to parametrize experiment tests from a JSON file."""

import json

from collections import namedtuple
from pathlib import Path

import pytest


ExperimentCase = namedtuple(
    "ExperimentCase", ("config", "exit_code", "rows", "extras", "files")
)

# Named stash key for storing the ExperimentCase objects between hook calls
experiment_cases_key = pytest.StashKey[list[ExperimentCase]]()


def pytest_configure(config: pytest.Config) -> None:
    """Configure plugin by loading the experiment cases."""
    resource_path = Path(__file__).resolve().parent.joinpath("resources")
    cases_file = resource_path / "experiments.json"
    with cases_file.open(mode="r", encoding="utf-8") as infile:
        groups = json.load(infile)

    cases = []
    for group in groups:
        extras = {
            key: value
            for key, value in group.items()
            if key not in ("config", "exit", "rows", "files")
        }
        cases.append(
            ExperimentCase(
                resource_path / "configs" / group["config"],
                group["exit"],
                group.get("rows", []),
                extras,
                group.get("files", []),
            )
        )

    config.stash[experiment_cases_key] = cases


def pytest_generate_tests(metafunc: pytest.Metafunc):
    """Inject parameters for the 'experiment_case' fixture."""
    if "experiment_case" in metafunc.fixturenames:
        cases = metafunc.config.stash[experiment_cases_key]
        metafunc.parametrize(
            "experiment_case", cases, ids=[case.config.stem for case in cases]
        )
