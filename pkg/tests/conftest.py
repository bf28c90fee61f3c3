import contextlib
import io

import pytest

from lexglean import data_dir
from lexglean.cli import main as cli_main
from lexglean.taxonomy import load_language_configs, load_model_configs, load_taxonomy

FIXTURES_PATH = data_dir() / "mock_fixtures.json"
SEEDS_DIR = data_dir() / "seeds"


def run_cli(argv):
    """Invoke the CLI in-process, capturing stdout/stderr."""
    stdout, stderr = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        code = cli_main([str(a) for a in argv])
    return code, stdout.getvalue(), stderr.getvalue()


@pytest.fixture(scope="session")
def shipped_languages():
    return load_language_configs(data_dir() / "languages.json")


@pytest.fixture(scope="session")
def shipped_models():
    return load_model_configs(data_dir() / "models.json")


@pytest.fixture(scope="session")
def shipped_templates():
    return load_taxonomy(data_dir() / "taxonomy.json")


@pytest.fixture(scope="session")
def mock_run(tmp_path_factory):
    """One full generate + evaluate pass over the shipped mock fixtures.

    Shared by the CLI and acceptance tests; everything downstream of this
    directory is deterministic, so sharing it is safe.
    """
    root = tmp_path_factory.mktemp("mock_run")
    outputs = root / "outputs"
    results = root / "results"
    code, _, err = run_cli(["generate", "--mock", FIXTURES_PATH, "--out", outputs])
    assert code == 0, err
    code, _, err = run_cli(
        [
            "evaluate",
            "--outputs", outputs,
            "--results", results,
            "--reference", f"hau={SEEDS_DIR / 'hau_Latn.txt'}",
            "--reference", f"fon={SEEDS_DIR / 'fon_Latn.txt'}",
        ]
    )
    assert code == 0, err
    return root
