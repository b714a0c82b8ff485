"""Fixtures partagées: le dépôt est une collection de modules à plat."""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture
def catalog_file(tmp_path):
    """Écrit un catalogue JSON minimal et renvoie son chemin."""
    import json

    def write(records):
        path = tmp_path / "catalog.json"
        path.write_text(json.dumps({"version": 1, "records": records}), encoding="utf-8")
        return path

    return write


@pytest.fixture(scope="session")
def source_text():
    """Texte source des identités, espaces normalisés; test ignoré s'il est absent."""
    path = ROOT / "examples" / "original_source" / "paper.md"
    if not path.is_file():
        pytest.skip(f"texte source absent: {path}")
    return " ".join(path.read_text(encoding="utf-8").split())
