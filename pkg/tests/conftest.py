from __future__ import annotations

from pathlib import Path

import pytest

from icoe import assembly, corpus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_paths() -> dict[str, str]:
    return {
        "corpus": str(FIXTURES / "corpus.jsonl"),
        "annotations": str(FIXTURES / "annotations.jsonl"),
        "unlabeled": str(FIXTURES / "unlabeled.jsonl"),
        "expected_cv": str(FIXTURES / "expected_cv.json"),
        "expected_favipiravir": str(FIXTURES / "expected_favipiravir.json"),
    }


@pytest.fixture(scope="session")
def fixture_records(fixture_paths):
    return corpus.load_corpus(fixture_paths["corpus"])


@pytest.fixture(scope="session")
def fixture_docs(fixture_paths, fixture_records):
    return corpus.load_annotations(fixture_paths["annotations"], fixture_records)


@pytest.fixture(scope="session")
def fixture_models(fixture_docs):
    return assembly.train_models(fixture_docs, epochs=10, seed=42, alpha=1.0)


@pytest.fixture(scope="session")
def unlabeled_records(fixture_paths):
    return corpus.load_corpus(fixture_paths["unlabeled"])
