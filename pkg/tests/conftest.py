import numpy as np
import pytest

from blockcs.synth import textured_image, write_corpus


@pytest.fixture(scope="session")
def corpus() -> list[tuple[str, np.ndarray]]:
    """Twelve deterministic 192x192 textured images, the experiment corpus."""
    return [(f"synth_{i:02d}.pgm", textured_image(192, 192, seed=100 + i)) for i in range(12)]


@pytest.fixture(scope="session")
def tiny_corpus_dir(tmp_path_factory) -> str:
    """Three small textured PGMs on disk for fast CLI-level runs."""
    out = tmp_path_factory.mktemp("corpus")
    write_corpus(str(out), count=3, size=96, seed=7)
    return str(out)
