import pytest

from kataback.cli import PipelineConfig


@pytest.fixture(scope="session")
def config():
    return PipelineConfig.bundled()


@pytest.fixture(scope="session")
def desk_models(config):
    """Full bundled model set, OCR model included; built once per session."""
    return config.load_model_set(with_ocr=True)
