import pytest

from tollsub.core.config import Settings
from tollsub.repository.instance import serialize_instance
from tollsub.usecase.poa import pigou_instance
from tollsub.usecase.search import AffineGrid


@pytest.fixture
def pigou():
    return pigou_instance(1)


@pytest.fixture
def tight_settings():
    """Tighter certificate so solutions can be compared at the default tolerance."""
    return Settings(EPS_EQ=1e-11, SHOW_PROGRESS=False)


@pytest.fixture
def coarse_grid():
    # 0, 0.5, 1, 1.5, 2 contains the worst cases of the β in {0, 0.25, 0.5} families
    return AffineGrid(coef_points=5, coef_max=2.0, mass_splits=5)


@pytest.fixture
def pigou_file(tmp_path):
    def write(p=1, mechanism=None, name=None):
        path = tmp_path / f"{name or f'pigou_p{p}'}.json"
        path.write_text(serialize_instance(pigou_instance(p, mechanism)), encoding="utf-8")
        return path

    return write
