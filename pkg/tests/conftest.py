from __future__ import annotations

import datetime as dt

import pytest
from hypothesis import settings

from firesight.config import load_config
from firesight.ingest import Hotspot
from firesight.pipeline import build_corpus
from firesight.synthetic import generate_dataset

settings.register_profile("suite", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("suite")

DATASET_SEED = 20


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    """Synthetic dataset with a built corpus, shared across the session."""
    root = tmp_path_factory.mktemp("synth")
    generate_dataset(root, seed=DATASET_SEED)
    cfg = load_config(root / "config.toml")
    build_corpus(cfg)
    return root


@pytest.fixture()
def cfg(dataset):
    return load_config(dataset / "config.toml")


def make_hotspot(lat, lon, frp=1.0, brightness=330.0,
                 date=dt.date(2020, 8, 17), minute=570, sat="NPP") -> Hotspot:
    return Hotspot(lat=lat, lon=lon, frp=frp, brightness=brightness,
                   acq_date=date, acq_time=minute, satellite=sat)


@pytest.fixture()
def hotspot_factory():
    return make_hotspot
