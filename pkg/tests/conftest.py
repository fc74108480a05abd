import time

import pytest

from dualmuscle.config import load_config
from dualmuscle.simkit import compute_metrics, run_scenario


class Run:
    def __init__(self, cfg):
        t0 = time.perf_counter()
        self.log = run_scenario(cfg)
        self.seconds = time.perf_counter() - t0
        self.cfg = cfg
        self.metrics = compute_metrics(self.log, window=(5.0, 30.0), config=cfg).values


@pytest.fixture(scope="session")
def noisefree_run():
    return Run(load_config("scenario_noisefree.cfg"))


@pytest.fixture(scope="session")
def noisy_run():
    return Run(load_config("scenario_noisy.cfg"))
