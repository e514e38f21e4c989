import os

import pytest

from ouphase import ProcessParams

WORKERS = min(2, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def ap_params():
    return ProcessParams(kappa=1.5868e4, lam=6.1451e4, flux=1.3499e6)


@pytest.fixture(scope="session")
def dh_params():
    return ProcessParams(kappa=1.6218e4, lam=6.4593e4, flux=1.3235e6)
