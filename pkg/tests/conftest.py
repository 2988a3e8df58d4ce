import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tables import reference_plain_text, reference_strong_text  # noqa: E402

from collatzcert.certify import parse_certificate  # noqa: E402


@pytest.fixture(scope="session")
def reference_plain():
    return parse_certificate(reference_plain_text())


@pytest.fixture(scope="session")
def reference_strong():
    return parse_certificate(reference_strong_text())
