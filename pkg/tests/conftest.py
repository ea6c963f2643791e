from __future__ import annotations

import pytest

from synth import chain_corpus


@pytest.fixture
def chain():
    """3-item corpus: c refs b, b uses the symbol a defines."""
    return chain_corpus()
