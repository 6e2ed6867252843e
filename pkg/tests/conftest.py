import random

import pytest

from stegkit.channel import ChannelModel, CoverBlock
from stegkit.crypto import SymmetricKey


class ScriptedChannel(ChannelModel):
    """Test channel that returns a preset sequence of bit patterns."""

    def __init__(self, script, block_size=None, min_entropy_bound=1.0):
        super().__init__(seed=0)
        self.script = list(script)
        self._pos = 0
        self.block_size = block_size if block_size is not None else len(self.script[0])
        self.min_entropy_bound = min_entropy_bound

    def _draw_bits(self, h):
        bits = self.script[self._pos % len(self.script)]
        self._pos += 1
        return bits

    def _min_total_bits(self, h, horizon):
        return self.block_size * horizon


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture
def key128(rng):
    return SymmetricKey.generate(128, rng)


def fixed_block(bits, ts=0):
    return CoverBlock(bits, {"timestamp": ts})


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: full-scale acceptance criteria (slower)"
    )
