"""stegkit: cover-channel models, stegosystems, a warden lab, and Steg-MQ.

The toolkit hides bit strings inside symbols that conform to an explicit
cover-channel distribution. Three schemes are included: a universal
rejection-sampling scheme that works over any sufficiently unpredictable
channel, an exact scheme over uniform initialization vectors, and an
ephemeral-key scheme over elliptic-curve Diffie-Hellman public keys. The
warden lab measures how distinguishable each scheme's output is from honest
channel traffic, and the Steg-MQ broker queues stegotexts and hiddentexts
for applications over a local socket.
"""

from .channel import (
    ChannelModel,
    ChannelView,
    CoverBlock,
    History,
    TableChannel,
    UniformChannel,
    biased4_channel,
    block,
    load_channel,
    parse_channel_definition,
    uniform_channel,
    variable2_channel,
)
from .crypto import CounterState, SymmetricKey
from .universal import (
    EccSpec,
    UniversalStegoSession,
    ecc_decode,
    ecc_encode,
    sd_universal,
    se_universal,
)
from .iv import IvStegoSession, sd_iv, se_iv
from .ec import (
    CurveParams,
    EcStegoSession,
    NotAStegotextError,
    ec_add,
    ec_scalar_mul,
    p256,
    precompute_window,
    sd_ec,
    se_ec,
    tiny40,
    toy17,
)
from .warden import AdvantageReport, WardenBudget, play_game
from .stats import distinguisher_battery

__version__ = "0.1.0"
