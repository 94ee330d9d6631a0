"""Steganography over synthetic channels.

Biased-ciphertext encryption shaped like without-replacement urn draws, a
deterministic document-ordering encoder that resists replay attacks on
memoryless channels, the classic rejection-sampling baseline, and a
security-game harness that measures warden advantages and reliability.
"""

from .channels import (BiasedChannel, Channel, ExplicitRandomChannel,
                       MalformedHistory, PrfChannel, UniformChannel,
                       UnsupportedChannelOperation, WorChannel,
                       channel_from_config, load_channel,
                       random_subset_channel)
from .games import (AdvantageEstimate, CoinWarden, ConstantWarden,
                    DecodeOracle, GameResult, ReliabilityReport, ReplayWarden,
                    ReorderWarden, SupportWarden, SwapWarden,
                    estimate_advantage, estimate_encoder_events,
                    measure_reliability, run_distinguisher_game)
from .ordering import (OrderingError, forgery_experiment, identity_attacker,
                       lex_bytes, make_swap_attacker, order_documents,
                       order_documents_with_tables, reorder_attacker)
from .primitives import (DhKemPke, FeistelPrp, IdealTablePke, KeyedHash,
                         PkeKeyPair, UniversalHash, enumerate_hash_family,
                         hash_family_size, make_pke)
from .stego import (DocumentOrderStego, IdealizedOrderStego, RejectionStego,
                    StegoKeyPair, rejection_sample, reliability_bound)
from .wor import (InvalidParams, WorParams, WorPke, WorString, leaf_interval,
                  max_pmf, transcode_budget, wor_decode, wor_encode, wor_pmf,
                  wor_sample, wor_string_from_json, wor_string_to_json,
                  zero_count_pmf)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
