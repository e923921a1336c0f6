"""PAC (polarization-adjusted convolutional) codes: encoding, list and Fano decoding,
Monte-Carlo simulation and weight-spectrum analysis."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from .codespec import CodeSpec, polar_profile, reliability_table, rm_profile
from .encoder import encode, decode_codeword, precode
from .scl import ListDecoder, scl_decode, path_metric_of
from .fano import FanoConfig, FanoDecoder, fano_decode
from .channel import ChannelConfig
from .harness import DecoderConfig, StoppingRule, run_fer
from .analysis import estimate_spectrum, normal_approximation, truncated_union_bound

__all__ = [
    "CodeSpec", "polar_profile", "reliability_table", "rm_profile", "encode",
    "decode_codeword", "precode", "ListDecoder", "scl_decode", "path_metric_of",
    "FanoConfig", "FanoDecoder", "fano_decode", "ChannelConfig", "DecoderConfig",
    "StoppingRule", "run_fer", "estimate_spectrum", "normal_approximation",
    "truncated_union_bound",
]
