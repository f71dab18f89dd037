from .config import BRUTE_FORCE_MAX_P, DEFAULT_TWIST, DEFAULT_WORKERS, OUTPUT_DIR
from .errors import ConsistencyError, EmitError, ParameterError, PresetError, PrsboxError
from .logging import get_logger, set_log_level
from .models import (
    BoundsRequest,
    CheckFamilyRequest,
    ErrorResponse,
    KloostermanRequest,
    SieveRequest,
    SweepConfig,
)
from .sweep import (
    PRESETS,
    figure_presets,
    run_selftest,
    run_sweep,
    tightness_shortfall,
    write_outputs,
)
from .sweep_service import get_sweep_service
from .utils import build_sweep_config, load_config, parse_family_descriptor, parse_formats, parse_mode, parse_prime_range

__all__ = [
    "BRUTE_FORCE_MAX_P",
    "DEFAULT_TWIST",
    "DEFAULT_WORKERS",
    "OUTPUT_DIR",
    "PRESETS",
    "BoundsRequest",
    "CheckFamilyRequest",
    "ConsistencyError",
    "EmitError",
    "ErrorResponse",
    "KloostermanRequest",
    "ParameterError",
    "PresetError",
    "PrsboxError",
    "SieveRequest",
    "SweepConfig",
    "build_sweep_config",
    "figure_presets",
    "get_logger",
    "get_sweep_service",
    "load_config",
    "parse_family_descriptor",
    "parse_formats",
    "parse_mode",
    "parse_prime_range",
    "run_selftest",
    "run_sweep",
    "set_log_level",
    "tightness_shortfall",
    "write_outputs",
]
