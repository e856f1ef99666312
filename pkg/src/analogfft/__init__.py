"""Simulated analog in-memory FFTs on memristive crossbar arrays."""

from .core import dft_matrix, reference_dft, reference_dft_2d
from .device import HardwareModel, dft_array, program, map_dft_to_targets
from .engine import (ExecutionConfig, StageTrace, analog_dft_direct, analog_fft_1d,
                     analog_fft_batch, analog_vr_fft_2d, build_bank, ideal_config)
from .errors import (AnalogFFTError, ConfigError, FileFormatError, InvalidSizeError,
                     MissingArrayError, UnfactorableError)
from .plan import Leaf, Split, plan_factorization

__version__ = "0.1.0"
