"""Signature-token transformers for irregularly sampled time series."""
from .multiview import MultiViewTokens, SignatureConfig, batch_transform, global_signatures, local_signatures, multi_view_transform
from .series import TimeSeries, WindowGrid, interpolate_at, random_drop, slice_window, uniform_grid
from .signature import numeric_signature_oracle, path_signature, segment_signature, time_augment
from .tensor_algebra import TruncatedTensor, level_max_norm, tensor_mul, unit, zero

__version__ = "0.1.0"
