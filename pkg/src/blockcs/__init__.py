"""Block compressed-sensing codec with a shift/add fixed-point decoder."""

from .fixedpoint import FixedFormat, FixedContext, FixedOverflowError, OpCounters
from .sensing import SensingMatrix, SolveTable, StructureError, build_sensing, build_solve_table
from .encoder import MeasurementStream, compress_image, load_pgm, save_pgm, FormatError
from .decoder import Decoder, DecoderConfig, BlockResult, reconstruct_image
from .reference import omp_reference, psnr, ssim

__all__ = [
    "FixedFormat",
    "FixedContext",
    "FixedOverflowError",
    "OpCounters",
    "SensingMatrix",
    "SolveTable",
    "StructureError",
    "build_sensing",
    "build_solve_table",
    "MeasurementStream",
    "compress_image",
    "load_pgm",
    "save_pgm",
    "FormatError",
    "Decoder",
    "DecoderConfig",
    "BlockResult",
    "reconstruct_image",
    "omp_reference",
    "psnr",
    "ssim",
]

__version__ = "0.1.0"
