"""Sublinear-time approximation of possibly indefinite similarity matrices.

The approximators (Nystrom, submatrix-shifted Nystrom and CUR variants) read
the matrix only through an oracle.  Generators and evaluation helpers support
desk-scale experiments, and ``smsnystrom.cli`` drives it all from a shell.
"""

from .core import (
    CountingOracle,
    DenseOracle,
    FunctionOracle,
    IndexSample,
    MatrixFormatError,
    NotPSDError,
    NumericError,
    OracleValueError,
    ParameterError,
    PreconditionError,
    SimApproxError,
    SimilarityOracle,
    SymmetrizedOracle,
    counting_oracle,
    gather_block,
    sample_nested,
    sample_uniform,
    symmetrize_oracle,
)
from .algorithms import (
    CURFactor,
    NystromFactor,
    classic_nystrom,
    embed_cur,
    embed_nystrom,
    extend_embedding,
    reconstruct,
    sicur,
    skeleton,
    sms_nystrom,
    stacur,
)
from .evaluation import ErrorReport, error_sweep, rel_fro_error

__version__ = "0.1.0"

__all__ = [
    "CountingOracle",
    "DenseOracle",
    "FunctionOracle",
    "IndexSample",
    "MatrixFormatError",
    "NotPSDError",
    "NumericError",
    "OracleValueError",
    "ParameterError",
    "PreconditionError",
    "SimApproxError",
    "SimilarityOracle",
    "SymmetrizedOracle",
    "counting_oracle",
    "gather_block",
    "sample_nested",
    "sample_uniform",
    "symmetrize_oracle",
    "CURFactor",
    "NystromFactor",
    "classic_nystrom",
    "embed_cur",
    "embed_nystrom",
    "extend_embedding",
    "reconstruct",
    "sicur",
    "skeleton",
    "sms_nystrom",
    "stacur",
    "ErrorReport",
    "error_sweep",
    "rel_fro_error",
]
