"""State-preparation loaders."""

from ..core import Method
from .alias import AliasTable, build_alias_table, solve_alias_mu, synth_alias
from .fsl import FourierTruncation, fourier_coefficients, fourier_errors, synth_fsl, truncate_fourier
from .mps import MpsFactorization, mps_compress, solve_mps_delta, synth_mps
from .multiplexer import (
    GroverRudolphAngles,
    angle_bits,
    grover_rudolph_angles,
    rotation_tolerance,
    solve_mottonen,
    solve_qrom_bits,
    synth_mottonen,
    synth_qrom_stateprep,
)
from .sparse import SparseTruncation, sparse_truncation, synth_sparse_sos

SYNTHESIZERS = {
    Method.Mottonen: synth_mottonen,
    Method.QromStatePrep: synth_qrom_stateprep,
    Method.SparseSOS: synth_sparse_sos,
    Method.MPS: synth_mps,
    Method.FSL: synth_fsl,
    Method.AliasSampling: synth_alias,
}

__all__ = [
    "AliasTable", "FourierTruncation", "GroverRudolphAngles", "MpsFactorization", "SYNTHESIZERS",
    "SparseTruncation", "angle_bits", "build_alias_table", "fourier_coefficients", "fourier_errors",
    "grover_rudolph_angles", "mps_compress", "rotation_tolerance", "solve_alias_mu", "solve_mottonen",
    "solve_mps_delta", "solve_qrom_bits", "sparse_truncation", "synth_alias", "synth_fsl",
    "synth_mottonen", "synth_mps", "synth_qrom_stateprep", "synth_sparse_sos", "truncate_fourier",
]
