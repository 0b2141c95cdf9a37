"""Numeric tolerances shared by every module and by the acceptance suite."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    psd: float = 1e-10
    trace: float = 1e-10
    bloch_validity: float = 1e-9
    input_lift: float = 1e-9
    sdp_rel_gap: float = 1e-8
    sdp_feas: float = 1e-9
    sdp_max_iter: int = 200
    certificate_gap: float = 1e-6
    signaling_gate: float = 0.05
    signaling_warn: float = 1e-3


TOL = Tolerances()
