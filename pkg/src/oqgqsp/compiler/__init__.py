from .circuit import (Circuit, Instruction, cd, cq, measure, parity_flip, pauli2,
                      phase_rotation, reset, rot)
from .simulator import (HeraldError, HeraldRecord, ShotStatistics, circuit_unitary,
                        herald_csv, pauli_exponential, run_shots, simulate)
from .builders import (Registers, UnaryCode, energy_term_instructions, gqsp_circuit,
                       gqsp_instructions, linear_term_instructions, mcd_coupling_circuit,
                       mcd_coupling_instructions, quadratic_term_instructions,
                       reference_rotation, signal_operator_circuit, state_dependent_gate,
                       state_dependent_instructions)

__all__ = [
    "Circuit", "Instruction", "cd", "cq", "measure", "parity_flip", "pauli2",
    "phase_rotation", "reset", "rot", "HeraldError", "HeraldRecord", "ShotStatistics",
    "circuit_unitary", "herald_csv", "pauli_exponential", "run_shots", "simulate",
    "Registers", "UnaryCode", "energy_term_instructions", "gqsp_circuit",
    "gqsp_instructions", "linear_term_instructions", "mcd_coupling_circuit",
    "mcd_coupling_instructions", "quadratic_term_instructions", "reference_rotation",
    "signal_operator_circuit", "state_dependent_gate", "state_dependent_instructions",
]
