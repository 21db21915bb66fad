"""Numerical certification of the scalar, matrix, reaction, gradient and decay inequalities."""
from .gradient import check_gradient_coefficients, check_gradient_lemmas, delta_max
from .matrix import check_matrix_lemmas
from .reaction import check_decay_chain, check_reaction_lemmas
from .report import LemmaParams, ScanSpec, VerificationReport
from .scalar import check_quadratic, check_scalar_bounds

__all__ = [
    "LemmaParams", "ScanSpec", "VerificationReport", "check_decay_chain", "check_gradient_coefficients",
    "check_gradient_lemmas", "check_matrix_lemmas", "check_quadratic", "check_reaction_lemmas",
    "check_scalar_bounds", "delta_max",
]
