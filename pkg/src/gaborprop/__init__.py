"""Gabor wave front sets of quadratic-Hamiltonian propagators, at desk scale."""
from .cones import DirectionSet, circle_directions, cubed_sphere_directions, default_directions
from .quadham import QuadraticHamiltonian, hamilton_matrix, order_budget, predicted_set, singular_space
from .signals import SampledSignal, builtin, read_signal, write_signal
from .symplectic import Subspace, is_positive_symplectic, is_symplectic, matrix_exponential
from .tfa import PhaseGrid, WindowSpec, decay_order, stft, wavefront_estimate

__version__ = "0.1.0"
