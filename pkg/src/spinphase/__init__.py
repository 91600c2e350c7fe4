"""Phase-space functions of finite spins: star products, representation changes,
large-spin approximations, time evolution and coupled spins."""
from .angular import HalfInt, SqrtRational, clebsch_gordan, wigner_3j, wigner_6j, wigner_D, wigner_small_d
from .approx import ConvergenceReport, star_approx_general
from .coupled import CoupledPhaseFunction, coupled_moyal_rhs, coupled_op_to_phase, coupled_star
from .evolution import Trajectory, evolve_rk4, hilbert_propagate, moyal_rhs
from .expansion import SpinWeightedExpansion, eth, eth_bar, evaluate, multiply, rotate
from .kernels import BACKEND
from .starprod import delta_apply, star_general, star_p, star_q, star_table
from .states import StateSpec, build_state, excited_coherent
from .tensorops import PhaseSpaceFunction, SpinOperator, op_to_phase, phase_to_op, tensor_op

__version__ = "0.1.0"
