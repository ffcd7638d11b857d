"""Lattice point counting in hyperbolic conjugacy classes of the modular group."""
from .exactnum import HPoint, IMat2, QMat2, QuadRat, cosh_rho, moebius_apply, quad_sign, translation_length
from .forms import QForm, build_frame, pell_fundamental
from .counting import count, count_fq, enumerate_orbit, main_term, sl2z_spectral_datum

__version__ = "0.1.0"
