"""
Carleson Lab: composition operators on Hardy-Orlicz and Bergman-Orlicz spaces.
"""

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Set VERSION
__version__ = "0.1.0"

# Export the main entry points
from src.log_real import CarlesonLabError, LogReal
from src.orlicz_core import OrliczFunction, build_special, condition_probe, luxemburg_norm, parse_psi
from src.symbols import AnalyticSymbol, build_cusp, parse_symbol
from src.disk_geometry import CarlesonWindow, carleson_rho, k_mu2, pullback_area, pullback_boundary
from src.nevanlinna import equivalence_report, n_phi, n_phi2, nu2, preimages
from src.harmonic_tools import berezin, cz_decompose, distribution_ratio, lambda_f
from src.criteria import separation_experiment
