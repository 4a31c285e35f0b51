"""Direct scattering data of the focusing NLS for compactly supported real potentials."""
from .errors import NlsDirectError, RankError, SpectralSingularityError, StabilityError
from .marchenko import MarchenkoKernel, recover_left, recover_right, relative_error
from .pencil import (ExponentialSumModel, SampleSeries, SpectralData, build_hankel,
                     cluster_multiplicities, estimate_order, identify, recover_coefficients,
                     solve_pencil, to_spectral_data)
from .potential import (MultisolitonParams, PotentialGrid, SolitonParams, TruncationWarning,
                        eval_multisoliton, eval_soliton, solve_lyapunov, tabulate)
from .scatmat import (ScatteringSample, coefficients_left, coefficients_right,
                      scattering_entries, scan)
from .volterra import KernelKind, KernelTriangle, diagonal_values, query, solve_auxiliary

__version__ = "0.1.0"
