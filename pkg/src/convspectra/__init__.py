"""convspectra: finite truncations of infinite convolutions of uniform digit
measures, Hadamard-triple verification, summability diagnostics, and exact
finite-level spectrum construction."""

from .conditions import (
    contractivity_report,
    coupled_sample,
    coupling_eval,
    defect_term,
    equivalence_defect,
    pcc_series,
    pcc_split,
    pcc_sup,
    rbc_series,
    rbc_split,
    three_series,
)
from .errors import ConvspectraError
from .exactmat import (
    IntMatrix,
    RatMatrix,
    expansive_check,
    invert,
    product_range,
    spectral_norm_upper,
)
from .measures import (
    DiscreteMeasure,
    convolve,
    fourier,
    fourier_many,
    mu_truncate,
    nu_tail_truncate,
    point_mass,
    tail_fourier_product,
    uniform_on,
)
from .sequences import (
    TripleSequence,
    builtin_names,
    builtin_sequence,
    from_generator,
    from_triples,
)
from .spectra import (
    build_spectrum,
    cos_bound,
    equi_positivity_floor,
    equi_positivity_scan,
    perturbation_bound,
    q_eval,
    q_eval_many,
    read_levels,
    spectrum_exactness,
    tail_constant_C,
    write_levels,
)
from .triples import DigitSet, HadamardTriple, hadamard_check

__version__ = "0.1.0"

__all__ = [
    "ConvspectraError",
    "DigitSet",
    "DiscreteMeasure",
    "HadamardTriple",
    "IntMatrix",
    "RatMatrix",
    "TripleSequence",
    "build_spectrum",
    "builtin_names",
    "builtin_sequence",
    "contractivity_report",
    "convolve",
    "cos_bound",
    "coupled_sample",
    "coupling_eval",
    "defect_term",
    "equi_positivity_floor",
    "equi_positivity_scan",
    "equivalence_defect",
    "expansive_check",
    "fourier",
    "fourier_many",
    "from_generator",
    "from_triples",
    "hadamard_check",
    "invert",
    "mu_truncate",
    "nu_tail_truncate",
    "pcc_series",
    "pcc_split",
    "pcc_sup",
    "perturbation_bound",
    "point_mass",
    "product_range",
    "q_eval",
    "q_eval_many",
    "rbc_series",
    "rbc_split",
    "read_levels",
    "spectral_norm_upper",
    "spectrum_exactness",
    "tail_constant_C",
    "tail_fourier_product",
    "three_series",
    "uniform_on",
    "write_levels",
]
