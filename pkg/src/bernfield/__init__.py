"""Simulation and exact verification of stationary Bernoulli random fields and their
weighted-sum central limit behaviour on the lattice Z^d."""

__version__ = "0.1.0"

from bernfield import backend
from bernfield.dependence import (
    DependenceReport, delta_p_analytic, delta_p_monte_carlo, dependence_report, sigma2,
    wu_coefficient,
)
from bernfield.errors import (
    BernfieldError, ConfigurationError, DegenerateSchemeError, DomainError,
    UnsupportedOperationError,
)
from bernfield.fields import (
    DifferenceFieldModel, Example1Model, KernelFieldModel, VolterraFieldModel, ZeroFieldModel,
)
from bernfield.harness import (
    ExperimentConfig, ExperimentResult, run_clt, run_counterexample1, run_counterexample2,
    run_fdd_covariance, run_path_export,
)
from bernfield.innovations import InnovationField, InnovationSpec, parse_seed, replication_seed
from bernfield.oracle import FiniteSpace, run_suite
from bernfield.sums import effective_weights, exact_variance, sample_sum, sample_sums
from bernfield.weights import (
    IndexSetWeights, MeasureSpec, ProductLinearWeights, RectangleWeights, SetIndexedWeights,
)
