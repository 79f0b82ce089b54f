"""Open quantum random walks, their quantum Markov chains, and reducibility checks."""

from .evolution import (BlockState, Trajectory, invariant_state, site_distribution, step,
                        superoperator, trajectory)
from .exceptions import (BoundaryViolation, CriterionDisagreement, DimensionMismatch,
                         IndexOutOfRange, InvalidState, MissingOperator, NotHermitian,
                         NotNormalized, NotPsd, NotStochastic, OqrwError, ParseError,
                         SchemaError, TraceError)
from .io import load_cylinder, load_model, load_state
from .model import (OqrwModel, ValidationReport, classical_embed, explicit_model,
                    lattice_model, path_operator, validate_model)
from .qmc import (BbarFamily, BlockObservable, CylinderObservable, bbar,
                  conditional_expectation_E0, is_invariant_state, kraus_dilation,
                  qmc_evaluate, transition_expectation, verify_markov_pair)
from .reducibility import (ClassStructure, ProjectionFamily, Verdict, analyze,
                           classical_classes, common_range_condition, cp_irreducible,
                           faithfulness_certificate, nn_condition_check, support_witness,
                           verify_reducing)

__version__ = "0.1.0"
