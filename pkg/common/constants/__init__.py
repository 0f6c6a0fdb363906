"""Constants for the qcstar engine."""


# Seminorm kinds on operator vector sets
class SeminormKind:
    WEAK = "weak"
    STRONG = "strong"
    STRONG_STAR = "strong_star"


# Subalgebra kinds of the commutative model
class AlgebraKind:
    BOUNDED = "bounded"
    LIPSCHITZ = "lipschitz"


# Bounded set family kinds
class FamilyKind:
    FINITE_SETS = "finite-sets"
    CUSTOM = "custom"


# Runner commands
class Command:
    AXIOMS = "axioms"
    SPECTRUM = "spectrum"
    CALCULUS = "calculus"
    ROOT = "root"
    PRODUCT = "product"
    GELFAND = "gelfand"
    GNS = "gns"
    OPMODEL = "opmodel"


# Operator-model suites
class OperatorSuite:
    COMMUTANT = "commutant"
    LATTICE = "lattice"
    PROP43 = "prop43"
    PHYSICAL = "physical"
    BRIDGE = "bridge"
    ALL = "all"


# Exit codes
EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_SCHEMA = 2
EXIT_IO = 3

SCHEMA_VERSION = 1

# Grid defaults
DEFAULT_GRID_POINTS = 4096

# Tolerances
DEFAULT_POSITIVITY_TOL = 1e-12  # Relative to sup norm
DEFAULT_POSITIVITY_FLOOR = 1e-300  # Absolute
DEFAULT_HERMITIAN_TOL = 1e-12
DEFAULT_SEMINORM_TOL = 1e-8  # Absolute
DEFAULT_CAUCHY_TOL = 1e-8
DEFAULT_DENOMINATOR_TOL = 1e-13
DEFAULT_VALUE_BOUND = 1e300
DEFAULT_INFINITY_MEASURE_CELLS = 4  # Grid cells of allowed infinity mass
DEFAULT_WINDOW = 3  # Adjacent infinity points that break nowhere-density

# Schedules
DEFAULT_SCHEDULE_BASE = 2.0  # eps_k = base^-k
DEFAULT_SCHEDULE_ALT_BASE = 3.0
DEFAULT_CAUCHY_DECAY = 0.75
DEFAULT_CAUCHY_WINDOW = 5
DEFAULT_CAUCHY_MAX_STEPS = 40

# Sampling
DEFAULT_SAMPLES = 500
DEFAULT_CONTINUITY_SAMPLES = 200
DEFAULT_CONTINUITY_CAP = 1e6

# Calculus
DEFAULT_CLASS_SUP_THRESHOLD = 1e12
DEFAULT_PHYSICAL_DECAY_ORDER = 1

# Runner
DEFAULT_REPORT_PATH = "qcstar-report.json"
DEFAULT_MAX_CONCURRENCY = 4
