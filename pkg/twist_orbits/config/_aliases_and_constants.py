"""
``twist_orbits.config._aliases_and_constants``
==============================================
Type aliases, keys and values for JSON run configurations.

"""

# ================= #
# JSON type aliases #
# ================= #

type ParamsDict = dict[str, float | int | list[float] | list[list[float]]]
type MapDict = dict[str, str | ParamsDict]
type SystemDict = dict[str, str | int | ParamsDict | list[MapDict]]
type ClassDict = dict[str, int | list[int]]
type SectionDict = dict[str, float | int | str | list[float] | None]
type ConfigDict = dict[str, int | SystemDict | list[ClassDict] | SectionDict]

# ==================== #
# JSON keys and values #
# ==================== #


class ConfigKeys:
    """Top-level keys of a run configuration."""
    SCHEMA_VERSION = 'schema_version'
    SYSTEM = 'system'
    CLASSES = 'classes'
    BUDGET = 'budget'
    TOLERANCES = 'tolerances'
    SAMPLING = 'sampling'
    SEED = 'seed'
    THREADS = 'threads'
    DECOMPOSE = 'decompose'
    SUSPEND = 'suspend'
    OUTPUT = 'output'
    ALL = [SCHEMA_VERSION, SYSTEM, CLASSES, BUDGET, TOLERANCES, SAMPLING, SEED, THREADS, DECOMPOSE, SUSPEND, OUTPUT]


class SystemKeys:
    """Keys for the `system` section."""
    KIND = 'kind'
    FAMILY = 'family'
    PARAMS = 'params'
    MAPS = 'maps'
    CATALOG = 'catalog'
    EXPRESSION = 'expression'
    N = 'n'


class SystemKinds:
    """Values of `system.kind`."""
    MAP = 'map'
    CHAIN = 'chain'
    HAMILTONIAN = 'hamiltonian'
    ALL = [MAP, CHAIN, HAMILTONIAN]


class ClassKeys:
    """Keys for each entry of the `classes` list."""
    M = 'm'
    D = 'd'


class BudgetKeys:
    """Keys for the `budget` section."""
    GRID_PER_AXIS = 'grid_per_axis'
    RANDOM_STARTS = 'random_starts'
    MAX_ITER = 'max_iter'
    BATCH_SIZE = 'batch_size'
    DEFLATION_RADIUS = 'deflation_radius'


class ToleranceKeys:
    """Keys for the `tolerances` section."""
    NEWTON = 'newton'
    CRITICAL = 'critical'
    ORBIT = 'orbit'
    DEGENERACY = 'degeneracy'
    DEDUP = 'dedup'
    DERIVATIVE = 'derivative'
    SYMPLECTIC = 'symplectic'
    FLOW_ORBIT = 'flow_orbit'
    SUSPENSION = 'suspension'


class SamplingKeys:
    """Keys for the `sampling` section."""
    PER_AXIS = 'per_axis'
    DELTA_PER_AXIS = 'delta_per_axis'
    RANDOM = 'random'
    BOX = 'box'


class DecomposeKeys:
    """Keys for the `decompose` section."""
    SAFETY = 'safety'
    STEPS = 'steps'
    CHECK_POINTS = 'check_points'
    P_MAX = 'p_max'
    RANDOM_STARTS = 'random_starts'


class SuspendKeys:
    """Keys for the `suspend` section."""
    STEPS = 'steps'
    DELTA_T = 'delta_t'
    RICHARDSON = 'richardson'
    POINTS_PER_AXIS = 'points_per_axis'
    P_MAX = 'p_max'


class OutputKeys:
    """Keys for the `output` section."""
    DIR = 'dir'
