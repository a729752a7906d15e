"""
twist_orbits
============
Find and certify periodic orbits of symplectic twist maps of the cotangent
bundle of the n-torus by the discrete critical-action principle, decompose
time-1 maps of optical Hamiltonian flows into products of convex twist maps,
and suspend convex twist maps into Hamiltonian isotopies.

Available subpackages
---------------------
- ``framework``
    Geometric primitives, generating functions, twist maps, the discrete
    action, orbit search, Hamiltonian flows and suspensions
- ``hamlang``
    Expression language for user-defined Hamiltonians with second-order
    forward-mode differentiation
- ``config``
    Read and validate JSON run configurations

"""

SCHEMA_VERSION = 1


class ExitCodes:
    """Process exit codes of the ``twist-orbits`` command."""
    OK = 0
    CONFIG = 1
    CERTIFICATION = 2
    NUMERIC = 3


GENFUN_FAMILIES = [
    'integrable',
    'standard',
    'froeschle',
    'indefinite'
]

HAMILTONIAN_FAMILIES = [
    'free',
    'pendulum',
    'mechanical',
    'shear'
]

COMMANDS = [
    'check',
    'orbits',
    'decompose',
    'suspend'
]

# Solver tolerances
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
CRITICAL_TOL = 1e-10
ORBIT_TOL = 1e-8
DEGENERACY_TOL = 1e-7
DEDUP_TOL = 1e-5
DEFLATION_RADIUS = 0.1

# Sampling defaults
GRID_PER_AXIS = 32
GRID_RANDOM = 10_000
DISPLACEMENT_BOX = 3.0
RANDOM_STARTS = 200

# Flow defaults
STEPS_PER_STINT = 64
SAFETY = 4.0
