"""
``twist_orbits.config``
=======================
Read and validate JSON run configurations.

Modules
-------
- ``loader``
- ``_aliases_and_constants``

"""

from ._aliases_and_constants import *
from .loader import *
