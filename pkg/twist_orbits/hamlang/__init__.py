"""
``twist_orbits.hamlang``
========================
A small expression language for Hamiltonians `H(q, p, t)`.

Grammar, in order of increasing precedence::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := number | 'pi' | 't' | 'q<i>' | 'p<i>' | func '(' expr ')' | '(' expr ')'
    func    := 'sin' | 'cos' | 'exp' | 'sqrt'

Exponents must be constant. Indices of `q` and `p` start at 1.

Modules
-------
- ``nodes``
- ``parser``
- ``jets``

"""

from .nodes import *
from .parser import *
from .jets import *
