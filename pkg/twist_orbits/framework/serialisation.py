"""
``twist_orbits.framework.serialisation``
========================================
JSON encoding of framework objects and report documents.

Objects are encoded from the attributes listed in their `__slots__`, tagged
with their class name. Generating functions and maps are encoded by label
only, so documents never depend on the evaluators behind them.

"""

import json
from typing import Any

import numpy as np

from twist_orbits import framework
from twist_orbits.framework import GeneratingFunction, MapChain, OrbitClass, TwistMap

type JSONObject = str | float | int | bool | list[JSONObject] | dict[str, JSONObject] | None

DECODABLE = [
    'CanonicalForm',
    'LowerBoundCert',
    'OpticalBounds',
    'OrbitCountReport',
    'OrbitVerification',
    'PhasePoint',
    'TwistConstants'
]


def _slots(cls: type) -> list[str]:
    names = []
    for klass in reversed(cls.__mro__):
        slots = getattr(klass, '__slots__', ())
        names.extend([slots] if isinstance(slots, str) else slots)
    return [name for name in names if not name.startswith('_')]


def serialise_framework(obj: Any) -> JSONObject:
    """Return a serialisable object for `obj` by using the attributes listed in the `__slots__` special attribute."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, GeneratingFunction):
        return obj.label
    if isinstance(obj, OrbitClass):
        return {'__class__': 'OrbitClass', 'm': list(obj.m), 'd': obj.d}
    if isinstance(obj, TwistMap):
        return {'__class__': type(obj).__name__, 'label': obj.label, 'tc': obj.tc}
    if isinstance(obj, MapChain):
        return [T.label for T in obj]
    try:
        attrs = _slots(type(obj))
        if not attrs:
            raise AttributeError
        return {'__class__': type(obj).__name__, **{attr: getattr(obj, attr) for attr in attrs}}
    except AttributeError:
        return json.JSONEncoder().default(obj)


def encode_document(doc: dict[str, Any]) -> str:
    """Serialise a report document with sorted keys."""
    return json.dumps(doc, default=serialise_framework, sort_keys=True, indent=2) + '\n'


def deserialise_framework(d: dict) -> dict | Any:
    """Return a `twist_orbits.framework` object by passing `d` as kwargs to the class constructor."""
    name = d.get('__class__')
    if name == 'OrbitClass':
        return OrbitClass(tuple(d['m']), d['d'])
    if name not in DECODABLE:
        return d
    kwargs = {key: value for key, value in d.items() if key != '__class__'}
    if name == 'OrbitCountReport':
        # JSON object keys are strings
        kwargs['census'] = {int(index): count for index, count in kwargs['census'].items()}
    return getattr(framework, name)(**kwargs)


def decode_document(s: str) -> dict[str, Any]:
    """Deserialise a report document, rebuilding simple framework objects."""
    return json.loads(s, object_hook=deserialise_framework)
