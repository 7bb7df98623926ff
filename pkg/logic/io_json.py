"""JSON encoding for germdeform reports. Complex numbers travel as [re, im]."""
import json

import numpy as np

from logic.errors import InputError


def cplx(z):
    z = complex(z)
    return [z.real, z.imag]


def clist(values):
    return [cplx(z) for z in np.ravel(np.asarray(values, dtype=complex))]


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_complex(value):
    if isinstance(value, (list, tuple)):
        if len(value) != 2 or not all(_is_number(v) for v in value):
            raise InputError(f"a complex number is [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if _is_number(value):
        return complex(value)
    raise InputError(f"cannot read a complex number from {value!r}")


def parse_vector(values):
    if not isinstance(values, (list, tuple)):
        raise InputError(f"expected a list of complex numbers, got {values!r}")
    return np.array([parse_complex(v) for v in values], dtype=complex)


def _round(obj):
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            return None
        return float(f"{value:.15g}")
    if isinstance(obj, (complex, np.complexfloating)):
        return _round(cplx(obj))
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def dumps(obj):
    """Stable JSON text with every float at 15 significant digits."""
    return json.dumps(_round(obj), indent=2, sort_keys=True)


def load(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}")
