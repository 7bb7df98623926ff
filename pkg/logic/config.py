import logging
import os
import sys
from dataclasses import dataclass, replace

from logic.errors import InputError

default_seed = int(os.environ.get("GERMDEFORM_SEED", "0"))
log_level = os.environ.get("GERMDEFORM_LOG_LEVEL", "WARNING")
cli_log_level = os.environ.get("GERMDEFORM_LOG_LEVEL", "INFO")

EPS_VAL = 1e-9

_handler = None


def get_logger(name):
    """Loggers print the same tagged lines as before: [INFO] ..., [ERROR] ..."""
    global _handler
    root = logging.getLogger("germdeform")
    if _handler is None:
        _handler = logging.StreamHandler(sys.stderr)
        _handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        root.addHandler(_handler)
        root.setLevel(log_level)
        root.propagate = False
    return root.getChild(name.split(".")[-1])


def set_level(level):
    logging.getLogger("germdeform").setLevel(level)


@dataclass(frozen=True)
class Settings:
    order: int = 0               # 0 means 2r + 8
    nodes: int = 256
    steps: int = 64
    seed: int = default_seed
    eps_val: float = EPS_VAL
    sep_tol: float = 1e-6
    contour_fraction: float = 0.75
    field_tol: float = 1e-9
    verify_tol: float = 1e-3
    residual_tol: float = 1e-7
    cluster_radius: float = 1e-6
    box_directions: int = 8

    def truncation(self, r):
        return self.order if self.order > 0 else 2 * r + 8

    def with_overrides(self, **overrides):
        values = {k: v for k, v in overrides.items() if v is not None}
        settings = replace(self, **values)
        settings.validate()
        return settings

    def validate(self):
        for name in ("order", "nodes", "steps", "seed", "box_directions"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"{name} must be an integer, got {value!r}")
        for name in ("eps_val", "sep_tol", "contour_fraction", "field_tol", "verify_tol", "residual_tol",
                     "cluster_radius"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise InputError(f"{name} must be a positive number, got {value!r}")
        if self.order < 0 or self.order > 128:
            raise InputError(f"order must lie in 0..128 (0 picks 2r + 8), got {self.order}")
        m = self.nodes
        if m < 4 or m > 4096 or m & (m - 1):
            raise InputError(f"nodes must be a power of two <= 4096, got {m}")
        if self.steps < 1:
            raise InputError(f"steps must be >= 1, got {self.steps}")


DEFAULTS = Settings()
