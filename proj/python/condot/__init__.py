"""Conditional Monge maps with partially input convex networks."""

import sys

from ._core import (
    AffineMongeMap,
    CondotError,
    Model,
    cli,
    exact_ot_cost,
    gaussian_monge_map,
    gelbrich_distance,
    mmd,
    perturbation_signature_l2,
    sinkhorn,
    smacof,
)

__all__ = [
    "AffineMongeMap",
    "CondotError",
    "Model",
    "cli",
    "exact_ot_cost",
    "gaussian_monge_map",
    "gelbrich_distance",
    "main",
    "mmd",
    "perturbation_signature_l2",
    "sinkhorn",
    "smacof",
]


def main() -> int:
    """Entry point mirroring the native `condot` executable."""
    code, out, err = cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
