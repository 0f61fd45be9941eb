"""Central-difference verification of tape gradients."""

import math

import numpy as np

from .core import Tape, backward


def grad_check(fn, params, step=1e-5):
    """Compare analytic gradients against central finite differences.

    ``fn`` takes a fresh ``Tape`` and returns a scalar loss tensor; it must
    read parameter values through ``tape.watch`` so that in-place
    perturbations of ``param.value`` are visible. Returns the maximum over
    all parameter entries of ``|analytic - fd| / max(1, |fd|)``.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    tape = Tape()
    loss = fn(tape)
    if not math.isfinite(loss.item()):
        raise FloatingPointError("function value is not finite at the base point")
    backward(tape, loss)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.value.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            f_hi = fn(Tape()).item()
            flat[i] = saved - step
            f_lo = fn(Tape()).item()
            flat[i] = saved
            if not (math.isfinite(f_hi) and math.isfinite(f_lo)):
                raise FloatingPointError(
                    f"function value is not finite while perturbing {p.name}[{i}]")
            fd = (f_hi - f_lo) / (2.0 * step)
            err = abs(gflat[i] - fd) / max(1.0, abs(fd))
            if err > worst:
                worst = err
    for p, ga in zip(params, analytic):
        np.copyto(p.grad, ga)
    return worst
