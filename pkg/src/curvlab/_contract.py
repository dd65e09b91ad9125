"""Shared cached-plan einsum wrapper.

Contraction plans are precompiled once per (subscripts, operand shapes);
the optimizer and flow loops repeat identical tiny contractions thousands
of times, where per-call path search would dominate the runtime.
"""

import opt_einsum

_CACHE: dict = {}


def _es(subscripts, *ops):
    key = (subscripts,) + tuple(op.shape for op in ops)
    expr = _CACHE.get(key)
    if expr is None:
        expr = opt_einsum.contract_expression(subscripts, *(op.shape for op in ops))
        _CACHE[key] = expr
    return expr(*ops)
