"""Pure-Python circuit kernels; drop-in twin of the compiled ``_kernels``.

Nodes are flattened in topological order (children first): ``kinds`` holds
0=sum, 1=product, 2/3=leaf; ``ptr``/``idx`` are CSR child lists; ``values``
carries leaf values on entry and every node's value on exit.
"""

BACKEND = "python"

SUM, PRODUCT = 0, 1


def eval_forward(kinds, ptr, idx, values):
    """Bottom-up evaluation in place; returns the root (last) value."""
    k = _as_list(kinds)
    p = _as_list(ptr)
    x = _as_list(idx)
    v = _as_list(values)
    for i in range(len(k)):
        kind = k[i]
        if kind == SUM:
            acc = 0.0
            for j in range(p[i], p[i + 1]):
                acc += v[x[j]]
            v[i] = acc
        elif kind == PRODUCT:
            acc = 1.0
            for j in range(p[i], p[i + 1]):
                acc *= v[x[j]]
            v[i] = acc
    _write_back(values, v)
    return v[-1] if v else 1.0


def eval_backward(kinds, ptr, idx, values, derivs, root):
    """Top-down partial derivatives of the root w.r.t. every node.

    ``values`` must hold a completed forward pass. Sibling products use
    prefix/suffix accumulation, so zero-valued children need no special case.
    """
    k = _as_list(kinds)
    p = _as_list(ptr)
    x = _as_list(idx)
    v = _as_list(values)
    d = [0.0] * len(k)
    d[root] = 1.0
    prefix = [0.0] * len(x)
    for i in range(len(k) - 1, -1, -1):
        di = d[i]
        if di == 0.0:
            continue
        kind = k[i]
        if kind == SUM:
            for j in range(p[i], p[i + 1]):
                d[x[j]] += di
        elif kind == PRODUCT:
            lo, hi = p[i], p[i + 1]
            acc = 1.0
            for j in range(lo, hi):
                prefix[j] = acc
                acc *= v[x[j]]
            suffix = 1.0
            for j in range(hi - 1, lo - 1, -1):
                d[x[j]] += di * prefix[j] * suffix
                suffix *= v[x[j]]
    _write_back(derivs, d)


def max_forward(kinds, ptr, idx, values):
    """Forward pass with sums replaced by max; empty max is 0."""
    k = _as_list(kinds)
    p = _as_list(ptr)
    x = _as_list(idx)
    v = _as_list(values)
    for i in range(len(k)):
        kind = k[i]
        if kind == SUM:
            best = 0.0
            first = True
            for j in range(p[i], p[i + 1]):
                val = v[x[j]]
                if first or val > best:
                    best = val
                    first = False
            v[i] = best
        elif kind == PRODUCT:
            acc = 1.0
            for j in range(p[i], p[i + 1]):
                acc *= v[x[j]]
            v[i] = acc
    _write_back(values, v)
    return v[-1] if v else 1.0


def _as_list(buf):
    tolist = getattr(buf, "tolist", None)
    return tolist() if tolist is not None else list(buf)


def _write_back(buf, data):
    buf[: len(data)] = data
