"""Pure numpy versions of the compiled kernels in ``_native.pyx``."""
import numpy as np

# Upper bound on the phase-index matrix built per chunk of orders.
_CHUNK_ELEMENTS = 1 << 22


def spwm_levels(ref, carrier, s):
    ref = np.asarray(ref, dtype=np.float64)
    carrier = np.asarray(carrier, dtype=np.float64)
    if ref.shape != carrier.shape:
        raise ValueError("ref and carrier must have equal length")
    level = np.zeros(ref.shape, dtype=np.int8)
    for k in range(s):
        level += ref > float(k) + carrier
        level -= ref < carrier - float(k + 1)
    return level


def project_harmonics(x, cos_table, sin_table, n_cycles, max_order):
    x = np.asarray(x, dtype=np.float64)
    L = x.shape[0]
    if len(cos_table) != L or len(sin_table) != L:
        raise ValueError("tables must match record length")
    a = np.zeros(max_order)
    b = np.zeros(max_order)
    idx = np.arange(L, dtype=np.int64)
    rows = max(1, _CHUNK_ELEMENTS // max(L, 1))
    for start in range(1, max_order + 1, rows):
        orders = np.arange(start, min(start + rows, max_order + 1), dtype=np.int64)
        steps = (orders * n_cycles) % L
        phase = (steps[:, None] * idx[None, :]) % L
        a[orders - 1] = 2.0 * (cos_table[phase] @ x) / L
        b[orders - 1] = 2.0 * (sin_table[phase] @ x) / L
    return a, b
