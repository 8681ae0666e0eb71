"""Pure-numpy reference implementation of the inner loops.

These functions define the semantics the compiled ``_kernels`` module must
reproduce.  Arrays are float64 C-ordered; ``active`` is a uint8 mask.
"""
import numpy as np

#: rows per block, sized so a block and its temporaries stay in cache
_BLOCK = 4096


def project_out(W, pivot, v2, active):
    """Project every active row of ``W`` onto the complement of ``pivot``.

    Updates ``W`` in place and stores the new squared row norms in ``v2``.
    Inactive rows are left in an unspecified (but finite) state.
    """
    pp = float(pivot @ pivot)
    if pp <= 0.0:
        return
    u = pivot / pp
    tmp = np.empty((min(_BLOCK, W.shape[0]), W.shape[1]))
    for lo in range(0, W.shape[0], _BLOCK):
        blk = W[lo:lo + _BLOCK]
        t = tmp[:blk.shape[0]]
        np.multiply((blk @ pivot)[:, None], u, out=t)
        blk -= t
        np.einsum("ij,ij->i", blk, blk, out=v2[lo:lo + _BLOCK])


def masked_argmax(v, active, rtol):
    """Lowest active index whose value is within ``rtol`` of the active max.

    Returns -1 when no row is active.
    """
    mask = active.view(bool)
    if not mask.any():
        return -1
    vmax = v[mask].max()
    hits = np.flatnonzero(mask & (v >= vmax - rtol * abs(vmax)))
    return int(hits[0])


def abs_dot(F, b, out):
    np.abs(F @ b, out=out)
