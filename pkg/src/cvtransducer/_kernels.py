"""Inner-loop stepping kernels for the time-sliced engine.

Two mathematically identical implementations are provided for each kernel:
a numba-compiled one (used when numba imports cleanly) and a vectorized
numpy one.  The engine's correctness tests compare them directly.

Layout conventions shared with :mod:`cvtransducer.dynamics`: quadratures
interleaved; mode 0 is the mechanics (q at row 0, p at row 1), the active
cavity's X/Y rows are ``cav``/``cav+1`` and slice k of the active pulse
sits at rows ``base + 2k``, ``base + 2k + 1``.

Per step of duration dt (forward order):
  (a) cavity-slice beamsplitter, angle theta = arcsin(sqrt(2 kappa dt)):
      C' = cos(theta) C + sin(theta) u,  u' = sin(theta) C - cos(theta) u,
      whose continuum limit is the input-output relation
      Q_out = sqrt(2 kappa) Q - Q_in;
  (b) two-mode QND shear with signed gain eps = sign * g * dt
      (pulse A: X_cav += eps q, p -= eps Y_cav;
       pulse B: Y_cav -= eps p, q += eps X_cav);
  (c) mechanical damping toward the bath: mech block
      -> (1 - gamma dt) block + gamma dt (2 n_th + 1) I, cross terms
      scaled by sqrt(1 - gamma dt).
Steps (a) and (b) are exactly symplectic; only (c) injects noise.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


def transfer_segment_backward_numpy(Rt, noise, pulse, cav, base, n_steps,
                                    c, s, eps, lam, nvar, damp):
    """Accumulate one segment into the influence matrix, reverse time order.

    ``Rt`` has shape (dim, 6): row i holds the coefficients of input
    quadrature i in the six output quadratures.  Processing step k of the
    forward map V -> S V S^T + N amounts to Rt <- S^T Rt (column update of
    R = Rt^T) after adding the step's noise contribution R N R^T.
    """
    iq, ip = 0, 1
    xc, yc = cav, cav + 1
    for k in range(n_steps - 1, -1, -1):
        xs = base + 2 * k
        ys = xs + 1
        if damp:
            block = Rt[iq:ip + 1, :]
            noise += nvar * (block.T @ block)
            Rt[iq:ip + 1, :] *= lam
        if pulse == 0:
            Rt[iq, :] += eps * Rt[xc, :]
            Rt[yc, :] -= eps * Rt[ip, :]
        else:
            Rt[ip, :] -= eps * Rt[yc, :]
            Rt[xc, :] += eps * Rt[iq, :]
        rc = Rt[xc, :].copy()
        Rt[xc, :] = c * rc + s * Rt[xs, :]
        Rt[xs, :] = s * rc - c * Rt[xs, :]
        rc = Rt[yc, :].copy()
        Rt[yc, :] = c * rc + s * Rt[ys, :]
        Rt[ys, :] = s * rc - c * Rt[ys, :]


@njit(cache=True)
def _transfer_segment_backward_numba(Rt, noise, pulse, cav, base, n_steps,
                                     c, s, eps, lam, nvar, damp):  # pragma: no cover
    iq, ip = 0, 1
    xc, yc = cav, cav + 1
    for k in range(n_steps - 1, -1, -1):
        xs = base + 2 * k
        ys = xs + 1
        if damp:
            for a in range(6):
                ra = Rt[iq, a]
                rb = Rt[ip, a]
                for b in range(6):
                    noise[a, b] += nvar * (ra * Rt[iq, b] + rb * Rt[ip, b])
            for a in range(6):
                Rt[iq, a] *= lam
                Rt[ip, a] *= lam
        if pulse == 0:
            for a in range(6):
                Rt[iq, a] += eps * Rt[xc, a]
                Rt[yc, a] -= eps * Rt[ip, a]
        else:
            for a in range(6):
                Rt[ip, a] -= eps * Rt[yc, a]
                Rt[xc, a] += eps * Rt[iq, a]
        for a in range(6):
            rc = Rt[xc, a]
            ru = Rt[xs, a]
            Rt[xc, a] = c * rc + s * ru
            Rt[xs, a] = s * rc - c * ru
            rc = Rt[yc, a]
            ru = Rt[ys, a]
            Rt[yc, a] = c * rc + s * ru
            Rt[ys, a] = s * rc - c * ru


def dense_segment_forward_numpy(V, pulse, cav, base, n_steps,
                                c, s, eps, lam, nvar, damp):
    """One segment of the full-covariance evolution, forward time order."""
    iq, ip = 0, 1
    xc, yc = cav, cav + 1
    W = np.array([[c, 0.0, s, 0.0],
                  [0.0, c, 0.0, s],
                  [s, 0.0, -c, 0.0],
                  [0.0, s, 0.0, -c]])
    if pulse == 0:
        Sh = np.eye(4)
        Sh[0, 2] = eps   # rows (xc, yc, q, p): X_cav += eps q
        Sh[3, 1] = -eps  # p -= eps Y_cav
    else:
        Sh = np.eye(4)
        Sh[1, 3] = -eps  # Y_cav -= eps p
        Sh[2, 0] = eps   # q += eps X_cav
    mech_rows = [iq, ip]
    for k in range(n_steps):
        xs = base + 2 * k
        rows = [xc, yc, xs, xs + 1]
        V[rows, :] = W @ V[rows, :]
        V[:, rows] = V[:, rows] @ W.T
        rows = [xc, yc, iq, ip]
        V[rows, :] = Sh @ V[rows, :]
        V[:, rows] = V[:, rows] @ Sh.T
        if damp:
            V[mech_rows, :] *= lam
            V[:, mech_rows] *= lam
            V[iq, iq] += nvar
            V[ip, ip] += nvar


@njit(cache=True)
def _dense_segment_forward_numba(V, pulse, cav, base, n_steps,
                                 c, s, eps, lam, nvar, damp):  # pragma: no cover
    dim = V.shape[0]
    iq, ip = 0, 1
    xc, yc = cav, cav + 1
    for k in range(n_steps):
        xs = base + 2 * k
        ys = xs + 1
        for j in range(dim):
            vxc = V[xc, j]
            vxs = V[xs, j]
            V[xc, j] = c * vxc + s * vxs
            V[xs, j] = s * vxc - c * vxs
            vyc = V[yc, j]
            vys = V[ys, j]
            V[yc, j] = c * vyc + s * vys
            V[ys, j] = s * vyc - c * vys
        for i in range(dim):
            vxc = V[i, xc]
            vxs = V[i, xs]
            V[i, xc] = c * vxc + s * vxs
            V[i, xs] = s * vxc - c * vxs
            vyc = V[i, yc]
            vys = V[i, ys]
            V[i, yc] = c * vyc + s * vys
            V[i, ys] = s * vyc - c * vys
        if pulse == 0:
            # modifies rows/cols {xc, p}, reads {q, yc}: no aliasing
            for j in range(dim):
                V[xc, j] += eps * V[iq, j]
                V[ip, j] -= eps * V[yc, j]
            for i in range(dim):
                V[i, xc] += eps * V[i, iq]
                V[i, ip] -= eps * V[i, yc]
        else:
            for j in range(dim):
                V[yc, j] -= eps * V[ip, j]
                V[iq, j] += eps * V[xc, j]
            for i in range(dim):
                V[i, yc] -= eps * V[i, ip]
                V[i, iq] += eps * V[i, xc]
        if damp:
            for j in range(dim):
                V[iq, j] *= lam
                V[ip, j] *= lam
            for i in range(dim):
                V[i, iq] *= lam
                V[i, ip] *= lam
            V[iq, iq] += nvar
            V[ip, ip] += nvar


if HAVE_NUMBA:
    transfer_segment_backward = _transfer_segment_backward_numba
    dense_segment_forward = _dense_segment_forward_numba
else:  # pragma: no cover
    transfer_segment_backward = transfer_segment_backward_numpy
    dense_segment_forward = dense_segment_forward_numpy
