"""Pure-numpy leapfrog kernels (reference path for the numba implementations).

Grid layout: E_x on horizontal edges (nx, ny+1), E_y on vertical edges
(nx+1, ny), scalar curl C on cell centers (nx, ny). Tangential boundary data
is imposed strongly on the outermost edge rows each step. Trace rows are in
grid order per side: bottom, right, top, left.
"""

from __future__ import annotations

import numpy as np


def curl_cells(ex, ey, hx, hy, out=None):
    if out is None:
        out = np.empty((ex.shape[0], ey.shape[1]), dtype=np.complex128)
    out[:, :] = (ey[1:, :] - ey[:-1, :]) / hx - (ex[:, 1:] - ex[:, :-1]) / hy
    return out


def _accel(s, eps0, hx, hy, ax, ay):
    # a = -(1/eps0) * curl_v(s) on interior edges; s = binv * curl
    ax[:, 1:-1] = -(s[:, 1:] - s[:, :-1]) / (eps0 * hy)
    ay[1:-1, :] = (s[1:, :] - s[:-1, :]) / (eps0 * hx)


def _extract_trace(C, row, nx, ny):
    # second-order extrapolation of cell-center curl to the boundary
    row[:nx] = 1.5 * C[:, 0] - 0.5 * C[:, 1]
    row[nx:nx + ny] = 1.5 * C[nx - 1, :] - 0.5 * C[nx - 2, :]
    row[nx + ny:2 * nx + ny] = 1.5 * C[:, ny - 1] - 0.5 * C[:, ny - 2]
    row[2 * nx + ny:] = 1.5 * C[0, :] - 0.5 * C[1, :]


def run_wave(ex0, ey0, vx0, vy0, binv, eps0, hx, hy, dt, nsteps,
             bcb, bct, bcl, bcr,
             trace, record_trace,
             energy, record_energy,
             snaps, snap_stride, wi0, wi1, wj0, wj1,
             exN, eyN, exNm1, eyNm1):
    """Leapfrog for eps0*dtt(E) + curl(binv curl E) = 0 with tangential Dirichlet data.

    Returns 0 on success, 1 if non-finite values appeared.
    """
    nx, ny = binv.shape
    ex = ex0.astype(np.complex128, copy=True)
    ey = ey0.astype(np.complex128, copy=True)
    C = np.empty((nx, ny), dtype=np.complex128)
    s = np.empty_like(C)
    ax = np.zeros_like(ex)
    ay = np.zeros_like(ey)

    curl_cells(ex, ey, hx, hy, C)
    if record_trace:
        _extract_trace(C, trace[0], nx, ny)
    if snap_stride > 0:
        snaps[0] = C[wi0:wi1, wj0:wj1]

    # Taylor start: E^1 = E^0 + dt V^0 + (dt^2/2) A(E^0)
    np.multiply(binv, C, out=s)
    _accel(s, eps0, hx, hy, ax, ay)
    ex_new = ex + dt * vx0 + 0.5 * dt * dt * ax
    ey_new = ey + dt * vy0 + 0.5 * dt * dt * ay
    ex_new[:, 0] = bcb[1]
    ex_new[:, -1] = bct[1]
    ey_new[0, :] = bcl[1]
    ey_new[-1, :] = bcr[1]
    if record_energy:
        kin = 0.5 * eps0 * hx * hy * (
            np.sum(np.abs((ex_new - ex) / dt) ** 2)
            + np.sum(np.abs((ey_new - ey) / dt) ** 2))
        Cn1 = curl_cells(ex_new, ey_new, hx, hy)
        mag = 0.5 * hx * hy * np.sum(binv * (np.conj(Cn1) * C).real)
        energy[0, 0] = kin
        energy[0, 1] = mag
    ex_prev, ex = ex, ex_new
    ey_prev, ey = ey, ey_new

    dt2 = dt * dt
    for n in range(1, nsteps):
        curl_cells(ex, ey, hx, hy, C)
        if record_trace:
            _extract_trace(C, trace[n], nx, ny)
        if snap_stride > 0 and n % snap_stride == 0:
            snaps[n // snap_stride] = C[wi0:wi1, wj0:wj1]
        np.multiply(binv, C, out=s)
        _accel(s, eps0, hx, hy, ax, ay)
        ex_new = 2.0 * ex - ex_prev + dt2 * ax
        ey_new = 2.0 * ey - ey_prev + dt2 * ay
        ex_new[:, 0] = bcb[n + 1]
        ex_new[:, -1] = bct[n + 1]
        ey_new[0, :] = bcl[n + 1]
        ey_new[-1, :] = bcr[n + 1]
        if record_energy:
            kin = 0.5 * eps0 * hx * hy * (
                np.sum(np.abs((ex_new - ex) / dt) ** 2)
                + np.sum(np.abs((ey_new - ey) / dt) ** 2))
            Cn1 = curl_cells(ex_new, ey_new, hx, hy)
            mag = 0.5 * hx * hy * np.sum(binv * (np.conj(Cn1) * C).real)
            energy[n, 0] = kin
            energy[n, 1] = mag
        ex_prev, ex = ex, ex_new
        ey_prev, ey = ey, ey_new
        if n % 256 == 0 and not (np.isfinite(ex[nx // 2, ny // 2].real)
                                 and np.isfinite(ex[nx // 2, ny // 2].imag)):
            return 1

    curl_cells(ex, ey, hx, hy, C)
    if record_trace:
        _extract_trace(C, trace[nsteps], nx, ny)
    if snap_stride > 0 and nsteps % snap_stride == 0:
        k = nsteps // snap_stride
        if k < snaps.shape[0]:
            snaps[k] = C[wi0:wi1, wj0:wj1]

    exN[:, :] = ex
    eyN[:, :] = ey
    exNm1[:, :] = ex_prev
    eyNm1[:, :] = ey_prev
    if not (np.all(np.isfinite(ex.real)) and np.all(np.isfinite(ex.imag))):
        return 1
    return 0


def run_wave_dual(lam_x, lam_y, lamv_x, lamv_y, binv, eps0, hx, hy, dt, nsteps,
                  dual):
    """Adjoint of the control-to-terminal-state map.

    Runs the homogeneous leapfrog on the cotangent field backwards and emits,
    for each time index n, the rows (sign/h_perp) * binv * curl(q)
    at boundary-adjacent cells (grid order per side). The caller scales by
    -(dt^2/eps0) and applies windowing to obtain the control gradient.
    """
    nx, ny = binv.shape
    q_x = lam_x + lamv_x / dt
    q_y = lam_y + lamv_y / dt
    qm_x = lamv_x / dt
    qm_y = lamv_y / dt
    for a in (q_x, qm_x):
        a[:, 0] = 0.0
        a[:, -1] = 0.0
    for a in (q_y, qm_y):
        a[0, :] = 0.0
        a[-1, :] = 0.0

    C = np.empty((nx, ny), dtype=np.complex128)
    s = np.empty_like(C)
    ax = np.zeros_like(q_x)
    ay = np.zeros_like(q_y)
    dt2 = dt * dt

    # G^n needs p^{n+1} = q^{m} with m = N-1-n; emit while stepping m = 0..N-2
    for m in range(0, nsteps - 1):
        curl_cells(q_x, q_y, hx, hy, C)
        n = nsteps - 1 - m
        row = dual[n]
        row[:nx] = binv[:, 0] * C[:, 0] / hy                      # bottom +
        row[nx:nx + ny] = binv[nx - 1, :] * C[nx - 1, :] / hx     # right +
        row[nx + ny:2 * nx + ny] = -binv[:, ny - 1] * C[:, ny - 1] / hy   # top -
        row[2 * nx + ny:] = -binv[0, :] * C[0, :] / hx            # left -
        np.multiply(binv, C, out=s)
        _accel(s, eps0, hx, hy, ax, ay)
        q_new_x = 2.0 * q_x - qm_x + dt2 * ax
        q_new_y = 2.0 * q_y - qm_y + dt2 * ay
        q_new_x[:, 0] = 0.0
        q_new_x[:, -1] = 0.0
        q_new_y[0, :] = 0.0
        q_new_y[-1, :] = 0.0
        qm_x, q_x = q_x, q_new_x
        qm_y, q_y = q_y, q_new_y
    return 0


def run_wave_vs_ref(ex0, ey0, vx0, vy0, binv, eps0, hx, hy, dt, nsteps,
                    bcb, bct, bcl, bcr,
                    ref_ex, ref_ey, ref_c, omega,
                    errs):
    """Leapfrog run accumulating squared L2 errors against a phased reference.

    ``errs`` is (nsteps+1, 3): columns are field error^2, curl error^2 at
    integer steps, and dt-derivative error^2 at the preceding half step
    (column 2 row n compares (E^n - E^{n-1})/dt with the reference at t_{n-1/2};
    row 0 is zero).
    """
    nx, ny = binv.shape
    ex = ex0.astype(np.complex128, copy=True)
    ey = ey0.astype(np.complex128, copy=True)
    C = np.empty((nx, ny), dtype=np.complex128)
    s = np.empty_like(C)
    ax = np.zeros_like(ex)
    ay = np.zeros_like(ey)
    area = hx * hy

    def record(n, ex_c, ey_c, C_c):
        ph = np.exp(-1j * omega * n * dt)
        errs[n, 0] = area * (np.sum(np.abs(ex_c - ref_ex * ph) ** 2)
                             + np.sum(np.abs(ey_c - ref_ey * ph) ** 2))
        errs[n, 1] = area * np.sum(np.abs(C_c - ref_c * ph) ** 2)

    curl_cells(ex, ey, hx, hy, C)
    record(0, ex, ey, C)
    np.multiply(binv, C, out=s)
    _accel(s, eps0, hx, hy, ax, ay)
    ex_new = ex + dt * vx0 + 0.5 * dt * dt * ax
    ey_new = ey + dt * vy0 + 0.5 * dt * dt * ay
    ex_new[:, 0] = bcb[1]
    ex_new[:, -1] = bct[1]
    ey_new[0, :] = bcl[1]
    ey_new[-1, :] = bcr[1]

    ph_half = np.exp(-1j * omega * 0.5 * dt)
    dref = -1j * omega  # time derivative of the reference phase factor
    errs[1, 2] = area * (
        np.sum(np.abs((ex_new - ex) / dt - dref * ref_ex * ph_half) ** 2)
        + np.sum(np.abs((ey_new - ey) / dt - dref * ref_ey * ph_half) ** 2))
    ex_prev, ex = ex, ex_new
    ey_prev, ey = ey, ey_new

    dt2 = dt * dt
    for n in range(1, nsteps):
        curl_cells(ex, ey, hx, hy, C)
        record(n, ex, ey, C)
        np.multiply(binv, C, out=s)
        _accel(s, eps0, hx, hy, ax, ay)
        ex_new = 2.0 * ex - ex_prev + dt2 * ax
        ey_new = 2.0 * ey - ey_prev + dt2 * ay
        ex_new[:, 0] = bcb[n + 1]
        ex_new[:, -1] = bct[n + 1]
        ey_new[0, :] = bcl[n + 1]
        ey_new[-1, :] = bcr[n + 1]
        ph_half = np.exp(-1j * omega * (n + 0.5) * dt)
        errs[n + 1, 2] = area * (
            np.sum(np.abs((ex_new - ex) / dt - dref * ref_ex * ph_half) ** 2)
            + np.sum(np.abs((ey_new - ey) / dt - dref * ref_ey * ph_half) ** 2))
        ex_prev, ex = ex, ex_new
        ey_prev, ey = ey, ey_new

    curl_cells(ex, ey, hx, hy, C)
    record(nsteps, ex, ey, C)
    return 0
