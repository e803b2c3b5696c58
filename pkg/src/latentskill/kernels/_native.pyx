# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Native kernels: same arithmetic as ``pure.py``, in the same order.

Keep this file in lockstep with the pure-Python reference; the test suite
asserts bit-identical outputs between the two backends.
"""

from libc.math cimport cos, sin, sqrt, fabs

cdef double DIVERGENCE_LIMIT = 1.0e6
cdef double PANEL_HALF_WIDTH = 0.05


def step_agent(double[::1] q, double[::1] v, double[::1] targets,
               double[::1] lengths, double[::1] masses,
               double[::1] kp, double[::1] kd, double[::1] damping,
               double[::1] lim_lo, double[::1] lim_hi, double[::1] inertias,
               double root_mass, double root_inertia, double contact_radius,
               long[::1] parent, double[::1] rest, double[::1] world,
               long[::1] obj_kinds, double[:, ::1] obj_data,
               double dt, long n_sub):
    cdef int nj = 8
    cdef double x = q[0], y = q[1], rot = q[2]
    cdef double vx = v[0], vy = v[1], w = v[2]
    cdef double qj[8]
    cdef double vq[8]
    cdef double tgt[8]
    cdef double L[8]
    cdef double mass[8]
    cdef double gkp[8]
    cdef double gkd[8]
    cdef double cdmp[8]
    cdef double lo[8]
    cdef double hi[8]
    cdef double inert[8]
    cdef long par[8]
    cdef double rst[8]
    cdef double ang[8]
    cdef double axp[8]
    cdef double ayp[8]
    cdef double exp_[8]
    cdef double eyp[8]
    cdef double wl[8]
    cdef double vax[8]
    cdef double vay[8]
    cdef double vex[8]
    cdef double vey[8]
    cdef double tq[8]
    cdef int j, i, k, cand, link, sub, n_obj
    cdef long p
    cdef double gravity, k_ground, d_ground, mu, visc, ang_damp, restitution, panel_damp
    cdef double m_tot, base, bx, by, bvx, bvy, bw, a, dx, dy, wj
    cdef double fx, fy, tau_root, px, py, pvx, pvy, pen, fn, ft, cap
    cdef double rb, mb, bfx, bfy, lp, mp, ip, tau
    cdef double rsum, best_pen, best_px, best_py, best_nx, best_ny
    cdef int best_link
    cdef double sx, sy, ddx, ddy, sdx, sdy, relx, rely, seg2, t, d2, dist
    cdef double m_eff, vrel, jimp, rfx, rfy
    cdef double px0, py0, pang, pdx, pdy, arm, nx_, ny_, gx, gy, gvx, gvy
    cdef double gfx, gfy, inv_panel
    cdef bint ok

    for j in range(nj):
        qj[j] = q[3 + j]
        vq[j] = v[3 + j]
        tgt[j] = targets[j]
        L[j] = lengths[j]
        mass[j] = masses[j]
        gkp[j] = kp[j]
        gkd[j] = kd[j]
        cdmp[j] = damping[j]
        lo[j] = lim_lo[j]
        hi[j] = lim_hi[j]
        inert[j] = inertias[j]
        par[j] = parent[j]
        rst[j] = rest[j]

    gravity = world[0]
    k_ground = world[1]
    d_ground = world[2]
    mu = world[3]
    visc = world[4]
    ang_damp = world[5]
    restitution = world[6]
    panel_damp = world[7]

    m_tot = root_mass
    for j in range(nj):
        m_tot += mass[j]

    n_obj = obj_kinds.shape[0]

    for sub in range(n_sub):
        # forward kinematics + point velocities
        for j in range(nj):
            p = par[j]
            if p < 0:
                base = rot
                bx = x
                by = y
                bvx = vx
                bvy = vy
                bw = w
            else:
                base = ang[p]
                bx = exp_[p]
                by = eyp[p]
                bvx = vex[p]
                bvy = vey[p]
                bw = wl[p]
            a = base + rst[j] + qj[j]
            ang[j] = a
            axp[j] = bx
            ayp[j] = by
            dx = L[j] * cos(a)
            dy = L[j] * sin(a)
            exp_[j] = bx + dx
            eyp[j] = by + dy
            wj = bw + vq[j]
            wl[j] = wj
            vax[j] = bvx
            vay[j] = bvy
            vex[j] = bvx - wj * dy
            vey[j] = bvy + wj * dx

        fx = 0.0
        fy = -m_tot * gravity
        tau_root = -ang_damp * w
        for j in range(nj):
            tq[j] = gkp[j] * (tgt[j] - qj[j]) - gkd[j] * vq[j] - cdmp[j] * vq[j]

        for i in range(nj + 1):
            if i == 0:
                px = x
                py = y
                pvx = vx
                pvy = vy
                link = -1
            else:
                link = i - 1
                px = exp_[link]
                py = eyp[link]
                pvx = vex[link]
                pvy = vey[link]
            pen = contact_radius - py
            if pen > 0.0:
                fn = k_ground * pen - d_ground * pvy
                if fn < 0.0:
                    fn = 0.0
                ft = -visc * pvx
                cap = mu * fn
                if ft > cap:
                    ft = cap
                elif ft < -cap:
                    ft = -cap
                fx += ft
                fy += fn
                tau_root += (px - x) * fn - (py - y) * ft
                k = link
                while k >= 0:
                    tq[k] += (px - axp[k]) * fn - (py - ayp[k]) * ft
                    k = par[k]

        for i in range(n_obj):
            if obj_kinds[i] == 0:
                rb = obj_data[i, 4]
                mb = obj_data[i, 5]
                bfx = 0.0
                bfy = -mb * gravity
                pen = rb - obj_data[i, 1]
                if pen > 0.0:
                    fn = k_ground * pen - d_ground * obj_data[i, 3]
                    if fn < 0.0:
                        fn = 0.0
                    ft = -visc * obj_data[i, 2]
                    cap = mu * fn
                    if ft > cap:
                        ft = cap
                    elif ft < -cap:
                        ft = -cap
                    bfx += ft
                    bfy += fn
                obj_data[i, 2] += bfx / mb * dt
                obj_data[i, 3] += bfy / mb * dt
            else:
                lp = obj_data[i, 4]
                mp = obj_data[i, 5]
                ip = mp * lp * lp / 3.0
                tau = -(mp * gravity * lp * 0.5) * cos(obj_data[i, 2]) - panel_damp * obj_data[i, 3]
                obj_data[i, 3] += tau / ip * dt

        vx += fx / m_tot * dt
        vy += fy / m_tot * dt
        w += tau_root / root_inertia * dt
        for j in range(nj):
            vq[j] += tq[j] / inert[j] * dt

        x += vx * dt
        y += vy * dt
        rot += w * dt
        for j in range(nj):
            qj[j] += vq[j] * dt
            if qj[j] < lo[j]:
                qj[j] = lo[j]
                if vq[j] < 0.0:
                    vq[j] = 0.0
            elif qj[j] > hi[j]:
                qj[j] = hi[j]
                if vq[j] > 0.0:
                    vq[j] = 0.0

        for i in range(n_obj):
            if obj_kinds[i] == 0:
                obj_data[i, 0] += obj_data[i, 2] * dt
                obj_data[i, 1] += obj_data[i, 3] * dt
            else:
                obj_data[i, 2] += obj_data[i, 3] * dt

        if n_obj > 0:
            for j in range(nj):
                p = par[j]
                if p < 0:
                    base = rot
                    bx = x
                    by = y
                    bvx = vx
                    bvy = vy
                    bw = w
                else:
                    base = ang[p]
                    bx = exp_[p]
                    by = eyp[p]
                    bvx = vex[p]
                    bvy = vey[p]
                    bw = wl[p]
                a = base + rst[j] + qj[j]
                ang[j] = a
                axp[j] = bx
                ayp[j] = by
                dx = L[j] * cos(a)
                dy = L[j] * sin(a)
                exp_[j] = bx + dx
                eyp[j] = by + dy
                wj = bw + vq[j]
                wl[j] = wj
                vax[j] = bvx
                vay[j] = bvy
                vex[j] = bvx - wj * dy
                vey[j] = bvy + wj * dx

            for i in range(n_obj):
                if obj_kinds[i] == 0:
                    bx = obj_data[i, 0]
                    by = obj_data[i, 1]
                    rsum = obj_data[i, 4] + contact_radius
                    best_pen = 0.0
                    best_link = -2
                    best_px = 0.0
                    best_py = 0.0
                    best_nx = 0.0
                    best_ny = 0.0
                    for cand in range(nj + 1):
                        if cand == 0:
                            sx = x
                            sy = y
                            ddx = bx - sx
                            ddy = by - sy
                            link = -1
                        else:
                            link = cand - 1
                            sdx = exp_[link] - axp[link]
                            sdy = eyp[link] - ayp[link]
                            relx = bx - axp[link]
                            rely = by - ayp[link]
                            seg2 = sdx * sdx + sdy * sdy
                            t = (relx * sdx + rely * sdy) / seg2
                            if t < 0.0:
                                t = 0.0
                            elif t > 1.0:
                                t = 1.0
                            sx = axp[link] + t * sdx
                            sy = ayp[link] + t * sdy
                            ddx = bx - sx
                            ddy = by - sy
                        d2 = ddx * ddx + ddy * ddy
                        if d2 < rsum * rsum:
                            dist = sqrt(d2)
                            pen = rsum - dist
                            if pen > best_pen:
                                best_pen = pen
                                best_link = link
                                best_px = sx
                                best_py = sy
                                if dist > 1e-9:
                                    best_nx = ddx / dist
                                    best_ny = ddy / dist
                                else:
                                    best_nx = 0.0
                                    best_ny = 1.0
                    if best_link > -2:
                        if best_link < 0:
                            pvx = vx
                            pvy = vy
                            m_eff = root_mass
                        else:
                            j = best_link
                            pvx = vax[j] - wl[j] * (best_py - ayp[j])
                            pvy = vay[j] + wl[j] * (best_px - axp[j])
                            m_eff = mass[j]
                        vrel = (obj_data[i, 2] - pvx) * best_nx + (obj_data[i, 3] - pvy) * best_ny
                        if vrel < 0.0:
                            mb = obj_data[i, 5]
                            jimp = -(1.0 + restitution) * vrel / (1.0 / mb + 1.0 / m_eff)
                            obj_data[i, 2] += jimp * best_nx / mb
                            obj_data[i, 3] += jimp * best_ny / mb
                            rfx = -jimp * best_nx
                            rfy = -jimp * best_ny
                            vx += rfx / m_tot
                            vy += rfy / m_tot
                            w += ((best_px - x) * rfy - (best_py - y) * rfx) / root_inertia
                            k = best_link
                            while k >= 0:
                                vq[k] += ((best_px - axp[k]) * rfy - (best_py - ayp[k]) * rfx) / inert[k]
                                k = par[k]
                        obj_data[i, 0] += best_nx * best_pen
                        obj_data[i, 1] += best_ny * best_pen
                else:
                    px0 = obj_data[i, 0]
                    py0 = obj_data[i, 1]
                    pang = obj_data[i, 2]
                    lp = obj_data[i, 4]
                    mp = obj_data[i, 5]
                    ip = mp * lp * lp / 3.0
                    pdx = lp * cos(pang)
                    pdy = lp * sin(pang)
                    rsum = contact_radius + PANEL_HALF_WIDTH
                    for cand in range(nj + 1):
                        if cand == 0:
                            gx = x
                            gy = y
                            gvx = vx
                            gvy = vy
                            link = -1
                            m_eff = root_mass
                        else:
                            link = cand - 1
                            gx = exp_[link]
                            gy = eyp[link]
                            gvx = vex[link]
                            gvy = vey[link]
                            m_eff = mass[link]
                        relx = gx - px0
                        rely = gy - py0
                        seg2 = pdx * pdx + pdy * pdy
                        t = (relx * pdx + rely * pdy) / seg2
                        if t < 0.0:
                            t = 0.0
                        elif t > 1.0:
                            t = 1.0
                        sx = px0 + t * pdx
                        sy = py0 + t * pdy
                        ddx = gx - sx
                        ddy = gy - sy
                        d2 = ddx * ddx + ddy * ddy
                        if d2 < rsum * rsum and d2 > 1e-18:
                            dist = sqrt(d2)
                            nx_ = ddx / dist
                            ny_ = ddy / dist
                            arm = t * lp
                            pvx = -obj_data[i, 3] * (sy - py0)
                            pvy = obj_data[i, 3] * (sx - px0)
                            vrel = (gvx - pvx) * nx_ + (gvy - pvy) * ny_
                            if vrel < 0.0:
                                inv_panel = arm * arm / ip if arm > PANEL_HALF_WIDTH else 0.0
                                jimp = -(1.0 + restitution) * vrel / (1.0 / m_eff + inv_panel)
                                gfx = jimp * nx_
                                gfy = jimp * ny_
                                vx += gfx / m_tot
                                vy += gfy / m_tot
                                w += ((sx - x) * gfy - (sy - y) * gfx) / root_inertia
                                k = link
                                while k >= 0:
                                    vq[k] += ((sx - axp[k]) * gfy - (sy - ayp[k]) * gfx) / inert[k]
                                    k = par[k]
                                obj_data[i, 3] -= ((sx - px0) * gfy - (sy - py0) * gfx) / ip

        ok = (fabs(x) <= DIVERGENCE_LIMIT and fabs(y) <= DIVERGENCE_LIMIT
              and fabs(rot) <= DIVERGENCE_LIMIT and fabs(vx) <= DIVERGENCE_LIMIT
              and fabs(vy) <= DIVERGENCE_LIMIT and fabs(w) <= DIVERGENCE_LIMIT)
        if ok:
            for j in range(nj):
                if not (fabs(qj[j]) <= DIVERGENCE_LIMIT and fabs(vq[j]) <= DIVERGENCE_LIMIT):
                    ok = False
                    break
        if not ok:
            return 1

    q[0] = x
    q[1] = y
    q[2] = rot
    v[0] = vx
    v[1] = vy
    v[2] = w
    for j in range(nj):
        q[3 + j] = qj[j]
        v[3 + j] = vq[j]
    return 0


def raster_capsule(double[:, ::1] img, double x0, double y0, double x1, double y1,
                   double half_w, double aa):
    cdef int h = img.shape[0]
    cdef int wpx = img.shape[1]
    cdef double pad = half_w + aa + 1.0
    cdef double mnx = x0 if x0 < x1 else x1
    cdef double mxx = x0 if x0 > x1 else x1
    cdef double mny = y0 if y0 < y1 else y1
    cdef double mxy = y0 if y0 > y1 else y1
    cdef int ix0 = <int>(mnx - pad)
    cdef int ix1 = <int>(mxx + pad) + 1
    cdef int iy0 = <int>(mny - pad)
    cdef int iy1 = <int>(mxy + pad) + 1
    cdef double sdx, sdy, seg2, relx, rely, t, ddx, ddy, d, cov
    cdef int px, py
    if ix0 < 0:
        ix0 = 0
    if iy0 < 0:
        iy0 = 0
    if ix1 > wpx:
        ix1 = wpx
    if iy1 > h:
        iy1 = h
    sdx = x1 - x0
    sdy = y1 - y0
    seg2 = sdx * sdx + sdy * sdy
    for py in range(iy0, iy1):
        for px in range(ix0, ix1):
            relx = px - x0
            rely = py - y0
            if seg2 > 1e-12:
                t = (relx * sdx + rely * sdy) / seg2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            else:
                t = 0.0
            ddx = relx - t * sdx
            ddy = rely - t * sdy
            d = sqrt(ddx * ddx + ddy * ddy)
            cov = (half_w + aa - d) / aa
            if cov > 1.0:
                cov = 1.0
            if cov > img[py, px]:
                img[py, px] = cov


def raster_disc(double[:, ::1] img, double cx, double cy, double radius, double aa):
    cdef int h = img.shape[0]
    cdef int wpx = img.shape[1]
    cdef double pad = radius + aa + 1.0
    cdef int ix0 = <int>(cx - pad)
    cdef int ix1 = <int>(cx + pad) + 1
    cdef int iy0 = <int>(cy - pad)
    cdef int iy1 = <int>(cy + pad) + 1
    cdef double ddx, ddy, d, cov
    cdef int px, py
    if ix0 < 0:
        ix0 = 0
    if iy0 < 0:
        iy0 = 0
    if ix1 > wpx:
        ix1 = wpx
    if iy1 > h:
        iy1 = h
    for py in range(iy0, iy1):
        for px in range(ix0, ix1):
            ddx = px - cx
            ddy = py - cy
            d = sqrt(ddx * ddx + ddy * ddy)
            cov = (radius + aa - d) / aa
            if cov > 1.0:
                cov = 1.0
            if cov > img[py, px]:
                img[py, px] = cov
