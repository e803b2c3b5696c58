"""Pure-Python reference kernels.

These are the fallback implementations of the hot inner loops: the physics
substep integrator and the anti-aliased rasterizer primitives. The native
Cython kernels in ``_native.pyx`` perform the same arithmetic in the same
order, so both backends produce bit-identical results; keep the two files
in lockstep when editing either.
"""

from math import cos, sin, sqrt

DIVERGENCE_LIMIT = 1.0e6
PANEL_HALF_WIDTH = 0.05


def step_agent(q, v, targets, lengths, masses, kp, kd, damping, lim_lo, lim_hi,
               inertias, root_mass, root_inertia, contact_radius,
               parent, rest, world, obj_kinds, obj_data, dt, n_sub):
    """Advance agent + objects by ``n_sub`` semi-implicit Euler substeps of ``dt``.

    ``q``/``v`` are the packed 11-dof coordinate/velocity vectors and are
    mutated in place, as is ``obj_data``. Returns 0 on success, 1 when any
    coordinate or velocity left the divergence guard.
    """
    nj = 8
    x, y, rot = q[0], q[1], q[2]
    vx, vy, w = v[0], v[1], v[2]
    qj = [q[3 + j] for j in range(nj)]
    vq = [v[3 + j] for j in range(nj)]
    tgt = [targets[j] for j in range(nj)]
    L = [lengths[j] for j in range(nj)]
    mass = [masses[j] for j in range(nj)]
    gkp = [kp[j] for j in range(nj)]
    gkd = [kd[j] for j in range(nj)]
    cdmp = [damping[j] for j in range(nj)]
    lo = [lim_lo[j] for j in range(nj)]
    hi = [lim_hi[j] for j in range(nj)]
    inert = [inertias[j] for j in range(nj)]
    par = [int(parent[j]) for j in range(nj)]
    rst = [rest[j] for j in range(nj)]

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

    n_obj = len(obj_kinds)
    obj = [[obj_data[i, k] for k in range(8)] for i in range(n_obj)]

    ang = [0.0] * nj
    axp = [0.0] * nj
    ayp = [0.0] * nj
    exp_ = [0.0] * nj
    eyp = [0.0] * nj
    wl = [0.0] * nj
    vax = [0.0] * nj
    vay = [0.0] * nj
    vex = [0.0] * nj
    vey = [0.0] * nj
    tq = [0.0] * nj

    def fk():
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

    for _ in range(n_sub):
        fk()

        # Generalized forces: gravity + root angular damper + PD joint torques.
        fx = 0.0
        fy = -m_tot * gravity
        tau_root = -ang_damp * w
        for j in range(nj):
            tq[j] = gkp[j] * (tgt[j] - qj[j]) - gkd[j] * vq[j] - cdmp[j] * vq[j]

        # Ground contact at the root point and every link end.
        for i in range(nj + 1):
            if i == 0:
                px, py = x, y
                pvx, pvy = vx, vy
                link = -1
            else:
                link = i - 1
                px, py = exp_[link], eyp[link]
                pvx, pvy = vex[link], vey[link]
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

        # Object forces and velocity integration (ball gravity/ground, panel hinge).
        for i in range(n_obj):
            o = obj[i]
            if obj_kinds[i] == 0:
                rb = o[4]
                mb = o[5]
                bfx = 0.0
                bfy = -mb * gravity
                pen = rb - o[1]
                if pen > 0.0:
                    fn = k_ground * pen - d_ground * o[3]
                    if fn < 0.0:
                        fn = 0.0
                    ft = -visc * o[2]
                    cap = mu * fn
                    if ft > cap:
                        ft = cap
                    elif ft < -cap:
                        ft = -cap
                    bfx += ft
                    bfy += fn
                o[2] += bfx / mb * dt
                o[3] += bfy / mb * dt
            else:
                lp = o[4]
                mp = o[5]
                ip = mp * lp * lp / 3.0
                tau = -(mp * gravity * lp * 0.5) * cos(o[2]) - panel_damp * o[3]
                o[3] += tau / ip * dt

        # Agent velocity then position integration (semi-implicit Euler).
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
            o = obj[i]
            if obj_kinds[i] == 0:
                o[0] += o[2] * dt
                o[1] += o[3] * dt
            else:
                o[2] += o[3] * dt

        # Agent-object impulse contacts on the post-integration geometry.
        if n_obj > 0:
            fk()
            for i in range(n_obj):
                o = obj[i]
                if obj_kinds[i] == 0:
                    bx, by = o[0], o[1]
                    rsum = o[4] + contact_radius
                    best_pen = 0.0
                    best_link = -2
                    best_px = best_py = best_nx = best_ny = 0.0
                    for cand in range(nj + 1):
                        if cand == 0:
                            sx, sy = x, y
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
                                best_px, best_py = sx, sy
                                if dist > 1e-9:
                                    best_nx = ddx / dist
                                    best_ny = ddy / dist
                                else:
                                    best_nx, best_ny = 0.0, 1.0
                    if best_link > -2:
                        if best_link < 0:
                            pvx, pvy = vx, vy
                            m_eff = root_mass
                        else:
                            j = best_link
                            pvx = vax[j] - wl[j] * (best_py - ayp[j])
                            pvy = vay[j] + wl[j] * (best_px - axp[j])
                            m_eff = mass[j]
                        vrel = (o[2] - pvx) * best_nx + (o[3] - pvy) * best_ny
                        if vrel < 0.0:
                            mb = o[5]
                            jimp = -(1.0 + restitution) * vrel / (1.0 / mb + 1.0 / m_eff)
                            o[2] += jimp * best_nx / mb
                            o[3] += jimp * best_ny / mb
                            rfx = -jimp * best_nx
                            rfy = -jimp * best_ny
                            vx += rfx / m_tot
                            vy += rfy / m_tot
                            w += ((best_px - x) * rfy - (best_py - y) * rfx) / root_inertia
                            k = best_link
                            while k >= 0:
                                vq[k] += ((best_px - axp[k]) * rfy - (best_py - ayp[k]) * rfx) / inert[k]
                                k = par[k]
                        o[0] += best_nx * best_pen
                        o[1] += best_ny * best_pen
                else:
                    px0, py0, pang = o[0], o[1], o[2]
                    lp = o[4]
                    mp = o[5]
                    ip = mp * lp * lp / 3.0
                    pdx = lp * cos(pang)
                    pdy = lp * sin(pang)
                    rsum = contact_radius + PANEL_HALF_WIDTH
                    for cand in range(nj + 1):
                        if cand == 0:
                            gx, gy = x, y
                            gvx, gvy = vx, vy
                            link = -1
                            m_eff = root_mass
                        else:
                            link = cand - 1
                            gx, gy = exp_[link], eyp[link]
                            gvx, gvy = vex[link], vey[link]
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
                            pvx = -o[3] * (sy - py0)
                            pvy = o[3] * (sx - px0)
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
                                o[3] -= ((sx - px0) * gfy - (sy - py0) * gfx) / ip

        # Divergence guard; the negated form also catches NaN.
        ok = (abs(x) <= DIVERGENCE_LIMIT and abs(y) <= DIVERGENCE_LIMIT
              and abs(rot) <= DIVERGENCE_LIMIT and abs(vx) <= DIVERGENCE_LIMIT
              and abs(vy) <= DIVERGENCE_LIMIT and abs(w) <= DIVERGENCE_LIMIT)
        if ok:
            for j in range(nj):
                if not (abs(qj[j]) <= DIVERGENCE_LIMIT and abs(vq[j]) <= DIVERGENCE_LIMIT):
                    ok = False
                    break
        if not ok:
            return 1

    q[0], q[1], q[2] = x, y, rot
    v[0], v[1], v[2] = vx, vy, w
    for j in range(nj):
        q[3 + j] = qj[j]
        v[3 + j] = vq[j]
    for i in range(n_obj):
        for k in range(8):
            obj_data[i, k] = obj[i][k]
    return 0


def raster_capsule(img, x0, y0, x1, y1, half_w, aa):
    """Max-compose an anti-aliased thick segment onto ``img`` (pixel coords)."""
    h = img.shape[0]
    wpx = img.shape[1]
    pad = half_w + aa + 1.0
    mnx = x0 if x0 < x1 else x1
    mxx = x0 if x0 > x1 else x1
    mny = y0 if y0 < y1 else y1
    mxy = y0 if y0 > y1 else y1
    ix0 = int(mnx - pad)
    ix1 = int(mxx + pad) + 1
    iy0 = int(mny - pad)
    iy1 = int(mxy + pad) + 1
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


def raster_disc(img, cx, cy, radius, aa):
    """Max-compose an anti-aliased filled disc onto ``img`` (pixel coords)."""
    h = img.shape[0]
    wpx = img.shape[1]
    pad = radius + aa + 1.0
    ix0 = int(cx - pad)
    ix1 = int(cx + pad) + 1
    iy0 = int(cy - pad)
    iy1 = int(cy + pad) + 1
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
