"""Numba-compiled hot paths: patch rendering, insertion, and detection.

Everything here is pure (outputs depend only on explicit inputs) and
operates on float32 pixel arrays with values in [0, 1]. Public modules
wrap these kernels behind the domain types; tests check them against
plain numpy/scipy reference implementations.

Rendering constants are shared with the analytic encoder in codec.py;
detection constants are the heuristic detector's frozen parameters.
"""

from __future__ import annotations

import numpy as np
from numba import config, get_thread_id, njit, prange

config.THREADING_LAYER = "workqueue"

PATCH = 64

# ---- renderer geometry / attribute mappings (raw latent units) ----
HOUSING_HALF_W = 8.75
HOUSING_HALF_H = 26.25
CORNER_R = 2.5
LAMP_SPACING = 15.5
LAMP_R0 = 4.5
LAMP_R_SLOPE = 0.6
LAMP_R_MIN = 2.1
LAMP_R_MAX = 6.9
LAMP_V0 = 0.55
LAMP_V_SLOPE = 0.2
LAMP_SAT = 0.85
HUE_DEG0 = 60.0
HUE_DEG_SLOPE = -30.0
HOUSING_V0 = 0.16
HOUSING_V_SLOPE = -0.035
HOUSING_V_MIN = 0.02
HOUSING_V_MAX = 0.24
UNLIT_FACTOR = 0.55
BG_V0 = 0.45
BG_V_SLOPE = 0.08
BG_V_MIN = 0.27
BG_V_MAX = 0.98
OCC_FRAC_PER_UNIT = 0.0625
OCC_FRAC_MAX = 0.375
OCC_R = 0.34
OCC_G = 0.30
OCC_B = 0.24
VOFF_PX = 2.5
SAT_RAMP_LO = -3.2  # below: lamp fully desaturated ("off" band)
SAT_RAMP_HI = -2.5
WHITEOUT_START = 0.5  # overbright lamps wash toward white (camera clipping)
WHITEOUT_RATE = 0.42
WHITEOUT_FLOOR = 0.18
QUANT = 65535.0  # pixel grid; matches 16-bit P6 persistence exactly

# ---- heuristic detector (frozen published constants) ----
SMAP_THR = 0.30
DARK_V_THR = 0.255
CELL = 8
MAX_CANDIDATES = 12
MAX_DETECTIONS = 5
NMS_IOU = 0.5
W_SAT = 3.2
W_DARK = 4.5
W_CIRC = 0.8
CONF_BIAS = 5.5
MIN_BLOB_PX = 3
MIN_DARK_PX = 25
# class membership triangles over lit-lamp hue angle (degrees)
RED_FULL, RED_ZERO = 18.0, 42.0
YEL_LO_Z, YEL_LO_F, YEL_HI_F, YEL_HI_Z = 18.0, 42.0, 78.0, 102.0
GRN_ZERO, GRN_FULL = 78.0, 102.0

N_CLASSES = 4  # red, green, yellow, off
N_GRID_FEATURES = 48  # 4x4 cells x mean RGB


@njit(cache=True, fastmath=True)
def render_core(attrs, noise, out):
    """Render one traffic-light patch.

    attrs: (7,) float64 raw attribute values
           [hue, brightness, lamp_size, housing_darkness,
            background_tone, occlusion, vertical_offset]
    noise: (PATCH, PATCH) float32 combined nuisance field (grayscale)
    out:   (PATCH, PATCH, 3) float32
    """
    hue = attrs[0]
    bright = attrs[1]
    lamp_s = attrs[2]
    housing_d = attrs[3]
    bg_t = attrs[4]
    occ = attrs[5]
    voff = attrs[6]

    bg = min(max(BG_V0 + BG_V_SLOPE * bg_t, BG_V_MIN), BG_V_MAX)
    housing_v = min(max(HOUSING_V0 + HOUSING_V_SLOPE * housing_d, HOUSING_V_MIN), HOUSING_V_MAX)
    lamp_v = min(max(LAMP_V0 + LAMP_V_SLOPE * bright, 0.04), 1.0)
    hue_deg = min(max(HUE_DEG0 + HUE_DEG_SLOPE * hue, 0.0), 120.0)
    r_lamp = min(max(LAMP_R0 + LAMP_R_SLOPE * lamp_s, LAMP_R_MIN), LAMP_R_MAX)
    occ_frac = min(max(OCC_FRAC_PER_UNIT * (occ + 2.0), 0.0), OCC_FRAC_MAX)
    sat = LAMP_SAT * min(max((bright - SAT_RAMP_LO) / (SAT_RAMP_HI - SAT_RAMP_LO), 0.0), 1.0)
    sat *= max(1.0 - WHITEOUT_RATE * max(bright - WHITEOUT_START, 0.0), WHITEOUT_FLOOR)

    cy = PATCH / 2.0 + VOFF_PX * voff
    cx = PATCH / 2.0

    # lit lamp RGB from hue angle (HSV, V=lamp_v)
    hh = hue_deg / 60.0
    sector = int(hh)
    frac = hh - sector
    p = lamp_v * (1.0 - sat)
    q = lamp_v * (1.0 - sat * frac)
    t = lamp_v * (1.0 - sat * (1.0 - frac))
    if sector == 0:
        lit_r, lit_g, lit_b = lamp_v, t, p
    elif sector == 1:
        lit_r, lit_g, lit_b = q, lamp_v, p
    else:
        lit_r, lit_g, lit_b = p, lamp_v, t

    unlit = housing_v * UNLIT_FACTOR + 0.01
    occ_edge = PATCH * (1.0 - occ_frac)

    # the housing never reaches beyond this column band; elsewhere only
    # background, occluder and noise apply
    hx0 = max(int(cx - HOUSING_HALF_W - 1.5), 0)
    hx1 = min(int(cx + HOUSING_HALF_W + 2.5), PATCH)
    for y in range(PATCH):
        fy = y + 0.5
        ao = min(max(fy - occ_edge + 0.5, 0.0), 1.0)
        ady = abs(fy - cy)
        for x in range(PATCH):
            fx = x + 0.5
            r = bg
            g = bg
            b = bg
            if hx0 <= x < hx1:
                # rounded-rectangle housing (signed distance)
                qx = abs(fx - cx) - (HOUSING_HALF_W - CORNER_R)
                qy = ady - (HOUSING_HALF_H - CORNER_R)
                mqx = max(qx, 0.0)
                mqy = max(qy, 0.0)
                d = min(max(qx, qy), 0.0) + (mqx * mqx + mqy * mqy) ** 0.5 - CORNER_R
                a = min(max(0.5 - d, 0.0), 1.0)
                if a > 0.0:
                    r += a * (housing_v - r)
                    g += a * (housing_v - g)
                    b += a * (housing_v - b)
                    for li in range(3):
                        ly = cy + (li - 1) * LAMP_SPACING
                        ddy = fy - ly
                        if ddy > r_lamp + 1.0 or ddy < -(r_lamp + 1.0):
                            continue
                        dd = ((fx - cx) ** 2 + ddy * ddy) ** 0.5 - r_lamp
                        al = min(max(0.5 - dd, 0.0), 1.0)
                        if al > 0.0:
                            if li == 1:
                                r += al * (lit_r - r)
                                g += al * (lit_g - g)
                                b += al * (lit_b - b)
                            else:
                                r += al * (unlit - r)
                                g += al * (unlit - g)
                                b += al * (unlit - b)
            if ao > 0.0:
                r += ao * (OCC_R - r)
                g += ao * (OCC_G - g)
                b += ao * (OCC_B - b)
            nv = noise[y, x]
            r = min(max(r + nv, 0.0), 1.0)
            g = min(max(g + nv, 0.0), 1.0)
            b = min(max(b + nv, 0.0), 1.0)
            # snap to the 16-bit grid so P6 persistence is value-exact
            out[y, x, 0] = np.float32(np.floor(r * QUANT + 0.5) / QUANT)
            out[y, x, 1] = np.float32(np.floor(g * QUANT + 0.5) / QUANT)
            out[y, x, 2] = np.float32(np.floor(b * QUANT + 0.5) / QUANT)


@njit(cache=True, fastmath=True)
def insert_core(base, patch, bx, by, bw, bh, out):
    """Blend ``patch`` into the box (bx, by, bw, bh) of ``base``, writing
    only affected pixels of ``out`` (caller keeps out == base elsewhere).

    Bilinear resampling of the patch to the box, 2-pixel feathered border.
    """
    H = base.shape[0]
    W = base.shape[1]
    y0 = max(int(np.ceil(by - 0.5)), 0)
    y1 = min(int(np.ceil(by + bh - 0.5)), H)
    x0 = max(int(np.ceil(bx - 0.5)), 0)
    x1 = min(int(np.ceil(bx + bw - 0.5)), W)
    sx_col = PATCH / bw
    sy_row = PATCH / bh
    for sy in range(y0, y1):
        py = sy + 0.5 - by
        v = py * sy_row - 0.5
        iy0 = int(np.floor(v))
        fyw = v - iy0
        iy1 = min(max(iy0 + 1, 0), PATCH - 1)
        iy0 = min(max(iy0, 0), PATCH - 1)
        dy_edge = min(py, bh - py)
        for sx in range(x0, x1):
            px = sx + 0.5 - bx
            u = px * sx_col - 0.5
            ix0 = int(np.floor(u))
            fxw = u - ix0
            ix1 = min(max(ix0 + 1, 0), PATCH - 1)
            ix0 = min(max(ix0, 0), PATCH - 1)
            dedge = min(min(px, bw - px), dy_edge)
            alpha = min(max(dedge / 2.0, 0.0), 1.0)
            w00 = (1.0 - fxw) * (1.0 - fyw)
            w01 = fxw * (1.0 - fyw)
            w10 = (1.0 - fxw) * fyw
            w11 = fxw * fyw
            for c in range(3):
                pv = (patch[iy0, ix0, c] * w00 + patch[iy0, ix1, c] * w01
                      + patch[iy1, ix0, c] * w10 + patch[iy1, ix1, c] * w11)
                out[sy, sx, c] = base[sy, sx, c] * (1.0 - alpha) + pv * alpha


@njit(cache=True, fastmath=True)
def crop_core(scene, bx, by, bw, bh, out):
    """Bilinear crop-resample of a scene box to a PATCH x PATCH image."""
    H = scene.shape[0]
    W = scene.shape[1]
    for py in range(PATCH):
        v = (py + 0.5) / PATCH * bh + by - 0.5
        iy0 = int(np.floor(v))
        fyw = v - iy0
        iy1 = min(max(iy0 + 1, 0), H - 1)
        iy0 = min(max(iy0, 0), H - 1)
        for px in range(PATCH):
            u = (px + 0.5) / PATCH * bw + bx - 0.5
            ix0 = int(np.floor(u))
            fxw = u - ix0
            ix1 = min(max(ix0 + 1, 0), W - 1)
            ix0 = min(max(ix0, 0), W - 1)
            w00 = (1.0 - fxw) * (1.0 - fyw)
            w01 = fxw * (1.0 - fyw)
            w10 = (1.0 - fxw) * fyw
            w11 = fxw * fyw
            for c in range(3):
                out[py, px, c] = (scene[iy0, ix0, c] * w00 + scene[iy0, ix1, c] * w01
                                  + scene[iy1, ix0, c] * w10 + scene[iy1, ix1, c] * w11)


@njit(cache=True, fastmath=True)
def _box_iou(ax, ay, aw, ah, bx, by, bw, bh):
    ix = min(ax + aw, bx + bw) - max(ax, bx)
    iy = min(ay + ah, by + bh) - max(ay, by)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@njit(cache=True, fastmath=True)
def propose_core(scene, cand_boxes, cand_feats):
    """Proposal stage: saturation-plus-brightness threshold map at coarse
    resolution, connected candidate groups, local refinement growing the
    dark housing region, 3:1 vertical box fitting.

    cand_boxes: (MAX_CANDIDATES, 4) out
    cand_feats: (MAX_CANDIDATES, 5) out -- f_sat, f_dark, f_circ, hue_deg,
                peak_chroma
    Returns candidate count.
    """
    H = scene.shape[0]
    W = scene.shape[1]
    Hc = H // CELL
    Wc = W // CELL
    coarse = np.zeros((Hc, Wc), np.float32)
    for yc in range(Hc):
        for xc in range(Wc):
            m = np.float32(0.0)
            for y in range(yc * CELL, yc * CELL + CELL, 2):
                for x in range(xc * CELL, xc * CELL + CELL, 2):
                    r = scene[y, x, 0]
                    g = scene[y, x, 1]
                    b = scene[y, x, 2]
                    mx = max(r, max(g, b))
                    mn = min(r, min(g, b))
                    v = (mx - mn) + np.float32(0.3) * mx
                    m = max(m, v)
            coarse[yc, xc] = m

    lab = np.zeros((Hc, Wc), np.int32)
    stack = np.empty((Hc * Wc, 2), np.int32)
    n = 0
    nlab = 0
    for yc0 in range(Hc):
        for xc0 in range(Wc):
            if coarse[yc0, xc0] <= SMAP_THR or lab[yc0, xc0] != 0:
                continue
            nlab += 1
            sp = 0
            stack[sp, 0] = yc0
            stack[sp, 1] = xc0
            sp += 1
            lab[yc0, xc0] = nlab
            gy0, gy1, gx0, gx1 = yc0, yc0, xc0, xc0
            while sp > 0:
                sp -= 1
                cy = stack[sp, 0]
                cx = stack[sp, 1]
                if cy < gy0:
                    gy0 = cy
                if cy > gy1:
                    gy1 = cy
                if cx < gx0:
                    gx0 = cx
                if cx > gx1:
                    gx1 = cx
                for k in range(4):
                    if k == 0:
                        ny, nx = cy + 1, cx
                    elif k == 1:
                        ny, nx = cy - 1, cx
                    elif k == 2:
                        ny, nx = cy, cx + 1
                    else:
                        ny, nx = cy, cx - 1
                    if 0 <= ny < Hc and 0 <= nx < Wc and lab[ny, nx] == 0 and coarse[ny, nx] > SMAP_THR:
                        lab[ny, nx] = nlab
                        stack[sp, 0] = ny
                        stack[sp, 1] = nx
                        sp += 1
            if n >= MAX_CANDIDATES:
                continue
            # group bbox at full resolution
            fy0 = gy0 * CELL
            fy1 = gy1 * CELL + CELL
            fx0 = gx0 * CELL
            fx1 = gx1 * CELL + CELL
            # pass 1: peak chroma near the group
            peak = np.float32(0.0)
            py0 = max(fy0 - 2, 0)
            py1 = min(fy1 + 2, H)
            px0 = max(fx0 - 2, 0)
            px1 = min(fx1 + 2, W)
            for y in range(py0, py1):
                for x in range(px0, px1):
                    r = scene[y, x, 0]
                    g = scene[y, x, 1]
                    b = scene[y, x, 2]
                    c = max(r, max(g, b)) - min(r, min(g, b))
                    if c > peak:
                        peak = c
            blob_thr = max(0.08, 0.45 * peak)
            # pass 2: blob statistics over a window padded relative to blob size
            bd = max(fy1 - fy0, fx1 - fx0)
            pad_y = min(int(8.0 * bd * 0.5 + 10), 80)
            pad_x = min(int(2.3 * bd * 0.5 + 8), 30)
            wy0 = max(fy0 - pad_y, 0)
            wy1 = min(fy1 + pad_y, H)
            wx0 = max(fx0 - pad_x, 0)
            wx1 = min(fx1 + pad_x, W)
            cnt = 0.0
            sy = 0.0
            sx = 0.0
            sr = 0.0
            sg = 0.0
            sb = 0.0
            by0, by1, bx0, bx1 = H, -1, W, -1
            for y in range(py0, py1):
                for x in range(px0, px1):
                    r = scene[y, x, 0]
                    g = scene[y, x, 1]
                    b = scene[y, x, 2]
                    c = max(r, max(g, b)) - min(r, min(g, b))
                    if c >= blob_thr:
                        cnt += 1.0
                        sy += y
                        sx += x
                        sr += r
                        sg += g
                        sb += b
                        if y < by0:
                            by0 = y
                        if y > by1:
                            by1 = y
                        if x < bx0:
                            bx0 = x
                        if x > bx1:
                            bx1 = x
            if cnt < MIN_BLOB_PX:
                continue
            # dark-region growth: BFS over dark pixels seeded around the blob
            wh = wy1 - wy0
            ww = wx1 - wx0
            seen = np.zeros((wh, ww), np.uint8)
            dstack = np.empty((wh * ww, 2), np.int32)
            dsp = 0
            dy0, dy1, dx0, dx1 = H, -1, W, -1
            dcnt = 0
            s0y = max(by0 - 3, wy0)
            s1y = min(by1 + 4, wy1)
            s0x = max(bx0 - 3, wx0)
            s1x = min(bx1 + 4, wx1)
            for y in range(s0y, s1y):
                for x in range(s0x, s1x):
                    vmx = max(scene[y, x, 0], max(scene[y, x, 1], scene[y, x, 2]))
                    if vmx < DARK_V_THR and seen[y - wy0, x - wx0] == 0:
                        seen[y - wy0, x - wx0] = 1
                        dstack[dsp, 0] = y
                        dstack[dsp, 1] = x
                        dsp += 1
            while dsp > 0:
                dsp -= 1
                y = dstack[dsp, 0]
                x = dstack[dsp, 1]
                dcnt += 1
                if y < dy0:
                    dy0 = y
                if y > dy1:
                    dy1 = y
                if x < dx0:
                    dx0 = x
                if x > dx1:
                    dx1 = x
                for k in range(4):
                    if k == 0:
                        ny, nx = y + 1, x
                    elif k == 1:
                        ny, nx = y - 1, x
                    elif k == 2:
                        ny, nx = y, x + 1
                    else:
                        ny, nx = y, x - 1
                    if wy0 <= ny < wy1 and wx0 <= nx < wx1 and seen[ny - wy0, nx - wx0] == 0:
                        vmx = max(scene[ny, nx, 0], max(scene[ny, nx, 1], scene[ny, nx, 2]))
                        if vmx < DARK_V_THR:
                            seen[ny - wy0, nx - wx0] = 1
                            dstack[dsp, 0] = ny
                            dstack[dsp, 1] = nx
                            dsp += 1
            # proposal box: 3:1 vertical box from the grown dark region,
            # else from the blob alone
            if dcnt >= MIN_DARK_PX and dy1 >= dy0:
                ph = float(dy1 - dy0 + 1)
                pw = max(ph / 3.0, 2.0)
                pcx = (dx0 + dx1 + 1) / 2.0
                pby = float(dy0)
            else:
                bh_ = float(by1 - by0 + 1)
                ph = max(4.0 * bh_, 6.0)
                pw = max(ph / 3.0, 2.0)
                pcx = sx / cnt + 0.5
                pby = sy / cnt + 0.5 - ph / 2.0
            pbx = pcx - pw / 2.0
            # features
            blob_w = float(bx1 - bx0 + 1)
            blob_h = float(by1 - by0 + 1)
            lmax = max(blob_w, blob_h)
            f_circ = min(4.0 * cnt / (np.pi * lmax * lmax), 1.0)
            mean_chroma = np.float32(0.0)
            mr = sr / cnt
            mg = sg / cnt
            mb = sb / cnt
            mean_chroma = max(mr, max(mg, mb)) - min(mr, min(mg, mb))
            f_sat = np.tanh(mean_chroma / 0.30)
            # darkness over the proposal box
            dsum = 0.0
            dn = 0
            qy0 = max(int(pby), 0)
            qy1 = min(int(pby + ph) + 1, H)
            qx0 = max(int(pbx), 0)
            qx1 = min(int(pbx + pw) + 1, W)
            for y in range(qy0, qy1):
                for x in range(qx0, qx1):
                    vmx = max(scene[y, x, 0], max(scene[y, x, 1], scene[y, x, 2]))
                    dsum += min(max((0.42 - vmx) / 0.42, 0.0), 1.0)
                    dn += 1
            f_dark = dsum / dn if dn > 0 else 0.0
            # hue angle of the blob's mean color
            mx = max(mr, max(mg, mb))
            mn = min(mr, min(mg, mb))
            ch = mx - mn
            if ch < 1e-9:
                hue_deg = 0.0
            elif mx == mr:
                hue_deg = 60.0 * ((mg - mb) / ch)
            elif mx == mg:
                hue_deg = 60.0 * (2.0 + (mb - mr) / ch)
            else:
                hue_deg = 60.0 * (4.0 + (mr - mg) / ch)
            if hue_deg < 0.0:
                hue_deg += 360.0
            cand_boxes[n, 0] = pbx
            cand_boxes[n, 1] = pby
            cand_boxes[n, 2] = pw
            cand_boxes[n, 3] = ph
            cand_feats[n, 0] = f_sat
            cand_feats[n, 1] = f_dark
            cand_feats[n, 2] = f_circ
            cand_feats[n, 3] = hue_deg
            cand_feats[n, 4] = peak
            n += 1
    return n


@njit(cache=True, fastmath=True)
def _memberships(hue_deg, peak_chroma, out4):
    """Triangular class memberships over the lit-lamp hue band."""
    # reds scattered slightly past 360 by anti-alias bleed wrap to negative
    if hue_deg > 300.0:
        hue_deg -= 360.0
    # red
    if hue_deg <= RED_FULL:
        out4[0] = 1.0
    elif hue_deg < RED_ZERO:
        out4[0] = (RED_ZERO - hue_deg) / (RED_ZERO - RED_FULL)
    else:
        out4[0] = 0.0
    # green
    if hue_deg >= GRN_FULL:
        out4[1] = 1.0
    elif hue_deg > GRN_ZERO:
        out4[1] = (hue_deg - GRN_ZERO) / (GRN_FULL - GRN_ZERO)
    else:
        out4[1] = 0.0
    # yellow
    if hue_deg <= YEL_LO_Z or hue_deg >= YEL_HI_Z:
        out4[2] = 0.0
    elif hue_deg < YEL_LO_F:
        out4[2] = (hue_deg - YEL_LO_Z) / (YEL_LO_F - YEL_LO_Z)
    elif hue_deg <= YEL_HI_F:
        out4[2] = 1.0
    else:
        out4[2] = (YEL_HI_Z - hue_deg) / (YEL_HI_Z - YEL_HI_F)
    # off: only weakly-saturated blobs look like unlit lamps
    out4[3] = min(max(1.0 - peak_chroma / 0.12, 0.0), 1.0) * 0.3
    # guard: hue angles outside the traffic band (cyan/blue/magenta) match
    # no color class
    if hue_deg > 180.0:
        out4[0] = 0.0
        out4[1] = 0.0
        out4[2] = 0.0


@njit(cache=True, fastmath=True)
def _nms_top(boxes, confs, cls_scores, n, out_boxes, out_scores):
    """IoU-0.5 NMS, keep at most MAX_DETECTIONS, descending confidence."""
    order = np.argsort(-confs[:n])
    kept = 0
    for oi in range(n):
        i = order[oi]
        ok = True
        for j in range(kept):
            if _box_iou(boxes[i, 0], boxes[i, 1], boxes[i, 2], boxes[i, 3],
                        out_boxes[j, 0], out_boxes[j, 1], out_boxes[j, 2],
                        out_boxes[j, 3]) > NMS_IOU:
                ok = False
                break
        if not ok:
            continue
        out_boxes[kept, 0] = boxes[i, 0]
        out_boxes[kept, 1] = boxes[i, 1]
        out_boxes[kept, 2] = boxes[i, 2]
        out_boxes[kept, 3] = boxes[i, 3]
        for c in range(N_CLASSES):
            out_scores[kept, c] = cls_scores[i, c]
        kept += 1
        if kept >= MAX_DETECTIONS:
            break
    return kept


@njit(cache=True, fastmath=True)
def detect_heuristic_core(scene, out_boxes, out_scores):
    """Full heuristic pipeline: proposals, logistic scoring, NMS, top-5.

    out_boxes: (MAX_DETECTIONS, 4); out_scores: (MAX_DETECTIONS, N_CLASSES)
    Returns detection count.
    """
    cand_boxes = np.empty((MAX_CANDIDATES, 4), np.float64)
    cand_feats = np.empty((MAX_CANDIDATES, 5), np.float64)
    n = propose_core(scene, cand_boxes, cand_feats)
    confs = np.empty(MAX_CANDIDATES, np.float64)
    cls_scores = np.empty((MAX_CANDIDATES, N_CLASSES), np.float64)
    m = np.empty(N_CLASSES, np.float64)
    for i in range(n):
        logit = (W_SAT * cand_feats[i, 0] + W_DARK * cand_feats[i, 1]
                 + W_CIRC * cand_feats[i, 2] - CONF_BIAS)
        conf = 1.0 / (1.0 + np.exp(-logit))
        _memberships(cand_feats[i, 3], cand_feats[i, 4], m)
        for c in range(N_CLASSES):
            cls_scores[i, c] = conf * m[c]
        confs[i] = max(max(cls_scores[i, 0], cls_scores[i, 1]),
                       max(cls_scores[i, 2], cls_scores[i, 3]))
    return _nms_top(cand_boxes, confs, cls_scores, n, out_boxes, out_scores)


@njit(cache=True, fastmath=True)
def grid_features_core(scene, bx, by, bw, bh, out):
    """4x4 grid of mean RGB over a window: the trainable detector's features."""
    H = scene.shape[0]
    W = scene.shape[1]
    for gy in range(4):
        y0 = by + bh * gy / 4.0
        y1 = by + bh * (gy + 1) / 4.0
        iy0 = max(int(y0), 0)
        iy1 = min(max(int(np.ceil(y1)), iy0 + 1), H)
        if iy0 >= H:
            iy0 = H - 1
            iy1 = H
        for gx in range(4):
            x0 = bx + bw * gx / 4.0
            x1 = bx + bw * (gx + 1) / 4.0
            ix0 = max(int(x0), 0)
            ix1 = min(max(int(np.ceil(x1)), ix0 + 1), W)
            if ix0 >= W:
                ix0 = W - 1
                ix1 = W
            sr = 0.0
            sg = 0.0
            sb = 0.0
            cnt = 0
            for y in range(iy0, iy1):
                for x in range(ix0, ix1):
                    sr += scene[y, x, 0]
                    sg += scene[y, x, 1]
                    sb += scene[y, x, 2]
                    cnt += 1
            k = (gy * 4 + gx) * 3
            out[k] = sr / cnt
            out[k + 1] = sg / cnt
            out[k + 2] = sb / cnt


@njit(cache=True, fastmath=True)
def detect_trainable_core(scene, weights, out_boxes, out_scores):
    """Heuristic proposal stage + learned per-class logistic scorer.

    weights: (N_CLASSES, 49) -- 48 grid features + bias.
    """
    cand_boxes = np.empty((MAX_CANDIDATES, 4), np.float64)
    cand_feats = np.empty((MAX_CANDIDATES, 5), np.float64)
    n = propose_core(scene, cand_boxes, cand_feats)
    confs = np.empty(MAX_CANDIDATES, np.float64)
    cls_scores = np.empty((MAX_CANDIDATES, N_CLASSES), np.float64)
    feats = np.empty(N_GRID_FEATURES, np.float64)
    for i in range(n):
        grid_features_core(scene, cand_boxes[i, 0], cand_boxes[i, 1],
                           cand_boxes[i, 2], cand_boxes[i, 3], feats)
        best = 0.0
        for c in range(N_CLASSES):
            z = weights[c, N_GRID_FEATURES]
            for k in range(N_GRID_FEATURES):
                z += weights[c, k] * feats[k]
            s = 1.0 / (1.0 + np.exp(-z))
            cls_scores[i, c] = s
            if s > best:
                best = s
        confs[i] = best
    return _nms_top(cand_boxes, confs, cls_scores, n, out_boxes, out_scores)


@njit(cache=True)
def count_within_radius(sorted_vals, radii, out):
    """For each element of a sorted array, count elements (self included)
    whose exact float distance is <= its radius. Two-pointer walk keeps the
    boundary comparisons identical to the brute-force predicate."""
    n = sorted_vals.shape[0]
    for i in range(n):
        c = 1
        j = i - 1
        while j >= 0 and sorted_vals[i] - sorted_vals[j] <= radii[i]:
            c += 1
            j -= 1
        j = i + 1
        while j < n and sorted_vals[j] - sorted_vals[i] <= radii[i]:
            c += 1
            j += 1
        out[i] = c


@njit(cache=True, fastmath=True)
def eq1_score(det_boxes, det_scores, ndet, gx, gy, gw, gh):
    """In-scene detection score: max top-confidence over detections with
    IoU >= 0.5 against the ground-truth box; 0 when none qualifies."""
    best = 0.0
    for i in range(ndet):
        if _box_iou(det_boxes[i, 0], det_boxes[i, 1], det_boxes[i, 2],
                    det_boxes[i, 3], gx, gy, gw, gh) >= 0.5:
            top = 0.0
            for c in range(N_CLASSES):
                if det_scores[i, c] > top:
                    top = det_scores[i, c]
            if top > best:
                best = top
    return best


@njit(cache=True, fastmath=True)
def probe_scores_core(base, work, attrs_batch, noise_batch,
                      fx, fy, fw, fh, gx, gy, gw, gh,
                      trainable, weights, out_scores):
    """Fused attack probe loop: render each probe's patch, insert it at the
    footprint box, run the full detector, score Eq. 1 against the GT box.

    work must enter equal to base outside the footprint box (each probe
    only rewrites the footprint region, reading base for the blend).
    """
    K = attrs_batch.shape[0]
    patch = np.empty((PATCH, PATCH, 3), np.float32)
    det_boxes = np.empty((MAX_DETECTIONS, 4), np.float64)
    det_scores = np.empty((MAX_DETECTIONS, N_CLASSES), np.float64)
    for k in range(K):
        render_core(attrs_batch[k], noise_batch[k], patch)
        insert_core(base, patch, fx, fy, fw, fh, work)
        if trainable:
            nd = detect_trainable_core(work, weights, det_boxes, det_scores)
        else:
            nd = detect_heuristic_core(work, det_boxes, det_scores)
        out_scores[k] = eq1_score(det_boxes, det_scores, nd, gx, gy, gw, gh)


@njit(cache=True, fastmath=True, parallel=True)
def probe_scores_parallel(base, works, attrs_batch, noise_batch,
                          fx, fy, fw, fh, gx, gy, gw, gh,
                          trainable, weights, out_scores):
    """Probe loop split across numba threads; probes are independent, so
    each thread owns one work-scene copy from ``works`` (all equal to base
    outside the footprint box). Results are identical to the serial loop.
    """
    K = attrs_batch.shape[0]
    nthreads = works.shape[0]
    for k in prange(K):
        tid = get_thread_id() % nthreads
        work = works[tid]
        patch = np.empty((PATCH, PATCH, 3), np.float32)
        det_boxes = np.empty((MAX_DETECTIONS, 4), np.float64)
        det_scores = np.empty((MAX_DETECTIONS, N_CLASSES), np.float64)
        render_core(attrs_batch[k], noise_batch[k], patch)
        insert_core(base, patch, fx, fy, fw, fh, work)
        if trainable:
            nd = detect_trainable_core(work, weights, det_boxes, det_scores)
        else:
            nd = detect_heuristic_core(work, det_boxes, det_scores)
        out_scores[k] = eq1_score(det_boxes, det_scores, nd, gx, gy, gw, gh)
