"""Hot numeric kernels: grid dynamics, observation encoders, MLP math.

Everything here is written as plain numpy code over ndarrays and scalars and
compiled with ``numba.njit`` when the "numba" backend is selected (see
:mod:`sweeprl.backend`).  With ``SWEEPRL_BACKEND=numpy`` the identical source
runs uncompiled, so both paths cannot diverge.

Conventions:
  * grids are (H, W) bool arrays; ``obstacle[r, c]`` True blocks the cell
  * headings/actions are int64 octants 0..7: N, NE, E, SE, S, SW, W, NW
  * network parameters live in one flat float64 vector; ``sizes`` is the
    int64 trunk layout [input, hidden...]; heads follow the trunk in the
    flat vector (see sweeprl.neural for the exact layout)
  * no kernel draws randomness; callers pass pre-generated uniforms
"""

from __future__ import annotations

import math

import numpy as np

from .backend import make_jit, resolve_backend

BACKEND = resolve_backend()
_jit = make_jit(BACKEND)

# Octant k moves by (ROW_OFF[k], COL_OFF[k]); row 0 is the top of the grid.
ROW_OFF = np.array([-1, -1, 0, 1, 1, 1, 0, -1], dtype=np.int64)
COL_OFF = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)

TILE_SIDE = 0.5
DIAG_SIDE = 0.5 * math.sqrt(2.0)

HEAD_PV = 0
HEAD_Q = 1
HEAD_DUELING = 2


# ---------------------------------------------------------------------------
# environment dynamics
# ---------------------------------------------------------------------------

@_jit
def rotation_units(a, b):
    """45-degree increments of the shorter arc between octants a and b."""
    d = a - b
    if d < 0:
        d = -d
    d = d % 8
    if d > 4:
        d = 8 - d
    return d


@_jit
def prospective_reward(obstacle, cleaned, tr, tc):
    """Tile reward for attempting to enter (tr, tc): 0 / -1 / -2."""
    h, w = obstacle.shape
    if tr < 0 or tr >= h or tc < 0 or tc >= w or obstacle[tr, tc]:
        return -2.0
    if cleaned[tr, tc]:
        return -1.0
    return 0.0


@_jit
def env_step(obstacle, cleaned, r, c, heading, action):
    """Advance one step; mutates `cleaned` when the agent enters a new cell.

    Returns (tile_reward, rotation_reward, rotation_units, moved,
    new_r, new_c, distance_delta, newly_cleaned).
    """
    units = rotation_units(heading, action)
    rot_reward = -0.5 * units
    tr = r + ROW_OFF[action]
    tc = c + COL_OFF[action]
    h, w = obstacle.shape
    if tr < 0 or tr >= h or tc < 0 or tc >= w or obstacle[tr, tc]:
        return -2.0, rot_reward, units, False, r, c, 0.0, False
    newly = not cleaned[tr, tc]
    tile = 0.0 if newly else -1.0
    cleaned[tr, tc] = True
    if ROW_OFF[action] != 0 and COL_OFF[action] != 0:
        dist = DIAG_SIDE
    else:
        dist = TILE_SIDE
    return tile, rot_reward, units, True, tr, tc, dist, newly


# ---------------------------------------------------------------------------
# observation encoders
# ---------------------------------------------------------------------------

@_jit
def local_window(obstacle, cleaned, r, c, out):
    """Prospective tile reward of each octant neighbour, scaled into [-1, 0]."""
    for k in range(8):
        out[k] = 0.5 * prospective_reward(obstacle, cleaned, r + ROW_OFF[k], c + COL_OFF[k])


@_jit
def bfs_nearest(obstacle, cleaned, r, c):
    """Nearest uncleaned free cell by 8-connected BFS through free cells.

    Returns (dr, dc, dist); dist == -1 when no uncleaned cell is reachable.
    Ties resolve to the row-major-first cell of the closest ring.
    """
    h, w = obstacle.shape
    reach = np.zeros((h, w), dtype=np.bool_)
    reach[r, c] = True
    d = np.int64(0)
    while True:
        hit = reach & ~cleaned
        rows, cols = np.nonzero(hit)
        if rows.shape[0] > 0:
            return rows[0] - r, cols[0] - c, d
        grow = np.zeros((h, w), dtype=np.bool_)
        grow[: h - 1, :] |= reach[1:, :]
        grow[1:, :] |= reach[: h - 1, :]
        grow[:, : w - 1] |= reach[:, 1:]
        grow[:, 1:] |= reach[:, : w - 1]
        grow[: h - 1, : w - 1] |= reach[1:, 1:]
        grow[1:, 1:] |= reach[: h - 1, : w - 1]
        grow[: h - 1, 1:] |= reach[1:, : w - 1]
        grow[1:, : w - 1] |= reach[: h - 1, 1:]
        new = grow & ~obstacle & ~reach
        rows, cols = np.nonzero(new)
        if rows.shape[0] == 0:
            return np.int64(0), np.int64(0), np.int64(-1)
        reach |= new
        d += 1


@_jit
def encode_local(obstacle, cleaned, r, c, heading, include_dnut, include_heading, dnut_cap, out):
    """Fixed-size observation: window(8) [+ nearest-uncleaned(3)] [+ heading(8)]."""
    local_window(obstacle, cleaned, r, c, out[0:8])
    i = 8
    if include_dnut:
        dr, dc, d = bfs_nearest(obstacle, cleaned, r, c)
        if d >= 0:
            norm = math.sqrt(float(dr * dr + dc * dc))
            if norm > 0.0:
                out[i] = dr / norm
                out[i + 1] = dc / norm
            else:  # the agent's own cell is the nearest uncleaned one
                out[i] = 0.0
                out[i + 1] = 0.0
            dd = float(d)
            if dd > dnut_cap:
                dd = dnut_cap
            out[i + 2] = dd / dnut_cap
        else:
            out[i] = 0.0
            out[i + 1] = 0.0
            out[i + 2] = 0.0
        i += 3
    if include_heading:
        for k in range(8):
            out[i + k] = 0.0
        out[i + heading] = 1.0
        i += 8
    return i


@_jit
def encode_global(obstacle, cleaned, r, c, out):
    """Per-tile (x, y, reward) triplets, row-major; length is H*W*3.

    x/y are normalised coordinates; the reward channel holds the scaled tile
    reward with the agent's own cell marked +0.5.
    """
    h, w = obstacle.shape
    xden = w - 1 if w > 1 else 1
    yden = h - 1 if h > 1 else 1
    i = 0
    for rr in range(h):
        for cc in range(w):
            out[i] = cc / xden
            out[i + 1] = rr / yden
            if rr == r and cc == c:
                out[i + 2] = 0.5
            elif obstacle[rr, cc]:
                out[i + 2] = -1.0
            elif cleaned[rr, cc]:
                out[i + 2] = -0.5
            else:
                out[i + 2] = 0.0
            i += 3
    return i


@_jit
def _encode_into(obstacle, cleaned, r, c, heading, obs_mode, include_dnut, include_heading, dnut_cap, out):
    if obs_mode == 0:
        encode_local(obstacle, cleaned, r, c, heading, include_dnut, include_heading, dnut_cap, out)
    else:
        encode_global(obstacle, cleaned, r, c, out)


# ---------------------------------------------------------------------------
# MLP forward / backward on the flat parameter vector
# ---------------------------------------------------------------------------

@_jit
def trunk_end_offset(sizes):
    off = 0
    for i in range(sizes.shape[0] - 1):
        off += sizes[i] * sizes[i + 1] + sizes[i + 1]
    return off


@_jit
def _trunk_forward_single(flat, sizes, x):
    h = x
    off = 0
    for i in range(sizes.shape[0] - 1):
        nin = sizes[i]
        nout = sizes[i + 1]
        wmat = flat[off:off + nin * nout].reshape(nin, nout)
        off += nin * nout
        b = flat[off:off + nout]
        off += nout
        h = np.tanh(np.dot(h, wmat) + b)
    return h, off


@_jit
def pv_forward_single(flat, sizes, x):
    """Policy logits (8) and state value for one observation."""
    h, off = _trunk_forward_single(flat, sizes, x)
    hl = sizes[sizes.shape[0] - 1]
    wp = flat[off:off + hl * 8].reshape(hl, 8)
    off += hl * 8
    bp = flat[off:off + 8]
    off += 8
    logits = np.dot(h, wp) + bp
    wv = flat[off:off + hl]
    off += hl
    bv = flat[off]
    value = np.dot(h, wv) + bv
    return logits, value


@_jit
def q_forward_single(flat, sizes, head_kind, x):
    """Action values (8) for one observation; dueling merges V and A heads."""
    h, off = _trunk_forward_single(flat, sizes, x)
    hl = sizes[sizes.shape[0] - 1]
    if head_kind == HEAD_Q:
        wq = flat[off:off + hl * 8].reshape(hl, 8)
        off += hl * 8
        bq = flat[off:off + 8]
        return np.dot(h, wq) + bq
    wv = flat[off:off + hl]
    off += hl
    bv = flat[off]
    off += 1
    wa = flat[off:off + hl * 8].reshape(hl, 8)
    off += hl * 8
    ba = flat[off:off + 8]
    v = np.dot(h, wv) + bv
    a = np.dot(h, wa) + ba
    am = 0.0
    for k in range(8):
        am += a[k]
    am /= 8.0
    q = np.empty(8)
    for k in range(8):
        q[k] = v + a[k] - am
    return q


@_jit
def softmax8(logits, out):
    mx = logits[0]
    for k in range(1, 8):
        if logits[k] > mx:
            mx = logits[k]
    s = 0.0
    for k in range(8):
        e = math.exp(logits[k] - mx)
        out[k] = e
        s += e
    for k in range(8):
        out[k] /= s
    return s


@_jit
def _trunk_forward_batch(flat, sizes, x, acts):
    h = x
    off = 0
    acol = 0
    for i in range(sizes.shape[0] - 1):
        nin = sizes[i]
        nout = sizes[i + 1]
        wmat = flat[off:off + nin * nout].reshape(nin, nout)
        off += nin * nout
        b = flat[off:off + nout]
        off += nout
        h = np.tanh(np.dot(h, wmat) + b)
        acts[:, acol:acol + nout] = h
        acol += nout
    return h, off


@_jit
def pv_forward_batch(flat, sizes, x, acts):
    h, off = _trunk_forward_batch(flat, sizes, x, acts)
    hl = sizes[sizes.shape[0] - 1]
    wp = flat[off:off + hl * 8].reshape(hl, 8)
    off += hl * 8
    bp = flat[off:off + 8]
    off += 8
    logits = np.dot(h, wp) + bp
    wv = flat[off:off + hl]
    off += hl
    bv = flat[off]
    values = np.dot(h, wv) + bv
    return logits, values


@_jit
def q_forward_batch(flat, sizes, head_kind, x, acts):
    n = x.shape[0]
    h, off = _trunk_forward_batch(flat, sizes, x, acts)
    hl = sizes[sizes.shape[0] - 1]
    if head_kind == HEAD_Q:
        wq = flat[off:off + hl * 8].reshape(hl, 8)
        off += hl * 8
        bq = flat[off:off + 8]
        return np.dot(h, wq) + bq
    wv = flat[off:off + hl]
    off += hl
    bv = flat[off]
    off += 1
    wa = flat[off:off + hl * 8].reshape(hl, 8)
    off += hl * 8
    ba = flat[off:off + 8]
    v = np.dot(h, wv) + bv
    a = np.dot(h, wa) + ba
    q = np.empty((n, 8))
    for i in range(n):
        am = 0.0
        for k in range(8):
            am += a[i, k]
        am /= 8.0
        for k in range(8):
            q[i, k] = v[i] + a[i, k] - am
    return q


@_jit
def _trunk_backward(flat, sizes, x, acts, dh, grad):
    """Backpropagate dh (grad at last trunk activation) into `grad`."""
    nlayers = sizes.shape[0] - 1
    if nlayers == 0:
        return
    woff = np.empty(nlayers, dtype=np.int64)
    boff = np.empty(nlayers, dtype=np.int64)
    aoff = np.empty(nlayers, dtype=np.int64)
    off = 0
    acol = 0
    for i in range(nlayers):
        woff[i] = off
        off += sizes[i] * sizes[i + 1]
        boff[i] = off
        off += sizes[i + 1]
        aoff[i] = acol
        acol += sizes[i + 1]
    for i in range(nlayers - 1, -1, -1):
        nin = sizes[i]
        nout = sizes[i + 1]
        hout = acts[:, aoff[i]:aoff[i] + nout]
        dpre = dh * (1.0 - hout * hout)
        if i == 0:
            prev = x
        else:
            prev = np.ascontiguousarray(acts[:, aoff[i - 1]:aoff[i - 1] + nin])
        gw = np.dot(prev.T, dpre)
        grad[woff[i]:woff[i] + nin * nout] = gw.ravel()
        grad[boff[i]:boff[i] + nout] = np.sum(dpre, 0)
        if i > 0:
            wmat = flat[woff[i]:woff[i] + nin * nout].reshape(nin, nout)
            dh = np.dot(dpre, wmat.T)


@_jit
def _last_hidden(sizes, x, acts):
    nlayers = sizes.shape[0] - 1
    if nlayers == 0:
        return x
    hl = sizes[nlayers]
    total = acts.shape[1]
    return np.ascontiguousarray(acts[:, total - hl:total])


@_jit
def pv_backward_batch(flat, sizes, x, acts, dlogits, dvalues):
    """Gradient of a scalar loss given its head gradients (reverse mode)."""
    grad = np.zeros_like(flat)
    hl = sizes[sizes.shape[0] - 1]
    hlast = _last_hidden(sizes, x, acts)
    off = trunk_end_offset(sizes)
    wp = flat[off:off + hl * 8].reshape(hl, 8)
    grad[off:off + hl * 8] = np.dot(hlast.T, dlogits).ravel()
    grad[off + hl * 8:off + hl * 8 + 8] = np.sum(dlogits, 0)
    voff = off + hl * 8 + 8
    wv = flat[voff:voff + hl]
    grad[voff:voff + hl] = np.dot(hlast.T, dvalues)
    grad[voff + hl] = np.sum(dvalues)
    dh = np.dot(dlogits, wp.T) + np.outer(dvalues, wv)
    _trunk_backward(flat, sizes, x, acts, dh, grad)
    return grad


@_jit
def q_backward_batch(flat, sizes, head_kind, x, acts, dq):
    n = x.shape[0]
    grad = np.zeros_like(flat)
    hl = sizes[sizes.shape[0] - 1]
    hlast = _last_hidden(sizes, x, acts)
    off = trunk_end_offset(sizes)
    if head_kind == HEAD_Q:
        wq = flat[off:off + hl * 8].reshape(hl, 8)
        grad[off:off + hl * 8] = np.dot(hlast.T, dq).ravel()
        grad[off + hl * 8:off + hl * 8 + 8] = np.sum(dq, 0)
        dh = np.dot(dq, wq.T)
    else:
        dvn = np.empty(n)
        da = np.empty((n, 8))
        for i in range(n):
            s = 0.0
            for k in range(8):
                s += dq[i, k]
            dvn[i] = s
            for k in range(8):
                da[i, k] = dq[i, k] - s / 8.0
        wv = flat[off:off + hl]
        grad[off:off + hl] = np.dot(hlast.T, dvn)
        grad[off + hl] = np.sum(dvn)
        aoff = off + hl + 1
        wa = flat[aoff:aoff + hl * 8].reshape(hl, 8)
        grad[aoff:aoff + hl * 8] = np.dot(hlast.T, da).ravel()
        grad[aoff + hl * 8:aoff + hl * 8 + 8] = np.sum(da, 0)
        dh = np.dot(da, wa.T) + np.outer(dvn, wv)
    _trunk_backward(flat, sizes, x, acts, dh, grad)
    return grad


# ---------------------------------------------------------------------------
# losses and optimizer
# ---------------------------------------------------------------------------

@_jit
def _total_hidden(sizes):
    t = 0
    for i in range(1, sizes.shape[0]):
        t += sizes[i]
    return t


@_jit
def ppo_loss_grad(flat, sizes, x, actions, logp_old, adv, ret, clip_eps, value_coef, entropy_coef):
    """Clipped-surrogate PPO loss (policy + value + entropy) and its gradient.

    Returns (total_loss, policy_loss, value_loss, entropy, clip_fraction,
    mean_ratio, grad).  The objective term min(r*A, clip(r)*A) is maximised,
    so policy_loss is its negated mean.
    """
    n = x.shape[0]
    acts = np.empty((n, _total_hidden(sizes)))
    logits, values = pv_forward_batch(flat, sizes, x, acts)
    dlogits = np.zeros((n, 8))
    dvalues = np.empty(n)
    lo = 1.0 - clip_eps
    hi = 1.0 + clip_eps
    pol_loss = 0.0
    ent_sum = 0.0
    val_loss = 0.0
    clip_hits = 0.0
    ratio_sum = 0.0
    probs = np.empty(8)
    logp = np.empty(8)
    for i in range(n):
        mx = logits[i, 0]
        for k in range(1, 8):
            if logits[i, k] > mx:
                mx = logits[i, k]
        s = 0.0
        for k in range(8):
            e = math.exp(logits[i, k] - mx)
            probs[k] = e
            s += e
        logs = math.log(s)
        for k in range(8):
            probs[k] /= s
            logp[k] = (logits[i, k] - mx) - logs
        a = actions[i]
        r = math.exp(logp[a] - logp_old[i])
        ratio_sum += r
        adv_i = adv[i]
        rc = r
        if rc < lo:
            rc = lo
        elif rc > hi:
            rc = hi
        s1 = r * adv_i
        s2 = rc * adv_i
        if s1 <= s2:
            obj = s1
            coeff = adv_i * r
        else:
            obj = s2
            coeff = 0.0
        if r < lo or r > hi:
            clip_hits += 1.0
        pol_loss -= obj
        ent = 0.0
        for k in range(8):
            ent -= probs[k] * logp[k]
        ent_sum += ent
        for k in range(8):
            ind = 1.0 if k == a else 0.0
            d = -(coeff / n) * (ind - probs[k])
            d += (entropy_coef / n) * probs[k] * (logp[k] + ent)
            dlogits[i, k] = d
        verr = values[i] - ret[i]
        val_loss += verr * verr
        dvalues[i] = value_coef * 2.0 * verr / n
    pol_loss /= n
    val_loss /= n
    entropy = ent_sum / n
    total = pol_loss + value_coef * val_loss - entropy_coef * entropy
    grad = pv_backward_batch(flat, sizes, x, acts, dlogits, dvalues)
    return total, pol_loss, val_loss, entropy, clip_hits / n, ratio_sum / n, grad


@_jit
def dqn_loss_grad(flat, sizes, head_kind, x, actions, targets, use_huber):
    """Temporal-difference loss on Q(s, a) against fixed targets, plus grad."""
    n = x.shape[0]
    acts = np.empty((n, _total_hidden(sizes)))
    q = q_forward_batch(flat, sizes, head_kind, x, acts)
    dq = np.zeros((n, 8))
    loss = 0.0
    for i in range(n):
        a = actions[i]
        e = q[i, a] - targets[i]
        if use_huber:
            ae = abs(e)
            if ae <= 1.0:
                loss += 0.5 * e * e
                d = e
            else:
                loss += ae - 0.5
                d = 1.0 if e > 0.0 else -1.0
        else:
            loss += e * e
            d = 2.0 * e
        dq[i, a] = d / n
    loss /= n
    grad = q_backward_batch(flat, sizes, head_kind, x, acts, dq)
    return loss, grad


@_jit
def q_targets_batch(target_flat, sizes, head_kind, x_next, rewards, dones, gamma):
    """r + gamma * max_a' Q_target(s', a') with terminal masking."""
    n = x_next.shape[0]
    acts = np.empty((n, _total_hidden(sizes)))
    q = q_forward_batch(target_flat, sizes, head_kind, x_next, acts)
    out = np.empty(n)
    for i in range(n):
        mx = q[i, 0]
        for k in range(1, 8):
            if q[i, k] > mx:
                mx = q[i, k]
        out[i] = rewards[i] + gamma * mx * (1.0 - dones[i])
    return out


@_jit
def adam_step_inplace(flat, grad, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam update; mutates flat, m, v; returns new t."""
    t += 1
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for i in range(flat.shape[0]):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        flat[i] -= lr * (m[i] / bc1) / (math.sqrt(v[i] / bc2) + eps)
    return t


@_jit
def ppo_minibatch_step(flat, m, v, t, sizes, x, actions, logp_old, adv, ret,
                       clip_eps, value_coef, entropy_coef, lr, beta1, beta2, eps):
    total, pol, val, ent, frac, ratio, grad = ppo_loss_grad(
        flat, sizes, x, actions, logp_old, adv, ret, clip_eps, value_coef, entropy_coef)
    t = adam_step_inplace(flat, grad, m, v, t, lr, beta1, beta2, eps)
    return t, total, pol, val, ent, frac, ratio


@_jit
def dqn_minibatch_step(flat, m, v, t, sizes, head_kind, x, actions, targets,
                       use_huber, lr, beta1, beta2, eps):
    loss, grad = dqn_loss_grad(flat, sizes, head_kind, x, actions, targets, use_huber)
    t = adam_step_inplace(flat, grad, m, v, t, lr, beta1, beta2, eps)
    return t, loss


@_jit
def gae_scan(rewards, values, dones, gamma, lam, last_value):
    """Generalized advantage estimation over one (or concatenated) episodes.

    delta_t = r_t + gamma*V_{t+1}*(1-done_t) - V_t
    A_t     = delta_t + gamma*lam*(1-done_t)*A_{t+1}
    `last_value` bootstraps past the final step when dones[-1] == 0.
    """
    n = rewards.shape[0]
    adv = np.empty(n)
    ret = np.empty(n)
    next_adv = 0.0
    next_value = last_value
    for t in range(n - 1, -1, -1):
        nd = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nd - values[t]
        a = delta + gamma * lam * nd * next_adv
        adv[t] = a
        ret[t] = a + values[t]
        next_adv = a
        next_value = values[t]
    return adv, ret


# ---------------------------------------------------------------------------
# fused episode drivers (the training hot path)
# ---------------------------------------------------------------------------

@_jit
def collect_episode_pv(obstacle, cleaned, r, c, heading, remaining,
                       flat, sizes,
                       obs_mode, include_dnut, include_heading, dnut_cap,
                       shaping_on, base_r, shape_rotation,
                       cap, uniforms, greedy,
                       obs_out, act_out, logp_out, val_out,
                       tile_out, rot_out, shaped_out):
    """Roll one episode with the softmax policy; fills the *_out arrays.

    Returns (steps, done, r, c, heading, remaining, distance, rot_units,
    wall_hits, base_total, shaped_total, last_value).  `last_value` is the
    critic's estimate for the final state when the episode hit `cap` without
    finishing, else 0.
    """
    dist_total = 0.0
    rot_total = np.int64(0)
    wall_hits = np.int64(0)
    base_total = 0.0
    shaped_total = 0.0
    stack = np.int64(0)
    probs = np.empty(8)
    done = remaining == 0
    t = 0
    while not done and t < cap:
        _encode_into(obstacle, cleaned, r, c, heading, obs_mode,
                     include_dnut, include_heading, dnut_cap, obs_out[t])
        logits, value = pv_forward_single(flat, sizes, obs_out[t])
        mx = logits[0]
        for k in range(1, 8):
            if logits[k] > mx:
                mx = logits[k]
        s = 0.0
        for k in range(8):
            e = math.exp(logits[k] - mx)
            probs[k] = e
            s += e
        if greedy:
            a = 0
            best = logits[0]
            for k in range(1, 8):
                if logits[k] > best:
                    best = logits[k]
                    a = k
        else:
            u = uniforms[t] * s
            cum = 0.0
            a = 7
            for k in range(8):
                cum += probs[k]
                if u < cum:
                    a = k
                    break
        logp = (logits[a] - mx) - math.log(s)
        tile, rot_r, units, moved, r, c, dist, newly = env_step(
            obstacle, cleaned, r, c, heading, a)
        heading = a
        if newly:
            remaining -= 1
        if not moved:
            wall_hits += 1
        keyed = tile + rot_r if shape_rotation else tile
        if keyed >= 0.0:
            stack += 1
        else:
            stack = 0
        bonus = base_r ** stack if shaping_on else 0.0
        shaped = tile + rot_r + bonus
        act_out[t] = a
        logp_out[t] = logp
        val_out[t] = value
        tile_out[t] = tile
        rot_out[t] = rot_r
        shaped_out[t] = shaped
        dist_total += dist
        rot_total += units
        base_total += tile + rot_r
        shaped_total += shaped
        done = remaining == 0
        t += 1
    last_value = 0.0
    if not done:
        tmp = np.empty(obs_out.shape[1])
        _encode_into(obstacle, cleaned, r, c, heading, obs_mode,
                     include_dnut, include_heading, dnut_cap, tmp)
        _, last_value = pv_forward_single(flat, sizes, tmp)
    return (t, done, r, c, heading, remaining,
            dist_total, rot_total, wall_hits, base_total, shaped_total, last_value)


@_jit
def collect_episode_q(obstacle, cleaned, r, c, heading, remaining,
                      flat, sizes, head_kind,
                      obs_mode, include_dnut, include_heading, dnut_cap,
                      shaping_on, base_r, shape_rotation,
                      cap, eps_start, eps_end, eps_decay_steps, step0,
                      u_explore, u_action, greedy,
                      obs_out, act_out, rew_out, tile_out, rot_out):
    """Roll one episode epsilon-greedily on Q values; obs_out gets cap+1 rows.

    rew_out holds the (possibly shaped) learning reward.  The observation
    after the final transition lands in obs_out[steps], so transition t is
    (obs_out[t], act_out[t], rew_out[t], obs_out[t+1]).
    """
    dist_total = 0.0
    rot_total = np.int64(0)
    wall_hits = np.int64(0)
    base_total = 0.0
    shaped_total = 0.0
    stack = np.int64(0)
    done = remaining == 0
    t = 0
    while not done and t < cap:
        _encode_into(obstacle, cleaned, r, c, heading, obs_mode,
                     include_dnut, include_heading, dnut_cap, obs_out[t])
        if eps_decay_steps > 0:
            frac = (step0 + t) / eps_decay_steps
            if frac > 1.0:
                frac = 1.0
        else:
            frac = 1.0
        epsilon = eps_start + (eps_end - eps_start) * frac
        if (not greedy) and u_explore[t] < epsilon:
            a = np.int64(u_action[t] * 8.0)
            if a > 7:
                a = np.int64(7)
        else:
            q = q_forward_single(flat, sizes, head_kind, obs_out[t])
            a = 0
            best = q[0]
            for k in range(1, 8):
                if q[k] > best:
                    best = q[k]
                    a = k
        tile, rot_r, units, moved, r, c, dist, newly = env_step(
            obstacle, cleaned, r, c, heading, a)
        heading = a
        if newly:
            remaining -= 1
        if not moved:
            wall_hits += 1
        keyed = tile + rot_r if shape_rotation else tile
        if keyed >= 0.0:
            stack += 1
        else:
            stack = 0
        bonus = base_r ** stack if shaping_on else 0.0
        shaped = tile + rot_r + bonus
        act_out[t] = a
        rew_out[t] = shaped
        tile_out[t] = tile
        rot_out[t] = rot_r
        dist_total += dist
        rot_total += units
        base_total += tile + rot_r
        shaped_total += shaped
        done = remaining == 0
        t += 1
    _encode_into(obstacle, cleaned, r, c, heading, obs_mode,
                 include_dnut, include_heading, dnut_cap, obs_out[t])
    return (t, done, r, c, heading, remaining,
            dist_total, rot_total, wall_hits, base_total, shaped_total)
