"""Numba-compiled numerical kernels.

Everything in here operates on plain arrays so the hot loops (likelihood
evaluation inside the sampler, the latent-removal sweeps, the WAIC
accumulation) run at native speed.  The public modules wrap these with
typed interfaces; keep this module free of package imports.

Array conventions, shared by all kernels:

  init    (6,)  int64   S0, Ch0, Ih0, Cc0, Ic0, R0
  obs     (4,T) int64   rows: new_col_ha, new_inf_ha, new_col_ca, new_inf_ca
  adm/dis (T,)  int64   monthly admissions / discharges
  lat     (4,T) int64   rows: rem_col_ha, rem_inf_ha, rem_col_ca, rem_inf_ca
  theta   (6,)  float64 beta_ch, beta_ih, beta_cc, beta_ic, sigma, alpha
  rho     (4,)  float64 rho1..rho4
  lf      (n,)  float64 lf[i] = log(i!)

Channel order in pointwise matrices (columns): S->Ch, Ch->Ih, Ch->R,
Ih->R, Cc->R, Ic->R.
"""

import math

import numpy as np
from numba import njit

NEG_INF = -np.inf

# status codes returned by the trajectory recursion; -1 means feasible,
# otherwise status = month * 10 + code with the codes below
EQ_NEW_COL_HA = 0      # new_col_ha > s
EQ_COL_HA_OUT = 1      # new_inf_ha + rem_col_ha > col_ha
EQ_REM_INF_HA = 2      # rem_inf_ha > inf_ha
EQ_REM_COL_CA = 3      # rem_col_ca > col_ca
EQ_REM_INF_CA = 4      # rem_inf_ca > inf_ca
EQ_S_NEGATIVE = 5      # s + admissions - discharges - new_col_ha < 0
EQ_EMPTY_POP = 6       # total population is zero


@njit(cache=True)
def log_binom_pmf(k, n, p, lf):
    """log Binomial(k; n, p) with the 0*log(0) = 0 convention.

    Returns -inf for zero-probability events; assumes 0 <= k <= n.
    """
    if p <= 0.0:
        return 0.0 if k == 0 else NEG_INF
    if p >= 1.0:
        return 0.0 if k == n else NEG_INF
    return (lf[n] - lf[k] - lf[n - k]
            + k * math.log(p) + (n - k) * math.log1p(-p))


@njit(cache=True)
def channel_totals(init, obs, adm, dis, lat, theta, rho, lf, cmask, out):
    """Per-channel log-likelihood totals over the requested channels.

    Runs the full integer state recursion with feasibility checks no
    matter which channels are requested; fills ``out[c]`` for channels
    with ``cmask[c]`` set.  Returns -1 if the trajectory is feasible,
    otherwise the encoded (month, equation) status.
    """
    s = init[0]
    ch = init[1]
    ih = init[2]
    cc = init[3]
    ic = init[4]
    rm = init[5]

    p_alpha = -math.expm1(-theta[5])
    p_r1 = -math.expm1(-rho[0])
    p_r2 = -math.expm1(-rho[1])
    p_r3 = -math.expm1(-rho[2])
    p_r4 = -math.expm1(-rho[3])

    for c in range(6):
        out[c] = 0.0

    for t in range(obs.shape[1]):
        n_tot = s + ch + ih + cc + ic + rm
        if n_tot <= 0:
            return t * 10 + EQ_EMPTY_POP
        c_star = obs[0, t]
        i_star = obs[1, t]
        cc_star = obs[2, t]
        ic_star = obs[3, t]
        r1 = lat[0, t]
        r2 = lat[1, t]
        r3 = lat[2, t]
        r4 = lat[3, t]

        if c_star > s:
            return t * 10 + EQ_NEW_COL_HA
        if i_star + r1 > ch:
            return t * 10 + EQ_COL_HA_OUT
        if r2 > ih:
            return t * 10 + EQ_REM_INF_HA
        if r3 > cc:
            return t * 10 + EQ_REM_COL_CA
        if r4 > ic:
            return t * 10 + EQ_REM_INF_CA
        s_next = s + adm[t] - dis[t] - c_star
        if s_next < 0:
            return t * 10 + EQ_S_NEGATIVE

        if cmask[0]:
            hazard = (theta[0] * ch + theta[1] * ih
                      + theta[2] * cc + theta[3] * ic) / n_tot + theta[4]
            p_col = -math.expm1(-hazard)
            out[0] += log_binom_pmf(c_star, s, p_col, lf)
        if cmask[1]:
            out[1] += log_binom_pmf(i_star, ch, p_alpha, lf)
        if cmask[2]:
            out[2] += log_binom_pmf(r1, ch, p_r1, lf)
        if cmask[3]:
            out[3] += log_binom_pmf(r2, ih, p_r2, lf)
        if cmask[4]:
            out[4] += log_binom_pmf(r3, cc, p_r3, lf)
        if cmask[5]:
            out[5] += log_binom_pmf(r4, ic, p_r4, lf)

        s = s_next
        ch = ch + c_star - i_star - r1
        ih = ih + i_star - r2
        cc = cc + cc_star - r3
        ic = ic + ic_star - r4
        rm = rm + r1 + r2 + r3 + r4

    return -1


@njit(cache=True)
def pointwise_matrix(init, obs, adm, dis, lat, theta, rho, lf, out):
    """Fill ``out`` (T, 6) with per-month, per-channel log-likelihood terms.

    Returns the same feasibility status as :func:`channel_totals`.
    """
    s = init[0]
    ch = init[1]
    ih = init[2]
    cc = init[3]
    ic = init[4]
    rm = init[5]

    p_alpha = -math.expm1(-theta[5])
    p_r1 = -math.expm1(-rho[0])
    p_r2 = -math.expm1(-rho[1])
    p_r3 = -math.expm1(-rho[2])
    p_r4 = -math.expm1(-rho[3])

    for t in range(obs.shape[1]):
        n_tot = s + ch + ih + cc + ic + rm
        if n_tot <= 0:
            return t * 10 + EQ_EMPTY_POP
        c_star = obs[0, t]
        i_star = obs[1, t]
        cc_star = obs[2, t]
        ic_star = obs[3, t]
        r1 = lat[0, t]
        r2 = lat[1, t]
        r3 = lat[2, t]
        r4 = lat[3, t]

        if c_star > s:
            return t * 10 + EQ_NEW_COL_HA
        if i_star + r1 > ch:
            return t * 10 + EQ_COL_HA_OUT
        if r2 > ih:
            return t * 10 + EQ_REM_INF_HA
        if r3 > cc:
            return t * 10 + EQ_REM_COL_CA
        if r4 > ic:
            return t * 10 + EQ_REM_INF_CA
        s_next = s + adm[t] - dis[t] - c_star
        if s_next < 0:
            return t * 10 + EQ_S_NEGATIVE

        hazard = (theta[0] * ch + theta[1] * ih
                  + theta[2] * cc + theta[3] * ic) / n_tot + theta[4]
        p_col = -math.expm1(-hazard)
        out[t, 0] = log_binom_pmf(c_star, s, p_col, lf)
        out[t, 1] = log_binom_pmf(i_star, ch, p_alpha, lf)
        out[t, 2] = log_binom_pmf(r1, ch, p_r1, lf)
        out[t, 3] = log_binom_pmf(r2, ih, p_r2, lf)
        out[t, 4] = log_binom_pmf(r3, cc, p_r3, lf)
        out[t, 5] = log_binom_pmf(r4, ic, p_r4, lf)

        s = s_next
        ch = ch + c_star - i_star - r1
        ih = ih + i_star - r2
        cc = cc + cc_star - r3
        ic = ic + ic_star - r4
        rm = rm + r1 + r2 + r3 + r4

    return -1


@njit(cache=True)
def total_loglik(init, obs, adm, dis, lat, theta, rho, lf):
    """Total log-likelihood; -inf if the trajectory is infeasible."""
    cmask = np.ones(6, dtype=np.bool_)
    out = np.empty(6)
    status = channel_totals(init, obs, adm, dis, lat, theta, rho, lf, cmask, out)
    if status >= 0:
        return NEG_INF
    tot = 0.0
    for c in range(6):
        tot += out[c]
    return tot


@njit(cache=True)
def gamma_logpdf(x, shape, rate):
    """log density of Gamma(shape, rate); -inf outside the support."""
    if x < 0.0:
        return NEG_INF
    if x == 0.0:
        if shape == 1.0:
            return math.log(rate)
        return math.inf if shape < 1.0 else NEG_INF
    return (shape * math.log(rate) - math.lgamma(shape)
            + (shape - 1.0) * math.log(x) - rate * x)


# channels touched by a proposal to each latent row: the HA-colonized
# removals shift the Ch series (force of colonization, infection and
# removal terms); the other rows shift one prevalence series each
_LAT_CHANNELS = np.array([
    [1, 1, 1, 0, 0, 0],
    [1, 0, 0, 1, 0, 0],
    [1, 0, 0, 0, 1, 0],
    [1, 0, 0, 0, 0, 1],
], dtype=np.bool_)

# channel affected by each theta component: the betas and sigma enter the
# colonization probability only, alpha the colonization-to-infection term
_THETA_CHANNEL = np.array([0, 0, 0, 0, 0, 1], dtype=np.int64)


@njit(cache=True)
def latent_sweep(init, obs, adm, dis, lat, theta, rho, lf, cur_chan, step_choices):
    """One Metropolis sweep over every (latent row, month) site, in place.

    A first pass proposes +/-1 or +/-2 at each site; a second pass
    proposes moving one or two removals between adjacent months, which
    preserves the row total and perturbs only a narrow census window, so
    it mixes the latent path much faster than site moves alone.
    ``cur_chan`` holds the six current per-channel totals and is updated
    on acceptance.  Returns (accepted, proposed).
    """
    n_acc = 0
    n_prop = 0
    tmp = np.empty(6)
    n_steps = step_choices.shape[0]
    for row in range(4):
        cmask = _LAT_CHANNELS[row]
        for t in range(lat.shape[1]):
            n_prop += 1
            step = step_choices[int(np.random.random() * n_steps)]
            old = lat[row, t]
            new = old + step
            if new < 0:
                continue
            lat[row, t] = new
            status = channel_totals(init, obs, adm, dis, lat, theta, rho,
                                    lf, cmask, tmp)
            if status >= 0:
                lat[row, t] = old
                continue
            delta = 0.0
            for c in range(6):
                if cmask[c]:
                    delta += tmp[c] - cur_chan[c]
            if delta >= 0.0 or math.log(np.random.random()) < delta:
                n_acc += 1
                for c in range(6):
                    if cmask[c]:
                        cur_chan[c] = tmp[c]
            else:
                lat[row, t] = old
    for row in range(4):
        cmask = _LAT_CHANNELS[row]
        for t in range(lat.shape[1] - 1):
            n_prop += 1
            amount = 1 + int(np.random.random() * 2.0)
            if np.random.random() < 0.5:
                src, dst = t, t + 1
            else:
                src, dst = t + 1, t
            if lat[row, src] < amount:
                continue
            lat[row, src] -= amount
            lat[row, dst] += amount
            status = channel_totals(init, obs, adm, dis, lat, theta, rho,
                                    lf, cmask, tmp)
            if status >= 0:
                lat[row, src] += amount
                lat[row, dst] -= amount
                continue
            delta = 0.0
            for c in range(6):
                if cmask[c]:
                    delta += tmp[c] - cur_chan[c]
            if delta >= 0.0 or math.log(np.random.random()) < delta:
                n_acc += 1
                for c in range(6):
                    if cmask[c]:
                        cur_chan[c] = tmp[c]
            else:
                lat[row, src] += amount
                lat[row, dst] -= amount
    return n_acc, n_prop


@njit(cache=True)
def rwmh_chain(init, obs, adm, dis, lat, theta, free, rho, lf,
               prior_shape, prior_rate, scales, n_iter, n_burn,
               adapt, target_acc, seed,
               out_params, out_logpost, out_lat):
    """Random-walk Metropolis-Hastings with interleaved latent sweeps.

    Componentwise Gaussian proposals on log-transformed parameters (with
    the log-Jacobian in the acceptance ratio); one full latent sweep per
    iteration; proposal scales adapted during burn-in only.  ``lat``,
    ``theta`` and ``scales`` are updated in place.

    Returns (status, acc_rates, lat_acc_rate) where status is the
    feasibility status of the initial configuration (-1 on success).
    """
    np.random.seed(seed)
    n_months = obs.shape[1]
    tmp = np.empty(6)
    one_mask = np.zeros(6, dtype=np.bool_)
    all_mask = np.ones(6, dtype=np.bool_)
    step_choices = np.array([-2, -1, 1, 2], dtype=np.int64)

    cur_chan = np.empty(6)
    status = channel_totals(init, obs, adm, dis, lat, theta, rho, lf,
                            all_mask, cur_chan)
    if status >= 0:
        return status, np.zeros(6), 0.0

    cur_prior = np.zeros(6)
    for j in range(6):
        if free[j]:
            cur_prior[j] = gamma_logpdf(theta[j], prior_shape[j], prior_rate[j])

    acc_total = np.zeros(6)
    prop_total = np.zeros(6)
    acc_window = np.zeros(6)
    lat_acc = 0
    lat_prop = 0
    window = 50
    n_batch = 0

    for it in range(n_iter):
        for j in range(6):
            if not free[j]:
                continue
            prop_total[j] += 1.0
            log_old = math.log(theta[j])
            log_new = log_old + np.random.normal() * scales[j]
            th_new = math.exp(log_new)
            old_val = theta[j]
            theta[j] = th_new
            c = _THETA_CHANNEL[j]
            for k in range(6):
                one_mask[k] = False
            one_mask[c] = True
            status_j = channel_totals(init, obs, adm, dis, lat, theta, rho,
                                      lf, one_mask, tmp)
            if status_j >= 0:
                theta[j] = old_val
                continue
            prior_new = gamma_logpdf(th_new, prior_shape[j], prior_rate[j])
            delta = (tmp[c] - cur_chan[c]) + (prior_new - cur_prior[j]) \
                + (log_new - log_old)
            if delta >= 0.0 or math.log(np.random.random()) < delta:
                cur_chan[c] = tmp[c]
                cur_prior[j] = prior_new
                acc_total[j] += 1.0
                acc_window[j] += 1.0
            else:
                theta[j] = old_val

        if n_months > 0:
            a, p = latent_sweep(init, obs, adm, dis, lat, theta, rho, lf,
                                cur_chan, step_choices)
            lat_acc += a
            lat_prop += p

        if adapt and it < n_burn and (it + 1) % window == 0:
            n_batch += 1
            delta_s = min(0.25, 1.0 / math.sqrt(n_batch))
            for j in range(6):
                if not free[j]:
                    continue
                if acc_window[j] / window > target_acc:
                    scales[j] *= math.exp(delta_s)
                else:
                    scales[j] *= math.exp(-delta_s)
                acc_window[j] = 0.0

        if it >= n_burn:
            k = it - n_burn
            lp = 0.0
            for c in range(6):
                lp += cur_chan[c]
            for j in range(6):
                if free[j]:
                    lp += cur_prior[j]
            out_logpost[k] = lp
            for j in range(6):
                out_params[k, j] = theta[j]
            for row in range(4):
                for t in range(n_months):
                    out_lat[k, row, t] = lat[row, t]

    acc_rates = np.zeros(6)
    for j in range(6):
        if prop_total[j] > 0:
            acc_rates[j] = acc_total[j] / prop_total[j]
    lat_rate = lat_acc / lat_prop if lat_prop > 0 else 0.0
    return -1, acc_rates, lat_rate


@njit(cache=True)
def waic_accumulate(params_draws, lat_draws, init, obs, adm, dis, rho, lf):
    """Streaming WAIC accumulators over posterior draws.

    Returns (lppd_points, var_points, status):
      lppd_points[i] = log mean_s exp(l_is)
      var_points[i]  = sample variance (ddof=1) of l_is
    status >= 0 flags the first point whose log-likelihood was -inf
    or an infeasible draw (encoded as draw * 1000000 + point index; an
    infeasible draw reports point index 999999).
    """
    n_draws = params_draws.shape[0]
    n_months = obs.shape[1]
    n_points = n_months * 6
    mat = np.empty((n_months, 6))
    run_max = np.full(n_points, NEG_INF)
    run_sum = np.zeros(n_points)
    mean = np.zeros(n_points)
    m2 = np.zeros(n_points)
    lat = np.empty((4, n_months), dtype=np.int64)

    for s in range(n_draws):
        for row in range(4):
            for t in range(n_months):
                lat[row, t] = lat_draws[s, row, t]
        status = pointwise_matrix(init, obs, adm, dis, lat,
                                  params_draws[s], rho, lf, mat)
        if status >= 0:
            return run_max, m2, s * 1000000 + 999999
        for t in range(n_months):
            for c in range(6):
                i = t * 6 + c
                l = mat[t, c]
                if l == NEG_INF:
                    return run_max, m2, s * 1000000 + i
                # streaming log-sum-exp
                if l > run_max[i]:
                    run_sum[i] = run_sum[i] * math.exp(run_max[i] - l) + 1.0
                    run_max[i] = l
                else:
                    run_sum[i] += math.exp(l - run_max[i])
                # Welford variance
                d = l - mean[i]
                mean[i] += d / (s + 1)
                m2[i] += d * (l - mean[i])

    lppd = np.empty(n_points)
    var = np.empty(n_points)
    for i in range(n_points):
        lppd[i] = run_max[i] + math.log(run_sum[i]) - math.log(n_draws)
        var[i] = m2[i] / (n_draws - 1) if n_draws > 1 else 0.0
    return lppd, var, -1
