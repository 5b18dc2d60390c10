#!/usr/bin/env python3
"""Independent high-precision reference values for the test suite.

Everything here is evaluated with mpmath at 30 significant digits, using
direct closed forms, dense scans followed by bisection, and adaptive
quadrature. None of it shares code with the Rust implementation. Run:

    python3 scripts/oracle.py > scripts/oracle_values.json
"""
import json
import mpmath as mp

mp.mp.dps = 30

BASELINE = dict(uH=1, uL=-1, dbH=0.7, dbL=0.7, duH=0.5, duL=0.5, a=0.6, b=0.8, c=0.025)
SMALL_GAPS = dict(uH=1, uL=-1, dbH=0.2, dbL=0.2, duH=0.1, duL=0.1, a=0.6, b=0.8, c=0.01)
INTENSE = dict(uH=0.5, uL=-1, dbH=1, dbL=0.7, duH=0.5, duL=0.4, a=0.6, b=0.8, c=0.01)


def mpf_params(m):
    return {k: mp.mpf(str(v)) for k, v in m.items()}


def odds(p):
    return p / (1 - p)


def prob(l):
    return l / (1 + l)


def scan_bisect(g, t0=0, step=mp.mpf("1e-3"), horizon=200):
    """First sign change of g from negative to nonnegative, scanning forward."""
    t = mp.mpf(t0)
    if g(t) >= 0:
        return t
    while t < horizon:
        if g(t + step) >= 0:
            lo, hi = t, t + step
            for _ in range(120):
                mid = (lo + hi) / 2
                if g(mid) >= 0:
                    hi = mid
                else:
                    lo = mid
            return (lo + hi) / 2
        t += step
    raise RuntimeError("no crossing")


def bisect(g, lo, hi, iters=200):
    glo = g(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        gm = g(mid)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return (lo + hi) / 2


def single_dm(m):
    a, b, c, uH, uL = m["a"], m["b"], m["c"], m["uH"], m["uL"]
    lbar = (-uL - c / b) / (c / b)
    k = (c / b) * (b / a - 1) * lbar ** (1 - b / (b - a))
    lund = mp.findroot(lambda l: (uH - c / a) * l + k * l ** (b / (b - a)) - c / b, c / b / uH)
    cbar = b * (-uL) * uH / (uH - uL)
    return dict(p_bar=prob(lbar), p_und=prob(lund), K=k, c_bar=cbar, L_bar=lbar, L_und=lund)


def dm_value_closed(p, m, sol):
    a, b, c, uH, uL = m["a"], m["b"], m["c"], m["uH"], m["uL"]
    return p * (uH - c / a) + (1 - p) * (uL - c / b) + sol["K"] * odds(p) ** (b / (b - a)) * (1 - p)


def dm_value_quadrature(p0, m, sol):
    """Objective of a lone learner who stops at the first time the belief reaches p_bar."""
    a, b, c, uH, uL = m["a"], m["b"], m["c"], m["uH"], m["uL"]
    T = mp.log(sol["L_bar"] / odds(p0)) / (b - a)
    pi = lambda t: p0 * mp.e ** (-a * t) + (1 - p0) * mp.e ** (-b * t)
    flow = mp.quad(lambda t: p0 * mp.e ** (-a * t) * a * uH - c * pi(t), [0, T])
    pT = sol["p_bar"]
    return flow + pi(T) * (pT * uH + (1 - pT) * uL)


def cutoffs(m):
    a, b, c = m["a"], m["b"], m["c"]
    return dict(
        p_L=prob(-m["uL"] / m["uH"]),
        p_M=prob(-(m["uL"] - m["duL"]) / (m["uH"] - m["duH"])),
        p_tilde=prob((-b * m["uL"] - c) / (a * m["dbH"] + c)),
    )


def t_r(p0, m, beta=0, step=mp.mpf("1e-3")):
    a, b, c = m["a"], m["b"], m["c"]
    l0 = odds(p0)
    return scan_bisect(step=step, g=lambda t: l0 * mp.e ** ((b - a) * t) * (c + (1 - beta) * a * mp.e ** (-a * t) * m["dbH"]) - (b * (-m["uL"]) - c))


def t_l(p0, m):
    a, b = m["a"], m["b"]
    l0 = odds(p0)
    return scan_bisect(lambda t: l0 * mp.e ** ((b - a) * t) * (m["uH"] - (1 - mp.e ** (-a * t)) * m["dbH"]) + m["uL"])


def j2(T, p0, m, beta=0):
    a, b, c = m["a"], m["b"], m["c"]
    lT = odds(p0) * mp.e ** ((b - a) * T)
    return (mp.mpf(1) / 2 * (1 - beta) * mp.e ** (-a * T) * m["dbH"] + c / a - (-m["uL"] - c / b) / lT) * mp.e ** (-a * T)


def p_star_of_t(T, p0, m, beta=0):
    a, b, c = m["a"], m["b"], m["c"]
    den = m["uH"] - m["dbH"] / 2 + beta * m["dbH"] / 2 - c / a + j2(T, p0, m, beta)
    return prob((c / b) / den)


def fixed_point_pstar(m):
    pl = cutoffs(m)["p_L"]
    return bisect(lambda p: p - p_star_of_t(t_r(p, m, step=mp.mpf('1e-2')), p, m), mp.mpf("1e-6"), pl - mp.mpf("1e-9"), iters=80)


def beta_ml(p0, m):
    def resid(beta):
        T = t_r(p0, m, beta, step=mp.mpf('1e-2'))
        return odds(p0) - odds(p_star_of_t(T, p0, m, beta))
    return bisect(resid, mp.mpf("1e-12"), 1 - mp.mpf("1e-12"), iters=80)


def n_player(n, m):
    a, b, c = m["a"], m["b"], m["c"]
    return prob((b * (-m["uL"]) - c) / ((n - 1) * m["dbH"] * a + c))


def t_ps(m):
    return mp.log(m["dbH"] / -(m["uH"] - m["dbH"])) / m["a"]


def p_nr_closed(m):
    """Prior at which learning until T_PS and then taking S is worth exactly the safe payoff."""
    a, b, c = m["a"], m["b"], m["c"]
    T = t_ps(m)
    e = mp.e ** (-a * T)
    num = (c / b) * (1 - mp.e ** (-b * T))
    den = m["uH"] - m["dbH"] / 2 - c / a + e * (e * m["dbH"] / 2 + c / a)
    return prob(num / den)


def initial_slope(p0, m):
    a, b, c = m["a"], m["b"], m["c"]
    l0 = odds(p0)
    return (b * (-m["uL"]) - c - l0 * c - l0 * m["dbH"] * a) / (l0 * m["dbH"] + m["dbL"])


# --- two-period example, by explicit enumeration over (state, own signal, opponent signal)
def two_period(p0, opp, m):
    a, b, c = m["a"], m["b"], m["c"]
    uH, uL = m["uH"], m["uL"]
    first = {"H": uH, "L": uL}
    second = {"H": uH - m["dbH"], "L": uL - m["dbL"]}
    simul = {"H": uH - m["duH"], "L": uL - m["duL"]}
    prior = {"H": p0, "L": 1 - p0}
    reveal = {"H": a, "L": b}

    def sig_dist(w):
        return [("sig", reveal[w]), ("none", 1 - reveal[w])]

    # opponent's t=1 no-signal R probability when the opponent also learns
    def r_value_vs(m_r):
        # payoff of R at t=1 after no own signal, opponent learner plays R w.p. m_r after no signal
        tot = 0
        for w in "HL":
            pw_none = prior[w] * (1 - reveal[w])
            opp_r = (reveal[w] if w == "H" else 0) + (1 - reveal[w]) * m_r
            tot += pw_none * (first[w] - opp_r * (first[w] - simul[w]))
        return tot / sum(prior[w] * (1 - reveal[w]) for w in "HL")

    if opp == "Learn":
        vr, vs = r_value_vs(1), r_value_vs(0)
        if vr >= 0:
            m_r = mp.mpf(1)
        elif vs <= 0:
            m_r = mp.mpf(0)
        else:
            m_r = vs / (vs - vr)
    pay_r0 = 0
    pay_learn = -c
    for w in "HL":
        if opp == "S0":
            pay_r0 += prior[w] * first[w]
        elif opp == "R0":
            pay_r0 += prior[w] * simul[w]
        else:
            pay_r0 += prior[w] * first[w]
    # learner
    for w in "HL":
        for own, pown in sig_dist(w):
            for oth, poth in (sig_dist(w) if opp == "Learn" else [("-", 1)]):
                pr_branch = prior[w] * pown * poth
                if opp == "S0":
                    r_pay = first[w]
                elif opp == "R0":
                    r_pay = second[w]
                else:
                    if oth == "sig":
                        opp_r = 1 if w == "H" else 0
                    else:
                        opp_r = m_r
                    r_pay = first[w] - opp_r * (first[w] - simul[w])
                if own == "sig":
                    val = r_pay if w == "H" else 0
                    pay_learn += pr_branch * val
    # no-signal branch: choose best of R and S at posterior
    none_mass = sum(prior[w] * (1 - reveal[w]) for w in "HL")
    if opp == "S0":
        rv = sum(prior[w] * (1 - reveal[w]) * first[w] for w in "HL") / none_mass
    elif opp == "R0":
        rv = sum(prior[w] * (1 - reveal[w]) * second[w] for w in "HL") / none_mass
    else:
        rv = r_value_vs(m_r)
    pay_learn += none_mass * max(rv, 0)
    return dict(pay_R0=pay_r0, pay_S0=mp.mpf(0), pay_learn=pay_learn)


def learning_interval(opp, m):
    f = lambda p: two_period(p, opp, m)["pay_learn"] - max(two_period(p, opp, m)["pay_R0"], 0)
    grid = [mp.mpf(i) / 2000 for i in range(1, 2000)]
    inside = [p for p in grid if f(p) > 0]
    lo, hi = inside[0], inside[-1]
    lo = bisect(f, lo - mp.mpf(1) / 2000, lo, iters=100)
    hi = bisect(f, hi, hi + mp.mpf(1) / 2000, iters=100)
    return [lo, hi]


def main():
    out = {}
    f1, q, x = mpf_params(BASELINE), mpf_params(SMALL_GAPS), mpf_params(INTENSE)
    s1 = single_dm(f1)
    out["baseline_dm"] = {k: s1[k] for k in ("p_bar", "p_und", "K", "c_bar")}
    out["baseline_dm_value_0_5_closed"] = dm_value_closed(mp.mpf("0.5"), f1, s1)
    out["baseline_dm_value_0_5_quadrature"] = dm_value_quadrature(mp.mpf("0.5"), f1, s1)
    out["baseline_cutoffs"] = cutoffs(f1)
    out["small_gaps_cutoffs"] = cutoffs(q)
    out["small_gaps_dm"] = {k: single_dm(q)[k] for k in ("p_bar", "p_und")}
    out["belief_0_5_t5"] = prob(mp.e ** (mp.mpf("0.2") * 5))
    out["no_signal_0_5_t1"] = mp.mpf("0.5") * mp.e ** mp.mpf("-0.6") + mp.mpf("0.5") * mp.e ** mp.mpf("-0.8")
    out["baseline_initial_slope_0_5"] = initial_slope(mp.mpf("0.5"), f1)
    out["baseline_t_r_0_5"] = t_r(mp.mpf("0.5"), f1)
    out["baseline_t_l_0_4"] = t_l(mp.mpf("0.4"), f1)
    out["baseline_t_r_1e-6"] = t_r(mp.mpf("1e-6"), f1)
    out["baseline_p_star_of_t_r_0_5"] = p_star_of_t(out["baseline_t_r_0_5"], mp.mpf("0.5"), f1)
    out["baseline_p_star"] = fixed_point_pstar(f1)
    out["small_gaps_p_star"] = fixed_point_pstar(q)
    pmid = (s1["p_und"] + out["baseline_p_star"]) / 2
    out["baseline_beta_prior"] = pmid
    out["baseline_beta"] = beta_ml(pmid, f1)
    out["baseline_n3"] = n_player(3, f1)
    out["baseline_n10000"] = n_player(10000, f1)
    out["t_ps_intense"] = t_ps(x)
    out["p_nr_intense"] = p_nr_closed(x)
    out["p_tilde_intense"] = prob((-x["b"] * x["uL"] - x["c"]) / (x["a"] * x["dbH"] + x["c"]))
    tp = {}
    for opp in ("S0", "R0", "Learn"):
        tp[opp] = {"p0_0_5": two_period(mp.mpf("0.5"), opp, f1), "interval": learning_interval(opp, f1)}
    out["baseline_two_period"] = tp

    def conv(v):
        if isinstance(v, dict):
            return {k: conv(w) for k, w in v.items()}
        if isinstance(v, list):
            return [conv(w) for w in v]
        return mp.nstr(v, 20)

    print(json.dumps(conv(out), indent=2))


if __name__ == "__main__":
    main()
