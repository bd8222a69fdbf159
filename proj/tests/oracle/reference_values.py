#!/usr/bin/env python3
"""Independent reference evaluation of the key-length chain.

Written directly from the model formulas with mpmath at 50 significant
digits. The C++ unit tests freeze the numbers printed here; nothing in this
script shares code with the library.

    python3 tests/oracle/reference_values.py
"""
import mpmath as mp
from scipy.special import betainc
from scipy.stats import binom

mp.mp.dps = 50


def transmittance(db):
    return mp.power(10, -mp.mpf(db) / 10)


def detect(k, pd, pec, pap):
    return (1 + pap) * (1 - (1 - 2 * pec) * mp.exp(-pd * k))


def err(k, pd, pec, pap, qber, d):
    return pec + pap * d / 2 + qber * (1 - mp.exp(-pd * k))


def h(x):
    x = mp.mpf(x)
    if x == 0 or x == 1:
        return mp.mpf(0)
    return -x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2)


def delta(y, beta, plus):
    if plus:
        return beta + mp.sqrt(2 * beta * y + beta**2)
    return beta / 2 + mp.sqrt(2 * beta * y + beta**2 / 4)


def tau(n, mu, p):
    return sum(pk * mp.exp(-m) * m**n / mp.factorial(n) for m, pk in zip(mu, p))


def counts(pax, pbx, mu, p, db, pec, qber, pap, fs, t):
    pd = transmittance(db)
    N = mp.mpf(fs) * t
    D = [detect(m, pd, pec, pap) for m in mu]
    e = [err(m, pd, pec, pap, qber, d) for m, d in zip(mu, D)]
    sD = sum(pk * d for pk, d in zip(p, D))
    se = sum(pk * x for pk, x in zip(p, e))
    out = {}
    for basis, w in (("x", pax * pbx), ("z", (1 - pax) * (1 - pbx))):
        n = [w * pk * d * N for pk, d in zip(p, D)]
        ntot = sum(n)
        mtot = se / sD * ntot
        m = [mtot * pk * d / sD for pk, d in zip(p, D)]
        out["n" + basis] = n
        out["m" + basis] = m
    return out


def bounds(vals, mu, p, beta):
    lo, hi = [], []
    for v, m, pk in zip(vals, mu, p):
        f = mp.exp(m) / pk
        lo.append(max(mp.mpf(0), f * (v - delta(v, beta, False))))
        hi.append(f * (v + delta(v, beta, True)))
    return lo, hi


def s0(nlo, nhi, mu, p):
    t0 = tau(0, mu, p)
    return max(mp.mpf(0), t0 * (mu[1] * nlo[2] - mu[2] * nhi[1]) / (mu[1] - mu[2]))


def s1(nlo, nhi, s_0, mu, p):
    t0, t1 = tau(0, mu, p), tau(1, mu, p)
    num = nlo[1] - nhi[2] - (mu[1]**2 - mu[2]**2) / mu[0]**2 * (nhi[0] - s_0 / t0)
    den = mu[0] * (mu[1] - mu[2]) - mu[1]**2 + mu[2]**2
    return max(mp.mpf(0), t1 * mu[0] * num / den)


def gamma(a, b, c, d):
    if b == 0:
        return mp.mpf(0)
    return mp.sqrt((c + d) * (1 - b) * b / (c * d * mp.log(2))
                   * mp.log((c + d) / (c * d * (1 - b) * b) * (21 / a)**2, 2))


def binom_cdf_exact(k, n, p):
    """P[Bin(n, p) <= k] by direct summation of the pmf downward from k."""
    n, p = mp.mpf(n), mp.mpf(p)
    lgn = mp.loggamma(n + 1)
    total, j = mp.mpf(0), k
    while j >= 0:
        term = mp.exp(lgn - mp.loggamma(j + 1) - mp.loggamma(n - j + 1)
                      + j * mp.log(p) + (n - j) * mp.log(1 - p))
        total += term
        if term < total * mp.mpf("1e-30"):
            break
        j -= 1
    return total


def binom_quantile(eps, n, p):
    """Smallest integer k with P[Bin(n, p) <= k] >= eps (real n allowed).

    Bisection runs on scipy's double-precision incomplete beta; the final
    boundary is then confirmed with the exact mpmath summation.
    """
    def cdf(k):
        if k >= n:
            return 1.0
        return float(betainc(float(n - k), float(k + 1), float(1 - p)))
    lo, hi = -1, int(mp.floor(n))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cdf(mid) >= eps:
            hi = mid
        else:
            lo = mid
    while binom_cdf_exact(hi, n, p) < eps:
        hi += 1
    while hi > 0 and binom_cdf_exact(hi - 1, n, p) >= eps:
        hi -= 1
    return hi


def lambda_ec(n, q, eps_c):
    n, q = mp.mpf(n), mp.mpf(q)
    if n == 0 or q == 0:
        return mp.mpf(0), 0
    r = mp.log((1 - q) / q, 2)
    finv = binom_quantile(eps_c, n, 1 - q)
    val = n * h(q) + n * (1 - q) * r - (finv - 1) * r - mp.log(n, 2) / 2 - mp.log(1 / mp.mpf(eps_c), 2)
    return max(mp.mpf(0), val), finv


def per_state_counts(pax, pbx, states, mu3, p, db, pec, qber, pap, fs, t):
    """Counts when each prepared state (H, V, D, A) has its own (mu1, mu2).

    X-basis click and error rates are the H/V average, Z-basis the D/A one.
    """
    pd = transmittance(db)
    N = mp.mpf(fs) * t
    rates = []
    for m1, m2 in states:
        D = [detect(m, pd, pec, pap) for m in (m1, m2, mu3)]
        e = [err(m, pd, pec, pap, qber, d) for m, d in zip((m1, m2, mu3), D)]
        rates.append((D, e))
    out = {}
    for basis, w, (a, b) in (("x", pax * pbx, (0, 1)), ("z", (1 - pax) * (1 - pbx), (2, 3))):
        D = [(rates[a][0][k] + rates[b][0][k]) / 2 for k in range(3)]
        e = [(rates[a][1][k] + rates[b][1][k]) / 2 for k in range(3)]
        sD = sum(pk * d for pk, d in zip(p, D))
        se = sum(pk * x for pk, x in zip(p, e))
        n = [w * pk * d * N for pk, d in zip(p, D)]
        mtot = se / sD * sum(n)
        out["n" + basis] = n
        out["m" + basis] = [mtot * pk * d / sD for pk, d in zip(p, D)]
    return out


def chain(pax, pbx, mu, p, db, pec, qber, pap, fs, t, eps_s, eps_c, beta=None):
    c = counts(pax, pbx, mu, p, db, pec, qber, pap, fs, t)
    return chain_from_counts(c, mu, p, eps_s, eps_c, beta)


def chain_from_counts(c, mu, p, eps_s, eps_c, beta=None):
    if beta is None:
        beta = mp.log(1 / (mp.mpf(eps_s) + mp.mpf(eps_c)))
    nxl, nxh = bounds(c["nx"], mu, p, beta)
    nzl, nzh = bounds(c["nz"], mu, p, beta)
    mzl, mzh = bounds(c["mz"], mu, p, beta)
    sx0 = s0(nxl, nxh, mu, p)
    sx1 = s1(nxl, nxh, sx0, mu, p)
    sz0 = s0(nzl, nzh, mu, p)
    sz1 = s1(nzl, nzh, sz0, mu, p)
    vz1 = max(mp.mpf(0), tau(1, mu, p) * (mzh[1] - mzl[2]) / (mu[1] - mu[2]))
    ratio = vz1 / sz1
    phi = min(mp.mpf("0.5"), ratio + gamma(eps_s, ratio, sz1, sx1))
    nx, mx = sum(c["nx"]), sum(c["mx"])
    lam, finv = lambda_ec(nx, mx / nx, eps_c)
    raw = sx0 + sx1 * (1 - h(phi)) - lam - 6 * mp.log(21 / mp.mpf(eps_s), 2) - mp.log(2 / mp.mpf(eps_c), 2)
    return dict(counts=c, nxl=nxl, nxh=nxh, nzl=nzl, nzh=nzh, mzl=mzl, mzh=mzh,
                sx0=sx0, sx1=sx1, sz0=sz0, sz1=sz1, vz1=vz1, phi=phi,
                qber_x=mx / nx, lam=lam, finv=finv, raw=raw,
                ell=max(0, int(mp.floor(raw))))


def show(label, x):
    print(f"{label:>28s} = {mp.nstr(x, 17)}")


if __name__ == "__main__":
    print("# single-formula values")
    show("10^-4.2", transmittance(42))
    d = detect(mp.mpf("0.5"), mp.mpf("1e-3"), mp.mpf("1e-6"), mp.mpf("1e-3"))
    show("D(0.5,1e-3,1e-6,1e-3)", d)
    show("e(...,qber=0.01)", err(mp.mpf("0.5"), mp.mpf("1e-3"), mp.mpf("1e-6"), mp.mpf("1e-3"), mp.mpf("0.01"), d))
    show("h(0.11)", h(mp.mpf("0.11")))
    beta = mp.log(1 / (mp.mpf("1e-9") + mp.mpf("1e-15")))
    show("beta", beta)
    show("delta+(1e6)", delta(mp.mpf(10)**6, beta, True))
    show("delta-(1e6)", delta(mp.mpf(10)**6, beta, False))
    third = mp.mpf(1) / 3
    mu0 = [mp.mpf("0.5"), mp.mpf("0.1"), mp.mpf(0)]
    show("tau0 (1/3, mu3=0)", tau(0, mu0, [third] * 3))
    show("tau1 (1/3, mu3=0)", tau(1, mu0, [third] * 3))
    show("fallback EC 1e6,0.02", mp.mpf("1.16") * 10**6 * h(mp.mpf("0.02")))
    lam, finv = lambda_ec(10**6, mp.mpf("0.02"), mp.mpf("1e-15"))
    show("finite EC 1e6,0.02", lam)
    show("  F^-1", finv)
    print("  scipy ppf cross-check:", binom.ppf(1e-15, 10**6, 0.98))
    lam, finv = lambda_ec(mp.mpf("123456.75"), mp.mpf("0.013"), mp.mpf("1e-15"))
    show("finite EC 123456.75,0.013", lam)
    show("  F^-1", finv)
    lam, finv = lambda_ec(mp.mpf("2.5e9"), mp.mpf("0.011"), mp.mpf("1e-15"))
    show("finite EC 2.5e9,0.011", lam)
    show("  F^-1", finv)
    print("  scipy ppf cross-check:", binom.ppf(1e-15, 2500000000, 0.989))

    for label, t in (("60 s", 60), ("1800 s", 1800)):
        print(f"# reference chain, 30 dB, {label}")
        mu = [mp.mpf("0.5"), mp.mpf("0.1"), mp.mpf("1e-9")]
        r = chain(mp.mpf("0.5"), mp.mpf("0.5"), mu, [third] * 3, 30, mp.mpf("1e-6"),
                  mp.mpf("0.01"), mp.mpf("1e-3"), mp.mpf("1e8"), t,
                  mp.mpf("1e-9"), mp.mpf("1e-15"))
        for key in ("nx", "mx", "nz", "mz"):
            for i, v in enumerate(r["counts"][key]):
                show(f"{key}[{i}]", v)
        for key in ("nxl", "nxh", "mzl", "mzh"):
            for i, v in enumerate(r[key]):
                show(f"{key}[{i}]", v)
        for key in ("sx0", "sx1", "sz0", "sz1", "vz1", "phi", "qber_x", "lam", "finv", "raw"):
            show(key, r[key])
        print(f"{'ell':>28s} = {r['ell']}")

    print("# beta = 0, noiseless channel, single-photon oracle")
    mu = [mp.mpf("0.5"), mp.mpf("0.1"), mp.mpf("1e-9")]
    r = chain(mp.mpf("0.5"), mp.mpf("0.5"), mu, [third] * 3, 30, 0, 0, 0,
              mp.mpf("1e8"), 1800, mp.mpf("1e-9"), mp.mpf("1e-15"), beta=0)
    pd = transmittance(30)
    truth = sum(mp.mpf("0.25") * third * m * mp.exp(-m) * pd * mp.mpf("1.8e11") for m in mu)
    show("sx1 (beta=0)", r["sx1"])
    show("poisson single-photon", truth)
    show("relative gap", (r["sx1"] - truth) / truth)

    for mu in ([mp.mpf("0.4"), mp.mpf("0.02"), mp.mpf("1e-9")],
               [mp.mpf("0.3"), mp.mpf("0.02"), mp.mpf("1e-9")]):
        r = chain(mp.mpf("0.5"), mp.mpf("0.5"), mu, [third] * 3, 30, 0, 0, 0,
                  mp.mpf("1e8"), 1800, mp.mpf("1e-9"), mp.mpf("1e-15"), beta=0)
        truth = sum(mp.mpf("0.25") * third * m * mp.exp(-m) * pd * mp.mpf("1.8e11") for m in mu)
        print(f"  mu = ({mp.nstr(mu[0], 3)}, {mp.nstr(mu[1], 3)}, 1e-9)")
        show("sx1 (beta=0)", r["sx1"])
        show("poisson single-photon", truth)
        show("relative gap", (r["sx1"] - truth) / truth)

    print("# per-state intensities, 36 dB, p_ec 1e-6, QBER_I 0.01, 1800 s")
    f = mp.mpf
    states = [(f("0.55"), f("0.09")), (f("0.45"), f("0.11")), (f("0.5"), f("0.09")), (f("0.55"), f("0.1"))]
    c = per_state_counts(f("0.5"), f("0.5"), states, f(0), [third] * 3, 36, f("1e-6"), f("0.01"),
                         f("1e-3"), f("1e8"), 1800)
    r = chain_from_counts(c, [f("0.45"), f("0.11"), f(0)], [third] * 3, f("1e-9"), f("1e-15"))
    for key in ("nx", "mx", "nz", "mz"):
        for i, v in enumerate(c[key]):
            show(f"{key}[{i}]", v)
    for key in ("sx0", "sx1", "vz1", "phi", "lam", "raw"):
        show(key, r[key])
    print(f"{'ell':>28s} = {r['ell']}")

    print("# sifting equivalence, pax 0.9, pbx 0.5")
    pax, pbx = f("0.9"), f("0.5")
    K = pax * pbx / ((1 - pax) * (1 - pbx))
    show("K", K)
    show("F", pax * pbx + (1 - pax) * (1 - pbx))
    show("F'", (1 + K) / (1 + mp.sqrt(K))**2)
    show("P_X", mp.sqrt(K) / (1 + mp.sqrt(K)))
