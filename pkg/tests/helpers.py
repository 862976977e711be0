"""Synthetic fixtures shared by the tests."""
import numpy as np

from epinomic.datahub import dataset_from_arrays

CODES = ("A01", "C10", "G47", "I55-56", "Q86")


def make_dataset(G=2, K=3, seed=0, name="FX", exogenous=False):
    """Small valid synthetic dataset with ``G`` patches and ``K`` sectors."""
    rng = np.random.default_rng(seed)
    codes = CODES[:K]
    pop = rng.uniform(2e4, 6e4, size=(17, G))
    nat = pop.sum(1)

    def reciprocal(scale):
        c = rng.uniform(0.2, 1.0, size=(17, 17))
        c = 0.5 * (c + c.T) * np.outer(nat, nat) / nat.sum()
        return scale * c / nat[:, None]

    home, school, lpub, lpriv = reciprocal(1.5), reciprocal(1.0), reciprocal(0.8), reciprocal(0.6)
    work = {c: rng.uniform(0.0, 0.3, size=(17, 17)) for c in codes}
    t_act = pop[3:14].sum(0) * 0.9
    commuters = np.diag(0.8 * t_act)
    for g in range(G):
        for h in range(G):
            if g != h:
                commuters[g, h] = 0.1 * t_act[g] / max(G - 1, 1)
    Z = rng.uniform(50, 200, size=(K, K))
    c0 = rng.uniform(100, 300, size=K)
    f0 = rng.uniform(100, 300, size=K)
    x0 = Z.sum(1) + c0 + f0
    l0 = 0.3 * x0
    lmc = rng.uniform(0.5, 1.5, size=(G, K))
    lmc /= lmc.sum(1, keepdims=True)
    crit = np.zeros((K, K))
    for l in range(K):
        crit[l, l] = 1.0
        crit[(l + 1) % K, l] = 0.5
    share = rng.uniform(0.5, 1.5, size=K)
    sectors = {
        "code": codes,
        "f_workplace": rng.uniform(0.1, 0.5, size=K),
        "f_telework": rng.uniform(0.0, 0.4, size=K),
        "lav_c": np.r_[0.0, np.ones(K - 1)],
        "lav_d": rng.uniform(0.0, 0.8, size=K),
        "fp": rng.uniform(0.2, 0.9, size=K),
        "inventory_days": rng.uniform(10, 40, size=K),
        "employee_share": share / share.sum(),
    }
    split = None
    if exogenous:
        split = rng.uniform(0.1, 1.0, size=(K, 4))
        split /= split.sum(1, keepdims=True)
    return dataset_from_arrays(name, pop, commuters, home, school, lpub, lpriv, work, sectors, lmc, Z,
                               x0, c0, f0, l0, crit, active_population=t_act, exogenous_split=split)

# acceptance results, criterion number -> (passed, detail); printed by conftest
ACCEPTANCE = {}
