import json, time
import numpy as np
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

SEEDS = (0, 1, 2)

def run(shift, aggregator="sum", **kw):
    g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=shift))
    split = chronological_split(g, (1, 1, 1))
    base = dict(hidden_dim=16, epochs=100, sample_count=100, lam=1e-2,
                task="node", aggregator=aggregator)
    base.update(kw)
    cfg = tr.TrainConfig(**base)
    tests, vals = [], []
    for s in SEEDS:
        _, rep = tr.train(g, split, replace(cfg, seed=s))
        tests.append(rep.test_metric); vals.append(rep.val_metric)
    return dict(test_mean=float(np.mean(tests)), test_std=float(np.std(tests)),
                tests=tests, vals=vals)

results = {}
t0 = time.perf_counter()
grid = [
    ("full_08",    dict(shift=0.8)),
    ("erm_08",     dict(shift=0.8, no_invariance=True, no_mask=True)),
    ("noinv_08",   dict(shift=0.8, no_invariance=True)),
    ("nomask_08",  dict(shift=0.8, no_mask=True)),
    ("lam1e4_08",  dict(shift=0.8, lam=1e-4)),
    ("lam1_08",    dict(shift=0.8, lam=1.0)),
    ("full_04",    dict(shift=0.4)),
    ("erm_04",     dict(shift=0.4, no_invariance=True, no_mask=True)),
]
for name, kw in grid:
    results[name] = run(**kw)
    results[name]["elapsed"] = round(time.perf_counter() - t0, 1)
    print(name, json.dumps(results[name]), flush=True)
json.dump(results, open(".calib/results_sum.json", "w"), indent=2)
