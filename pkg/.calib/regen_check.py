import numpy as np, time
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

t0=time.perf_counter()
erm = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                     task="node", aggregator="sum", seed=0,
                     no_invariance=True, no_mask=True)
full = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                      task="node", aggregator="sum", seed=0, lam=1e-2)
for shift, arms in ((0.0, [("erm", erm)]),
                    (0.4, [("erm", erm), ("full", full)]),
                    (0.8, [("erm", erm), ("full", full)])):
    g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=shift))
    split = chronological_split(g, (1, 1, 1))
    for name, base in arms:
        tests, vals = [], []
        for s in (0,1,2):
            _, rep = tr.train(g, split, replace(base, seed=s))
            tests.append(rep.test_metric); vals.append(rep.val_metric)
        print(f"shift={shift} {name}: test={np.mean(tests):.3f}±{np.std(tests):.3f} {tests} "
              f"val={np.mean(vals):.3f} ({time.perf_counter()-t0:.0f}s)", flush=True)
