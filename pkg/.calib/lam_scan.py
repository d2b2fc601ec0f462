import numpy as np, time, json
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=0.8))
split = chronological_split(g, (1, 1, 1))
base = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                      task="node", aggregator="sum", seed=0)
t0=time.perf_counter()
for lam in (0.0, 1e-4, 1e-1, 1.0, 10.0):
    tests, vals, bests = [], [], []
    for s in (0,1,2):
        _, rep = tr.train(g, split, replace(base, seed=s, lam=lam))
        tests.append(rep.test_metric); vals.append(rep.val_metric); bests.append(rep.best_epoch)
    print(f"lam={lam:g}: test={np.mean(tests):.3f}±{np.std(tests):.3f} {tests} "
          f"val={np.mean(vals):.3f} best={bests} ({time.perf_counter()-t0:.0f}s)", flush=True)
