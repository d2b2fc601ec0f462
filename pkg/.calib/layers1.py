import numpy as np, time
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

t0=time.perf_counter()
for shift in (0.8, 0.0):
    g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=shift))
    split = chronological_split(g, (1, 1, 1))
    base = tr.TrainConfig(hidden_dim=16, layers=1, epochs=100, sample_count=100,
                          task="node", aggregator="sum", seed=0, lam=1e-2)
    for name, kw in (("full", {}), ("erm", dict(no_invariance=True, no_mask=True)),
                     ("nomask", dict(no_mask=True)), ("noinv", dict(no_invariance=True))):
        if shift == 0.0 and name != "erm":
            continue
        tests, vals, bests = [], [], []
        for s in (0,1,2):
            _, rep = tr.train(g, split, replace(base, seed=s, **kw))
            tests.append(rep.test_metric); vals.append(rep.val_metric); bests.append(rep.best_epoch)
        print(f"shift={shift} {name}: test={np.mean(tests):.3f}±{np.std(tests):.3f} {tests} "
              f"val={np.mean(vals):.3f} best={bests} ({time.perf_counter()-t0:.0f}s)", flush=True)
