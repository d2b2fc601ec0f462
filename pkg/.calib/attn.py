import numpy as np, time
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=0.8))
split = chronological_split(g, (1, 1, 1))
base = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                      task="node", aggregator="attention", seed=0, lam=1e-2)
t0=time.perf_counter()
for name, kw in (("full_attn", {}),
                 ("erm_attn", dict(no_invariance=True, no_mask=True))):
    tests, vals, bests = [], [], []
    for s in (0,1,2):
        _, rep = tr.train(g, split, replace(base, seed=s, **kw))
        tests.append(rep.test_metric); vals.append(rep.val_metric); bests.append(rep.best_epoch)
    print(f"{name}: test={np.mean(tests):.3f}±{np.std(tests):.3f} {tests} "
          f"val={np.mean(vals):.3f} best={bests} ({time.perf_counter()-t0:.0f}s)", flush=True)
