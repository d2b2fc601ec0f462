import numpy as np, time
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

t0=time.perf_counter()
g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=0.8,
                                               split_fractions=(0.5, 0.2, 0.3)))
split = chronological_split(g, (1, 1, 1))
base = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                      task="node", seed=0, aggregator="sum")
for tag, kw in (("vbt lam1e-2", dict(lam=1e-2, variant_backprop_theta=True)),
                ("lam 1e-1", dict(lam=1e-1)),
                ("lam 1", dict(lam=1.0)),
                ("vbt lam1e-1", dict(lam=1e-1, variant_backprop_theta=True))):
    tests, vals, bests = [], [], []
    for s in (0,1,2):
        _, rep = tr.train(g, split, replace(base, seed=s, **kw))
        tests.append(rep.test_metric); vals.append(rep.val_metric); bests.append(rep.best_epoch)
    print(f"{tag}: test={np.mean(tests):.3f}±{np.std(tests):.3f} {tests} "
          f"val={np.mean(vals):.3f} best={bests} ({time.perf_counter()-t0:.0f}s)", flush=True)
