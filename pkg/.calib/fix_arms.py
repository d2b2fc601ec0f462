import numpy as np, time
from dataclasses import replace
from sild import synthetic as syn, training as tr
from sild.graphstore import chronological_split

t0=time.perf_counter()
def arms(tag, gen_kw, cfg_kw):
    g = syn.gen_node_synthetic(syn.NodeSynthConfig(seed=0, shift=0.8, **gen_kw))
    split = chronological_split(g, (1, 1, 1))
    base = tr.TrainConfig(hidden_dim=16, epochs=100, sample_count=100,
                          task="node", seed=0, lam=1e-2, **cfg_kw)
    for name, kw in (("full", {}), ("erm", dict(no_invariance=True, no_mask=True))):
        tests, vals, bests = [], [], []
        for s in (0,1,2):
            _, rep = tr.train(g, split, replace(base, seed=s, **kw))
            tests.append(rep.test_metric); vals.append(rep.val_metric); bests.append(rep.best_epoch)
        print(f"{tag} {name}: test={np.mean(tests):.3f}±{np.std(tests):.3f} {tests} "
              f"val={np.mean(vals):.3f} best={bests} ({time.perf_counter()-t0:.0f}s)", flush=True)

arms("attention", {}, dict(aggregator="attention"))
arms("sum val200", dict(split_fractions=(0.5, 0.2, 0.3)), dict(aggregator="sum"))
