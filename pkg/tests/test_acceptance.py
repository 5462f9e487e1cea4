"""End-to-end acceptance checks, one test per numbered criterion.

Each test records PASS/FAIL with a short detail line in
``conftest.ACCEPTANCE_RESULTS``; the terminal summary prints them in order.
"""

import hashlib
import time

import numpy as np

from conftest import ACCEPTANCE_RESULTS, oracle_sampling, scene
from rendersim import microops as mo
from rendersim import reference as ref
from rendersim.arch import (PEAK_MACS_PER_CYCLE, ArrayGeometry, configure_array,
                            ff_capacity_check, module_row)
from rendersim.cli import run_cli
from rendersim.ir import CGI, DGI, GEMM, GP, SORT, compile_pipeline, execute_graph, gemm_graph
from rendersim.scene import (PIPELINE_KINDS, Camera, HashGridRep, LowRankGridRep, Plane,
                             TextureMap, default_camera, default_sampling)
from rendersim.sim import simulate, sweep_scaling

INSTANCES = 1000


def _record(n, ok, detail):
    ACCEPTANCE_RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


# ---------------------------------------------------------------------------
# 1. kernel oracles
# ---------------------------------------------------------------------------


def _raster_oracle(clip, tris, w, h):
    """Brute force over every (triangle, pixel) pair, then argmin of depth."""
    sx, sy, sz = mo.screen_coords(np.where(clip[:, 3:4] > 0, clip, 1.0), w, h)
    py, px = np.mgrid[0:h, 0:w].astype(np.float64)
    depth = np.full((len(tris), h, w), np.inf)
    for t, v in enumerate(tris):
        if np.any(clip[v, 3] <= 0):
            continue
        xs, ys = sx[v], sy[v]
        if (xs[1] - xs[0]) * (ys[2] - ys[0]) - (ys[1] - ys[0]) * (xs[2] - xs[0]) == 0:
            continue
        inside, z, _ = mo.triangle_coverage(xs, ys, sz[v], clip[v, 3], px + 0.5, py + 0.5)
        depth[t][inside] = z[inside]
    if len(tris) == 0:
        return np.full((h, w), mo.NONE)
    best = np.argmin(depth, axis=0)  # first minimum: lower index wins ties
    return np.where(np.isinf(depth.min(axis=0)), mo.NONE, best)


def _check_raster(rng):
    w, h = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    cam = Camera.look_at((0.5, 0.5, 2.2), (0.5, 0.5, 0.5), width=w, height=h, near=1.0, far=2.4)
    nt = int(rng.integers(0, 5))
    verts = rng.uniform(-0.2, 1.2, size=(3 * nt, 3))
    if nt and rng.random() < 0.2:
        verts[1] = verts[0]  # zero-area triangle
    if nt > 1 and rng.random() < 0.2:
        verts[3:6] = verts[0:3]  # exact depth tie
    tris = np.arange(3 * nt).reshape(-1, 3)
    clip = mo.space_convert(verts, cam)
    got = mo.rasterize_meshes(clip, tris, (w, h)).index
    return np.array_equal(got, _raster_oracle(clip.clip, tris, w, h))


def _insertion_sort(keys):
    out = []
    for i, k in enumerate(keys):
        j = len(out)
        while j > 0 and keys[out[j - 1]] > k:
            j -= 1
        out.insert(j, i)
    return out


def _check_sort(rng):
    n = int(rng.integers(0, 33))
    keys = rng.integers(0, 6, size=n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
    return mo.patch_sort(keys).tolist() == _insertion_sort(keys.tolist())


def _check_gemm(rng):
    m, k, n = (int(x) for x in rng.integers(1, 7, size=3))
    x, wt, b = rng.normal(size=(m, k)), rng.normal(size=(k, n)), rng.normal(size=n)
    act = ("linear", "relu")[int(rng.integers(0, 2))]
    want = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for kk in range(k):
                acc += x[i, kk] * wt[kk, j]
            acc += b[j]
            want[i, j] = max(acc, 0.0) if act == "relu" else acc
    return np.array_equal(mo.gemm(x, wt, b, act), want)


def _check_grids(rng):
    levels = int(rng.integers(1, 4))
    res = sorted(rng.choice(np.arange(2, 40), size=levels, replace=False).tolist())
    tsize = 1 << int(rng.integers(1, 7))
    grid = HashGridRep(res, rng.normal(size=(levels, tsize, 2)))
    r = int(rng.integers(2, 6))
    planes = LowRankGridRep([Plane(ax, rng.normal(size=(r, r, 3)))
                             for ax in ((0, 1), (0, 2), (1, 2))],
                            ("sum", "product")[int(rng.integers(0, 2))])
    tex = TextureMap(rng.uniform(size=(int(rng.integers(1, 6)), int(rng.integers(1, 6)), 2)))
    p = rng.uniform(-0.1, 1.1, size=3)
    worst = max(
        np.max(np.abs(mo.combined_grid_index(grid, p) - ref._hash_features(grid, p))),
        np.max(np.abs(mo.decomposed_grid_index(planes, p) - ref._plane_features(planes, p))),
        np.max(np.abs(mo.texture_index(tex, p[:2]) - ref._bilinear(tex, p[0], p[1]))),
    )
    return worst <= 1e-6


def _check_blend(rng):
    s = int(rng.integers(1, 20))
    alphas = rng.uniform(size=s) ** rng.uniform(0.2, 3.0)
    rgb, t = mo.volume_blend(np.ones((s, 3)), alphas, early_termination=False)
    weights = []
    trans = 1.0
    for a in alphas:
        weights.append(a * trans)
        trans *= 1.0 - a
    return abs(rgb[0] + t - 1.0) <= 1e-6 and abs(sum(weights) + trans - 1.0) <= 1e-6


def test_criterion_1_kernel_oracles():
    checks = {"raster": _check_raster, "patch_sort": _check_sort, "gemm": _check_gemm,
              "grid indexers": _check_grids, "blend": _check_blend}
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = {}
    for name, fn in checks.items():
        failures[name] = sum(0 if fn(rng) else 1 for _ in range(INSTANCES))
    elapsed = time.perf_counter() - t0
    ok = not any(failures.values()) and elapsed < 60.0
    bad = ", ".join(f"{k}: {v}" for k, v in failures.items() if v) or "no mismatches"
    _record(1, ok, f"{INSTANCES} instances x {len(checks)} kernels, {bad}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. pipelines vs oracle
# ---------------------------------------------------------------------------


def test_criterion_2_pipelines_match_oracle():
    cam = default_camera("tiny")
    sampling = oracle_sampling("tiny")
    t0 = time.perf_counter()
    worst = {}
    for kind in PIPELINE_KINDS:
        worst[kind] = 0.0
        for seed in range(20):
            a = scene(kind, seed)
            got = execute_graph(compile_pipeline(kind, a, cam, sampling), a, cam)
            want = ref.render_reference(kind, a, cam, sampling)
            worst[kind] = max(worst[kind], float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1e-5 for v in worst.values()) and elapsed < 300.0
    _record(2, ok, f"6 pipelines x 20 scenes, max diff {max(worst.values()):.2e}, {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 3. module-state table
# ---------------------------------------------------------------------------

MODULE_TABLE = {
    GP: ("Off", "Off", "Rasterization Control", "Geometry Representation", "Vector Mode",
         "Z-Buffer"),
    CGI: ("On", "Horizontally On", "Grid Control", "Grid Features", "Index Function", "Off"),
    DGI: ("On", "Fully On", "Grid Control", "Grid Features", "Index Function", "Off"),
    SORT: ("Off", "Off", "Sorting Control", "Sorting Elements", "Comparator", "Off"),
    GEMM: ("On", "Off", "GEMM Control", "Model Weights", "Adder Tree Mode", "Output Features"),
}


def test_criterion_3_module_states():
    wrong = [k for k, row in MODULE_TABLE.items() if module_row(configure_array(k)) != row]
    modes = all(configure_array(k).network.mode == ("systolic" if k == GEMM else "pipeline")
                for k in MODULE_TABLE)
    ok = not wrong and modes
    _record(3, ok, f"5 rows x 6 columns, mismatched rows: {wrong or 'none'}")
    assert ok


# ---------------------------------------------------------------------------
# 4. PE / SRAM scaling sweep
# ---------------------------------------------------------------------------

SWEEP_TARGETS = {(2, 1): 1.1, (2, 2): 2.0, (4, 2): 2.2, (2, 4): 2.0, (4, 4): 4.0,
                 (1, 2): 1.0, (1, 4): 1.0, (4, 1): 1.1}


def test_criterion_4_scaling_sweep():
    t0 = time.perf_counter()
    graph = compile_pipeline("hash-grid", scene("hash-grid", 0, "medium"),
                             default_camera("medium"), default_sampling("medium"))
    cells = {(c.pe_scale, c.sram_scale): c for c in sweep_scaling(graph)}
    elapsed = time.perf_counter() - t0
    misses = {k: round(cells[k].speedup, 3) for k, want in SWEEP_TARGETS.items()
              if abs(cells[k].speedup - want) > 0.15 * want}
    diag = [cells[(s, s)].speed_per_area for s in (1, 2, 4)]
    off = max(c.speed_per_area for k, c in cells.items() if k[0] != k[1])
    ok = not misses and min(diag) > off and elapsed < 120.0
    table = " ".join(f"{k[0]}x{k[1]}={cells[k].speedup:.2f}" for k in sorted(cells))
    _record(4, ok, f"{table}; diagonal speed/area >= {min(diag):.3f} vs off-diagonal "
                   f"<= {off:.3f}; misses {misses or 'none'}; {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 5. roofline
# ---------------------------------------------------------------------------


def test_criterion_5_roofline():
    violations = []
    for scale in ("tiny", "small", "medium"):
        for kind in PIPELINE_KINDS:
            g = compile_pipeline(kind, scene(kind, 0, scale), default_camera(scale),
                                 default_sampling(scale))
            for n in simulate(g).nodes:
                if n.cycles < n.compute_lower_bound or n.cycles < n.memory_lower_bound:
                    violations.append(f"{scale}/{kind}/{n.name}")
    ref_node = simulate(gemm_graph(1024, 64, 64)).nodes[0]
    err = abs(ref_node.cycles - 4529) / 4529
    ok = not violations and ref_node.bound == "memory" and err <= 0.05
    _record(5, ok, f"bound violations: {violations or 'none'}; GEMM 1024x64x64 "
                   f"{ref_node.cycles} cycles ({ref_node.bound}-bound, {err:.1%} from 4529)")
    assert ok


# ---------------------------------------------------------------------------
# 6. peak throughput and FF capacity
# ---------------------------------------------------------------------------


def test_criterion_6_peak_and_capacity():
    cfg = configure_array(CGI, ArrayGeometry())
    at, over = ff_capacity_check(cfg, 4096), ff_capacity_check(cfg, 4097)
    ok = PEAK_MACS_PER_CYCLE == 1024 and at.fits and not over.fits and over.tiles == 2
    _record(6, ok, f"peak {PEAK_MACS_PER_CYCLE} MACs/cycle; 4096 B/PE fits={at.fits}, "
                   f"4097 B/PE fits={over.fits} ({over.tiles} tiles)")
    assert ok


# ---------------------------------------------------------------------------
# 7. reproducibility
# ---------------------------------------------------------------------------

RUNS = [
    ["render", "--pipeline", "gaussian", "--seed", "3", "--oracle"],
    ["simulate", "--pipeline", "hybrid", "--scale", "small"],
    ["sweep", "--scale", "small"],
]


def _digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_criterion_7_reruns_are_byte_identical(tmp_path):
    digests = []
    codes = []
    for _ in range(3):
        for i, argv in enumerate(RUNS):
            codes.append(run_cli(argv + ["--out", str(tmp_path / f"run{i}")]))
        digests.append(_digest(tmp_path))
    ok = all(c == 0 for c in codes) and len(set(digests)) == 1
    _record(7, ok, f"3 reruns of render/simulate/sweep, checksums {digests[0][:12]}.. "
                   f"{'identical' if ok else 'differ'}")
    assert ok
