"""Random-sample certification of the algebraic bounds on the normal-bundle terms.

With the ambient curvature terms dropped (constant curvature), the checks are

* ``matrix.principal_mixing``:  sum_b <h_ring, A_b>^2 + sum_b |[h_ring, A_b]|^2 <= 2 |h_ring|^2 |A^-|^2
* ``matrix.orthogonal_block``:  sum <A^-_ij, A^-_pq>^2 + |R_perp restricted to A^-|^2 <= (3/2) |A^-|^4
* ``matrix.commutator_gram``:   sum_{b,c} |[A_b, A_c]|^2 + sum_{b,c} S_bc^2 <= (3/2) S^2
* ``matrix.combined``:          the sum of the first two.

The second and third coincide once the ambient terms vanish; both are
reported because they are stated separately.
"""
from __future__ import annotations

import time

import numpy as np

from ..parallel import chunked_map
from ..sff import batch_invariants, random_tensor_stack
from .report import VerificationReport

MATRIX_IDS = ("matrix.principal_mixing", "matrix.orthogonal_block", "matrix.commutator_gram", "matrix.combined")
DEFAULT_DIMS = tuple((n, m) for n in (8, 12, 16) for m in (2, 3, 5))
CHUNK = 500


def matrix_sides(inv: dict[str, np.ndarray]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """(lhs, rhs) of each matrix bound from :func:`batch_invariants` output."""
    p2, hr2 = inv["p2"], inv["hring2"]
    mix_l = inv["ip_h"] + inv["comm_h"]
    mix_r = 2.0 * hr2 * p2
    blk_l = inv["s2_minus"] + inv["comm_minus"]
    blk_r = 1.5 * p2 * p2
    gram_l = inv["comm_minus"] + inv["s2_minus"]
    comb_l = inv["s2_minus"] + inv["comm_minus"] + inv["comm_h"]
    comb_r = 1.5 * p2 * p2 + 2.0 * hr2 * p2
    return {
        "matrix.principal_mixing": (mix_l, mix_r),
        "matrix.orthogonal_block": (blk_l, blk_r),
        "matrix.commutator_gram": (gram_l, blk_r),
        "matrix.combined": (comb_l, comb_r),
    }


def sample_blocks(seed: int, n: int, m: int, start: int, stop: int) -> np.ndarray:
    """Samples ``start..stop-1`` of the stream for (n, m); sample i uses rng([seed, n, m, i])."""
    return random_tensor_stack([[seed, n, m, i] for i in range(start, stop)], n, m)


def check_matrix_lemmas(samples: int = 100_000, seed: int = 0, dims=DEFAULT_DIMS, threads: int | None = None,
                        rows: list | None = None) -> list[VerificationReport]:
    t0 = time.perf_counter()
    per_id = {k: {"viol": 0, "min": np.inf, "worst": None, "rel_min": np.inf} for k in MATRIX_IDS}
    for n, m in dims:
        def work(a, b, n=n, m=m):
            B = sample_blocks(seed, n, m, a, b)
            inv = batch_invariants(B, allow_degenerate=True)
            out = {}
            for k, (lhs, rhs) in matrix_sides(inv).items():
                slack = rhs - lhs
                j = int(np.argmin(slack))
                scale = inv["a2"] ** 2
                rel = np.where(scale > 0, slack / np.where(scale > 0, scale, 1.0), 0.0)
                out[k] = (int(np.count_nonzero(slack < 0)), j + a, float(slack[j]), float(lhs[j]), float(rhs[j]),
                          float(rel.min()), B[j], inv["p2"][j])
                if rows is not None:
                    out.setdefault("_rows", []).extend(
                        (k, n, m, 1.0, 0.0, float(inv["h2"][i]), float(inv["p2"][i]), float(lhs[i]), float(rhs[i]),
                         float(slack[i]), bool(slack[i] >= 0)) for i in range(b - a))
            return out

        for res in chunked_map(work, samples, CHUNK, threads):
            if rows is not None:
                rows.extend(res.pop("_rows", []))
            for k, (viol, idx, smin, lhs, rhs, rel, blocks, p2) in res.items():
                st = per_id[k]
                st["viol"] += viol
                st["rel_min"] = min(st["rel_min"], rel)
                if smin < st["min"]:
                    st["min"] = smin
                    st["worst"] = {"n": n, "m": m, "seed": seed, "index": idx, "p2": float(p2), "lhs": lhs,
                                   "rhs": rhs, "slack": smin, "tensor": blocks.ravel().tolist()}
    ms = int(round((time.perf_counter() - t0) * 1000))
    total = samples * len(dims)
    return [
        VerificationReport(k, total, st["viol"], float(st["min"]), st["worst"], ms, False,
                           0, {"relation": "<=", "dims": [list(d) for d in dims],
                               "min_slack_relative_to_A4": float(st["rel_min"])})
        for k, st in per_id.items()
    ]
