from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class RwgBasis:
    """
    RWG current basis on interior edges plus the pulse charge basis on patches.

    RWG function n lives on `plus_triangle[n]` and `minus_triangle[n]`:
        Λ_n(r) = (r - v+) / (2 A+)   on T+
        Λ_n(r) = (v- - r) / (2 A-)   on T-
    so ∇·Λ_n = +1/A+ and -1/A- and the incidence matrix D (p x e) is integer.
    Patches are the scene triangles, in scene order.
    """

    edge_vertices: np.ndarray  # (e, 2)
    plus_triangle: np.ndarray  # (e,)
    minus_triangle: np.ndarray  # (e,)
    plus_free_vertex: np.ndarray  # (e,)
    minus_free_vertex: np.ndarray  # (e,)
    edge_length: np.ndarray  # (e,)
    incidence: sp.csr_matrix  # (p, e) int8
    edge_object: np.ndarray  # (e,)
    patch_object: np.ndarray  # (p,)
    edge_ranges: Tuple[Tuple[int, int], ...]
    patch_ranges: Tuple[Tuple[int, int], ...]
    # local slot a of triangle t is the edge opposite its vertex a
    triangle_edges: np.ndarray  # (p, 3) RWG index or -1 for a boundary edge
    triangle_signs: np.ndarray  # (p, 3) +1 on T+, -1 on T-, 0 on boundary
    patch_component: np.ndarray  # (p,) connected component label

    @property
    def e(self) -> int:
        return int(self.plus_triangle.shape[0])

    @property
    def p(self) -> int:
        return int(self.patch_object.shape[0])

    @property
    def n_objects(self) -> int:
        return len(self.patch_ranges)

    @property
    def n_components(self) -> int:
        return int(self.patch_component.max()) + 1 if self.p else 0

    @property
    def D(self) -> np.ndarray:
        return self.incidence.toarray()

    def charge_reduction(self, neutral: bool) -> Tuple[np.ndarray, sp.csr_matrix]:
        """
        Map reduced patch charges onto all patches, ρ = B ρ̃.

        With `neutral` the last patch of every connected component is dropped
        and carries minus the sum of the other charges of its component.
        Returns the kept patch indices and B (p x p').
        """
        p = self.p
        if not neutral:
            return np.arange(p), sp.identity(p, format="csr", dtype=np.int8)

        dropped = np.zeros(p, dtype=bool)
        for comp in range(self.n_components):
            members = np.flatnonzero(self.patch_component == comp)
            dropped[members[-1]] = True
        kept = np.flatnonzero(~dropped)
        column = np.full(p, -1, dtype=np.int64)
        column[kept] = np.arange(kept.size)

        rows = list(kept)
        cols = list(range(kept.size))
        vals = [1] * kept.size
        for t in np.flatnonzero(dropped):
            siblings = kept[self.patch_component[kept] == self.patch_component[t]]
            rows.extend([t] * siblings.size)
            cols.extend(column[siblings])
            vals.extend([-1] * siblings.size)
        B = sp.csr_matrix(
            (np.asarray(vals, dtype=np.int8), (np.asarray(rows), np.asarray(cols))),
            shape=(p, kept.size),
        )
        return kept, B
