"""
Dense assembly of the Wick-rotated EFIE and A-EFIE matrices.

Every double surface integral is evaluated on the same set of quadrature
points, so each matrix is a contraction of one point-kernel matrix K with
sparse test/trial operators:

    V = Σ_c L_c K L_cᵀ,   P = H K Hᵀ,   S = L_div K L_divᵀ

K is formed in row chunks and never stored whole. Triangle pairs closer than
NEAR_FACTOR × the larger triangle's longest edge are near. Same-object near
pairs use the smooth kernel remainder in K plus a κ-independent analytic
correction for 1/(4πR), precomputed once. Cross-object near pairs keep the full
kernel and are re-integrated with the near rule at each κ, in Z and in ∂Z alike.
"""

import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from casimir_bem.core.config import settings
from casimir_bem.core.errors import AssemblyError, InvalidArgumentError, UnknownObjectError
from casimir_bem.models.basis import RwgBasis
from casimir_bem.models.scene import TriScene
from casimir_bem.models.system_matrix import (
    BlockLayout,
    Formulation,
    GradientMatrix,
    Precision,
    SystemMatrix,
)
from casimir_bem.services.basis import build_basis
from casimir_bem.services.kernels import kernel_derivative, kernel_g, point_kernel, static_moments
from casimir_bem.services.triangle_rules import triangle_rule

logger = logging.getLogger(__name__)

PrecisionLike = Union[Precision, str]


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _unit(direction: Sequence[float]) -> np.ndarray:
    u = np.asarray(direction, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise InvalidArgumentError("direction must be a nonzero vector")
    return u / norm


class BemAssembler:
    """
    κ-independent assembly data for one scene.

    Instances are read-only after construction and may be shared between
    threads evaluating different κ nodes.
    """

    def __init__(
        self,
        scene: TriScene,
        basis: Optional[RwgBasis] = None,
        quadrature_order: Optional[int] = None,
        near_quadrature_order: Optional[int] = None,
        near_factor: Optional[float] = None,
        chunk_size: Optional[int] = None,
        charge_neutral: Optional[bool] = None,
    ):
        self.scene = scene
        self.basis = basis if basis is not None else build_basis(scene)
        self.rule = triangle_rule(quadrature_order or settings.QUADRATURE_ORDER)
        self.near_rule = triangle_rule(near_quadrature_order or settings.NEAR_QUADRATURE_ORDER)
        self.near_factor = near_factor if near_factor is not None else settings.NEAR_FACTOR
        self.chunk_size = chunk_size or settings.CHUNK_SIZE
        self.charge_neutral = (
            settings.CHARGE_NEUTRAL if charge_neutral is None else charge_neutral
        )

        self._build_point_operators()
        self._build_near_corrections()
        self.kept_patches, self.charge_map = self.basis.charge_reduction(self.charge_neutral)
        self._cast: Dict[np.dtype, dict] = {
            np.dtype(dt): self._operators_in(np.dtype(dt)) for dt in (np.float32, np.float64)
        }

        logger.debug(
            "assembler ready: %d points, %d near and %d cross-object near triangle pairs, e=%d, p=%d",
            self.points.shape[0],
            int(self._near.sum()),
            int(self._cross_t.size),
            self.basis.e,
            self.basis.p,
        )

    # -- construction ---------------------------------------------------

    def _build_point_operators(self) -> None:
        scene, basis, rule = self.scene, self.basis, self.rule
        q = rule.size
        n_tri = scene.n_triangles
        self.points = rule.points(scene.corners).reshape(-1, 3)
        self.point_triangle = np.repeat(np.arange(n_tri), q)
        self.point_object = scene.object_id[self.point_triangle]
        n_points = self.points.shape[0]
        w = rule.weights

        e = basis.e
        local = np.arange(q)
        rows = np.repeat(np.arange(e), q)
        plus_cols = (basis.plus_triangle[:, None] * q + local).ravel()
        minus_cols = (basis.minus_triangle[:, None] * q + local).ravel()
        plus_free = scene.vertices[np.repeat(basis.plus_free_vertex, q)]
        minus_free = scene.vertices[np.repeat(basis.minus_free_vertex, q)]
        weights = np.tile(w, e)

        # Λ·ω on T+: w (x - v+) / 2 ; on T-: w (v- - x) / 2
        plus_vals = 0.5 * weights[:, None] * (self.points[plus_cols] - plus_free)
        minus_vals = 0.5 * weights[:, None] * (minus_free - self.points[minus_cols])
        all_rows = np.concatenate([rows, rows])
        all_cols = np.concatenate([plus_cols, minus_cols])
        shape = (e, n_points)
        self._L = [
            sp.csr_matrix(
                (np.concatenate([plus_vals[:, c], minus_vals[:, c]]), (all_rows, all_cols)),
                shape=shape,
            )
            for c in range(3)
        ]
        self._Ldiv = sp.csr_matrix(
            (np.concatenate([weights, -weights]), (all_rows, all_cols)), shape=shape
        )
        self._H = sp.csr_matrix(
            (np.tile(w, n_tri), (self.point_triangle, np.arange(n_points))),
            shape=(n_tri, n_points),
        )

    def _edge_pairs(self, t_idx: np.ndarray, s_idx: np.ndarray) -> List[tuple]:
        """
        For every local edge a of t and b of s that carries an RWG function:
        (pair mask, row edges, column edges, sign product, free vertex on t, free vertex on s).
        """
        scene, basis = self.scene, self.basis
        out = []
        for a in range(3):
            m = basis.triangle_edges[t_idx, a]
            sa = basis.triangle_signs[t_idx, a].astype(np.float64)
            va = scene.vertices[scene.triangles[t_idx, a]]
            for b in range(3):
                n = basis.triangle_edges[s_idx, b]
                sb = basis.triangle_signs[s_idx, b].astype(np.float64)
                vb = scene.vertices[scene.triangles[s_idx, b]]
                ok = (m >= 0) & (n >= 0)
                out.append((ok, m[ok], n[ok], (sa * sb)[ok], va[ok], vb[ok]))
        return out

    def _scatter_edges(self, edge_pairs, values) -> np.ndarray:
        e = self.basis.e
        if not edge_pairs:
            return np.zeros((e, e))
        rows = np.concatenate([p[1] for p in edge_pairs])
        cols = np.concatenate([p[2] for p in edge_pairs])
        return sp.coo_matrix((np.concatenate(values), (rows, cols)), shape=(e, e)).toarray()

    def _build_near_corrections(self) -> None:
        scene = self.scene
        n_tri = scene.n_triangles
        corners = scene.corners
        areas = scene.areas
        size = np.linalg.norm(corners - np.roll(corners, 1, axis=1), axis=2).max(axis=1)

        # Near means closer than NEAR_FACTOR × the larger of the two triangles.
        pairs = cKDTree(scene.centroids).query_pairs(
            self.near_factor * float(size.max()), output_type="ndarray"
        ).reshape(-1, 2)
        gap = np.linalg.norm(scene.centroids[pairs[:, 0]] - scene.centroids[pairs[:, 1]], axis=1)
        pairs = pairs[gap < self.near_factor * np.maximum(size[pairs[:, 0]], size[pairs[:, 1]])]
        same = scene.object_id[pairs[:, 0]] == scene.object_id[pairs[:, 1]]
        cross, pairs = pairs[~same], pairs[same]

        diag = np.arange(n_tri)
        t_idx = np.concatenate([diag, pairs[:, 0], pairs[:, 1]])
        s_idx = np.concatenate([diag, pairs[:, 1], pairs[:, 0]])

        near = np.zeros((n_tri, n_tri), dtype=bool)
        near[t_idx, s_idx] = True
        self._near = near

        G0, Gr, Grp, Grr = static_moments(corners[t_idx], corners[s_idx], self.near_rule)
        area_prod = areas[t_idx] * areas[s_idx]
        self._dP = sp.coo_matrix(
            (G0 / area_prod, (t_idx, s_idx)), shape=(n_tri, n_tri)
        ).toarray()

        edge_pairs = self._edge_pairs(t_idx, s_idx)
        v_vals, s_vals = [], []
        for ok, _, _, sign, va, vb in edge_pairs:
            moment = (
                Grr[ok]
                - np.einsum("ij,ij->i", vb, Gr[ok])
                - np.einsum("ij,ij->i", va, Grp[ok])
                + np.einsum("ij,ij->i", va, vb) * G0[ok]
            )
            v_vals.append(sign * moment / (4.0 * area_prod[ok]))
            s_vals.append(sign * G0[ok] / area_prod[ok])
        self._dV = self._scatter_edges(edge_pairs, v_vals)
        self._dS = self._scatter_edges(edge_pairs, s_vals)

        # Cross-object near pairs, both orderings: the κ-dependent kernel is
        # smooth there, but needs the finer rule.
        self._cross_t = np.concatenate([cross[:, 0], cross[:, 1]])
        self._cross_s = np.concatenate([cross[:, 1], cross[:, 0]])
        self._cross_edges = self._edge_pairs(self._cross_t, self._cross_s)
        self._cross_points = [
            (rule, rule.points(corners[self._cross_t]), rule.points(corners[self._cross_s]), weight)
            for rule, weight in ((self.near_rule, 1.0), (self.rule, -1.0))
        ]

    def _cross_corrections(self, kernel: Callable[[np.ndarray], np.ndarray]) -> Dict[str, np.ndarray]:
        """
        Fine-rule minus base-rule integrals of kernel(x - y) over the cross-object
        near pairs, scattered into V, S and P (float64).
        """
        n_tri = self.scene.n_triangles
        m = self._cross_t.size
        G0, Gx, Gy, Gxy = np.zeros(m), np.zeros((m, 3)), np.zeros((m, 3)), np.zeros(m)
        for rule, X, Y, weight in self._cross_points:
            W = weight * np.outer(rule.weights, rule.weights)
            F = W * kernel(X[:, :, None, :] - Y[:, None, :, :])
            G0 += F.sum(axis=(1, 2))
            Gx += np.einsum("mij,mic->mc", F, X)
            Gy += np.einsum("mij,mjc->mc", F, Y)
            Gxy += np.einsum("mij,mic,mjc->m", F, X, Y)

        v_vals, s_vals = [], []
        for ok, _, _, sign, va, vb in self._cross_edges:
            moment = (
                Gxy[ok]
                - np.einsum("ij,ij->i", vb, Gx[ok])
                - np.einsum("ij,ij->i", va, Gy[ok])
                + np.einsum("ij,ij->i", va, vb) * G0[ok]
            )
            v_vals.append(0.25 * sign * moment)
            s_vals.append(sign * G0[ok])
        return {
            "V": self._scatter_edges(self._cross_edges, v_vals),
            "S": self._scatter_edges(self._cross_edges, s_vals),
            "P": sp.coo_matrix(
                (G0, (self._cross_t, self._cross_s)), shape=(n_tri, n_tri)
            ).toarray(),
        }

    def _operators_in(self, dtype: np.dtype) -> dict:
        return {
            "L": [m.astype(dtype) for m in self._L],
            "L_cols": [m.tocsc().astype(dtype) for m in self._L],
            "Ldiv": self._Ldiv.astype(dtype),
            "Ldiv_cols": self._Ldiv.tocsc().astype(dtype),
            "H": self._H.astype(dtype),
            "H_cols": self._H.tocsc().astype(dtype),
            "dV": self._dV.astype(dtype),
            "dP": self._dP.astype(dtype),
            "dS": self._dS.astype(dtype),
            "D": self.basis.incidence.toarray().astype(dtype),
        }

    # -- kernel passes --------------------------------------------------

    def _chunks(self) -> Iterable[slice]:
        n_points = self.points.shape[0]
        for start in range(0, n_points, self.chunk_size):
            yield slice(start, min(start + self.chunk_size, n_points))

    @staticmethod
    def _contract(left_rows, left_cols, K: np.ndarray, rows: slice) -> np.ndarray:
        """left_cols[:, rows] @ K @ left_rowsᵀ for one row chunk of K."""
        KLt = (left_rows @ K.T).T
        return left_cols[:, rows] @ KLt

    def _kernel_pass(self, kappa: float, dtype: np.dtype, parts: Sequence[str]) -> Dict[str, np.ndarray]:
        ops = self._cast[dtype]
        e, p = self.basis.e, self.basis.p
        out = {}
        if "V" in parts:
            out["V"] = np.zeros((e, e), dtype=dtype)
        if "S" in parts:
            out["S"] = np.zeros((e, e), dtype=dtype)
        if "P" in parts:
            out["P"] = np.zeros((p, p), dtype=dtype)

        for rows in self._chunks():
            R = cdist(self.points[rows], self.points).astype(dtype, copy=False)
            near = self._near[np.ix_(self.point_triangle[rows], self.point_triangle)]
            K = point_kernel(R, kappa, near).astype(dtype, copy=False)
            if "V" in parts:
                for c in range(3):
                    out["V"] += self._contract(ops["L"][c], ops["L_cols"][c], K, rows)
            if "S" in parts:
                out["S"] += self._contract(ops["Ldiv"], ops["Ldiv_cols"], K, rows)
            if "P" in parts:
                out["P"] += self._contract(ops["H"], ops["H_cols"], K, rows)

        if self._cross_t.size:
            fine = self._cross_corrections(
                lambda d: kernel_g(np.linalg.norm(d, axis=-1), kappa)
            )
            for name in parts:
                out[name] += fine[name].astype(dtype)

        if "V" in parts:
            out["V"] = _symmetrize(out["V"] + ops["dV"])
        if "S" in parts:
            out["S"] = _symmetrize(out["S"] + ops["dS"])
        if "P" in parts:
            out["P"] = _symmetrize(out["P"] + ops["dP"])
        return out

    def _gradient_pass(
        self, kappa: float, dtype: np.dtype, object_i: int, u: np.ndarray
    ) -> Dict[str, np.ndarray]:
        ops = self._cast[dtype]
        e, p = self.basis.e, self.basis.p
        dV = np.zeros((e, e), dtype=dtype)
        dP = np.zeros((p, p), dtype=dtype)
        inside = (self.point_object == object_i).astype(dtype)
        along = self.points @ u

        for rows in self._chunks():
            R = cdist(self.points[rows], self.points).astype(dtype, copy=False)
            sign = inside[rows][:, None] - inside[None, :]
            proj = (along[rows][:, None] - along[None, :]).astype(dtype, copy=False)
            safe = np.where(R > 0, R, dtype.type(1.0))
            Kg = (sign * kernel_derivative(safe, kappa) * proj / safe).astype(dtype, copy=False)
            for c in range(3):
                dV += self._contract(ops["L"][c], ops["L_cols"][c], Kg, rows)
            dP += self._contract(ops["H"], ops["H_cols"], Kg, rows)

        if self._cross_t.size:
            object_id = self.scene.object_id
            sign = (
                (object_id[self._cross_t] == object_i).astype(np.float64)
                - (object_id[self._cross_s] == object_i).astype(np.float64)
            )[:, None, None]

            def moved(d: np.ndarray) -> np.ndarray:
                R = np.linalg.norm(d, axis=-1)
                return sign * kernel_derivative(R, kappa) * (d @ u) / R

            fine = self._cross_corrections(moved)
            dV += fine["V"].astype(dtype)
            dP += fine["P"].astype(dtype)
        return {"V": dV, "P": dP}

    # -- public assembly ------------------------------------------------

    def _check_kappa(self, kappa: float, allow_zero: bool) -> None:
        if not np.isfinite(kappa) or kappa < 0 or (kappa == 0 and not allow_zero):
            raise InvalidArgumentError(f"kappa must be {'>= 0' if allow_zero else '> 0'}, got {kappa}")

    def assemble_V(self, kappa: float, precision: PrecisionLike = Precision.DOUBLE) -> np.ndarray:
        self._check_kappa(kappa, allow_zero=True)
        return self._kernel_pass(kappa, Precision(precision).dtype, ("V",))["V"]

    def assemble_P(self, kappa: float, precision: PrecisionLike = Precision.DOUBLE) -> np.ndarray:
        self._check_kappa(kappa, allow_zero=True)
        return self._kernel_pass(kappa, Precision(precision).dtype, ("P",))["P"]

    def assemble_S(self, kappa: float, precision: PrecisionLike = Precision.DOUBLE) -> np.ndarray:
        """S from divergence values directly, without going through D and P."""
        self._check_kappa(kappa, allow_zero=True)
        return self._kernel_pass(kappa, Precision(precision).dtype, ("S",))["S"]

    def assemble(
        self,
        kind: Union[Formulation, str],
        kappa: float,
        precision: PrecisionLike = Precision.DOUBLE,
    ) -> SystemMatrix:
        kind = Formulation(kind)
        if kind is Formulation.EFIE:
            return self.assemble_efie(kappa, precision)
        return self.assemble_aefie(kappa, precision)

    def assemble_efie(self, kappa: float, precision: PrecisionLike = Precision.DOUBLE) -> SystemMatrix:
        """M(κ) = κV + S/κ with S = DᵀPD."""
        self._check_kappa(kappa, allow_zero=False)
        precision = Precision(precision)
        dtype = precision.dtype
        blocks = self._kernel_pass(kappa, dtype, ("V", "P"))
        D = self._cast[dtype]["D"]
        S = D.T @ blocks["P"] @ D
        k = dtype.type(kappa)
        M = _symmetrize(k * blocks["V"] + S / k)
        return SystemMatrix(
            kind=Formulation.EFIE,
            kappa=float(kappa),
            entries=np.ascontiguousarray(M, dtype=dtype),
            precision=precision,
            layout=BlockLayout(n_current=self.basis.e),
            objects=self.basis.edge_object.copy(),
        )

    def _reduced_charge(self, P: np.ndarray, dtype: np.dtype):
        B = self.charge_map.astype(dtype)
        Pt = B.T @ (B.T @ P.T).T
        Dk = self._cast[dtype]["D"][self.kept_patches]
        return Dk, np.asarray(Pt, dtype=dtype)

    def assemble_aefie(self, kappa: float, precision: PrecisionLike = Precision.DOUBLE) -> SystemMatrix:
        """Z = [[V, D̃ᵀP̃], [D̃, -κ²I]] on the (optionally neutral-reduced) charges."""
        self._check_kappa(kappa, allow_zero=True)
        precision = Precision(precision)
        dtype = precision.dtype
        blocks = self._kernel_pass(kappa, dtype, ("V", "P"))
        Dk, Pt = self._reduced_charge(blocks["P"], dtype)
        n_charge = Dk.shape[0]
        Z = np.block(
            [
                [blocks["V"], Dk.T @ Pt],
                [Dk, np.diag(np.full(n_charge, -(dtype.type(kappa) ** 2), dtype=dtype))],
            ]
        ).astype(dtype, copy=False)
        objects = np.concatenate(
            [self.basis.edge_object, self.basis.patch_object[self.kept_patches]]
        )
        return SystemMatrix(
            kind=Formulation.AEFIE,
            kappa=float(kappa),
            entries=np.ascontiguousarray(Z),
            precision=precision,
            layout=BlockLayout(n_current=self.basis.e, n_charge=n_charge),
            objects=objects,
        )

    def assemble_gradient(
        self,
        kind: Union[Formulation, str],
        kappa: float,
        object_i: int,
        direction_u: Sequence[float],
        precision: PrecisionLike = Precision.DOUBLE,
    ) -> GradientMatrix:
        """
        ∂Z/∂t for object_i displaced by t·u.

        Only cross-object entries involving object_i are nonzero; the bottom
        A-EFIE rows (D and -κ²I) are constant under translation.
        """
        kind = Formulation(kind)
        if not 0 <= object_i < self.scene.n_objects:
            raise UnknownObjectError(f"scene has no object {object_i}")
        self._check_kappa(kappa, allow_zero=kind is Formulation.AEFIE)
        precision = Precision(precision)
        dtype = precision.dtype
        u = _unit(direction_u)
        blocks = self._gradient_pass(kappa, dtype, object_i, u)
        e = self.basis.e

        if kind is Formulation.EFIE:
            D = self._cast[dtype]["D"]
            k = dtype.type(kappa)
            entries = k * blocks["V"] + (D.T @ blocks["P"] @ D) / k
            layout = BlockLayout(n_current=e)
            objects = self.basis.edge_object.copy()
        else:
            Dk, dPt = self._reduced_charge(blocks["P"], dtype)
            n_charge = Dk.shape[0]
            entries = np.zeros((e + n_charge, e + n_charge), dtype=dtype)
            entries[:e, :e] = blocks["V"]
            entries[:e, e:] = Dk.T @ dPt
            layout = BlockLayout(n_current=e, n_charge=n_charge)
            objects = np.concatenate(
                [self.basis.edge_object, self.basis.patch_object[self.kept_patches]]
            )
        return GradientMatrix(
            kind=kind,
            kappa=float(kappa),
            entries=np.ascontiguousarray(entries, dtype=dtype),
            precision=precision,
            layout=layout,
            objects=objects,
            displaced_object=int(object_i),
            direction=u,
        )


def _assembler(scene: TriScene, basis: RwgBasis, **options) -> BemAssembler:
    if basis.p != scene.n_triangles:
        raise AssemblyError("basis was not built on this scene")
    return BemAssembler(scene, basis, **options)


def assemble_V(basis: RwgBasis, scene: TriScene, kappa: float, precision: PrecisionLike = Precision.DOUBLE, **options) -> np.ndarray:
    return _assembler(scene, basis, **options).assemble_V(kappa, precision)


def assemble_P(basis: RwgBasis, scene: TriScene, kappa: float, precision: PrecisionLike = Precision.DOUBLE, **options) -> np.ndarray:
    return _assembler(scene, basis, **options).assemble_P(kappa, precision)


def assemble_S(basis: RwgBasis, scene: TriScene, kappa: float, precision: PrecisionLike = Precision.DOUBLE, **options) -> np.ndarray:
    return _assembler(scene, basis, **options).assemble_S(kappa, precision)


def assemble_efie(basis: RwgBasis, scene: TriScene, kappa: float, precision: PrecisionLike = Precision.DOUBLE, **options) -> SystemMatrix:
    return _assembler(scene, basis, **options).assemble_efie(kappa, precision)


def assemble_aefie(basis: RwgBasis, scene: TriScene, kappa: float, precision: PrecisionLike = Precision.DOUBLE, **options) -> SystemMatrix:
    return _assembler(scene, basis, **options).assemble_aefie(kappa, precision)


def assemble_gradient(
    basis: RwgBasis,
    scene: TriScene,
    kappa: float,
    object_i: int,
    direction_u: Sequence[float],
    precision: PrecisionLike = Precision.DOUBLE,
    kind: Union[Formulation, str] = Formulation.AEFIE,
    **options,
) -> GradientMatrix:
    return _assembler(scene, basis, **options).assemble_gradient(
        kind, kappa, object_i, direction_u, precision
    )
