"""
Execute a validated RunConfig and write its artifacts.
"""

import logging
import time
from itertools import product
from pathlib import Path
from typing import List, Optional

import numpy as np

from casimir_bem.core.config import settings
from casimir_bem.crud.artifact_writer import (
    dump_matrix,
    write_breakdown_csv,
    write_result_json,
    write_spectrum_csv,
    write_sweep_csv,
)
from casimir_bem.crud.mesh_io import load_off
from casimir_bem.models.scene import TriScene
from casimir_bem.models.system_matrix import Formulation, Precision
from casimir_bem.schemas.result_schema import (
    CasimirResult,
    ObjectStatistics,
    RunResult,
    SpectrumSample,
    SweepRow,
)
from casimir_bem.schemas.run_config import PlacedOff, RunConfig, SceneSpec, Task
from casimir_bem.services.assembly import BemAssembler
from casimir_bem.services.breakdown import breakdown_experiment
from casimir_bem.services.casimir import integrate_energy, integrate_force
from casimir_bem.services.geometry import (
    combine_scenes,
    generate,
    mesh_statistics,
    minimum_gap,
    pair_scene,
    translate_object,
)
from casimir_bem.services.kappa_grid import build_kappa_grid, default_kappa0
from casimir_bem.services.proximity import sphere_sphere_force

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
SPECTRUM_FILE = "spectrum.csv"
SWEEP_FILE = "sweep.csv"
BREAKDOWN_FILE = "breakdown.csv"


def build_scene(spec: SceneSpec, gap: Optional[float] = None) -> TriScene:
    """Scene from its config section; `gap` replaces the pair gap for sweeps."""
    if spec.pair is not None:
        body = spec.pair.body
        return pair_scene(
            body.generator,
            body.params(),
            spec.pair.gap if gap is None else gap,
            axis=spec.pair.axis,
        )

    parts = []
    for item in spec.objects:
        if isinstance(item, PlacedOff):
            part = load_off(item.path)
        else:
            part = generate(item.generator, item.params())
        for k in range(part.n_objects):
            if any(item.translate):
                part = translate_object(part, k, item.translate)
        parts.append(part)
    return combine_scenes(parts)


def resolve_kappa0(config: RunConfig, scene: TriScene) -> float:
    if config.quadrature.kappa0 != "auto":
        return float(config.quadrature.kappa0)
    if scene.n_objects > 1:
        return default_kappa0(minimum_gap(scene))
    extent = float(np.ptp(scene.vertices, axis=0).max())
    return default_kappa0(0.5 * extent)


def resolve_assembly(config: RunConfig) -> dict:
    """BemAssembler keywords for a run; unset quadrature fields fall back to Settings."""
    q = config.quadrature
    return {
        "quadrature_order": q.order if q.order is not None else settings.QUADRATURE_ORDER,
        "near_quadrature_order": (
            q.near_order if q.near_order is not None else settings.NEAR_QUADRATURE_ORDER
        ),
        "near_factor": settings.NEAR_FACTOR,
        "chunk_size": settings.CHUNK_SIZE,
        "charge_neutral": (
            q.charge_neutral if q.charge_neutral is not None else settings.CHARGE_NEUTRAL
        ),
    }


def object_statistics(scene: TriScene, assembler: BemAssembler) -> List[ObjectStatistics]:
    basis = assembler.basis
    stats = []
    for entry in mesh_statistics(scene):
        k = entry["object_id"]
        e0, e1 = basis.edge_ranges[k]
        p0, p1 = basis.patch_ranges[k]
        stats.append(ObjectStatistics(**entry, rwg_edges=e1 - e0, patches=p1 - p0))
    for s in stats:
        logger.info(
            "object %d: %d triangles, e=%d, p=%d, area=%.6g",
            s.object_id,
            s.triangles,
            s.rwg_edges,
            s.patches,
            s.area,
        )
    return stats


class Runner:
    """One configured run: scene, assembler and artifact directory."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.output.directory)
        self.threads = config.threads or settings.THREADS
        self.assembly = resolve_assembly(config)

    def _assembler(self, scene: TriScene) -> BemAssembler:
        return BemAssembler(scene, **self.assembly)

    def resolved_config(self) -> dict:
        """The config as run: quadrature defaults filled in from Settings, plus the assembly knobs."""
        echoed = self.config.model_dump(mode="json")
        echoed["quadrature"].update(
            order=self.assembly["quadrature_order"],
            near_order=self.assembly["near_quadrature_order"],
            charge_neutral=self.assembly["charge_neutral"],
        )
        echoed["threads"] = self.threads
        echoed["settings"] = {
            "near_factor": self.assembly["near_factor"],
            "chunk_size": self.assembly["chunk_size"],
            "strict_singular": settings.STRICT_SINGULAR,
        }
        return echoed

    def _series(self):
        return list(product(self.config.formulations, self.config.precisions))

    def _integrate(self, scene: TriScene, assembler: BemAssembler, quantity: Task) -> List[CasimirResult]:
        quad = build_kappa_grid(resolve_kappa0(self.config, scene), self.config.quadrature.nodes)
        results = []
        for formulation, precision in self._series():
            if quantity is Task.FORCE:
                result = integrate_force(
                    scene,
                    quad,
                    object_i=self.config.force.object,
                    direction_u=self.config.force.direction,
                    formulation=formulation,
                    precision=precision,
                    assembler=assembler,
                    threads=self.threads,
                )
            else:
                result = integrate_energy(
                    scene,
                    quad,
                    formulation=formulation,
                    precision=precision,
                    assembler=assembler,
                    threads=self.threads,
                )
            results.append(result)
            if self.config.output.dump_matrices:
                self._dump(assembler, quad.nodes, formulation, precision)
        return results

    def _dump(self, assembler: BemAssembler, nodes, formulation: Formulation, precision: Precision) -> None:
        directory = self.out_dir / "matrices"
        for q, kappa in enumerate(nodes):
            Z = assembler.assemble(formulation, float(kappa), precision)
            dump_matrix(Z.entries, directory, f"Z_{formulation.value}_{precision.value}_{q:02d}")

    def _proximity_force(self, gap: float) -> Optional[float]:
        pair = self.config.scene.pair
        if pair is None or pair.body.generator != "sphere":
            return None
        return sphere_sphere_force(pair.body.radius, pair.body.radius, gap)

    def _sweep(self) -> List[SweepRow]:
        rows = []
        for gap in self.config.sweep.points():
            reference = self._proximity_force(gap)
            scene = build_scene(self.config.scene, gap=gap)
            assembler = self._assembler(scene)
            quad = build_kappa_grid(resolve_kappa0(self.config, scene), self.config.quadrature.nodes)
            for formulation, precision in self._series():
                energy = integrate_energy(
                    scene, quad, formulation, precision, assembler=assembler, threads=self.threads
                )
                force = integrate_force(
                    scene,
                    quad,
                    object_i=self.config.force.object,
                    direction_u=self.config.force.direction,
                    formulation=formulation,
                    precision=precision,
                    assembler=assembler,
                    threads=self.threads,
                )
                logger.info(
                    "gap %.6g %s/%s: energy %.6e, force %.6e",
                    gap,
                    formulation.value,
                    precision.value,
                    energy.energy,
                    force.force,
                )
                rows.append(
                    SweepRow(
                        separation=gap,
                        formulation=formulation,
                        precision=precision,
                        energy=energy.energy,
                        force=force.force,
                        proximity_force=reference,
                    )
                )
        return rows

    def run(self) -> RunResult:
        started = time.perf_counter()
        task = self.config.task
        logger.info("task %s, output in %s", task.value, self.out_dir)

        # 1) Scene and κ-independent assembly data
        scene = build_scene(self.config.scene)
        assembler = self._assembler(scene)
        stats = object_statistics(scene, assembler)

        # 2) Task
        artifacts = []
        results: List[CasimirResult] = []
        breakdown = []
        sweep = []
        if task in (Task.ENERGY, Task.SPECTRUM):
            results = self._integrate(scene, assembler, Task.ENERGY)
        elif task is Task.FORCE:
            results = self._integrate(scene, assembler, Task.FORCE)
        elif task is Task.BREAKDOWN:
            quad = build_kappa_grid(resolve_kappa0(self.config, scene), self.config.quadrature.nodes)
            breakdown = breakdown_experiment(
                scene,
                quad,
                object_i=self.config.force.object,
                direction_u=self.config.force.direction,
                assembler=assembler,
                threads=self.threads,
            )
            artifacts.append(write_breakdown_csv(breakdown, self.out_dir / BREAKDOWN_FILE))
            spectrum = [
                SpectrumSample(
                    kappa=r.kappa,
                    weight=float(w),
                    integrand=r.integrand,
                    formulation=r.formulation,
                    precision=r.precision,
                    condition_estimate=r.condition_estimate,
                )
                for r, w in zip(breakdown, np.tile(quad.weights, len(breakdown) // quad.size))
                if r.integrand is not None
            ]
            artifacts.append(write_spectrum_csv(spectrum, self.out_dir / SPECTRUM_FILE))
        elif task is Task.SWEEP:
            sweep = self._sweep()
            artifacts.append(write_sweep_csv(sweep, self.out_dir / SWEEP_FILE))

        if results:
            samples = [s for r in results for s in r.spectrum]
            artifacts.append(write_spectrum_csv(samples, self.out_dir / SPECTRUM_FILE))

        # 3) Result record
        result = RunResult(
            task=task.value,
            results=results,
            breakdown=breakdown,
            sweep=sweep,
            mesh=stats,
            config=self.resolved_config(),
            wall_clock_seconds=time.perf_counter() - started,
            artifacts=[p.name for p in artifacts] + [RESULT_FILE],
        )
        write_result_json(result, self.out_dir / RESULT_FILE)
        logger.info("run finished in %.2f s", result.wall_clock_seconds)
        return result


def run(config: RunConfig) -> RunResult:
    return Runner(config).run()
