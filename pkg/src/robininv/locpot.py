"""Runge approximation and localized potentials via CGNE.

The operator pair is A f = v|_dOmega (interface-source solve) and
A* g = u|_Gamma (forward solve); they are adjoint between the discrete
L2(Gamma) and L2(dOmega) inner products by Galerkin symmetry. CGNE runs
conjugate gradients on the normal equations of A* g = target, costing one
forward and one interface-source solve per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .fem import (
    SparseSystem,
    boundary_l2,
    interface_l2,
    solve_forward,
    solve_interface_source,
    trace_boundary,
    trace_interface,
)
from .mesh import PartitionSpec


@dataclass
class CgneResult:
    """Outcome of a CGNE run: the current, its history, and the stop status."""

    g: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    achieved: bool = False
    functional_value: float | None = None


def apply_A(system: SparseSystem, f) -> np.ndarray:
    """A: interface density f -> boundary trace of the interface-source solve."""
    return trace_boundary(system.mesh, solve_interface_source(system, f))


def apply_Astar(system: SparseSystem, g) -> np.ndarray:
    """A*: boundary current g -> interface trace of the forward solve."""
    return trace_interface(system.mesh, solve_forward(system, g))


def cgne_solve(system: SparseSystem, target, stop, max_iter: int) -> CgneResult:
    """Conjugate gradients on the normal equations of A* g = target.

    ``stop(iteration, residual_norm, u_trace, g)`` is evaluated at every
    iterate, including the zero start; the residual norm is
    ||A* g - target||_{L2(Gamma)} and u_trace is the current A* g.
    The residual history is non-increasing by construction.
    """
    target = np.asarray(target, dtype=float)
    if len(target) != system.mesh.n_interface_nodes:
        raise ParameterError("target must live on the interface nodes")
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")

    g = np.zeros(system.mesh.n_boundary_nodes)
    u_trace = np.zeros_like(target)
    r = target - u_trace
    history = [np.sqrt(max(interface_l2(system, r, r), 0.0))]
    result = CgneResult(g=g, iterations=0, residual_history=history)
    if stop(0, history[0], u_trace, g):
        result.achieved = True
        return result

    s = apply_A(system, r)
    p = s.copy()
    rho = boundary_l2(system, s, s)
    for it in range(1, max_iter + 1):
        q = apply_Astar(system, p)
        denom = interface_l2(system, q, q)
        if denom <= 0.0 or rho <= 0.0:
            break  # stagnation: residual is in the null space of A
        alpha = rho / denom
        g = g + alpha * p
        r = r - alpha * q
        u_trace = target - r
        history.append(np.sqrt(max(interface_l2(system, r, r), 0.0)))
        result.g = g
        result.iterations = it
        if stop(it, history[-1], u_trace, g):
            result.achieved = True
            return result
        s = apply_A(system, r)
        rho_new = boundary_l2(system, s, s)
        p = s + (rho_new / rho) * p
        rho = rho_new
    return result


def runge_approximate(system: SparseSystem, f, tol: float, max_iter: int) -> CgneResult:
    """Drive the interface trace of a forward solution toward f in L2(Gamma)."""
    if tol <= 0:
        raise ParameterError("tol must be positive")

    def stop(_it, res, _u, _g):
        return res <= tol

    return cgne_solve(system, f, stop, max_iter)


def arc_integral_sq(system: SparseSystem, u_iface, edge_mask: np.ndarray) -> float:
    """int over the masked edges of u^2 ds, exact for piecewise-linear u."""
    mesh = system.mesh
    u = np.asarray(u_iface, dtype=float)
    a = u
    b = np.roll(u, -1)
    edges = mesh.interface_edges
    length = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    per_edge = length * (a * a + a * b + b * b) / 3.0
    return float(per_edge[edge_mask].sum())


def arc_edge_mask(partition: PartitionSpec, arcs) -> np.ndarray:
    arcs = np.atleast_1d(np.asarray(arcs, dtype=np.int64))
    if arcs.size == 0:
        raise ParameterError("arc set must be nonempty")
    if (arcs < 0).any() or (arcs >= partition.n_arcs).any():
        raise ParameterError("arc index out of range")
    return np.isin(partition.arc_of_edge, arcs)


def arc_lengths(system: SparseSystem, partition: PartitionSpec) -> np.ndarray:
    mesh = system.mesh
    edges = mesh.interface_edges
    length = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
    return np.bincount(partition.arc_of_edge, weights=length, minlength=partition.n_arcs)


def indicator_nodal(partition: PartitionSpec, arcs) -> np.ndarray:
    """Nodal indicator of an arc set; shared nodes go to the lower-index arc."""
    n = len(partition.arc_of_edge)
    arc_prev = partition.arc_of_edge[(np.arange(n) - 1) % n]
    arc_next = partition.arc_of_edge
    node_arc = np.minimum(arc_prev, arc_next)
    arcs = np.atleast_1d(np.asarray(arcs, dtype=np.int64))
    return np.isin(node_arc, arcs).astype(float)


def localized_potential(
    system: SparseSystem,
    partition: PartitionSpec,
    arcs,
    alpha: float = 2.0,
    beta: float = 0.5,
    max_iter: int = 500,
) -> CgneResult:
    """Boundary current concentrating the interface trace on the given arcs.

    Runs the Runge iteration toward chi_M / |M| and rescales each iterate by
    (int_{Gamma \\ M} u^2 ds)^{-1/4}; achieved once the scaled solution has
    int_M u^2 >= alpha and int_{Gamma \\ M} u^2 <= beta.
    """
    mask = arc_edge_mask(partition, arcs)
    if mask.all():
        raise ParameterError("arc set must be a strict subset of the partition")
    length_m = float(arc_lengths(system, partition)[np.atleast_1d(arcs)].sum())
    target = indicator_nodal(partition, arcs) / length_m

    state = {"scale": None, "ratio": None}

    def stop(_it, _res, u_trace, _g):
        off = arc_integral_sq(system, u_trace, ~mask)
        if off <= 0.0:
            return False
        scale = off**0.25
        on_scaled = arc_integral_sq(system, u_trace, mask) / np.sqrt(off)
        off_scaled = np.sqrt(off)
        state["scale"] = scale
        state["ratio"] = on_scaled / off_scaled
        return on_scaled >= alpha and off_scaled <= beta

    result = cgne_solve(system, target, stop, max_iter)
    if state["scale"] is not None:
        result.g = result.g / state["scale"]
        result.functional_value = state["ratio"]
    return result
