"""Network topology: strings, nodes, junction spring graphs, Laplacian analysis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .materials import MaterialLaw

#: relative eigenvalue tolerance for numerical rank of junction Laplacians
RANK_TOL = 1e-9

END_0 = "0"
END_L = "L"


@dataclass(frozen=True)
class StringSpec:
    """One elastic string segment, parameterized by rest arc length x in [0, L]."""

    id: int
    length: float
    density: float
    material: str
    node_at_0: str
    node_at_L: str


@dataclass(frozen=True)
class SpringGraph:
    """Local spring graph of one multiple node.

    ``incidence[alpha] = (string_id, end)`` maps local index ``alpha`` to the
    string end carrying mass ``masses[alpha]``; ``adjacency`` is the 0/1
    symmetric spring pattern between local indices, all springs share
    stiffness ``kappa``.
    """

    adjacency: np.ndarray
    kappa: float
    masses: np.ndarray
    incidence: Tuple[Tuple[int, str], ...]

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=int)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))
        d = A.shape[0]
        if A.shape != (d, d):
            raise ConfigError("spring adjacency must be square")
        if not np.array_equal(A, A.T):
            raise ConfigError("spring adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ConfigError("spring adjacency must have zero diagonal")
        if not np.all(np.isin(A, (0, 1))):
            raise ConfigError("spring adjacency entries must be 0 or 1")
        if self.kappa <= 0:
            raise ConfigError("spring stiffness kappa must be positive")
        if len(self.masses) != d or np.any(self.masses <= 0):
            raise ConfigError("each local index needs one positive mass")
        if len(self.incidence) != d:
            raise ConfigError("incidence must cover every local index exactly once")
        if len(set(self.incidence)) != d:
            raise ConfigError("incidence maps two local indices to the same string end")

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]

    def local_index(self, string_id: int, end: str) -> int:
        for a, (sid, e) in enumerate(self.incidence):
            if sid == string_id and e == end:
                return a
        raise ConfigError(f"string {string_id} end {end} not incident to this junction")


@dataclass(frozen=True)
class NodeSpec:
    """A node: 'clamped' / 'controlled' simple node, or 'multiple' with springs."""

    id: str
    kind: str
    springs: Optional[SpringGraph] = None

    def __post_init__(self):
        if self.kind not in ("clamped", "controlled", "multiple"):
            raise ConfigError(f"unknown node kind '{self.kind}'")
        if (self.kind == "multiple") != (self.springs is not None):
            raise ConfigError("exactly the multiple nodes carry a SpringGraph")


@dataclass(frozen=True)
class NetworkSpec:
    """The full network: strings, nodes, material table, gravity."""

    strings: Tuple[StringSpec, ...]
    nodes: Tuple[NodeSpec, ...]
    materials: Dict[str, MaterialLaw]
    gravity: float = 0.0
    gravity_direction: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, 1.0])
    )

    def __post_init__(self):
        object.__setattr__(self, "strings", tuple(self.strings))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        e = np.asarray(self.gravity_direction, dtype=float)
        n = np.linalg.norm(e)
        if n == 0:
            raise ConfigError("gravity direction must be a nonzero vector")
        object.__setattr__(self, "gravity_direction", e / n)
        report = validate(self)
        if report:
            raise ConfigError("invalid network: " + "; ".join(report))

    def node(self, node_id: str) -> NodeSpec:
        for nd in self.nodes:
            if nd.id == node_id:
                return nd
        raise ConfigError(f"unknown node id '{node_id}'")

    def string(self, string_id: int) -> StringSpec:
        for st in self.strings:
            if st.id == string_id:
                return st
        raise ConfigError(f"unknown string id '{string_id}'")

    def law(self, st: StringSpec) -> MaterialLaw:
        return self.materials[st.material]

    @property
    def multiple_nodes(self) -> List[NodeSpec]:
        return [nd for nd in self.nodes if nd.kind == "multiple"]

    @property
    def topology_tag(self) -> str:
        mult = self.multiple_nodes
        if len(mult) == 1 and all(
            st.node_at_0 == mult[0].id and self.node(st.node_at_L).kind != "multiple"
            for st in self.strings
        ):
            return "Star"
        deg = {nd.id: 0 for nd in self.nodes}
        for st in self.strings:
            deg[st.node_at_0] += 1
            deg[st.node_at_L] += 1
        if mult and all(deg[nd.id] == 2 for nd in mult):
            simple_ends = sum(1 for nd in self.nodes if nd.kind != "multiple")
            if simple_ends == 2:
                return "Chain"
            if simple_ends == 0:
                return "Ring"
        return "General"


def validate(spec: NetworkSpec) -> List[str]:
    """Collect invariant violations; an empty list means the spec is well formed."""
    problems: List[str] = []
    node_ids = [nd.id for nd in spec.nodes]
    if len(set(node_ids)) != len(node_ids):
        problems.append("duplicate node ids")
    string_ids = [st.id for st in spec.strings]
    if len(set(string_ids)) != len(string_ids):
        problems.append("duplicate string ids")
    by_id = {nd.id: nd for nd in spec.nodes}

    incident: Dict[str, List[Tuple[int, str]]] = {nid: [] for nid in node_ids}
    for st in spec.strings:
        if st.length <= 0:
            problems.append(f"string {st.id}: nonpositive length")
        if st.density <= 0:
            problems.append(f"string {st.id}: nonpositive density")
        if st.material not in spec.materials:
            problems.append(f"string {st.id}: unknown material '{st.material}'")
        if st.node_at_0 == st.node_at_L:
            problems.append(f"string {st.id}: both ends reference node '{st.node_at_0}'")
        for end, nid in ((END_0, st.node_at_0), (END_L, st.node_at_L)):
            if nid not in by_id:
                problems.append(f"string {st.id}: missing node '{nid}'")
            else:
                incident[nid].append((st.id, end))

    for nd in spec.nodes:
        ends = incident.get(nd.id, [])
        if nd.kind in ("clamped", "controlled"):
            if len(ends) != 1:
                problems.append(
                    f"simple node '{nd.id}' must meet exactly one string end, got {len(ends)}"
                )
        else:
            declared = set(nd.springs.incidence)
            actual = set(ends)
            for miss in sorted(actual - declared):
                problems.append(
                    f"multiple node '{nd.id}': incidence omits string {miss[0]} end {miss[1]}"
                )
            for extra in sorted(declared - actual):
                problems.append(
                    f"multiple node '{nd.id}': incidence lists non-incident "
                    f"string {extra[0]} end {extra[1]}"
                )

    # global connectivity of the string-node graph
    if spec.strings and not problems:
        adj: Dict[str, set] = {nid: set() for nid in node_ids}
        for st in spec.strings:
            adj[st.node_at_0].add(st.node_at_L)
            adj[st.node_at_L].add(st.node_at_0)
        seen = set()
        stack = [node_ids[0]]
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(adj[nid] - seen)
        if seen != set(node_ids):
            problems.append("string-node incidence graph is not connected")
    return problems


def laplacian(graph: SpringGraph) -> np.ndarray:
    """Discrete Laplacian L = D - A of the junction spring graph (integer matrix)."""
    A = graph.adjacency
    return np.diag(A.sum(axis=1)) - A


def laplacian_rank(L: np.ndarray, tol: float = RANK_TOL) -> int:
    """Numerical rank: eigenvalues above tol * (largest eigenvalue)."""
    L = np.asarray(L, dtype=float)
    if L.shape[0] != L.shape[1] or not np.allclose(L, L.T, atol=1e-12):
        raise ConfigError("laplacian_rank expects a symmetric square matrix")
    ev = np.linalg.eigvalsh(L)
    top = float(ev[-1]) if len(ev) else 0.0
    if top <= 0:
        return 0
    return int(np.sum(ev > tol * top))


def connected_components(graph: SpringGraph) -> List[List[int]]:
    """Partition of local indices into spring-connected components (sorted)."""
    d = graph.size
    seen = [False] * d
    parts: List[List[int]] = []
    for start in range(d):
        if seen[start]:
            continue
        comp = []
        stack = [start]
        while stack:
            a = stack.pop()
            if seen[a]:
                continue
            seen[a] = True
            comp.append(a)
            stack.extend(k for k in range(d) if graph.adjacency[a, k] and not seen[k])
        parts.append(sorted(comp))
    return parts
