"""Interconnection graphs of components and their stability analysis.

A :class:`Network` is a directed port graph: component output ports feed
component input ports, unconnected input ports are either declared as
labelled external inputs (drivable) or left to the vacuum, and any port can
be tapped as a labelled external output.

Two analysis routes are provided.

* The *norm route* (:func:`gain_matrix`, :func:`small_gain_verdict`) works
  purely with per-signal root-mean-square norms.  Every component output is
  bounded by the norms of its inputs: beamsplitters and the other exact
  static elements contribute their block singular values, certified
  components contribute their gain ``g`` and offset ``sqrt(mu + lam t)``.
  Collecting the inequalities gives x <= b(t) + E u + M x over the internal
  signal norms; the generalized small-gain condition is a spectral radius
  rho(M) < 1, which reduces to the classical loop-gain product for a single
  loop.
* The *state route* (:func:`assemble_closed_loop`) eliminates the internal
  signals exactly and returns the closed-loop realization, with drift and
  noise both routed through the interconnection.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np
import scipy.linalg

from .components import Component, GainCertificate, QuadratureStateSpace
from .signals import NoiseSpec, SignalKind

__all__ = [
    "PortRef",
    "Connection",
    "ExternalInput",
    "Tap",
    "Network",
    "NetworkError",
    "DanglingPortError",
    "KindMismatchError",
    "MultipleSourceError",
    "IllPosedLoopError",
    "UncertifiedCycleError",
    "CycleCapError",
    "ValidationReport",
    "NormSystem",
    "CycleGain",
    "SmallGainCertificate",
    "validate",
    "gain_matrix",
    "small_gain_verdict",
    "loop_gains",
    "assemble_closed_loop",
]

WELL_POSED_CONDITION_LIMIT = 1e12
STABILITY_MARGIN = 1e-12
DEFAULT_CYCLE_CAP = 10_000

# Component kinds whose drift map is exact and static: they enter the norm
# inequalities through block singular values with no offset term.
_EXACT_STATIC_KINDS = frozenset({"beamsplitter", "homodyne", "modulator", "static-gain"})


class NetworkError(ValueError):
    """Base class for interconnection problems."""


class DanglingPortError(NetworkError):
    pass


class KindMismatchError(NetworkError):
    pass


class MultipleSourceError(NetworkError):
    pass


class IllPosedLoopError(NetworkError):
    pass


class UncertifiedCycleError(NetworkError):
    pass


class CycleCapError(NetworkError):
    pass


@dataclass(frozen=True)
class PortRef:
    component: str
    port: str

    @classmethod
    def parse(cls, text: str) -> "PortRef":
        head, sep, tail = text.partition(".")
        if not sep or not head or not tail:
            raise NetworkError(f"port reference {text!r} is not of the form 'component.port'")
        return cls(head, tail)

    def __str__(self) -> str:
        return f"{self.component}.{self.port}"


@dataclass(frozen=True)
class Connection:
    source: PortRef
    target: PortRef


@dataclass(frozen=True)
class ExternalInput:
    port: PortRef
    label: str


@dataclass(frozen=True)
class Tap:
    signal: PortRef
    label: str


@dataclass(frozen=True, eq=False)
class Network:
    components: tuple[Component, ...]
    connections: tuple[Connection, ...] = ()
    inputs: tuple[ExternalInput, ...] = ()
    taps: tuple[Tap, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "connections", tuple(self.connections))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "taps", tuple(self.taps))
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise NetworkError("component names must be unique")
        for name in names:
            if "." in name:
                raise NetworkError(f"component name {name!r} must not contain '.'")

    def component(self, name: str) -> Component:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise KeyError(f"no component named {name!r}")

    def connect(self, source: str, target: str) -> "Network":
        conn = Connection(PortRef.parse(source), PortRef.parse(target))
        return Network(self.components, self.connections + (conn,), self.inputs, self.taps)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the structural and algebraic well-posedness checks."""

    n_states: int
    n_internal_signals: int
    n_external_inputs: int
    feedthrough_condition: float


@dataclass(frozen=True, eq=False)
class _Layout:
    """Resolved channel bookkeeping shared by validation and assembly."""

    net: Network
    comps: tuple[Component, ...]
    in_offsets: dict[tuple[str, str], tuple[int, SignalKind]]
    out_offsets: dict[tuple[str, str], tuple[int, SignalKind]]
    m_total: int
    p_total: int
    source_of: dict[tuple[str, str], tuple[str, str]]
    p_conn: np.ndarray
    p_ext: np.ndarray
    p_vac: np.ndarray
    vacuum_specs: tuple[NoiseSpec, ...]
    input_kinds: tuple[SignalKind, ...]


def _resolve_port(net: Network, ref: PortRef, direction: str) -> tuple[Component, int, SignalKind]:
    try:
        comp = net.component(ref.component)
    except KeyError:
        raise DanglingPortError(f"port {ref} references unknown component {ref.component!r}") from None
    ports = comp.inputs if direction == "input" else comp.outputs
    for idx, port in enumerate(ports):
        if port.name == ref.port:
            return comp, idx, port.kind
    raise DanglingPortError(f"component {ref.component!r} has no {direction} port {ref.port!r}")


def _build_layout(net: Network) -> _Layout:
    for comp in net.components:
        if comp.realization is None:
            raise NetworkError(f"component {comp.name!r} has no realization")

    in_offsets: dict[tuple[str, str], tuple[int, SignalKind]] = {}
    out_offsets: dict[tuple[str, str], tuple[int, SignalKind]] = {}
    m_total = p_total = 0
    for comp in net.components:
        for port in comp.inputs:
            in_offsets[(comp.name, port.name)] = (m_total, port.kind)
            m_total += port.kind.dim
        for port in comp.outputs:
            out_offsets[(comp.name, port.name)] = (p_total, port.kind)
            p_total += port.kind.dim

    source_of: dict[tuple[str, str], tuple[str, str]] = {}
    p_conn = np.zeros((m_total, p_total))
    for conn in net.connections:
        _, _, src_kind = _resolve_port(net, conn.source, "output")
        _, _, dst_kind = _resolve_port(net, conn.target, "input")
        if src_kind is not dst_kind:
            raise KindMismatchError(
                f"cannot connect {conn.source} ({src_kind.value}) to {conn.target} ({dst_kind.value})"
            )
        key = (conn.target.component, conn.target.port)
        if key in source_of:
            raise MultipleSourceError(f"input port {conn.target} has more than one source")
        source_of[key] = (conn.source.component, conn.source.port)
        src_off, _ = out_offsets[(conn.source.component, conn.source.port)]
        dst_off, _ = in_offsets[key]
        for ch in range(dst_kind.dim):
            p_conn[dst_off + ch, src_off + ch] = 1.0

    labels = [inp.label for inp in net.inputs]
    if len(set(labels)) != len(labels):
        raise NetworkError("external input labels must be unique")
    input_kinds: list[SignalKind] = []
    u_cols = 0
    for inp in net.inputs:
        _, _, kind = _resolve_port(net, inp.port, "input")
        key = (inp.port.component, inp.port.port)
        if key in source_of:
            raise NetworkError(f"external input {inp.port} is already fed by a connection")
        input_kinds.append(kind)
        u_cols += kind.dim
    p_ext = np.zeros((m_total, u_cols))
    col = 0
    declared = set()
    for inp in net.inputs:
        key = (inp.port.component, inp.port.port)
        if key in declared:
            raise NetworkError(f"input port {inp.port} declared twice")
        declared.add(key)
        off, kind = in_offsets[key]
        for ch in range(kind.dim):
            p_ext[off + ch, col + ch] = 1.0
        col += kind.dim

    # Undeclared unconnected input ports are fed by bare vacuum (or a bare
    # Wiener process for classical ports): zero drift, unit noise.
    vac_cols: list[tuple[int, SignalKind]] = []
    for comp in net.components:
        for port in comp.inputs:
            key = (comp.name, port.name)
            if key not in source_of and key not in declared:
                vac_cols.append((in_offsets[key][0], port.kind))
    v_total = sum(kind.dim for _, kind in vac_cols)
    p_vac = np.zeros((m_total, v_total))
    vacuum_specs: list[NoiseSpec] = []
    col = 0
    for off, kind in vac_cols:
        for ch in range(kind.dim):
            p_vac[off + ch, col + ch] = 1.0
        col += kind.dim
        vacuum_specs.append(
            NoiseSpec.vacuum() if kind is SignalKind.QUANTUM_PAIR else NoiseSpec.classical_wiener()
        )

    tap_labels = [t.label for t in net.taps]
    if len(set(tap_labels)) != len(tap_labels):
        raise NetworkError("tap labels must be unique")
    for tap in net.taps:
        ref = tap.signal
        key = (ref.component, ref.port)
        if key not in out_offsets and key not in in_offsets:
            raise DanglingPortError(f"tap {tap.label!r} references unknown port {ref}")

    return _Layout(
        net=net,
        comps=net.components,
        in_offsets=in_offsets,
        out_offsets=out_offsets,
        m_total=m_total,
        p_total=p_total,
        source_of=source_of,
        p_conn=p_conn,
        p_ext=p_ext,
        p_vac=p_vac,
        vacuum_specs=tuple(vacuum_specs),
        input_kinds=tuple(input_kinds),
    )


def _block(mats: list[np.ndarray]) -> np.ndarray:
    if not mats:
        return np.zeros((0, 0))
    return scipy.linalg.block_diag(*mats)


def _feedthrough_cycle(net: Network, layout: _Layout) -> str:
    """Describe one algebraic loop through direct feedthroughs, for errors."""
    g = nx.DiGraph()
    for conn in net.connections:
        src_comp = net.component(conn.source.component)
        dst_comp = net.component(conn.target.component)
        g.add_edge(str(conn.source), str(conn.target))
        dst_in = dst_comp.input_port(conn.target.port)
        in_sl = dst_comp.realization.input_slices()[dst_in]
        for out_idx, port in enumerate(dst_comp.outputs):
            out_sl = dst_comp.realization.output_slices()[out_idx]
            if np.any(dst_comp.realization.D[out_sl, in_sl] != 0.0):
                g.add_edge(str(conn.target), f"{dst_comp.name}.{port.name}")
    try:
        cycle = nx.find_cycle(g)
        return " -> ".join(edge[0] for edge in cycle)
    except nx.NetworkXNoCycle:
        return "(no feedthrough cycle found; the loop matrix is near-singular numerically)"


def validate(net: Network) -> ValidationReport:
    """Check port arities, kind matching, the single-source rule, and the
    algebraic well-posedness of the static feedthrough loop.

    Raises a :class:`NetworkError` subclass naming the offending ports when
    a check fails.
    """
    layout = _build_layout(net)
    d_blk = _block([c.realization.D for c in layout.comps])
    f = d_blk @ layout.p_conn
    eye = np.eye(layout.p_total)
    det = float(np.linalg.det(eye - f)) if layout.p_total else 1.0
    cond = float(np.linalg.cond(eye - f)) if layout.p_total else 1.0
    if layout.p_total and (det == 0.0 or not math.isfinite(cond) or cond >= WELL_POSED_CONDITION_LIMIT):
        raise IllPosedLoopError(
            "interconnection is algebraically ill-posed (singular I - F); "
            f"feedthrough loop: {_feedthrough_cycle(net, layout)}"
        )
    return ValidationReport(
        n_states=sum(c.realization.n for c in layout.comps),
        n_internal_signals=len(layout.source_of),
        n_external_inputs=len(net.inputs),
        feedthrough_condition=cond,
    )


def _tap_label(net: Network, comp: str, port: str) -> str:
    for tap in net.taps:
        if tap.signal.component == comp and tap.signal.port == port:
            return tap.label
    return f"{comp}.{port}"


def _static_exact(comp: Component) -> bool:
    if comp.kind in _EXACT_STATIC_KINDS:
        return True
    return comp.kind == "custom" and comp.realization.n == 0 and comp.certificate is None


@dataclass(frozen=True, eq=False)
class NormSystem:
    """Norm-inequality system x <= b(t) + E u + M x over internal signals.

    ``signals`` names one entry per component output port.  ``Bc`` carries
    the coefficient of each certified component's offset c_j(t) =
    sqrt(mu_j + lam_j t) in each row; ``b0``/``b1`` give the conservative
    affine split b(t) = b0 + b1 sqrt(t) obtained from
    sqrt(mu + lam t) <= sqrt(mu) + sqrt(lam t).  Rows listed in
    ``unbounded`` belong to signals downstream of uncertified dynamics (off
    any cycle) and carry no bound.
    """

    signals: tuple[str, ...]
    input_labels: tuple[str, ...]
    M: np.ndarray
    E: np.ndarray
    Bc: np.ndarray
    cert_names: tuple[str, ...]
    cert_mu: np.ndarray
    cert_lam: np.ndarray
    wires: tuple[tuple[str, str], ...] = ()
    unbounded: tuple[int, ...] = ()

    @property
    def b0(self) -> np.ndarray:
        return self.Bc @ np.sqrt(self.cert_mu)

    @property
    def b1(self) -> np.ndarray:
        return self.Bc @ np.sqrt(self.cert_lam)

    @property
    def b(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.b0, self.b1)

    def offsets(self, t) -> np.ndarray:
        """Exact per-row offset vector b(t) = Bc @ sqrt(mu + lam t)."""
        t = np.asarray(t, dtype=float)
        c = np.sqrt(self.cert_mu[:, None] + self.cert_lam[:, None] * t.reshape(1, -1))
        out = self.Bc @ c
        return out.reshape(self.Bc.shape[0], *t.shape) if t.shape else out[:, 0]


def gain_matrix(net: Network, *, _layout: _Layout | None = None) -> NormSystem:
    """Build the per-signal norm-inequality system of the network.

    Beamsplitters, homodyne detectors, modulators and static gains enter
    with their exact drift-map coefficients (block singular values);
    every other component contributes its certificate gain and offset.
    A dynamic component without a certificate is only tolerated off-cycle,
    where its signals (and everything downstream) are simply reported as
    unbounded.
    """
    layout = _layout if _layout is not None else _build_layout(net)

    comp_graph = nx.DiGraph()
    comp_graph.add_nodes_from(c.name for c in net.components)
    for conn in net.connections:
        comp_graph.add_edge(conn.source.component, conn.target.component)
    on_cycle = {name for scc in nx.strongly_connected_components(comp_graph)
                if len(scc) > 1 for name in scc}
    on_cycle |= {n for n in comp_graph.nodes if comp_graph.has_edge(n, n)}

    wires = [(c.name, p.name) for c in layout.comps for p in c.outputs]
    wire_index = {w: i for i, w in enumerate(wires)}
    signals = tuple(_tap_label(net, *w) for w in wires)
    input_labels = tuple(inp.label for inp in net.inputs)
    input_index = {(inp.port.component, inp.port.port): j for j, inp in enumerate(net.inputs)}

    n_w = len(wires)
    n_u = len(net.inputs)
    m = np.zeros((n_w, n_w))
    e = np.zeros((n_w, n_u))
    cert_rows: list[tuple[str, float, float]] = []
    bc_cols: list[np.ndarray] = []
    unbounded: set[int] = set()

    for comp in layout.comps:
        ss = comp.realization
        exact = _static_exact(comp)
        if not exact and comp.certificate is None:
            if comp.name in on_cycle:
                raise UncertifiedCycleError(
                    f"component {comp.name!r} lies on a feedback cycle but has no gain certificate"
                )
            for port in comp.outputs:
                unbounded.add(wire_index[(comp.name, port.name)])
            continue

        in_keys = [(comp.name, p.name) for p in comp.inputs]
        if exact:
            in_slices = ss.input_slices()
            out_slices = ss.output_slices()
            for oi, port in enumerate(comp.outputs):
                row = wire_index[(comp.name, port.name)]
                for ii, key in enumerate(in_keys):
                    block = ss.D[out_slices[oi], in_slices[ii]]
                    coef = float(np.linalg.svd(block, compute_uv=False)[0]) if block.size else 0.0
                    if coef == 0.0:
                        continue
                    _apply_coefficient(layout, m, e, wire_index, input_index, row, key, coef)
        else:
            cert = comp.certificate
            col = np.zeros(n_w)
            for port in comp.outputs:
                row = wire_index[(comp.name, port.name)]
                col[row] = 1.0
                for key in in_keys:
                    _apply_coefficient(layout, m, e, wire_index, input_index, row, key, cert.g)
            cert_rows.append((comp.name, cert.mu, cert.lam))
            bc_cols.append(col)

    # Propagate unboundedness downstream of uncertified dynamics.
    changed = True
    while changed:
        changed = False
        for i in range(n_w):
            if i in unbounded:
                continue
            if any(m[i, j] != 0.0 and j in unbounded for j in range(n_w)):
                unbounded.add(i)
                changed = True

    bc = np.stack(bc_cols, axis=1) if bc_cols else np.zeros((n_w, 0))
    return NormSystem(
        signals=signals,
        input_labels=input_labels,
        M=m,
        E=e,
        Bc=bc,
        cert_names=tuple(r[0] for r in cert_rows),
        cert_mu=np.array([r[1] for r in cert_rows]),
        cert_lam=np.array([r[2] for r in cert_rows]),
        wires=tuple(wires),
        unbounded=tuple(sorted(unbounded)),
    )


def _apply_coefficient(layout: _Layout, m: np.ndarray, e: np.ndarray,
                       wire_index: dict, input_index: dict, row: int,
                       in_key: tuple[str, str], coef: float) -> None:
    if in_key in layout.source_of:
        m[row, wire_index[layout.source_of[in_key]]] += coef
    elif in_key in input_index:
        e[row, input_index[in_key]] += coef
    # else: bare vacuum input, zero drift, no contribution.


@dataclass(frozen=True)
class CycleGain:
    signals: tuple[str, ...]
    components: tuple[str, ...]
    gain: float


def loop_gains(net: Network, cap: int = DEFAULT_CYCLE_CAP) -> tuple[CycleGain, ...]:
    """Simple cycles of the signal-flow digraph with their gain products.

    Diagnostic only: the stability verdict uses the spectral radius of the
    gain matrix, which needs no enumeration.  Raises
    :class:`CycleCapError` past ``cap`` cycles.
    """
    ns = gain_matrix(net)
    g = nx.DiGraph()
    g.add_nodes_from(range(len(ns.signals)))
    n_w = len(ns.signals)
    for i in range(n_w):
        for j in range(n_w):
            if ns.M[i, j] != 0.0:
                g.add_edge(j, i)
    cycles = list(itertools.islice(nx.simple_cycles(g), cap + 1))
    if len(cycles) > cap:
        raise CycleCapError(f"network has more than {cap} simple cycles")
    out = []
    for cycle in cycles:
        # Canonical rotation for deterministic reporting.
        k = cycle.index(min(cycle))
        cycle = cycle[k:] + cycle[:k]
        gain = 1.0
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            gain *= ns.M[b, a]
        names = tuple(ns.signals[i] for i in cycle)
        comps = tuple(dict.fromkeys(ns.wires[i][0] for i in cycle))
        out.append(CycleGain(names, comps, float(gain)))
    return tuple(sorted(out, key=lambda c: (-c.gain, c.signals)))


@dataclass(frozen=True, eq=False)
class SmallGainCertificate:
    """Generalized small-gain verdict with explicit internal-signal bounds.

    When ``stable`` (rho(M) < 1), every internal signal norm obeys

        ||beta_z||_t <= sum_j W[z, j] sqrt(mu_j + lam_j t)
                        + sum_k V[z, k] ||beta_u_k||_t

    with W = (I - M)^-1 Bc and V = (I - M)^-1 E -- an affine bound in the
    input norms and sqrt(t), with all coefficients nonnegative and finite.
    """

    stable: bool
    spectral_radius: float
    system: NormSystem
    bound_offset_coeffs: np.ndarray | None
    bound_input_coeffs: np.ndarray | None
    dominant_cycle: CycleGain | None
    condition: str = "generalized small-gain condition (spectral radius of the gain matrix)"

    @property
    def signals(self) -> tuple[str, ...]:
        return self.system.signals

    @property
    def input_labels(self) -> tuple[str, ...]:
        return self.system.input_labels

    def signal_bound(self, signal: str, t, input_norms: dict[str, float] | None = None):
        """Evaluate the certified norm bound for one internal signal."""
        if not self.stable:
            raise ValueError("network is not certified stable: no finite bounds")
        idx = self.system.signals.index(signal)
        if idx in self.system.unbounded:
            raise ValueError(f"signal {signal!r} is not bounded by the certificate")
        t = np.asarray(t, dtype=float)
        c = np.sqrt(self.system.cert_mu[:, None] + self.system.cert_lam[:, None] * np.atleast_1d(t))
        total = self.bound_offset_coeffs[idx] @ c
        norms = input_norms or {}
        for k, label in enumerate(self.system.input_labels):
            val = np.asarray(norms.get(label, 0.0), dtype=float)
            total = total + self.bound_input_coeffs[idx, k] * np.atleast_1d(val)
        return total if t.ndim else float(total[0])


def small_gain_verdict(net: Network, cycle_cap: int = DEFAULT_CYCLE_CAP) -> SmallGainCertificate:
    """Stability verdict: stable iff the gain-matrix spectral radius is < 1.

    For a single loop the spectral radius condition is equivalent to the
    classical requirement that the product of gains around the loop be less
    than one; the dominant cycle and its product are reported alongside.
    """
    ns = gain_matrix(net)
    n_w = len(ns.signals)
    rho = float(np.max(np.abs(np.linalg.eigvals(ns.M)))) if n_w else 0.0
    stable = rho < 1.0 - STABILITY_MARGIN
    w_off = v_in = None
    if stable and n_w:
        inv = np.linalg.inv(np.eye(n_w) - ns.M)
        w_off = inv @ ns.Bc
        v_in = inv @ ns.E
    elif stable:
        w_off = np.zeros((0, ns.Bc.shape[1]))
        v_in = np.zeros((0, ns.E.shape[1]))
    dominant = None
    try:
        cycles = loop_gains(net, cap=cycle_cap)
        if cycles:
            dominant = cycles[0]
    except CycleCapError:
        pass
    return SmallGainCertificate(
        stable=stable,
        spectral_radius=rho,
        system=ns,
        bound_offset_coeffs=w_off,
        bound_input_coeffs=v_in,
        dominant_cycle=dominant,
    )


def _tap_refs(net: Network, taps) -> list[PortRef]:
    if taps is None:
        return [t.signal for t in net.taps]
    out = []
    for t in taps:
        out.append(t if isinstance(t, PortRef) else PortRef.parse(str(t)))
    return out


def assemble_closed_loop(net: Network, taps=None) -> QuadratureStateSpace:
    """Exact closed-loop realization from external inputs to tapped signals.

    Stacks the component states, solves the static interconnection
    (I - F)^-1 for the internal drift signals, and routes every noise
    source -- the noise shipped with declared inputs, bare vacuum on
    undeclared ports, and each component's auxiliary baths -- through the
    same interconnection.  ``taps`` overrides the network's declared taps
    (any input or output port reference).
    """
    layout = _build_layout(net)
    validate(net)

    comps = layout.comps
    a_blk = _block([c.realization.A for c in comps])
    b_blk = _block([c.realization.B_beta for c in comps])
    bn_blk = _block([c.realization.B_noise_in for c in comps])
    baux_blk = _block([c.realization.B_aux for c in comps])
    c_blk = _block([c.realization.C for c in comps])
    d_blk = _block([c.realization.D for c in comps])
    dn_blk = _block([c.realization.D_noise_in for c in comps])
    daux_blk = _block([c.realization.D_aux for c in comps])
    aux_specs = tuple(s for c in comps for s in c.realization.aux_specs)

    n = a_blk.shape[0]
    p = layout.p_total
    eye_p = np.eye(p)

    # Drift route: s_out = S (C x + D P_ext u).
    s_solve = np.linalg.inv(eye_p - d_blk @ layout.p_conn)
    sc = s_solve @ c_blk
    sd_ext = s_solve @ d_blk @ layout.p_ext
    a_cl = a_blk + b_blk @ layout.p_conn @ sc
    b_cl = b_blk @ (layout.p_ext + layout.p_conn @ sd_ext)

    # Noise route: the port-borne noise map may differ from the drift map
    # (homodyne and modulator boundaries), so it gets its own elimination.
    sn_solve = np.linalg.inv(eye_p - dn_blk @ layout.p_conn)
    inject_ext = layout.p_ext
    inject_vac = layout.p_vac
    nout_ext = sn_solve @ dn_blk @ inject_ext
    nout_vac = sn_solve @ dn_blk @ inject_vac
    nout_aux = sn_solve @ daux_blk
    nin_ext = inject_ext + layout.p_conn @ nout_ext
    nin_vac = inject_vac + layout.p_conn @ nout_vac
    nin_aux = layout.p_conn @ nout_aux
    bn_ext = bn_blk @ nin_ext
    bn_vac = bn_blk @ nin_vac
    bn_aux = bn_blk @ nin_aux + baux_blk

    tap_refs = _tap_refs(net, taps)
    rows_c, rows_d, rows_ne, rows_nv, rows_na, out_kinds = [], [], [], [], [], []
    sin_c = layout.p_conn @ sc
    sin_d = layout.p_ext + layout.p_conn @ sd_ext
    for ref in tap_refs:
        key = (ref.component, ref.port)
        if key in layout.out_offsets:
            off, kind = layout.out_offsets[key]
            sel = slice(off, off + kind.dim)
            rows_c.append(sc[sel])
            rows_d.append(sd_ext[sel])
            rows_ne.append(nout_ext[sel])
            rows_nv.append(nout_vac[sel])
            rows_na.append(nout_aux[sel])
        elif key in layout.in_offsets:
            off, kind = layout.in_offsets[key]
            sel = slice(off, off + kind.dim)
            rows_c.append(sin_c[sel])
            rows_d.append(sin_d[sel])
            rows_ne.append(nin_ext[sel])
            rows_nv.append(nin_vac[sel])
            rows_na.append(nin_aux[sel])
        else:
            raise DanglingPortError(f"tap references unknown port {ref}")
        out_kinds.append(kind)

    def _vstack(rows: list[np.ndarray], width: int) -> np.ndarray:
        return np.vstack(rows) if rows else np.zeros((0, width))

    u_cols = layout.p_ext.shape[1]
    c_cl = _vstack(rows_c, n)
    d_cl = _vstack(rows_d, u_cols)
    dn_ext_cl = _vstack(rows_ne, u_cols)
    d_vac_cl = _vstack(rows_nv, layout.p_vac.shape[1])
    d_aux_cl = _vstack(rows_na, daux_blk.shape[1])

    return QuadratureStateSpace(
        A=a_cl,
        B_beta=b_cl,
        C=c_cl,
        D=d_cl,
        input_kinds=layout.input_kinds,
        output_kinds=tuple(out_kinds),
        B_aux=np.hstack([bn_vac, bn_aux]),
        D_aux=np.hstack([d_vac_cl, d_aux_cl]),
        aux_specs=layout.vacuum_specs + aux_specs,
        D_noise_in=dn_ext_cl,
        B_noise_in=bn_ext,
    )
