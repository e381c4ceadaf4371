"""Network document format: JSON in, validated Network out.

A document lists components (id, kind, params), directed connections
between ``"id.port"`` references, labelled external inputs and labelled
taps.  Parsing validates everything it can locate -- unknown kinds,
out-of-range parameters, unknown ports, duplicate ids -- and reports all
problems at once with their document paths.

Supported kinds are the component catalog plus two conveniences for
opto-electronic loops (``classical-gain``, ``classical-adder``) and fully
explicit ``custom`` realizations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .components import (
    Component,
    GainCertificate,
    QuadratureStateSpace,
    make_amplifier,
    make_attenuator,
    make_beamsplitter,
    make_cavity,
    make_classical_adder,
    make_classical_gain,
    make_custom,
    make_homodyne,
    make_modulator,
    make_oscillator,
    make_static_gain,
)
from .network import Connection, ExternalInput, Network, NetworkError, PortRef, Tap
from .signals import NoiseKind, NoiseSpec, SignalKind

__all__ = [
    "DOCUMENT_VERSION",
    "DocumentError",
    "ComponentEntry",
    "NetworkDocument",
    "parse_network",
    "serialize_network",
    "build_network",
]

DOCUMENT_VERSION = "1"

_KIND_PARAMS: dict[str, tuple[set[str], set[str]]] = {
    # kind -> (required params, optional params)
    "beamsplitter": ({"epsilon"}, set()),
    "cavity": ({"gamma"}, set()),
    "amplifier": ({"kappa", "gamma"}, set()),
    "attenuator": ({"kappa", "gamma"}, set()),
    "static-gain": ({"g"}, set()),
    "homodyne": (set(), set()),
    "modulator": (set(), set()),
    "oscillator": ({"kappa", "gamma"}, set()),
    "classical-gain": ({"g"}, {"mu", "lambda"}),
    "classical-adder": (set(), {"signs"}),
    "custom": ({"A", "B_beta", "C", "D", "input_kinds", "output_kinds"},
               {"B_aux", "D_aux", "D_noise_in", "B_noise_in", "aux_specs", "certificate"}),
}


class DocumentError(ValueError):
    """Parse or validation failure with located messages."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        lines = [f"{loc}: {msg}" for loc, msg in self.errors]
        super().__init__("invalid network document:\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class ComponentEntry:
    id: str
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    initial_energy: float | None = None


@dataclass(frozen=True)
class NetworkDocument:
    version: str = DOCUMENT_VERSION
    components: tuple[ComponentEntry, ...] = ()
    connections: tuple[tuple[str, str], ...] = ()
    inputs: tuple[tuple[str, str], ...] = ()
    taps: tuple[tuple[str, str], ...] = ()


def _kinds_from_names(names, errors, loc) -> tuple[SignalKind, ...]:
    out = []
    for k in names:
        try:
            out.append(SignalKind(k))
        except ValueError:
            errors.append((loc, f"unknown signal kind {k!r}"))
    return tuple(out)


def _build_custom(entry: ComponentEntry, errors: list) -> Component | None:
    loc = f"components[{entry.id}].params"
    p = entry.params
    try:
        input_kinds = _kinds_from_names(p["input_kinds"], errors, loc + ".input_kinds")
        output_kinds = _kinds_from_names(p["output_kinds"], errors, loc + ".output_kinds")
        aux_specs = []
        for name in p.get("aux_specs", []):
            try:
                kind = NoiseKind(name)
            except ValueError:
                errors.append((loc + ".aux_specs", f"unknown noise kind {name!r}"))
                return None
            aux_specs.append(NoiseSpec(kind, 1 if kind is NoiseKind.CLASSICAL_WIENER else 2))
        n_states = len(p["A"])
        ss = QuadratureStateSpace(
            A=np.array(p["A"], dtype=float) if n_states else np.zeros((0, 0)),
            B_beta=np.array(p["B_beta"], dtype=float) if n_states else None,
            C=np.array(p["C"], dtype=float) if n_states else None,
            D=np.array(p["D"], dtype=float),
            input_kinds=input_kinds,
            output_kinds=output_kinds,
            B_aux=None if "B_aux" not in p else np.array(p["B_aux"], dtype=float),
            D_aux=None if "D_aux" not in p else np.array(p["D_aux"], dtype=float),
            aux_specs=tuple(aux_specs),
            D_noise_in=None if "D_noise_in" not in p else np.array(p["D_noise_in"], dtype=float),
            B_noise_in=None if "B_noise_in" not in p else np.array(p["B_noise_in"], dtype=float),
        )
        cert = None
        if "certificate" in p:
            c = p["certificate"]
            cert = GainCertificate(float(c["g"]), float(c.get("mu", 0.0)), float(c.get("lambda", 0.0)))
        return make_custom(ss, name=entry.id, certificate=cert)
    except (ValueError, TypeError, KeyError) as exc:
        errors.append((loc, f"invalid custom realization: {exc}"))
        return None


def _build_component(entry: ComponentEntry, errors: list) -> Component | None:
    loc = f"components[{entry.id}]"
    if entry.kind not in _KIND_PARAMS:
        errors.append((loc + ".kind", f"unknown component kind {entry.kind!r}"))
        return None
    required, optional = _KIND_PARAMS[entry.kind]
    missing = required - set(entry.params)
    unknown = set(entry.params) - required - optional
    if missing:
        errors.append((loc + ".params", f"missing parameters: {sorted(missing)}"))
    if unknown:
        errors.append((loc + ".params", f"unknown parameters: {sorted(unknown)}"))
    if missing or unknown:
        return None
    p = entry.params
    energy: dict[str, float] = {}
    if entry.initial_energy is not None:
        energy["initial_energy"] = float(entry.initial_energy)
    try:
        if entry.kind == "beamsplitter":
            return make_beamsplitter(float(p["epsilon"]), name=entry.id)
        if entry.kind == "cavity":
            return make_cavity(float(p["gamma"]), name=entry.id, **energy)
        if entry.kind == "amplifier":
            return make_amplifier(float(p["kappa"]), float(p["gamma"]), name=entry.id, **energy)
        if entry.kind == "attenuator":
            return make_attenuator(float(p["kappa"]), float(p["gamma"]), name=entry.id, **energy)
        if entry.kind == "static-gain":
            return make_static_gain(float(p["g"]), name=entry.id)
        if entry.kind == "homodyne":
            return make_homodyne(name=entry.id)
        if entry.kind == "modulator":
            return make_modulator(name=entry.id)
        if entry.kind == "oscillator":
            return make_oscillator(float(p["kappa"]), float(p["gamma"]), name=entry.id, **energy)
        if entry.kind == "classical-gain":
            return make_classical_gain(float(p["g"]), mu=float(p.get("mu", 0.0)),
                                       lam=float(p.get("lambda", 0.0)), name=entry.id)
        if entry.kind == "classical-adder":
            return make_classical_adder(tuple(p.get("signs", (-1.0, 1.0))), name=entry.id)
        return _build_custom(entry, errors)
    except (ValueError, TypeError) as exc:
        errors.append((loc + ".params", str(exc)))
        return None


def _expect(obj: Mapping, key: str, types, loc: str, errors: list, default=None):
    if key not in obj:
        if default is not None:
            return default
        errors.append((loc, f"missing field {key!r}"))
        return None
    val = obj[key]
    if not isinstance(val, types):
        errors.append((f"{loc}.{key}", f"expected {types}, got {type(val).__name__}"))
        return None
    return val


def parse_network(text: str) -> NetworkDocument:
    """Parse and validate a JSON network document.

    Raises :class:`DocumentError` carrying every located problem; on
    success the document round-trips through :func:`serialize_network` to
    an identical structure.
    """
    errors: list[tuple[str, str]] = []
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError([(f"line {exc.lineno}, column {exc.colno}", f"JSON syntax error: {exc.msg}")])
    if not isinstance(raw, dict):
        raise DocumentError([("$", "document root must be an object")])

    version = raw.get("version", DOCUMENT_VERSION)
    if not isinstance(version, str):
        errors.append(("version", "must be a string"))
        version = DOCUMENT_VERSION

    entries: list[ComponentEntry] = []
    seen_ids: set[str] = set()
    comps_raw = raw.get("components", [])
    if not isinstance(comps_raw, list):
        errors.append(("components", "must be a list"))
        comps_raw = []
    for i, item in enumerate(comps_raw):
        loc = f"components[{i}]"
        if not isinstance(item, dict):
            errors.append((loc, "must be an object"))
            continue
        cid = _expect(item, "id", str, loc, errors)
        kind = _expect(item, "kind", str, loc, errors)
        params = item.get("params", {})
        if not isinstance(params, dict):
            errors.append((f"{loc}.params", "must be an object"))
            params = {}
        if cid is None or kind is None:
            continue
        if "." in cid or not cid:
            errors.append((f"{loc}.id", f"id {cid!r} must be nonempty and contain no '.'"))
            continue
        if cid in seen_ids:
            errors.append((f"{loc}.id", f"duplicate id {cid!r}"))
            continue
        seen_ids.add(cid)
        energy = item.get("initial_energy")
        if energy is not None and not isinstance(energy, (int, float)):
            errors.append((f"{loc}.initial_energy", "must be a number"))
            energy = None
        entries.append(ComponentEntry(cid, kind, dict(params),
                                      None if energy is None else float(energy)))

    def _port_pairs(section: str, key_a: str, key_b: str) -> tuple[tuple[str, str], ...]:
        out = []
        items = raw.get(section, [])
        if not isinstance(items, list):
            errors.append((section, "must be a list"))
            return ()
        for i, item in enumerate(items):
            loc = f"{section}[{i}]"
            if not isinstance(item, dict):
                errors.append((loc, "must be an object"))
                continue
            a = _expect(item, key_a, str, loc, errors)
            b = _expect(item, key_b, str, loc, errors)
            if a is not None and b is not None:
                out.append((a, b))
        return tuple(out)

    connections = _port_pairs("connections", "from", "to")
    inputs = _port_pairs("inputs", "port", "label")
    taps = _port_pairs("taps", "signal", "label")

    doc = NetworkDocument(version=version, components=tuple(entries),
                          connections=connections, inputs=inputs, taps=taps)

    # Semantic validation: build the components and the network, collecting
    # located errors rather than stopping at the first.
    built: list[Component] = []
    for entry in doc.components:
        comp = _build_component(entry, errors)
        if comp is not None:
            built.append(comp)
    if not errors:
        from .network import _build_layout

        try:
            _build_layout(_network_from(built, doc))
        except NetworkError as exc:
            errors.append(("connections", str(exc)))
    if errors:
        raise DocumentError(errors)
    return doc


def _network_from(components: list[Component], doc: NetworkDocument) -> Network:
    return Network(
        components=tuple(components),
        connections=tuple(Connection(PortRef.parse(a), PortRef.parse(b)) for a, b in doc.connections),
        inputs=tuple(ExternalInput(PortRef.parse(p), label) for p, label in doc.inputs),
        taps=tuple(Tap(PortRef.parse(s), label) for s, label in doc.taps),
    )


def build_network(doc: NetworkDocument) -> Network:
    """Instantiate the catalog components and wire the Network."""
    errors: list[tuple[str, str]] = []
    built = [_build_component(entry, errors) for entry in doc.components]
    if errors or any(c is None for c in built):
        raise DocumentError(errors or [("components", "component construction failed")])
    net = _network_from(built, doc)
    from .network import _build_layout

    _build_layout(net)
    return net


def serialize_network(doc: NetworkDocument) -> str:
    """Canonical JSON text of a document (stable field order)."""
    payload: dict[str, Any] = {
        "version": doc.version,
        "components": [
            {
                "id": e.id,
                "kind": e.kind,
                "params": e.params,
                **({"initial_energy": e.initial_energy} if e.initial_energy is not None else {}),
            }
            for e in doc.components
        ],
        "connections": [{"from": a, "to": b} for a, b in doc.connections],
        "inputs": [{"port": p, "label": l} for p, l in doc.inputs],
        "taps": [{"signal": s, "label": l} for s, l in doc.taps],
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"
