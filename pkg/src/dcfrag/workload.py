"""Applications (VM sets + traffic matrices): loading, generation, aggregates.

VM demands are absolute (MHz, MB, Mbps); each application carries the
reference host/link it was sized against so representative requests can be
normalized without outside context. A VM's NIC demand always covers the sum
of its traffic rows.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .metrics import MultiRequest
from .topology import Reference, ResourceVector

_EPS = 1e-9


class WorkloadError(Exception):
    """A workload file or generator spec violates the application invariants."""


@dataclass(frozen=True)
class VM:
    id: str
    demand: ResourceVector


@dataclass
class Application:
    """A set of VMs plus the symmetric pairwise bandwidth they exchange."""

    id: str
    vms: tuple[VM, ...]
    traffic: dict  # (vm_a, vm_b) with vm_a < vm_b -> Mbps
    reference: Reference

    def vm(self, vm_id: str) -> VM:
        for v in self.vms:
            if v.id == vm_id:
                return v
        raise KeyError(vm_id)

    def vm_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vms)

    def edges(self):
        """Traffic edges in deterministic order."""
        return sorted(self.traffic.items())

    def total_traffic(self, vm_id: str) -> float:
        return sum(bw for (a, b), bw in self.traffic.items() if vm_id in (a, b))


def validate_application(a: Application) -> None:
    ids = set()
    for v in a.vms:
        if v.id in ids:
            raise WorkloadError(f"app {a.id}: duplicate VM id {v.id}")
        ids.add(v.id)
        norm = v.demand.normalized(a.reference.host)
        if max(norm.cpu, norm.mem) > 1 + _EPS or v.demand.nic > a.reference.host.nic + _EPS:
            raise WorkloadError(
                f"app {a.id}: VM {v.id} demand {v.demand} exceeds the reference host")
    for (x, y), bw in a.traffic.items():
        if x == y:
            raise WorkloadError(f"app {a.id}: self-edge on VM {x}")
        if x > y:
            raise WorkloadError(f"app {a.id}: edge ({x}, {y}) not stored in canonical order")
        if x not in ids or y not in ids:
            missing = x if x not in ids else y
            raise WorkloadError(f"app {a.id}: edge ({x}, {y}) references unknown VM {missing}")
        if bw < 0:
            raise WorkloadError(f"app {a.id}: edge ({x}, {y}) has negative bandwidth")
    for v in a.vms:
        rows = a.total_traffic(v.id)
        if v.demand.nic + _EPS < rows:
            raise WorkloadError(
                f"app {a.id}: VM {v.id} NIC demand {v.demand.nic} below its "
                f"traffic total {rows}")


def representative_request(a: Application) -> MultiRequest:
    """Mean normalized VM demand of the application.

    cpu/mem are means of the normalized demands; nw is the mean per-VM total
    traffic normalized to the reference link.
    """
    if not a.vms:
        raise WorkloadError(f"app {a.id}: empty application")
    n = len(a.vms)
    cpu = sum(v.demand.cpu for v in a.vms) / n / a.reference.host.cpu
    mem = sum(v.demand.mem for v in a.vms) / n / a.reference.host.mem
    nw = sum(a.total_traffic(v.id) for v in a.vms) / n / a.reference.link
    return MultiRequest(cpu=cpu, mem=mem, nw=nw)


def bw_between(a: Application, group_x, group_y) -> float:
    """Total bandwidth required between two disjoint VM groups of one app."""
    xs, ys = set(group_x), set(group_y)
    overlap = xs & ys
    if overlap:
        raise WorkloadError(f"app {a.id}: groups overlap on {sorted(overlap)}")
    total = 0.0
    for (p, q), bw in a.traffic.items():
        if (p in xs and q in ys) or (p in ys and q in xs):
            total += bw
    return total


# -- synthetic generation --------------------------------------------------------


@dataclass(frozen=True)
class WorkloadSpec:
    """Knobs for one synthetic workload category.

    traffic_density is the probability a VM pair communicates (a spanning
    chain keeps every app connected regardless). demand_noise widens the
    uniform jitter on cpu/mem around the traffic-weighted base; skewed_traffic
    makes a ~10% minority of edges carry the bulk of the bandwidth.
    """

    category: int
    app_count: int
    vms_per_app: tuple[int, int]
    mean_demand: ResourceVector
    traffic_density: float
    seed: int
    reference: Reference
    skewed_traffic: bool = False
    demand_noise: float = 0.25
    traffic_weight: float = 0.5
    traffic_burst: tuple[float, float] | None = None  # (probability, factor)

    def __post_init__(self):
        lo, hi = self.vms_per_app
        if lo < 1 or hi < lo:
            raise WorkloadError(f"bad vms_per_app range {self.vms_per_app}")
        if not 0 <= self.traffic_density <= 1:
            raise WorkloadError(f"traffic_density must be in [0, 1], got {self.traffic_density}")
        if self.app_count < 0:
            raise WorkloadError("app_count must be >= 0")
        if self.traffic_burst is not None:
            prob, factor = self.traffic_burst
            if not 0 < prob < 1 or factor <= 1 or prob * factor >= 1:
                raise WorkloadError(f"bad traffic_burst {self.traffic_burst}")

    def burst_multiplier(self, rng: random.Random) -> float:
        """Per-app traffic scale; heavy-tailed but mean-1 so the category's
        mean per-VM bandwidth stays on target."""
        if self.traffic_burst is None:
            return 1.0
        prob, factor = self.traffic_burst
        low = (1.0 - prob * factor) / (1.0 - prob)
        return factor if rng.random() < prob else low


def generate_workload(spec: WorkloadSpec) -> list[Application]:
    """Seeded, reproducible synthetic applications for one category.

    Edge weights are drawn (heavy-tailed when skewed_traffic), then scaled so
    the mean per-VM traffic matches the spec's mean NIC demand; cpu/mem are a
    weighted blend of the VM's relative traffic and the category mean plus
    seeded uniform noise.
    """
    rng = random.Random(spec.seed)
    apps: list[Application] = []
    for ai in range(spec.app_count):
        app_id = f"app{ai:03d}"
        n = rng.randint(*spec.vms_per_app)
        vm_ids = [f"{app_id}v{vi:02d}" for vi in range(n)]

        raw: dict[tuple[str, str], float] = {}
        if n > 1:
            order = vm_ids[:]
            rng.shuffle(order)
            for i in range(n - 1):
                x, y = sorted((order[i], order[i + 1]))
                raw[(x, y)] = rng.uniform(0.5, 1.5)
            for i in range(n):
                for j in range(i + 1, n):
                    key = (vm_ids[i], vm_ids[j])
                    if key not in raw and rng.random() < spec.traffic_density:
                        raw[key] = rng.uniform(0.5, 1.5)
            if spec.skewed_traffic:
                keys = sorted(raw)
                heavy = set(rng.sample(keys, max(1, round(0.1 * len(keys)))))
                for key in keys:
                    raw[key] = (rng.uniform(400.0, 2000.0) if key in heavy
                                else rng.uniform(0.2, 1.0))
            target = (n * spec.mean_demand.nic / 2.0 * rng.uniform(0.85, 1.15)
                      * spec.burst_multiplier(rng))
            scale = target / sum(raw.values())
            traffic = {key: w * scale for key, w in raw.items()}
        else:
            traffic = {}

        rows = {v: sum(bw for key, bw in traffic.items() if v in key) for v in vm_ids}
        mean_row = sum(rows.values()) / n if n else 0.0
        vms = []
        for v in vm_ids:
            rel = rows[v] / mean_row if mean_row > 0 else 1.0
            w = spec.traffic_weight
            cpu = spec.mean_demand.cpu * (w * rel + (1 - w))
            mem = spec.mean_demand.mem * (w * rel + (1 - w))
            cpu *= rng.uniform(1 - spec.demand_noise, 1 + spec.demand_noise)
            mem *= rng.uniform(1 - spec.demand_noise, 1 + spec.demand_noise)
            cpu = min(max(cpu, 0.01 * spec.reference.host.cpu), 0.95 * spec.reference.host.cpu)
            mem = min(max(mem, 0.01 * spec.reference.host.mem), 0.95 * spec.reference.host.mem)
            vms.append(VM(id=v, demand=ResourceVector(cpu, mem, rows[v])))

        app = Application(id=app_id, vms=tuple(vms), traffic=traffic,
                          reference=spec.reference)
        validate_application(app)
        apps.append(app)
    return apps


# -- file loading -------------------------------------------------------------------


def load_workload(path: str, reference: Reference) -> list[Application]:
    """Load applications from a JSON document (schema documented in the README).

    Edges are declared once per pair and symmetrized; a VM's NIC demand
    defaults to the sum of its traffic rows when absent.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise WorkloadError(f"{path}: not valid JSON ({exc})") from exc
    if "apps" not in doc or not isinstance(doc["apps"], list):
        raise WorkloadError(f"{path}: missing top-level 'apps' list")

    apps = []
    for ai, rec in enumerate(doc["apps"]):
        where = f"{path}: apps[{ai}]"
        try:
            app_id = str(rec["id"])
        except (KeyError, TypeError) as exc:
            raise WorkloadError(f"{where}: missing id ({exc})") from exc
        vm_recs = rec.get("vms", [])
        if not vm_recs:
            raise WorkloadError(f"{where} ({app_id}): no VMs")

        traffic: dict[tuple[str, str], float] = {}
        vm_ids = {str(v.get("id")) for v in vm_recs}
        for ei, edge in enumerate(rec.get("edges", [])):
            try:
                x, y = str(edge["a"]), str(edge["b"])
                bw = float(edge["mbps"])
            except (KeyError, TypeError, ValueError) as exc:
                raise WorkloadError(f"{where}: edges[{ei}]: {exc}") from exc
            if x == y:
                raise WorkloadError(f"{where}: edges[{ei}]: self-edge on {x}")
            if x not in vm_ids or y not in vm_ids:
                missing = x if x not in vm_ids else y
                raise WorkloadError(f"{where}: edges[{ei}]: unknown VM {missing!r}")
            key = (x, y) if x < y else (y, x)
            if key in traffic:
                raise WorkloadError(f"{where}: edges[{ei}]: duplicate edge {key}")
            traffic[key] = bw

        vms = []
        for vi, v in enumerate(vm_recs):
            try:
                vm_id = str(v["id"])
                cpu = float(v["cpu_mhz"])
                mem = float(v["mem_mb"])
            except (KeyError, TypeError, ValueError) as exc:
                raise WorkloadError(f"{where}: vms[{vi}]: {exc}") from exc
            rows = sum(bw for key, bw in traffic.items() if vm_id in key)
            nic = float(v["nic_mbps"]) if "nic_mbps" in v else rows
            vms.append(VM(id=vm_id, demand=ResourceVector(cpu, mem, nic)))

        app = Application(id=app_id, vms=tuple(vms), traffic=traffic, reference=reference)
        try:
            validate_application(app)
        except WorkloadError as exc:
            raise WorkloadError(f"{where}: {exc}") from exc
        apps.append(app)
    return apps
