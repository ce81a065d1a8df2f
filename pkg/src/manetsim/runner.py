"""Build a world from a scenario, run it, and compare protocol arms."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from manetsim import rng
from manetsim.aodv import AodvNode
from manetsim.energy import Battery
from manetsim.kernel import Network, Topology, assign_initial_energy, place_nodes
from manetsim.metrics import MetricsReport, dijkstra_oracle, sort_reports
from manetsim.pcaodv import PcAodvNode
from manetsim.scenario import FlowSpec, ScenarioConfig, normalize_protocol


@dataclass
class Simulation:
    config: ScenarioConfig
    protocol: str
    seed: int
    net: Network
    nodes: list[AodvNode]
    flows: list[FlowSpec]
    phases: list[float]

    @property
    def metrics(self) -> MetricsReport:
        return self.net.metrics

    @property
    def topology(self) -> Topology:
        return self.net.topology

    def run(self, until: float | None = None) -> MetricsReport:
        t_end = self.config.sim_time if until is None else until
        self.net.scheduler.run_until(t_end)
        m = self.net.metrics
        m.total_energy_drained = math.fsum(n.battery.drained for n in self.nodes)
        return m

    def state_digest(self) -> str:
        h = hashlib.sha256()
        m = self.net.metrics
        h.update(repr(sorted(m.counters().items())).encode())
        for n in self.nodes:
            h.update(repr((n.id, n.seq, n.dead, n.battery.level)).encode())
            for d, e in sorted(n.routes.items()):
                h.update(repr((d, e.next_hop, e.hop_count, e.dest_seq, e.valid,
                               e.lifetime_expiry, sorted(e.precursors))).encode())
        if self.net.trace is not None:
            for line in self.net.trace:
                h.update(line.encode())
        return h.hexdigest()


def initial_energies(config: ScenarioConfig, seed: int) -> list[float]:
    lo, hi = config.energy_init
    levels = assign_initial_energy(config.nodes, seed, lo, hi, config.e_max)
    if config.energy_low_fraction > 0:
        r = rng.stream(seed, "energy-low")
        k = round(config.energy_low_fraction * config.nodes)
        lo_l, hi_l = config.energy_low_range
        for i in sorted(r.sample(range(config.nodes), k)):
            levels[i] = lo_l + (hi_l - lo_l) * r.random()
    for i, e in config.energies.items():
        levels[i] = e
    return levels


def build_topology(config: ScenarioConfig, seed: int) -> Topology:
    if config.positions:
        pos = [config.positions[i] for i in range(config.nodes)]
    else:
        pos = place_nodes(config.nodes, config.area, seed)
    return Topology(pos, config.area, config.comm_range)


def resolve_flows(config: ScenarioConfig, topo: Topology, seed: int) -> list[FlowSpec]:
    flows = list(config.flows)
    rf = config.random_flows
    if rf is None or rf.count == 0:
        return flows
    r = rng.stream(seed, "flows")
    n = config.nodes
    for _ in range(rf.count):
        # prefer endpoints in the same component; give up after a bounded search
        pair = None
        for _attempt in range(64):
            a, b = r.randrange(n), r.randrange(n)
            if a != b and dijkstra_oracle(topo, a, b) is not None:
                pair = (a, b)
                break
        if pair is None:
            a = r.randrange(n)
            b = (a + 1 + r.randrange(n - 1)) % n
            pair = (a, b)
        flows.append(FlowSpec(pair[0], pair[1], rf.start, rf.interval, rf.packets))
    return flows


def build(config: ScenarioConfig, protocol: str | None = None, seed: int | None = None,
          trace: bool = False) -> Simulation:
    protocol = normalize_protocol(protocol or config.protocol)
    seed = config.seed if seed is None else seed
    topo = build_topology(config, seed)
    metrics = MetricsReport(
        run_id=f"{config.name}-{protocol}-n{config.nodes}-s{seed}",
        protocol=protocol, nodes=config.nodes, seed=seed, sim_time_s=float(config.sim_time),
    )
    sizes = config.sizes()
    net = Network(topo, metrics, sizes=sizes, energy_model=config.energy(),
                  propagation_delay=config.propagation_delay, trace=trace,
                  link_feedback=config.link_feedback)
    aodv_cfg = config.aodv_config()
    pc_cfg = config.pc_config() if protocol == "pc-aodv" else None
    nodes: list[AodvNode] = []
    for i, level in enumerate(initial_energies(config, seed)):
        bat = Battery(level=level, e_max=config.e_max, voltage=config.battery_voltage,
                      current=config.battery_current, death_threshold=config.death_level)
        if pc_cfg is None:
            nodes.append(AodvNode(i, net, bat, aodv_cfg))
        else:
            nodes.append(PcAodvNode(i, net, bat, aodv_cfg, pc_cfg))
    net.attach(nodes)

    hi = config.hello_interval
    r = rng.stream(seed, "hello-phase")
    phases = [hi * (1.0 - r.random()) for _ in nodes]  # in (0, HI]
    for node, phase in zip(nodes, phases):
        node.start(phase)

    flows = resolve_flows(config, topo, seed)
    uid = 0
    for f in flows:
        payload = config.payload(f.data_bytes).bits
        _schedule_flow(net, nodes[f.src], f, payload, config.data_header_bits, uid)
        uid += 1_000_000
    return Simulation(config, protocol, seed, net, nodes, flows, phases)


def _schedule_flow(net: Network, node: AodvNode, f: FlowSpec, payload: int, header: int,
                   uid_base: int) -> None:
    def fire(k: int) -> None:
        node.send_data(f.dst, payload, header, uid_base + k)
        if k + 1 < f.count:
            net.scheduler.schedule(f.start + (k + 1) * f.interval, node.id, fire, k + 1)

    if f.count > 0:
        net.scheduler.schedule(f.start, node.id, fire, 0)


def run(config: ScenarioConfig, protocol: str | None = None, seed: int | None = None,
        trace_path: str | None = None) -> MetricsReport:
    sim = build(config, protocol, seed, trace=trace_path is not None)
    report = sim.run()
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            fh.write("time\tnode\tevent\tkind\tsrc\tdst\tdetail\n")
            for line in sim.net.trace:
                fh.write(line + "\n")
    return report


def _run_job(job: tuple[ScenarioConfig, str, int]) -> MetricsReport:
    config, protocol, seed = job
    return run(config, protocol, seed)


def run_many(jobs: Sequence[tuple[ScenarioConfig, str, int]], workers: int = 1) -> list[MetricsReport]:
    if workers <= 1 or len(jobs) <= 1:
        reports = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_job, jobs))
    return sort_reports(reports)


DELTA_FIELDS = ("hello_sent", "hello_recv", "ack_sent", "ack_recv", "rreq_sent", "rrep_sent",
                "rerr_sent", "data_sent", "data_delivered", "overhead", "pdr_rrep", "pdr_data",
                "total_energy_drained", "forced_unsafe")


@dataclass
class Comparison:
    reports: list[MetricsReport]
    deltas: dict[str, float]

    def delta_row(self) -> list[str]:
        head = ["mean_delta", "pc-aodv-minus-aodv", str(self.reports[0].nodes if self.reports else 0),
                "", f"{self.reports[0].sim_time_s:.6f}" if self.reports else ""]
        return head + [f"{self.deltas[k]:.6f}" for k in DELTA_FIELDS]


def mean_deltas(reports: Iterable[MetricsReport]) -> dict[str, float]:
    by_arm: dict[str, dict[tuple[int, int], MetricsReport]] = {"aodv": {}, "pc-aodv": {}}
    for r in reports:
        by_arm[r.protocol][(r.nodes, r.seed)] = r
    keys = sorted(set(by_arm["aodv"]) & set(by_arm["pc-aodv"]))
    out = {}
    for f in DELTA_FIELDS:
        diffs = [float(getattr(by_arm["pc-aodv"][k], f)) - float(getattr(by_arm["aodv"][k], f))
                 for k in keys]
        out[f] = math.fsum(diffs) / len(diffs) if diffs else 0.0
    return out


def compare(config: ScenarioConfig, seeds: Sequence[int], workers: int = 1) -> Comparison:
    if not seeds:
        raise ValueError("need at least one seed")
    jobs = [(config, p, s) for s in seeds for p in ("aodv", "pc-aodv")]
    reports = run_many(jobs, workers)
    return Comparison(reports, mean_deltas(reports))


def sweep(config: ScenarioConfig, node_counts: Sequence[int], seeds: Sequence[int],
          protocols: Sequence[str] = ("aodv", "pc-aodv"), workers: int = 1) -> list[MetricsReport]:
    jobs = [(config.replace(nodes=n), normalize_protocol(p), s)
            for n in node_counts for s in seeds for p in protocols]
    return run_many(jobs, workers)
