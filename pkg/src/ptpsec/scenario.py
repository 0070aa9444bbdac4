"""Scenario configuration: INI parsing, topology construction, outputs.

A scenario file has a `[scenario]` section, one `[node.<name>]` section
per clock, an optional `[link]` section and an optional `[adversary]`
section.  All keys are flat `key = value` pairs.  Keys/certificates are
derived deterministically from the scenario seed so identical
config+seed runs produce byte-identical CSVs.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
from dataclasses import dataclass, field
from pathlib import Path

from . import attacks, security, session
from .identity import AddressKind, NetworkAddress, clock_id_from_network
from .node import MODE_NAMES, NodeConfig, PtpNode, SecurityMode
from .simnet import (
    CAPABILITY_CLASSES,
    Adversary,
    AdversaryCapability,
    LinkModel,
    MetricsLog,
    Simulation,
)
from .timemath import ServoState
from .wire import AnnounceBody

SECONDS = 1_000_000_000

# Effectively uncapped slew for scenarios that do not set a drift threshold.
UNCAPPED_SLEW = 10**15


class ConfigError(Exception):
    """Scenario file rejected; message carries location detail."""


def parse_address(text: str) -> NetworkAddress:
    kind, _, rest = text.partition(":")
    if kind == "mac":
        return NetworkAddress.mac(rest)
    if kind == "ipv4":
        return NetworkAddress.ipv4(rest)
    raise ConfigError(f"unknown address kind in {text!r} (use mac:.. or ipv4:..)")


@dataclass
class AdversarySpec:
    capability_class: str
    address: NetworkAddress
    attack: str
    params: dict[str, str] = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    name: str
    horizon_s: float
    seed: int
    nodes: list[NodeConfig]
    link: LinkModel
    adversary: AdversarySpec | None = None
    success_threshold_ns: int = 5_000_000
    description: str = ""


def _derive_seed(seed: int, purpose: str) -> bytes:
    return hashlib.sha256(f"{seed}:{purpose}".encode()).digest()


def _get(section, key, conv, default):
    if key not in section:
        return default
    try:
        return conv(section[key])
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"section [{section.name}] key {key}: {exc}") from exc


def _addr(text: str, where: str):
    try:
        return parse_address(text)
    except ValueError as exc:
        raise ConfigError(f"[{where}] bad address {text!r}: {exc}") from exc


def _int(text: str) -> int:
    return int(text.strip(), 0)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def load_config(path) -> ScenarioConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        # configparser messages carry the offending line number.
        raise ConfigError(str(exc)) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc

    if "scenario" not in parser:
        raise ConfigError("missing [scenario] section")
    sc = parser["scenario"]
    name = sc.get("name") or Path(path).stem
    horizon_s = _get(sc, "horizon_s", float, 60.0)
    seed = _get(sc, "seed", _int, 1)
    threshold = int(_get(sc, "success_threshold_ms", float, 5.0) * 1_000_000)
    description = sc.get("description", "")

    link_section = parser["link"] if "link" in parser else {}
    link = LinkModel(
        base_delay_ns=int(_get(link_section, "base_delay_us", float, 100.0) * 1000)
        if link_section
        else 100_000,
        jitter_ns=int(_get(link_section, "jitter_us", float, 0.0) * 1000)
        if link_section
        else 0,
    )

    nodes: list[NodeConfig] = []
    for section_name in parser.sections():
        if not section_name.startswith("node."):
            continue
        section = parser[section_name]
        node_name = section_name[len("node.") :]
        if "address" not in section:
            raise ConfigError(f"[{section_name}] missing address")
        mode_text = section.get("security_mode", "none").lower()
        if mode_text not in MODE_NAMES:
            raise ConfigError(f"[{section_name}] unknown security_mode {mode_text!r}")
        whitelist = None
        if "whitelist" in section:
            entries = [e.strip() for e in section["whitelist"].split(",") if e.strip()]
            whitelist = frozenset(
                (a.kind, a.octets)
                for a in (_addr(e, section_name) for e in entries)
            )
        servo = ServoState(
            gain=_get(section, "gain", float, 0.1),
            panicThreshold=int(_get(section, "panic_threshold_ms", float, 1000.0) * 1e6),
            maxSlewRate=int(_get(section, "max_slew_ms_per_s", float, 0) * 1e6)
            or UNCAPPED_SLEW,
            maxDelayLimit=(
                int(section.getfloat("max_delay_limit_ms") * 1e6)
                if "max_delay_limit_ms" in section
                else None
            ),
        )
        nodes.append(
            NodeConfig(
                name=node_name,
                address=_addr(section["address"], section_name),
                security_mode=MODE_NAMES[mode_text],
                master_capable=_get(section, "master", _bool, False),
                priority1=_get(section, "priority1", _int, 128),
                priority2=_get(section, "priority2", _int, 128),
                clock_class=_get(section, "clock_class", _int, 248),
                clock_accuracy=_get(section, "clock_accuracy", _int, 0xFE),
                drift_ppb=_get(section, "drift_ppb", _int, 0),
                sync_interval_ns=int(_get(section, "sync_interval_s", float, 1.0) * SECONDS),
                announce_interval_ns=int(
                    _get(section, "announce_interval_s", float, 2.0) * SECONDS
                ),
                delayreq_interval_ns=int(
                    _get(section, "delayreq_interval_s", float, 1.0) * SECONDS
                ),
                window_size=_get(section, "window_size", _int, session.DEFAULT_WINDOW_SIZE),
                id_space_bits=_get(section, "id_space_bits", _int, None),
                servo=servo,
                mgmt_whitelist=whitelist,
            )
        )
    if not nodes:
        raise ConfigError("no [node.*] sections")
    seen_addrs = set()
    for cfg in nodes:
        key = (cfg.address.kind, cfg.address.octets)
        if key in seen_addrs:
            raise ConfigError(f"duplicate node address {cfg.address}")
        seen_addrs.add(key)

    adversary = None
    if "adversary" in parser:
        adv = parser["adversary"]
        for required in ("class", "address", "attack"):
            if required not in adv:
                raise ConfigError(f"[adversary] missing {required}")
        if adv["class"] not in CAPABILITY_CLASSES:
            raise ConfigError(f"unknown adversary class {adv['class']!r}")
        adversary = AdversarySpec(
            capability_class=adv["class"],
            address=_addr(adv["address"], "adversary"),
            attack=adv["attack"],
            params={
                k: v
                for k, v in adv.items()
                if k not in ("class", "address", "attack")
            },
        )
    return ScenarioConfig(
        name=name,
        horizon_s=horizon_s,
        seed=seed,
        nodes=nodes,
        link=link,
        adversary=adversary,
        success_threshold_ns=threshold,
        description=description,
    )


# -- topology construction -------------------------------------------


def _needs_group_key(config: ScenarioConfig) -> bool:
    if any(n.security_mode is SecurityMode.SYMMETRIC for n in config.nodes):
        return True
    return False


def _dataset_body(cfg: NodeConfig) -> AnnounceBody:
    return AnnounceBody(
        priority1=cfg.priority1,
        priority2=cfg.priority2,
        clockClass=cfg.clock_class,
        clockAccuracy=cfg.clock_accuracy,
        offsetScaledLogVariance=cfg.offset_scaled_log_variance,
        grandmasterIdentity=clock_id_from_network(cfg.address),
        timeSource=cfg.time_source,
    )


def _make_attack(spec: AdversarySpec, config: ScenarioConfig, group_key, mgmt_key):
    p = spec.params

    def fget(key, default):
        return float(p[key]) if key in p else default

    def iget(key, default):
        return _int(p[key]) if key in p else default

    shift_ns = int(fget("time_shift_ms", 30000.0) * 1e6)
    start_s = fget("start_s", 10.0)
    stop_s = float(p["stop_s"]) if "stop_s" in p else None
    kind = spec.attack
    insider_key = group_key if "insider" in spec.capability_class else None
    if kind == "sync_spoof":
        return attacks.SyncSpoof(
            time_shift_ns=shift_ns,
            rate_pps=fget("rate_pps", 1.0),
            spoof_addr=_bool(p.get("spoof_addr", "false")),
            track_window=_bool(p.get("track_window", "false")),
            start_s=start_s,
            stop_s=stop_s,
            group_key=insider_key,
        )
    if kind == "insider_sync_masquerade":
        return attacks.InsiderSyncMasquerade(
            time_shift_ns=shift_ns,
            group_key=group_key,
            rate_pps=fget("rate_pps", 1.0),
            start_s=start_s,
            stop_s=stop_s,
        )
    if kind == "delay_spoof":
        return attacks.DelaySpoof(
            delay_shift_ns=int(fget("delay_shift_ms", 400.0) * 1e6),
            replay_pps=fget("replay_pps", 0.5),
            start_s=start_s,
            stop_s=stop_s,
        )
    if kind == "blind_window_snatch":
        return attacks.BlindWindowSnatch(
            id_space=1 << iget("id_space_bits", 16),
            window_size=iget("window_size", session.DEFAULT_WINDOW_SIZE),
            rate_pps=fget("rate_pps", 10.0),
            time_shift_ns=shift_ns,
            passes=iget("passes", 1),
            start_s=start_s,
        )
    if kind == "naive_window_attack":
        return attacks.NaiveWindowAttack(
            id_space=1 << iget("id_space_bits", 16),
            window_size=iget("window_size", session.DEFAULT_WINDOW_SIZE),
            k=iget("k", 10),
            rate_pps=fget("rate_pps", 100.0),
            time_shift_ns=shift_ns,
            start_s=start_s,
        )
    if kind == "rogue_master":
        self_sign = None
        if _bool(p.get("self_signed", "false")):
            self_sign = security.KeyPair.from_seed(
                _derive_seed(config.seed, "rogue-selfsign")
            )
        return attacks.RogueMaster(
            time_shift_ns=shift_ns,
            announce_pps=fget("announce_pps", 0.5),
            sync_pps=fget("rate_pps", 1.0),
            start_s=start_s,
            stop_s=stop_s,
            group_key=insider_key,
            self_sign_key=self_sign,
        )
    if kind == "proxy_grandmaster":
        target = p.get("target")
        node = next((n for n in config.nodes if n.name == target), None)
        if node is None:
            raise ConfigError(f"proxy_grandmaster target {target!r} is not a node")
        spoof = parse_address(p["spoof_addr"]) if "spoof_addr" in p else None
        return attacks.ProxyGrandmaster(
            target_addr=node.address,
            time_shift_ns=shift_ns,
            spoof_addr=spoof,
            start_s=start_s,
            settime_after_s=fget("settime_after_s", 15.0),
        )
    raise ConfigError(f"unknown attack {kind!r}")


def build(config: ScenarioConfig) -> Simulation:
    sim = Simulation(seed=config.seed, link=config.link)

    group_key = security.GroupKey(_derive_seed(config.seed, "group-key"))
    mgmt_key = security.KeyPair.from_seed(_derive_seed(config.seed, "mgmt-key"))

    needs_pk = any(n.security_mode is SecurityMode.PUBLIC_KEY for n in config.nodes)
    for cfg in config.nodes:
        extras = {}
        if cfg.security_mode is SecurityMode.SYMMETRIC:
            extras["group_key"] = group_key
        if cfg.security_mode is SecurityMode.PUBLIC_KEY:
            extras["mgmt_pub"] = mgmt_key.publicKey
            if cfg.master_capable:
                keys = security.KeyPair.from_seed(
                    _derive_seed(config.seed, f"node-key:{cfg.name}")
                )
                cert = security.make_certificate(
                    _dataset_body(cfg), keys.publicKey, mgmt_key
                )
                extras["keys"] = keys
                extras["certificate"] = cert
        from dataclasses import replace as dc_replace

        node_cfg = dc_replace(cfg, **extras) if extras else cfg
        sim.add_node(PtpNode(node_cfg, sim.rng))

    if config.adversary is not None:
        spec = config.adversary
        capability = CAPABILITY_CLASSES[spec.capability_class]()
        attack = _make_attack(spec, config, group_key, mgmt_key)
        sim.set_adversary(Adversary(spec.address, capability, attack))
    _ = needs_pk
    return sim


# -- outputs ---------------------------------------------------------


def offsets_csv(metrics: MetricsLog) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["time_ns", "node", "true_offset_ns"])
    writer.writerows(metrics.offsets)
    return out.getvalue()


def verdicts_csv(metrics: MetricsLog) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["time_ns", "node", "msg_type", "seq_id", "verdict", "reason", "from_adversary"]
    )
    for v in metrics.verdicts:
        writer.writerow(
            [
                v.time_ns,
                v.node,
                v.msg_type,
                v.seq_id,
                "accept" if v.accepted else "drop",
                v.reason,
                int(v.from_adversary),
            ]
        )
    return out.getvalue()


def summarize(config: ScenarioConfig, sim: Simulation, metrics: MetricsLog) -> str:
    adversary_names = set()
    attacker_clock = None
    if config.adversary is not None:
        attacker_clock = str(clock_id_from_network(config.adversary.address))

    max_offset = 0
    for _, node, offset in metrics.offsets:
        if node not in adversary_names:
            max_offset = max(max_offset, abs(offset))

    hostile_election = any(
        chosen == attacker_clock for _, _, chosen in metrics.elections
    ) if attacker_clock else False
    success = max_offset > config.success_threshold_ns or hostile_election

    drops: dict[str, int] = {}
    accepted_attack = 0
    for v in metrics.verdicts:
        if not v.accepted:
            drops[v.reason] = drops.get(v.reason, 0) + 1
        elif v.from_adversary:
            accepted_attack += 1

    lines = [
        f"scenario: {config.name}",
        f"seed: {config.seed}",
        f"horizon_s: {config.horizon_s:g}",
        f"attack: {config.adversary.attack if config.adversary else 'none'}",
        f"adversary_class: {config.adversary.capability_class if config.adversary else 'none'}",
        f"attack_success: {success}",
        f"hostile_election: {hostile_election}",
        f"max_abs_offset_error_ns: {max_offset}",
        f"messages_sent: {metrics.counters.get('sent', 0)}",
        f"attack_packets_sent: {metrics.counters.get('attack_sent', 0)}",
        f"accepted_attack_packets: {accepted_attack}",
    ]
    if config.adversary is not None:
        params = config.adversary.params
        lines.append(f"attack_start_s: {params.get('start_s', '10')}")
        if "stop_s" in params:
            lines.append(f"attack_stop_s: {params['stop_s']}")
    for reason in sorted(drops):
        lines.append(f"drops.{reason}: {drops[reason]}")
    for key in sorted(metrics.counters):
        lines.append(f"counters.{key}: {metrics.counters[key]}")
    return "\n".join(lines) + "\n"


def run_scenario(config: ScenarioConfig, out_dir: Path) -> dict[str, Path]:
    sim = build(config)
    metrics = sim.run(int(config.horizon_s * SECONDS))
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "offsets": out_dir / f"{config.name}_offsets.csv",
        "verdicts": out_dir / f"{config.name}_verdicts.csv",
        "summary": out_dir / f"{config.name}_summary.txt",
    }
    paths["offsets"].write_text(offsets_csv(metrics), encoding="utf-8")
    paths["verdicts"].write_text(verdicts_csv(metrics), encoding="utf-8")
    paths["summary"].write_text(summarize(config, sim, metrics), encoding="utf-8")
    return paths
