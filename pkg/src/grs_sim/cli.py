"""Command-line entry points.

    grs-sim run            start panels + gateway and serve HTTP
    grs-sim scenario       execute a scripted scenario, exit 1 on failure
    grs-sim dump-codebook  print the protocol character table
    grs-sim dump-waveform  write the line waveform of one character
    grs-sim dump-map       write the canonical signal map file
    grs-sim add-user       append a credential record

Exit codes: 0 success, 1 scenario assertion failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import getpass
import logging
import os
import signal
import sys
import threading

from .codec import generate_codebook
from .framing import frame_byte, waveform_columns
from .gateway.auth import format_record
from .scenario import GRACE_S, ScenarioError, run_scenario_file
from .sim import ConfigError, SimConfig, Simulation, load_config
from .signal_map import build_default_map, load_map, render_map

log = logging.getLogger("grs_sim")


def _load_cfg(args: argparse.Namespace) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if getattr(args, "log_dir", None):
        os.makedirs(args.log_dir, exist_ok=True)
        cfg.log_path = os.path.join(args.log_dir, "audit.log")
    if getattr(args, "listen", None):
        cfg.listen = args.listen
    return cfg


def _map_for(args: argparse.Namespace):
    return load_map(args.map) if getattr(args, "map", None) else build_default_map()


def cmd_run(args: argparse.Namespace) -> int:
    from .gateway.http import RunningGateway

    cfg = _load_cfg(args)
    sim = Simulation(cfg, seed=args.seed)
    gateway = RunningGateway(sim, realtime=args.realtime).start()
    print(f"gateway listening on {gateway.url}")
    print(f"panels: {', '.join(sim.core.panels)}")
    sys.stdout.flush()

    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        gateway.stop()
        sim.close()
    return 0


def cmd_scenario(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    report = run_scenario_file(args.script, cfg, seed=args.seed, grace=args.grace)
    sys.stdout.write(report.render())
    return 0 if report.passed else 1


def cmd_dump_codebook(args: argparse.Namespace) -> int:
    codebook = generate_codebook(_map_for(args))
    sys.stdout.write(codebook.dump_text())
    return 0


def cmd_dump_waveform(args: argparse.Namespace) -> int:
    codebook = generate_codebook(_map_for(args))
    byte = ord(args.char) if len(args.char) == 1 else -1
    if byte not in codebook.commands and byte not in codebook.statuses:
        commands = "".join(sorted(chr(c) for c in codebook.commands))
        statuses = "".join(sorted(chr(c) for c in codebook.statuses))
        print(f"error: {args.char!r} is not an assigned character\n"
              f"  command alphabet: {commands}\n"
              f"  status alphabet:  {statuses}", file=sys.stderr)
        return 2
    frame = frame_byte(byte, args.baud)
    text = waveform_columns(frame)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.png:
        _write_png(frame, args.png)
    return 0


def _write_png(frame, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .framing import render_waveform

    trace = render_waveform(frame)
    xs, ys = [0.0], [1]
    for start, end, level in trace.segments():
        xs += [start, end]
        ys += [level, level]
    xs.append(trace.duration * 1.2)
    ys.append(1)
    fig, ax = plt.subplots(figsize=(8, 2.5))
    ax.step(xs, ys, where="post")
    ax.set_ylim(-0.2, 1.2)
    ax.set_xlabel("seconds")
    ax.set_ylabel("level")
    ax.set_title(f"character {chr(frame.data)!r} (0x{frame.data:02x})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_dump_map(args: argparse.Namespace) -> int:
    text = render_map(build_default_map())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_add_user(args: argparse.Namespace) -> int:
    password = args.password or getpass.getpass(f"password for {args.username}: ")
    panels = args.panels.split(",") if args.panels else None
    record = format_record(args.username, password, panels=panels)
    with open(args.credentials, "a", encoding="utf-8") as fh:
        fh.write(record + "\n")
    print(f"added {args.username!r} to {args.credentials}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grs-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="start the integrated simulation")
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--realtime", action="store_true",
                       help="pace the virtual clock to wall time")
    p_run.add_argument("--log-dir", help="directory for the audit log")
    p_run.add_argument("--listen", help="host:port override")
    p_run.set_defaults(fn=cmd_run)

    p_sc = sub.add_parser("scenario", help="run a scripted scenario")
    p_sc.add_argument("script")
    p_sc.add_argument("--config", help="JSON config file")
    p_sc.add_argument("--seed", type=int, default=0)
    p_sc.add_argument("--log-dir", help="directory for the audit log")
    p_sc.add_argument("--grace", type=float, default=GRACE_S,
                      help="seconds to keep running after the last directive")
    p_sc.set_defaults(fn=cmd_scenario)

    p_cb = sub.add_parser("dump-codebook", help="print the character table")
    p_cb.add_argument("--map", help="signal map file (default: built-in)")
    p_cb.set_defaults(fn=cmd_dump_codebook)

    p_wf = sub.add_parser("dump-waveform", help="write one character's waveform")
    p_wf.add_argument("char")
    p_wf.add_argument("--out", help="output file (default: stdout)")
    p_wf.add_argument("--png", help="also render a PNG (needs matplotlib)")
    p_wf.add_argument("--baud", type=float, default=9600.0)
    p_wf.add_argument("--map", help="signal map file (default: built-in)")
    p_wf.set_defaults(fn=cmd_dump_waveform)

    p_dm = sub.add_parser("dump-map", help="write the canonical signal map")
    p_dm.add_argument("--out", help="output file (default: stdout)")
    p_dm.set_defaults(fn=cmd_dump_map)

    p_au = sub.add_parser("add-user", help="append a credential record")
    p_au.add_argument("credentials")
    p_au.add_argument("username")
    p_au.add_argument("--password")
    p_au.add_argument("--panels", help="comma-separated panel ids (default: all)")
    p_au.set_defaults(fn=cmd_add_user)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("GRS_SIM_LOGLEVEL", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
