#!/usr/bin/env python3
"""Record a panel stream for the pump-indication scenario and write it as
a JSON fixture the UI tests replay. Run from the repository root after
installing the Python package:

    python3 frontend/tools/record_scenario1_stream.py
"""

import json
import os

from grs_sim.sim import SimConfig, Simulation
from grs_sim.signal_map import PUMP_IN_OPERATION, RESET_BUTTON

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures",
                   "scenario1-stream.json")


def main() -> None:
    sim = Simulation(SimConfig())
    sim.auth.store.add("recorder", "pw", iterations=1000)
    token = sim.core.authenticate("recorder", "pw").token

    sub = sim.core.subscribe(token, "panel-1")
    sim.core.press_button(token, "panel-1", RESET_BUTTON)
    sim.run_for(0.5)
    sim.panel("panel-1").force_input(PUMP_IN_OPERATION, True)
    sim.run_for(2.0)

    events = []
    while not sub.queue.empty():
        events.append(sub.queue.get_nowait())
    sim.close()

    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        json.dump(events, fh, indent=1)
    print(f"wrote {len(events)} events to {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
