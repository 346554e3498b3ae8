#!/usr/bin/env python3
"""Writes the bundled scenarios. Calibration values come from
tests/oracles/fit_calibration.py (fit, not measured, except the 600 px /
1 instance accelerator cells)."""
import json, os, sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests", "oracles"))
from fit_calibration import fit  # noqa: E402

KIND = {"up-squared": "VPU", "jetson-nano": "GPU", "coral-dev": "TPU"}


def devices():
    out = []
    for name, (cpu, acc, cpu12, acc12) in fit().items():
        out.append({
            "name": name, "accelerator": KIND[name],
            "frame_sizes": [600, 1200], "instance_counts": [1, 2, 3, 4],
            "cpu_ms": [[float(x) for x in cpu], cpu12],
            "accel_ms": [[float(x) for x in acc], acc12],
            "model_load_ms": 2000.0, "max_instances": 4, "cpu_pre_fraction": 0.7,
        })
    return out


PAPER_LINK = {"alpha": 1.6878, "beta": 0.0, "scale": 0.098, "location": 13.405}


def link(loc):
    return dict(PAPER_LINK, location=loc)


def network(links=()):
    return {
        "edge_edge": PAPER_LINK,
        "edge_end": PAPER_LINK,
        "links": list(links),
        "ema_weights": {"w_1m": 0.2, "w_5m": 0.3, "w_15m": 0.5},
        "link_budget_ms": 50.0, "floor_ms": 0.1,
        "gossip": {"message_bytes": 13.672, "interval_s": 1.5e-5},
    }


def orchestrator(policy="min-latency"):
    return {
        "policy": policy, "weights": {"alpha": 0.3, "beta": 0.4, "gamma": 0.3},
        "thresholds": {"warning_from": 0.75, "critical_above": 0.9},
        "cool_down_s": 5.0, "handover_overhead_ms": 50.0, "offloading": True,
        "profiler_window": 20,
    }


def ed(i, fps, frame, start=0.0):
    return {"id": "rpi-%d" % i, "fps": fps, "frame_size_px": frame, "qos_ms": 150.0,
            "service": "objd.inference.service.consul", "start_s": start}


def scenario(name, eds, links=(), policy="min-latency", duration=60.0, faults=()):
    return {
        "name": name, "devices": devices(), "end_devices": eds,
        "network": network(links), "orchestrator": orchestrator(policy),
        "discovery": {"services": ["objd"], "propagation_delay_s": 0.0},
        "sim": {"duration_s": duration, "seed": 42, "health_epoch_s": 1.0, "preload_models": True},
        "faults": list(faults),
    }


# Every end-device sits next to the Jetson Nano. Odd-numbered devices have the
# UP Squared as their runner-up, even-numbered ones the Coral board.
GEOMETRY = {
    "rpi-1": {"jetson-nano": 3.0, "up-squared": 12.0, "coral-dev": 25.0},
    "rpi-2": {"jetson-nano": 3.0, "coral-dev": 6.0, "up-squared": 25.0},
    "rpi-3": {"jetson-nano": 3.0, "up-squared": 12.0, "coral-dev": 25.0},
    "rpi-4": {"jetson-nano": 3.0, "coral-dev": 6.0, "up-squared": 25.0},
}
NEAR_JETSON = [
    {"a": ed, "b": node, "params": link(loc)}
    for ed, row in GEOMETRY.items()
    for node, loc in sorted(row.items())
]

SCENARIOS = {
    "default.json": scenario("default", [ed(1, 5, 600), ed(2, 5, 600, 2.0),
                                         ed(3, 5, 600, 4.0), ed(4, 5, 600, 6.0)]),
    "overload.json": scenario("overload", [ed(1, 8, 600), ed(2, 8, 600, 5.0),
                                           ed(3, 8, 600, 10.0), ed(4, 8, 600, 15.0)], NEAR_JETSON),
    # Mixed frame rates over the stock links, where the two policies part ways.
    "heterogeneous_load.json": scenario("heterogeneous-load",
                                        [ed(1, 8, 600), ed(2, 3, 600, 3.0),
                                         ed(3, 6, 600, 6.0), ed(4, 4, 600, 9.0)]),
}

if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    for fname, sc in SCENARIOS.items():
        with open(os.path.join(here, fname), "w") as f:
            json.dump(sc, f, indent=2)
            f.write("\n")
        print("wrote", fname)
