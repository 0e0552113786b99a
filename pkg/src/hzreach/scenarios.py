"""Reference experiment configurations for the two benchmark systems.

Both return plain dicts in the CLI's configuration schema; write them
to JSON and point `hzreach --config` at the file, or consume them
directly from Python.
"""

from __future__ import annotations


def benchmark_reach_config(seed: int = 7041, horizon: int = 5) -> dict:
    """Two-mode planar system switching on x1 = 0, rotating around the guard."""
    return {
        "seed": seed,
        "output_dir": "out",
        "system": {
            "regions": [
                {"type": "polyhedral_region", "L": [[1.0, 0.0]], "rho": [0.0], "dim": 2},
                {"type": "polyhedral_region", "L": [[-1.0, 0.0]], "rho": [0.0], "dim": 2},
            ],
            "modes": [
                {"A": [[0.75, 0.25], [-0.25, 0.75]], "B": [[-0.25], [-0.25]]},
                {"A": [[0.75, -0.25], [0.25, 0.75]], "B": [[0.25], [-0.25]]},
            ],
            "noise_w": {
                "type": "zonotope",
                "center": [0.0, 0.0],
                "generators": [[0.005, 0.0], [0.0, 0.005]],
            },
        },
        "initial_set": {
            "type": "zonotope",
            "center": [-1.51, 2.55],
            "generators": [[0.25, -0.19], [0.19, 0.25]],
        },
        "input_set": {"type": "zonotope", "center": [0.0], "generators": [[1.0]]},
        "horizon": horizon,
        "data": {"episodes": 2, "length": 25},
        "reach": {"bin_cap": 64},
    }


def mimo_estimation_config(
    seed: int = 9313,
    steps: int = 20,
    measurement_noise: float = 1e-5,
    process_noise: float = 0.01,
) -> dict:
    """Single-mode planar system observed by three sensors.

    The measurement-noise radius is kept small: the implicit-intersection
    update matches the exact intersection only up to a gap that scales
    linearly with that radius.
    """
    return {
        "seed": seed,
        "output_dir": "out",
        "system": {
            "regions": [
                {"type": "polyhedral_region", "L": [], "rho": [], "dim": 2}
            ],
            "modes": [
                {"A": [[0.9455, -0.2426], [0.2486, 0.9455]], "B": [[0.1], [0.0]]}
            ],
            "noise_w": {
                "type": "zonotope",
                "center": [0.0, 0.0],
                "generators": [
                    [process_noise, 0.0],
                    [0.0, process_noise],
                ],
            },
            "sensors": [
                {
                    "C": [[1.0, 0.4]],
                    "noise": {
                        "type": "zonotope",
                        "center": [0.0],
                        "generators": [[measurement_noise]],
                    },
                },
                {
                    "C": [[0.9, -1.2]],
                    "noise": {
                        "type": "zonotope",
                        "center": [0.0],
                        "generators": [[measurement_noise]],
                    },
                },
                {
                    "C": [[-0.8, 0.2], [0.0, 0.7]],
                    "noise": {
                        "type": "zonotope",
                        "center": [0.0, 0.0],
                        "generators": [
                            [measurement_noise, 0.0],
                            [0.0, measurement_noise],
                        ],
                    },
                },
            ],
        },
        "initial_set": {
            "type": "zonotope",
            "center": [0.0, 0.0],
            "generators": [[15.0, 0.0], [0.0, 15.0]],
        },
        "input_set": {"type": "zonotope", "center": [0.0], "generators": [[1.0]]},
        "horizon": steps,
        "data": {"episodes": 2, "length": 30},
        "estimation": {
            "alpha": 1.0,
            "a_bound": 1.5,
            "method": "all",
            "steps": steps,
            "x0_true": [-10.0, 10.0],
            "models": "outputs",
        },
        "reach": {"bin_cap": 64},
    }
