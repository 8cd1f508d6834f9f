"""
ProbeLab Configuration
======================
Paths, run-time knobs and experiment presets.

Usage:
    from probe_lab.lab_config import RESULTS_DIR, PRESETS, get_preset
"""

import os
from copy import deepcopy
from pathlib import Path
from typing import Dict, List

from dotenv import find_dotenv, load_dotenv

from probe_lab.oracle import MIN_TAIL_TRIALS

# Load environment variables
dotenv_path = find_dotenv(usecwd=True)
if dotenv_path:
    load_dotenv(dotenv_path)
else:
    load_dotenv()

# ===================================
# FILE PATHS
# ===================================

PACKAGE_DIR  = Path(__file__).parent
FIXTURES_DIR = PACKAGE_DIR / "fixtures"
RESULTS_DIR  = Path(os.getenv("PROBELAB_RESULTS_DIR", str(PACKAGE_DIR / "results")))

COUNTEREXAMPLE_FIXTURE = FIXTURES_DIR / "counterexample.txt"
LEMMA_FIXTURES = sorted(FIXTURES_DIR.glob("dp_pair_*.txt"))

# ===================================
# RUN-TIME KNOBS
# ===================================

DEFAULT_WORKERS = max(1, int(os.getenv("PROBELAB_WORKERS", "1")))

# Monte-Carlo trials for the tail-bound suite; never below 10^4
TAIL_TRIALS = max(MIN_TAIL_TRIALS, int(os.getenv("PROBELAB_TRIALS", str(MIN_TAIL_TRIALS))))

DEFAULT_CHECKPOINTS: List[int] = [100, 1_000, 10_000, 100_000]

# Randomised sweep sizes for the lemma suite
LEMMA_SWEEP_SIZE = 1000
LEMMA_ETAS       = (0.1, 0.2, 0.4)
MIXED_MIN_PS     = (0.5, 0.8, 1.0)
EXPLORATORY_ETA  = 0.45

# ===================================
# EXPERIMENT PRESETS
# ===================================

_BANDIT_MEANS = [0.5, 0.45, 0.4, 0.35, 0.3]

_ALTERNATING_EXPERTS = {
    "kind": "adversarial",
    "options": "simplex",
    "dimension": 10,
    "generator": "alternating",
    "loss_range": "unit",
}

# Expert 0 has the smallest loss at every step, so regret against it never
# goes negative, even for the policies that compare two experts
_DOMINANT_EXPERTS = {
    "kind": "adversarial",
    "options": "simplex",
    "dimension": 10,
    "generator": "constant",
    "loss_range": "unit",
    "vector": [0.4] + [0.5] * 9,
}


def _imperfect_hints(budget: int) -> Dict:
    return {
        "name": f"imperfect_hints_b{budget}",
        "policy": {"name": "lwc_imperfect", "params": {"budget": budget}},
        "environment": {
            "kind": "adversarial",
            "options": "hypercube",
            "dimension": 4,
            "generator": "corrupted-only",
            "loss_range": "signed",
            "corruption": {"budget": budget, "placement": "random"},
        },
        "horizon": 1000,
        "seed": 4,
        "replications": 100,
    }


def _tight(delta: float) -> Dict:
    n = 6
    return {
        "name": f"tight_instance_delta{delta}",
        "policy": {"name": "correlation"},
        "environment": {"kind": "stochastic", "tight": {"n": n, "delta": delta}},
        "horizon": int(round(10 * n / delta ** 2)),
        "seed": 8,
        "replications": 50,
    }


PRESETS: Dict[str, Dict] = {

    # Regret flatness on adversarial experts (n=10, eta=0.4)

    "experts_hwc": {
        "name": "experts_hwc",
        "policy": {"name": "hwc", "params": {"eta": 0.4}},
        "environment": _DOMINANT_EXPERTS,
        "horizon": 100_000,
        "seed": 3,
        "replications": 100,
    },
    "experts_lwc": {
        "name": "experts_lwc",
        "policy": {"name": "lwc", "params": {"eta": 0.4}},
        "environment": _DOMINANT_EXPERTS,
        "horizon": 100_000,
        "seed": 3,
        "replications": 100,
    },
    "experts_hedge": {
        "name": "experts_hedge",
        "policy": {"name": "hedge", "params": {"eta": 0.4}},
        "environment": _ALTERNATING_EXPERTS,
        "horizon": 100_000,
        "seed": 3,
        "replications": 100,
    },

    # Imperfect hints: loss only where the hint is wrong

    "imperfect_hints_b100": _imperfect_hints(100),
    "imperfect_hints_b400": _imperfect_hints(400),

    # Stochastic bandits with probes

    "meta_ucbv_bernoulli": {
        "name": "meta_ucbv_bernoulli",
        "policy": {"name": "meta_ucbv"},
        "environment": {"kind": "stochastic", "arms": [{"bernoulli": m} for m in _BANDIT_MEANS]},
        "horizon": 100_000,
        "seed": 5,
        "replications": 50,
    },
    "explore_exploit_bernoulli": {
        "name": "explore_exploit_bernoulli",
        "policy": {"name": "explore_exploit", "params": {"epsilon": 0.1, "k": 3}},
        "environment": {"kind": "stochastic", "arms": [{"bernoulli": m} for m in _BANDIT_MEANS]},
        "horizon": 100_000,
        "seed": 6,
        "replications": 50,
    },

    # Correlated tight instance (n=6)

    "tight_delta_0.04": _tight(0.04),
    "tight_delta_0.01": _tight(0.01),

    # Convex losses over the unit ball

    "cwc_unit_ball": {
        "name": "cwc_unit_ball",
        "policy": {"name": "cwc", "params": {"eta": 0.4, "beta": 4.0, "gamma": 2.0}},
        "environment": {"kind": "convex", "domain": "ball", "dimension": 4,
                        "radius": 1.0, "generator": "fixed-quadratic"},
        "horizon": 10_000,
        "seed": 9,
        "replications": 50,
    },

    # Small demo run

    "quick_lwc": {
        "name": "quick_lwc",
        "policy": {"name": "lwc", "params": {"eta": 0.4}},
        "environment": {"kind": "adversarial", "options": "hypercube", "dimension": 3,
                        "generator": "random", "loss_range": "signed"},
        "horizon": 1_000,
        "seed": 1,
        "replications": 4,
    },
}

# ===================================
# VALIDATION
# ===================================

def validate_config() -> bool:
    if not FIXTURES_DIR.exists():
        print(f"[WARNING] Fixture directory missing: {FIXTURES_DIR}")
        return False
    print(f"[OK] Fixtures: {FIXTURES_DIR}")
    print(f"[OK] Results:  {RESULTS_DIR}")
    print(f"[OK] Workers:  {DEFAULT_WORKERS}, tail trials: {TAIL_TRIALS}")
    return True

# ===================================
# HELPER FUNCTIONS
# ===================================

def get_preset(preset_key: str) -> Dict:
    """A fresh copy of a preset config dict."""
    if preset_key not in PRESETS:
        available = ', '.join(PRESETS.keys())
        raise KeyError(
            f"Preset '{preset_key}' not found. "
            f"Available presets: {available}"
        )
    return deepcopy(PRESETS[preset_key])


def list_available_presets():
    print("\n🧪 Available Presets:\n")
    for key, preset in PRESETS.items():
        env = preset["environment"]
        print(f"  {key}:")
        print(f"    Policy:      {preset['policy']['name']}")
        print(f"    Environment: {env['kind']}")
        print(f"    Horizon:     {preset['horizon']:,}")
        print(f"    Replications: {preset['replications']}")
        print()


if __name__ == "__main__":
    print("="*60)
    print("PROBELAB CONFIGURATION")
    print("="*60)
    validate_config()
    list_available_presets()
    print("="*60)
    print("✅ Configuration loaded successfully")
    print("="*60)
