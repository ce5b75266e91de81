# config.py
import os
import psutil
from dotenv import load_dotenv

loaded = load_dotenv()


class Config:
    # Logging
    LOG_LEVEL = os.getenv('HOGWILD_LOG_LEVEL', 'INFO').upper()

    # Output settings
    OUTPUT_DIR = os.getenv('HOGWILD_OUTPUT_DIR', './runs')

    # Reference solver (deterministic full-batch GD)
    REFERENCE_TOL = float(os.getenv('HOGWILD_REFERENCE_TOL', '1e-8'))
    REFERENCE_MAX_ITER = int(os.getenv('HOGWILD_REFERENCE_MAX_ITER', '1000000'))

    # Trace settings
    CHECKPOINT_RATIO = float(os.getenv('HOGWILD_CHECKPOINT_RATIO', '1.3'))

    # Inconsistent-read simulator
    MASK_POLICY = os.getenv('HOGWILD_MASK_POLICY', 'bernoulli')
    MASK_PROBABILITY = float(os.getenv('HOGWILD_MASK_PROBABILITY', '0.5'))

    # Parallel engine
    TAU_FACTOR = int(os.getenv('HOGWILD_TAU_FACTOR', '2'))  # configured tau = factor * P
    SAMPLER_INTERVAL = float(os.getenv('HOGWILD_SAMPLER_INTERVAL', '0.001'))
    ATOMIC_STRIPES = int(os.getenv('HOGWILD_ATOMIC_STRIPES', '64'))
    DEFAULT_THREADS = int(os.getenv('HOGWILD_DEFAULT_THREADS', str(psutil.cpu_count(logical=False) or 1)))

    # Verification
    PROBE_COUNT = int(os.getenv('HOGWILD_PROBE_COUNT', '200'))
