import logging
from os import environ

ALPHA = float(environ.get("BEA1_ALPHA", 0.01))
PROPORTION_P_HAT = float(environ.get("BEA1_PROPORTION_P_HAT", 0.99))
BLOCK_FREQUENCY_LEN = int(environ.get("BEA1_BLOCK_FREQUENCY_LEN", 128))

BATTERY_SEQUENCES = int(environ.get("BEA1_BATTERY_SEQUENCES", 50))
BATTERY_BITS = int(environ.get("BEA1_BATTERY_BITS", 100_000))

KAT_SEED = int(environ.get("BEA1_KAT_SEED", 2017))
KAT_COUNT = int(environ.get("BEA1_KAT_COUNT", 100))

match environ.get("LOG_LEVEL", "INFO"):
    case "DEBUG":
        LOG_LEVEL = logging.DEBUG
    case "INFO":
        LOG_LEVEL = logging.INFO
    case "WARNING":
        LOG_LEVEL = logging.WARNING
    case "ERROR":
        LOG_LEVEL = logging.ERROR
    case "CRITICAL":
        LOG_LEVEL = logging.CRITICAL
    case _:
        LOG_LEVEL = logging.INFO
