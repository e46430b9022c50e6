import argparse
import enum
import logging
import os
import sys
from pathlib import Path

from bea1 import analysis, kat, randtest, settings
from bea1.bundles import Block, MasterKey
from bea1.cipher import FormatError, expand_key, open_ctr, seal_ctr
from bea1.tables import TableIntegrityError, load_tables, table_digests

logger = logging.getLogger("bea1")
logger.setLevel(settings.LOG_LEVEL)

WARNING = (
    "WARNING: BEA-1 contains a deliberate backdoor. "
    "It is for research only and must never protect real data."
)


class ExitCode(enum.IntEnum):
    OK = 0
    USAGE = 1
    FORMAT = 2
    VERIFICATION = 3


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ExitCode.USAGE, f"{self.prog}: error: {message}\n")


def master_key(text: str) -> MasterKey:
    return MasterKey.from_hex(text)


def block(text: str) -> Block:
    return Block.from_hex(text)


def cmd_encrypt(args) -> ExitCode:
    data = Path(args.input).read_bytes()
    iv = args.iv
    if iv is None:
        iv = Block.unpack(os.urandom(Block.byte_length()))
    Path(args.output).write_bytes(seal_ctr(args.key, iv, data, workers=args.workers))
    logger.info("Encrypted %d bytes with IV %s", len(data), iv)
    return ExitCode.OK


def cmd_decrypt(args) -> ExitCode:
    blob = Path(args.input).read_bytes()
    data = open_ctr(args.key, blob, workers=args.workers)
    Path(args.output).write_bytes(data)
    logger.info("Decrypted %d bytes", len(data))
    return ExitCode.OK


def cmd_expand_key(args) -> ExitCode:
    for round_key in expand_key(args.key).round_keys:
        print(round_key.to_hex())
    return ExitCode.OK


def cmd_kat_generate(args) -> ExitCode:
    records = kat.generate_records(count=args.count, seed=args.seed)
    kat.write_records(args.path, records)
    logger.info(
        "Wrote %d KAT records (seed %d) to %s", len(records), args.seed, args.path
    )
    return ExitCode.OK


def cmd_kat_verify(args) -> ExitCode:
    records = kat.read_records(args.path)
    mismatch = kat.verify_records(records)
    if mismatch is not None:
        print(f"MISMATCH record {mismatch}")
        return ExitCode.VERIFICATION
    print(f"OK {len(records)} records")
    return ExitCode.OK


def _print_report(report: analysis.AnalysisReport) -> ExitCode:
    print(report.render())
    if not report.passed:
        logger.error("Some published claims do not hold")
        return ExitCode.VERIFICATION
    return ExitCode.OK


def cmd_analyze_sbox(args) -> ExitCode:
    tables = load_tables()
    indices = range(len(tables.sboxes)) if args.index is None else [args.index]
    report = analysis.AnalysisReport()
    for index in indices:
        report.extend(analysis.sbox_report(tables, index, export_dir=args.export_csv))
    return _print_report(report)


def cmd_analyze_matrix(args) -> ExitCode:
    report = analysis.matrix_report(load_tables(), full_scan=args.full_scan)
    return _print_report(report)


def cmd_analyze_bounds(args) -> ExitCode:
    return _print_report(
        analysis.bounds_report(
            rounds=args.rounds, branch=args.branch, du=args.du, lu=args.lu
        )
    )


def cmd_analyze_all(args) -> ExitCode:
    return _print_report(analysis.full_report(load_tables(), full_scan=args.full_scan))


def cmd_randtest(args) -> ExitCode:
    key = args.key
    if key is None:
        key = kat.derive_record(settings.KAT_SEED, 0).key
    match args.stub, args.stream_class:
        case "constant", _:
            source = randtest.constant_source(0)
        case "alternating", _:
            source = randtest.alternating_source()
        case None, "key-avalanche":
            source = randtest.key_avalanche_source(key)
        case _:
            source = randtest.ctr_source(key)
    report = randtest.run_battery(
        key,
        n_sequences=args.sequences,
        bits_per_sequence=args.bits,
        alpha=args.alpha,
        block_len=args.block_len,
        source=source,
        workers=args.workers,
    )
    print(report.render())
    if not report.passed:
        logger.error("Battery failed")
        return ExitCode.VERIFICATION
    return ExitCode.OK


def cmd_tables(args) -> ExitCode:
    tables = load_tables()
    print(
        f"verified {', '.join(s.name for s in tables.sboxes)}, "
        f"{tables.m.name}, {tables.m_inv.name}"
    )
    for name, digest in table_digests().items():
        print(f"{digest}  {name}")
    return ExitCode.OK


def build_parser() -> CliParser:
    parser = CliParser(prog="bea1", description="BEA-1 research workbench")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, handler in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        sub = commands.add_parser(name, help=f"{name} a file in CTR mode")
        sub.add_argument("--key", type=master_key, required=True, help="30 hex digits")
        sub.add_argument("--in", dest="input", required=True)
        sub.add_argument("--out", dest="output", required=True)
        sub.add_argument("--workers", type=int, default=1)
        if name == "encrypt":
            sub.add_argument(
                "--iv", type=block, help="20 hex digits, random if omitted"
            )
        sub.set_defaults(handler=handler)

    sub = commands.add_parser("expand-key", help="print the 12 round keys")
    sub.add_argument("--key", type=master_key, required=True)
    sub.set_defaults(handler=cmd_expand_key)

    kat_parser = commands.add_parser("kat", help="known-answer test files")
    kat_commands = kat_parser.add_subparsers(dest="kat_command", required=True)
    sub = kat_commands.add_parser("generate")
    sub.add_argument("path", type=Path)
    sub.add_argument("--count", type=int, default=settings.KAT_COUNT)
    sub.add_argument("--seed", type=int, default=settings.KAT_SEED)
    sub.set_defaults(handler=cmd_kat_generate)
    sub = kat_commands.add_parser("verify")
    sub.add_argument("path", type=Path)
    sub.set_defaults(handler=cmd_kat_verify)

    analyze = commands.add_parser("analyze", help="check the published design claims")
    targets = analyze.add_subparsers(dest="target", required=True)
    sub = targets.add_parser("sbox")
    sub.add_argument("--index", type=int, choices=range(4), help="all four if omitted")
    sub.add_argument("--export-csv", type=Path, metavar="DIR")
    sub.set_defaults(handler=cmd_analyze_sbox)
    sub = targets.add_parser("matrix")
    sub.add_argument(
        "--full-scan", action="store_true", help="scan inputs up to weight 3"
    )
    sub.set_defaults(handler=cmd_analyze_matrix)
    sub = targets.add_parser("bounds")
    sub.add_argument("--rounds", type=int, default=analysis.TRAIL_ROUNDS)
    sub.add_argument("--branch", type=int, default=analysis.BRANCH_NUMBER)
    sub.add_argument("--du", type=int, default=analysis.DIFFERENTIAL_UNIFORMITY)
    sub.add_argument("--lu", type=int, default=analysis.LINEAR_UNIFORMITY)
    sub.set_defaults(handler=cmd_analyze_bounds)
    sub = targets.add_parser("all")
    sub.add_argument("--full-scan", action="store_true")
    sub.set_defaults(handler=cmd_analyze_all)

    sub = commands.add_parser("randtest", help="run the statistical battery")
    sub.add_argument("--key", type=master_key)
    sub.add_argument("--sequences", type=int, default=settings.BATTERY_SEQUENCES)
    sub.add_argument("--bits", type=int, default=settings.BATTERY_BITS)
    sub.add_argument("--alpha", type=float, default=settings.ALPHA)
    sub.add_argument("--block-len", type=int, default=settings.BLOCK_FREQUENCY_LEN)
    sub.add_argument(
        "--class", dest="stream_class", choices=("ctr", "key-avalanche"), default="ctr"
    )
    sub.add_argument("--stub", choices=("constant", "alternating"))
    sub.add_argument("--workers", type=int, default=1)
    sub.set_defaults(handler=cmd_randtest)

    sub = commands.add_parser("tables", help="verify tables and print asset digests")
    sub.set_defaults(handler=cmd_tables)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    print(WARNING, file=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FormatError as e:
        logger.error("Format error: %s", e)
        return ExitCode.FORMAT
    except TableIntegrityError as e:
        logger.error("Table integrity check failed: %s", e)
        return ExitCode.VERIFICATION
    except (ValueError, OSError) as e:
        logger.error("%s", e)
        return ExitCode.USAGE


if __name__ == "__main__":
    sys.exit(main())
