"""Run the unit tests for one generated module and print a single JSON report.

Usage: harness.py --module PATH --tests PATH

Exit codes: 0 all tests passed, 1 failures or errors, 2 the module or the
tests could not be imported, 64 bad arguments.
"""

import argparse
import importlib.util
import io
import json
import os
import sys
import time
import traceback
import unittest

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CRASHED = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_args(argv):
    parser = Parser(prog="harness.py", add_help=False)
    parser.add_argument("--module", required=True)
    parser.add_argument("--tests", required=True)
    args = parser.parse_args(argv)
    for path in (args.module, args.tests):
        if not os.path.isfile(path):
            raise UsageError("no such file: %s" % path)
    return args


def load(path):
    path = os.path.abspath(path)
    folder = os.path.dirname(path)
    if folder not in sys.path:
        sys.path.insert(0, folder)
    name = os.path.splitext(os.path.basename(path))[0]
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    sys.modules[name] = module
    try:
        spec.loader.exec_module(module)
    except BaseException:
        del sys.modules[name]
        raise
    return module


def crash_report(where, started):
    return {
        "status": "error",
        "passed": 0,
        "failed": 0,
        "errored": 1,
        "failures": [{"test": where, "traceback": traceback.format_exc()}],
        "duration": time.monotonic() - started,
    }


def run(module_path, tests_path):
    """Returns (report, exit code)."""
    started = time.monotonic()
    try:
        load(module_path)
    except BaseException:
        return crash_report(module_path, started), EXIT_CRASHED
    try:
        tests = load(tests_path)
    except BaseException:
        return crash_report(tests_path, started), EXIT_CRASHED

    suite = unittest.defaultTestLoader.loadTestsFromModule(tests)
    result = unittest.TestResult()
    try:
        suite.run(result)
    except BaseException:
        return crash_report(tests_path, started), EXIT_CRASHED

    failures = [{"test": t.id(), "traceback": tb} for t, tb in result.failures]
    failures += [
        {"test": t.id(), "traceback": "unexpected success"} for t in result.unexpectedSuccesses
    ]
    errors = [{"test": t.id(), "traceback": tb} for t, tb in result.errors]
    failed = len(result.failures) + len(result.unexpectedSuccesses)
    errored = len(result.errors)
    report = {
        "status": "ok",
        "passed": result.testsRun - failed - errored,
        "failed": failed,
        "errored": errored,
        "failures": failures + errors,
        "duration": time.monotonic() - started,
    }
    return report, EXIT_OK if failed == 0 and errored == 0 else EXIT_FAILED


def main(argv=None):
    real_stdout = sys.stdout
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as e:
        real_stdout.write(json.dumps({"status": "error", "error": str(e)}) + "\n")
        real_stdout.flush()
        return EXIT_USAGE

    captured = io.StringIO()
    sys.stdout = captured
    try:
        report, code = run(args.module, args.tests)
    finally:
        sys.stdout = real_stdout
    report["stdout"] = captured.getvalue()
    real_stdout.write(json.dumps(report) + "\n")
    real_stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
