#!/usr/bin/env python3
"""Stand-in evaluation shim for executor tests.

Behaviour is selected by a `MODE=<name>` token in the candidate source:
ok, compile, mismatch, crash (exit 3, no document), signal (SIGSEGV), sleep,
flaky (fails the first attempt only), badschema, stdout (result on stdout),
profile (writes a stats CSV and reports it), envcheck (echoes MTL_CAPTURE_ENABLED).
"""
import argparse
import json
import os
import pathlib
import re
import signal
import sys
import time


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--request")
    ap.add_argument("--out", required=True)
    ap.add_argument("--self-test", action="store_true")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    if args.self_test:
        n = 100
        out.write_text(json.dumps({
            "schema_version": 1, "phase_reached": "timed", "max_abs_dev": 0.0, "max_rel_dev": 0.0,
            "outputs_match": True, "shape_ok": True,
            "candidate_samples_ns": [1000.0] * n, "baseline_samples_ns": [1000.0] * n,
            "device_class": "cpu"}))
        return 0

    req = json.loads(pathlib.Path(args.request).read_text())
    source = pathlib.Path(req["candidate_source_path"]).read_text()
    m = re.search(r"MODE=(\w+)", source)
    mode = m.group(1) if m else "ok"
    n = req["timing"]["timed_runs"]
    base = {"schema_version": 1, "device_class": "fake"}

    if mode == "crash":
        sys.stderr.write("shim internal failure\n")
        return 3
    if mode == "flaky":
        marker = out.parent / "flaky.marker"
        if not marker.exists():
            marker.write_text("1")
            return 4
        mode = "ok"
    if mode == "signal":
        os.kill(os.getpid(), signal.SIGSEGV)
    if mode == "sleep":
        time.sleep(30)
    if mode == "compile":
        doc = dict(base, phase_reached="compile", compile_transcript="error: expected ';' before '}' token")
    elif mode == "mismatch":
        doc = dict(base, phase_reached="compare", shape_ok=True, outputs_match=False, max_abs_dev=3.0, max_rel_dev=1.5)
    elif mode == "badschema":
        doc = {"schema_version": 99, "phase_reached": "timed"}
    else:
        doc = dict(base, phase_reached="timed", shape_ok=True, outputs_match=True, max_abs_dev=0.0, max_rel_dev=0.0,
                   candidate_samples_ns=[500.0] * n,
                   baseline_samples_ns=[1000.0] * n if req["measure_baseline"] else [],
                   timing_block_order=["baseline", "candidate"])
    if req["profiling"]:
        if mode == "profile":
            art = pathlib.Path(req["artifact_dir"])
            art.mkdir(parents=True, exist_ok=True)
            csv = art / "report_cuda_gpu_kern_sum.csv"
            csv.write_text('"Time (%)","Total Time (ns)","Instances","Avg (ns)","Name"\n'
                           '"75.0","3000","3","1000.0","fused_kernel"\n"25.0","1000","1","1000.0","copy_kernel"\n')
            doc["profile_artifact_paths"] = [str(csv)]
        else:
            doc["profiling_unavailable"] = True
    if mode == "envcheck":
        doc["run_transcript"] = "MTL_CAPTURE_ENABLED=" + os.environ.get("MTL_CAPTURE_ENABLED", "")
    if mode == "stdout":
        print("some log line")
        print(json.dumps(doc))
        return 0
    out.write_text(json.dumps(doc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
