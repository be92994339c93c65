#!/usr/bin/env python3
"""Build the extension module and exercise its whole surface end to end."""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module(tmp: Path) -> None:
    subprocess.run(["cargo", "build", "-p", "retrace-py"], cwd=ROOT, check=True)
    shutil.copyfile(ROOT / "target" / "debug" / "libretrace.so", tmp / "retrace.so")


def expect_value_error(thunk) -> None:
    try:
        thunk()
    except ValueError:
        return
    raise AssertionError("expected ValueError")


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="retrace-smoke-"))
    build_module(tmp)
    sys.path.insert(0, str(tmp))
    import retrace

    # Generation is deterministic and shaped as expected.
    stream = retrace.generate("jacobi", iterations=50)
    assert stream == retrace.generate("jacobi", iterations=50)
    lines = stream.splitlines()
    assert len(lines) == 150
    assert lines[0].startswith("task dot ")

    # A one-shot run annotates the stream and reports a speedup.
    result = retrace.run(
        stream,
        min_trace_length=6,
        max_trace_length=12,
        batchsize=60,
        multi_scale_factor=15,
    )
    print(result)
    assert result.tasks == 150
    assert result.traces_registered >= 1
    assert result.replays > 0
    assert "tbegin" in result.annotated
    assert result.speedup > 1.0
    assert 0.0 < result.final_traced_fraction <= 1.0
    assert result.total_cost_seconds < result.untraced_cost_seconds
    assert result.cost_csv.startswith("index,kind,seconds\n")
    assert result.fraction_csv.startswith("index,fraction\n")
    assert "trace 0 registered" in result.decisions

    # Annotations erase back to the input stream.
    tasks = [
        line
        for line in result.annotated.splitlines()
        if not line.startswith(("tbegin", "tend"))
    ]
    assert tasks == lines

    # Streaming line by line through Engine reproduces the one-shot run.
    engine = retrace.Engine(
        min_trace_length=6,
        max_trace_length=12,
        batchsize=60,
        multi_scale_factor=15,
    )
    streamed = []
    for line in lines:
        streamed.extend(engine.push(line))
    streamed.extend(engine.finish())
    assert streamed == result.annotated.splitlines()
    assert engine.processed == 150
    assert engine.trace_count == result.traces_registered
    assert engine.wait_count == result.final_wait_count

    # Replicated nodes agree byte for byte.
    divergence = retrace.replicate(
        stream,
        nodes=3,
        max_latency=40,
        min_trace_length=6,
        batchsize=60,
        multi_scale_factor=15,
    )
    assert divergence is None

    # Raw mining primitives.
    assert retrace.find_repeat_spans([1, 2, 3] * 4, min_len=3) == [(6, [0, 6])]
    token = retrace.hash_line("task dot a:read:f")
    assert token == retrace.hash_line("task dot a:read:f")
    assert token != retrace.hash_line("task dot a:write:f")
    assert token < 2**63
    assert retrace.hash_line("untraceable sync a:read:f") >= 2**63

    # Sampling schedule.
    assert retrace.ruler(8) == 3
    assert retrace.analysis_slice(3, 1) == (2, 3)
    assert retrace.analysis_slice(4, 1) == (0, 4)
    assert retrace.analysis_slice(8, 2) == (0, 8)
    assert retrace.analysis_slice(5, 2) is None

    # Bad input raises instead of crashing.
    expect_value_error(lambda: retrace.run("bogus line"))
    expect_value_error(lambda: retrace.Engine(batchsize=1000, multi_scale_factor=300))
    expect_value_error(lambda: retrace.generate("unknown"))
    expect_value_error(lambda: retrace.replicate(stream, nodes=1))
    expect_value_error(lambda: retrace.ruler(0))
    expect_value_error(lambda: retrace.find_repeat_spans([1, 2, 3], min_len=0))

    print("smoke test passed")


if __name__ == "__main__":
    main()
