"""Host side of the line-delimited adapter protocol.

External detectors run as child processes speaking newline-delimited
JSON over stdio. Every message carries a type and a protocol_version.
The host sends HELLO and the child answers HELLO_OK with its handshake:
declared parameters (name, default, scaling role), divisibility
constraints, windowing, and capabilities. The host owns ladder scaling
and timing; the child only fits and scores. Matrices always travel by
file path; score vectors may come back inline (up to 10**6 values) or
by file path. The harness clock brackets the FIT and SCORE round trips,
so adapter timing is INSTRUMENTED. Any malformed, mistyped, or
mis-versioned message aborts the session, which the harness records as
a FAILED run.
"""

from __future__ import annotations

import json
import os
import select
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .data import TimeSeries, WindowingSpec, write_csv
from .detectors.base import Detector
from .errors import AdapterError
from .ladder import DetectorConfig, DivisibilityConstraint, ScalingRole

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT_S = 30.0
DEFAULT_REPLY_TIMEOUT_S = 600.0
MAX_INLINE_SCORES = 10 ** 6


@dataclass(frozen=True)
class AdapterHandshake:
    """What a child declares about itself in HELLO_OK."""

    method_id: str
    config: DetectorConfig
    windowing: WindowingSpec
    capabilities: dict[str, Any]


def parse_handshake(message: dict[str, Any]) -> AdapterHandshake:
    try:
        params: dict[str, tuple[int, ScalingRole]] = {}
        for entry in message["params"]:
            params[entry["name"]] = (int(entry["default"]), ScalingRole(entry["role"]))
        constraints = tuple(
            DivisibilityConstraint(c["dim_param"], c["divisor_param"])
            for c in message.get("constraints", [])
        )
        config = DetectorConfig(
            method_id=str(message["method_id"]), params=params, constraints=constraints
        )
        windowing_obj = message["windowing"]
        windowing = WindowingSpec(
            windowed=bool(windowing_obj["windowed"]), w=int(windowing_obj.get("w", 1))
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise AdapterError(f"malformed handshake: {type(exc).__name__}: {exc}") from None
    return AdapterHandshake(
        method_id=config.method_id,
        config=config,
        windowing=windowing,
        capabilities=dict(message.get("capabilities", {})),
    )


class AdapterClient:
    """One child process and its message stream."""

    def __init__(self, argv: Sequence[str], stderr_path: Path | None = None):
        self._argv = list(argv)
        self._stderr_path = stderr_path
        self._proc: subprocess.Popen | None = None
        self._buffer = bytearray()
        self._stderr_file = None

    def spawn(self) -> None:
        if self._stderr_path is not None:
            self._stderr_file = open(self._stderr_path, "wb")
            stderr = self._stderr_file
        else:
            stderr = subprocess.DEVNULL
        try:
            self._proc = subprocess.Popen(
                self._argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=stderr,
                env=os.environ.copy(),
            )
        except OSError as exc:
            raise AdapterError(f"cannot start adapter {self._argv!r}: {exc}") from None

    def _stderr_tail(self) -> str:
        if self._stderr_path is None or not self._stderr_path.exists():
            return ""
        tail = self._stderr_path.read_text(encoding="utf-8", errors="replace")[-500:]
        return f" (child stderr: {tail.strip()})" if tail.strip() else ""

    def send(self, message: dict[str, Any]) -> None:
        if self._proc is None or self._proc.stdin is None:
            raise AdapterError("adapter process is not running")
        payload = dict(message, protocol_version=PROTOCOL_VERSION)
        try:
            self._proc.stdin.write((json.dumps(payload) + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterError(f"adapter closed its input: {exc}{self._stderr_tail()}") from None

    def _read_line(self, timeout_s: float) -> bytes:
        assert self._proc is not None and self._proc.stdout is not None
        fd = self._proc.stdout.fileno()
        deadline = time.monotonic() + timeout_s
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = bytes(self._buffer[:newline])
                del self._buffer[: newline + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise AdapterError(f"adapter sent no reply within {timeout_s:.0f} s{self._stderr_tail()}")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise AdapterError(f"adapter exited before replying{self._stderr_tail()}")
            self._buffer.extend(chunk)

    def receive(self, expected_type: str, timeout_s: float) -> dict[str, Any]:
        line = self._read_line(timeout_s)
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            raise AdapterError(f"adapter sent a non-JSON line: {line[:200]!r}") from None
        if not isinstance(message, dict):
            raise AdapterError(f"adapter message must be an object, got {type(message).__name__}")
        if message.get("protocol_version") != PROTOCOL_VERSION:
            raise AdapterError(
                f"adapter speaks protocol {message.get('protocol_version')!r}, host speaks {PROTOCOL_VERSION}"
            )
        if message.get("type") == "ERROR":
            raise AdapterError(f"adapter reported: {message.get('message', '<no message>')}")
        if message.get("type") != expected_type:
            raise AdapterError(f"expected {expected_type}, adapter sent {message.get('type')!r}")
        return message

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.poll() is None:
                try:
                    self.send({"type": "BYE"})
                except AdapterError:
                    pass
                try:
                    proc.wait(timeout=2.0)
                except subprocess.TimeoutExpired:
                    proc.kill()
                    proc.wait(timeout=2.0)
        finally:
            for stream in (proc.stdin, proc.stdout):
                if stream is not None:
                    stream.close()
            if self._stderr_file is not None:
                self._stderr_file.close()
                self._stderr_file = None
            self._proc = None


class AdapterDetector(Detector):
    """Presents one adapter executable as a Detector to the harness.

    prepare() spawns the child, performs the handshake, and stages the
    train and test spans as canonical CSV files; fit() and score() are
    then pure message round trips, which keeps the harness timing spans
    honest. Adapters receive the run seed: the host cannot know whether
    a child is deterministic.
    """

    consumes_seed = True

    def __init__(self, argv: Sequence[str], method_id: str | None = None,
                 reply_timeout_s: float = DEFAULT_REPLY_TIMEOUT_S,
                 handshake_timeout_s: float = HANDSHAKE_TIMEOUT_S):
        self._argv = list(argv)
        self.method_id = method_id or f"adapter:{Path(self._argv[-1]).stem}"
        self._reply_timeout_s = reply_timeout_s
        self._handshake_timeout_s = handshake_timeout_s
        self._client: AdapterClient | None = None
        self._handshake: AdapterHandshake | None = None
        self._workdir: Path | None = None
        self._train_path: Path | None = None
        self._test_path: Path | None = None
        self._child_info: dict[str, Any] = {}
        self.windowing = WindowingSpec(windowed=False, w=1)

    def prepare(self, train: TimeSeries, test: TimeSeries) -> None:
        self._workdir = Path(tempfile.mkdtemp(prefix="adapter-"))
        self._train_path = self._workdir / "train.csv"
        self._test_path = self._workdir / "test.csv"
        write_csv(train, self._train_path)
        write_csv(test, self._test_path)

        self._client = AdapterClient(self._argv, stderr_path=self._workdir / "stderr.log")
        self._client.spawn()
        self._client.send({"type": "HELLO"})
        reply = self._client.receive("HELLO_OK", self._handshake_timeout_s)
        self._handshake = parse_handshake(reply)
        self.windowing = self._handshake.windowing
        self._child_info = {
            "declared_method_id": self._handshake.method_id,
            "windowed": self.windowing.windowed,
            "declared_w": self.windowing.w,
            "capabilities": self._handshake.capabilities,
        }

    def base_config(self) -> DetectorConfig:
        if self._handshake is None:
            raise AdapterError("no handshake yet; prepare() must run first")
        return self._handshake.config

    def fit(self, train: TimeSeries, params: Mapping[str, int], seed: int) -> Any:
        assert self._client is not None and self._train_path is not None
        self._client.send({
            "type": "FIT",
            "train_path": str(self._train_path),
            "params": dict(params),
            "seed": seed,
        })
        reply = self._client.receive("FIT_OK", self._reply_timeout_s)
        if "fit_time_s" in reply:
            self._child_info["reported_fit_time_s"] = reply["fit_time_s"]
        return self._client

    def score(self, model: Any, test: TimeSeries) -> np.ndarray:
        assert self._client is not None and self._test_path is not None
        self._client.send({"type": "SCORE", "test_path": str(self._test_path)})
        reply = self._client.receive("SCORE_OK", self._reply_timeout_s)
        if "scores" in reply and reply["scores"] is not None:
            scores = np.asarray(reply["scores"], dtype=np.float64)
            if scores.size > MAX_INLINE_SCORES:
                raise AdapterError(
                    f"adapter sent {scores.size} inline scores; above {MAX_INLINE_SCORES} use scores_path"
                )
        elif "scores_path" in reply and reply["scores_path"] is not None:
            scores_file = Path(reply["scores_path"])
            if not scores_file.exists():
                raise AdapterError(f"adapter scores_path does not exist: {scores_file}")
            scores = np.array(
                [float(line) for line in scores_file.read_text(encoding="utf-8").splitlines() if line],
                dtype=np.float64,
            )
        else:
            raise AdapterError("SCORE_OK carried neither scores nor scores_path")
        return scores

    def child_info(self) -> dict[str, Any] | None:
        return self._child_info or None

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None
        if self._workdir is not None:
            shutil.rmtree(self._workdir, ignore_errors=True)
            self._workdir = None
