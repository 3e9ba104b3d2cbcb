"""Remote detector/codec plug-in channel: one JSON object per line over a
subprocess's stdio or a local TCP socket.

Requests:
    {"type": "detect", "image": {"w": .., "h": .., "p6_base64": ".."}}
    {"type": "decode", "z": [..]}
    {"type": "encode", "patch": {"w": .., "h": .., "p6_base64": ".."}}

Responses mirror the request type; protocol violations, timeouts and
process exits surface as typed errors.
"""

from __future__ import annotations

import base64
import json
import socket
import subprocess
import sys
from dataclasses import dataclass

import numpy as np

from .boxes import Box
from .codec import Patch, TrafficLightCodec
from .detectors import DetectorHandle, heuristic_detect
from .evaluation import CLASSES, DetectionRecord
from .records import P6_MAXVAL

DEFAULT_TIMEOUT = 30.0


class PluginError(RuntimeError):
    pass


class PluginProtocolError(PluginError):
    pass


class PluginTimeout(PluginError):
    pass


def _encode_image(pixels: np.ndarray) -> dict:
    arr = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    raw = np.floor(arr * P6_MAXVAL + 0.5).astype(">u2").tobytes()
    header = f"P6\n{arr.shape[1]} {arr.shape[0]}\n{P6_MAXVAL}\n".encode()
    return {"w": arr.shape[1], "h": arr.shape[0],
            "p6_base64": base64.b64encode(header + raw).decode()}


def _decode_image(obj: dict) -> np.ndarray:
    data = base64.b64decode(obj["p6_base64"])
    if not data.startswith(b"P6"):
        raise PluginProtocolError("image payload is not P6")
    fields, i = [], 2
    while len(fields) < 3:
        while data[i:i+1].isspace():
            i += 1
        j = i
        while not data[j:j+1].isspace():
            j += 1
        fields.append(int(data[i:j]))
        i = j
    i += 1
    w, h, maxval = fields
    raw = np.frombuffer(data, dtype=">u2", offset=i, count=w * h * 3)
    return raw.reshape(h, w, 3).astype(np.float32) / maxval


class PluginChannel:
    """Line-delimited JSON request/response over stdio or a socket."""

    def __init__(self, command: list[str] | None = None,
                 address: tuple[str, int] | None = None,
                 timeout: float = DEFAULT_TIMEOUT):
        if (command is None) == (address is None):
            raise ValueError("specify exactly one of command or address")
        self.timeout = timeout
        self._proc = None
        self._sock_file = None
        if command is not None:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1)
        else:
            s = socket.create_connection(address, timeout=timeout)
            s.settimeout(timeout)
            self._sock_file = s.makefile("rw")

    def request(self, obj: dict) -> dict:
        line = json.dumps(obj)
        if self._proc is not None:
            if self._proc.poll() is not None:
                raise PluginError(f"plug-in process exited with {self._proc.returncode}")
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
                import select

                ready, _, _ = select.select([self._proc.stdout], [], [], self.timeout)
                if not ready:
                    raise PluginTimeout(f"no response within {self.timeout}s")
                reply = self._proc.stdout.readline()
            except BrokenPipeError as e:
                raise PluginError("plug-in process closed the pipe") from e
        else:
            self._sock_file.write(line + "\n")
            self._sock_file.flush()
            try:
                reply = self._sock_file.readline()
            except socket.timeout as e:
                raise PluginTimeout(f"no response within {self.timeout}s") from e
        if not reply:
            raise PluginError("plug-in closed the channel")
        try:
            out = json.loads(reply)
        except json.JSONDecodeError as e:
            raise PluginProtocolError(
                f"malformed response line: {reply[:120]!r}") from e
        if not isinstance(out, dict):
            raise PluginProtocolError(f"response is not an object: {out!r}")
        if out.get("error"):
            raise PluginError(f"plug-in error: {out['error']}")
        return out

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except Exception:
                pass
            self._proc.terminate()
            self._proc.wait(timeout=5)
        if self._sock_file is not None:
            self._sock_file.close()


def remote_detector(channel: PluginChannel) -> DetectorHandle:
    def query(scene_pixels: np.ndarray):
        out = channel.request({"type": "detect",
                               "image": _encode_image(scene_pixels)})
        if "detections" not in out:
            raise PluginProtocolError("detect response lacks 'detections'")
        dets = []
        for d in out["detections"]:
            dets.append(DetectionRecord(
                box=Box(d["x"], d["y"], d["w"], d["h"]),
                scores={c: float(d["scores"][c]) for c in CLASSES}))
        return dets

    return DetectorHandle(kind="remote", query=query)


class RemoteCodec:
    """Codec handle speaking the plug-in protocol (decode/encode only)."""

    def __init__(self, channel: PluginChannel, dim: int = 32):
        self.channel = channel
        self.dim = dim

    def decode(self, z: np.ndarray) -> Patch:
        out = self.channel.request({"type": "decode",
                                    "z": np.asarray(z, dtype=float).tolist()})
        if "patch" not in out:
            raise PluginProtocolError("decode response lacks 'patch'")
        return Patch(_decode_image(out["patch"]))

    def encode(self, patch: Patch):
        out = self.channel.request({"type": "encode",
                                    "patch": _encode_image(patch.pixels)})
        if "z" not in out:
            raise PluginProtocolError("encode response lacks 'z'")
        return np.asarray(out["z"], dtype=float), bool(out.get("low_confidence"))


def serve_loopback(stdin=None, stdout=None):
    """Reference plug-in: serves the built-in detector and codec on stdio."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    codec = TrafficLightCodec()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            kind = req.get("type")
            if kind == "detect":
                pixels = _decode_image(req["image"])
                dets = heuristic_detect(pixels)
                resp = {"detections": [
                    {"x": d.box.x, "y": d.box.y, "w": d.box.w, "h": d.box.h,
                     "scores": d.scores} for d in dets]}
            elif kind == "decode":
                patch = codec.decode(np.asarray(req["z"], dtype=float))
                resp = {"patch": _encode_image(patch.pixels)}
            elif kind == "encode":
                est = codec.encode(Patch(_decode_image(req["patch"])))
                resp = {"z": est.z.tolist(), "low_confidence": est.low_confidence}
            else:
                resp = {"error": f"unknown request type {kind!r}"}
        except Exception as e:  # noqa: BLE001 - protocol boundary
            resp = {"error": f"{type(e).__name__}: {e}"}
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()


if __name__ == "__main__":
    serve_loopback()
