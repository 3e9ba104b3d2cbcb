"""Plug-in channel: loopback equivalence, protocol errors, codec parity."""

import json
import subprocess
import sys

import numpy as np
import pytest

from lightbench.codec import TrafficLightCodec
from lightbench.plugin import (PluginChannel, PluginError, PluginProtocolError,
                               RemoteCodec, remote_detector)
from lightbench.detectors import heuristic_detect
from lightbench.scenes import DatasetConfig, generate_dataset


@pytest.fixture(scope="module")
def channel():
    ch = PluginChannel(command=[sys.executable, "-m", "lightbench.plugin"],
                       timeout=60.0)
    yield ch
    ch.close()


def test_loopback_detector_identical(channel, small_dataset):
    remote = remote_detector(channel)
    for scene in small_dataset.scenes[:4]:
        local = heuristic_detect(scene.pixels)
        over_wire = remote.detect(scene.pixels)
        assert len(local) == len(over_wire)
        for a, b in zip(local, over_wire):
            assert a.box.as_tuple() == pytest.approx(b.box.as_tuple())
            for c in a.scores:
                assert a.scores[c] == pytest.approx(b.scores[c])


def test_loopback_decode_bit_exact(channel, codec):
    remote = RemoteCodec(channel)
    z = np.zeros(32)
    z[:7] = [1.0, -0.5, 0.3, 0.8, -1.0, 0.5, 1.2]
    local = codec.decode(z)
    over_wire = remote.decode(z)
    assert np.array_equal(local.pixels, over_wire.pixels)


def test_loopback_encode_round_trip(channel, codec):
    remote = RemoteCodec(channel)
    patch = codec.decode(np.zeros(32))
    z, lowconf = remote.encode(patch)
    assert not lowconf
    assert np.abs(z[:7]).max() < 0.25


def test_malformed_response_line():
    proc = subprocess.Popen(
        [sys.executable, "-c",
         "import sys\n"
         "sys.stdin.readline()\n"
         "print('this is not json', flush=True)\n"
         "sys.stdin.readline()\n"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1)
    ch = PluginChannel.__new__(PluginChannel)
    ch.timeout = 10.0
    ch._proc = proc
    ch._sock_file = None
    with pytest.raises(PluginProtocolError, match="malformed"):
        ch.request({"type": "detect"})
    proc.terminate()


def test_error_response_raised(channel):
    with pytest.raises(PluginError, match="unknown request type"):
        channel.request({"type": "explode"})


def test_process_exit_detected():
    ch = PluginChannel(command=[sys.executable, "-c", "pass"], timeout=5.0)
    ch._proc.wait(timeout=5)
    with pytest.raises(PluginError):
        ch.request({"type": "detect"})
    ch.close()
