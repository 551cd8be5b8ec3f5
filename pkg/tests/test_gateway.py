import asyncio
import json
import socket
import threading
import time

import numpy as np
import pytest
from websockets.sync.client import connect

from oow.engine import replay
from oow.gateway import GatewayServer, decode_input
from oow.geom import Pose
from oow.kinematics import DHRow
from oow.mission import TrialConfig
from oow.scenario import CameraSpec, Scenario
from oow.telemetry import read_log


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def tiny_scenario() -> Scenario:
    """Fast 2-link planar arm with an obstacle just ahead of the ee."""
    # ee at q=(0.9, 1.2): analytic planar position, comfortably bent
    import math
    ee = np.array([math.cos(0.9) + math.cos(2.1), math.sin(0.9) + math.sin(2.1), 0.0])
    return Scenario(
        name="tiny",
        initial_joints=[0.9, 1.2],
        module_pose=Pose(np.array([50.0, 0.0, 0.0])),
        module_half_extents=(1.0, 1.0, 1.0),
        fixture_offset=Pose(np.array([-1.0, 0.0, 0.0])),
        dock_pose=Pose(np.array([60.0, 0.0, 0.0])),
        iss_boxes=[],
        obstacles=[{"id": "O1",
                    "position": [float(ee[0] + 0.45), float(ee[1]), 0.0],
                    "radius": 0.1}],
        cameras=[CameraSpec(Pose()) for _ in range(4)],
        arm_link_radius=0.05,
        dh_rows=[DHRow(0.0, 0.0, 1.0, 0.0), DHRow(0.0, 0.0, 1.0, 0.0)],
        max_velocity=[3.0, 3.0],
        wrist_rate=0.5,
    )


class ServerThread:
    def __init__(self, scenario, config, out_dir=None, name="live"):
        self.server = GatewayServer(scenario, config, out_dir, name)
        self.port = free_port()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._started = threading.Event()

    def _run(self):
        async def main():
            ready = asyncio.Event()
            task = asyncio.create_task(
                self.server.run(port=self.port, ready=ready))
            await ready.wait()
            self._started.set()
            await task
        asyncio.run(main())

    def __enter__(self):
        self._thread.start()
        assert self._started.wait(5.0), "server failed to start"
        return self

    def __exit__(self, *exc):
        if not self.server.engine.done:
            self.server.engine.abort("aborted")
        self._thread.join(timeout=5.0)


def recv_until(ws, t_type, limit=200):
    for _ in range(limit):
        msg = json.loads(ws.recv(timeout=5.0))
        if msg["t"] == t_type:
            return msg
    raise AssertionError(f"no {t_type} frame received")


class TestGateway:
    def test_hello_and_state_stream(self, tmp_path):
        with ServerThread(tiny_scenario(), TrialConfig(), tmp_path) as st:
            with connect(f"ws://127.0.0.1:{st.port}") as ws:
                hello = json.loads(ws.recv(timeout=5.0))
                assert hello["t"] == "hello"
                assert hello["scenario"]["name"] == "tiny"
                s1 = recv_until(ws, "state")
                s2 = recv_until(ws, "state")
                assert s2["time"] > s1["time"]

    def test_zero_input_arm_stationary(self, tmp_path):
        with ServerThread(tiny_scenario(), TrialConfig(), tmp_path) as st:
            with connect(f"ws://127.0.0.1:{st.port}") as ws:
                recv_until(ws, "state")
                for seq in range(1, 6):
                    ws.send(json.dumps({"t": "input", "seq": seq, "ts": seq * 0.02,
                                        "axes": {}, "buttons": []}))
                first = recv_until(ws, "state")
                time.sleep(0.5)
                last = recv_until(ws, "state")
                assert np.allclose(first["ee"]["pos"], last["ee"]["pos"])
                assert last["score"] == 300.0  # decay starts at 10 s

    def test_malformed_input_error_frame_session_continues(self, tmp_path):
        with ServerThread(tiny_scenario(), TrialConfig(), tmp_path) as st:
            with connect(f"ws://127.0.0.1:{st.port}") as ws:
                recv_until(ws, "state")
                ws.send("{broken json")
                err = recv_until(ws, "error")
                assert "bad input" in err["msg"]
                assert recv_until(ws, "state") is not None

    def test_second_connection_refused(self, tmp_path):
        with ServerThread(tiny_scenario(), TrialConfig(), tmp_path) as st:
            with connect(f"ws://127.0.0.1:{st.port}") as ws1:
                recv_until(ws1, "state")
                with connect(f"ws://127.0.0.1:{st.port}") as ws2:
                    msg = json.loads(ws2.recv(timeout=5.0))
                    assert msg["t"] == "error"
                    assert "operator" in msg["msg"]

    def test_disconnect_aborts_and_logs(self, tmp_path):
        st = ServerThread(tiny_scenario(), TrialConfig(), tmp_path, name="d1")
        with st:
            with connect(f"ws://127.0.0.1:{st.port}") as ws:
                recv_until(ws, "state")
            deadline = time.time() + 5.0
            while st.server.session is None and time.time() < deadline:
                time.sleep(0.05)
            assert st.server.session is not None
        log = read_log(tmp_path / "d1.session.jsonl")
        assert log.events[-1].payload["reason"] == "disconnect"

    def test_live_replay_collision_within_one_tick(self, tmp_path):
        # Drive into the obstacle, then replay the recorded inputs.
        scn = tiny_scenario()
        st = ServerThread(scn, TrialConfig(), tmp_path, name="r1")
        with st:
            with connect(f"ws://127.0.0.1:{st.port}") as ws:
                recv_until(ws, "state")
                seq = 0
                t0 = time.monotonic()
                collided = None
                while time.monotonic() - t0 < 8.0 and collided is None:
                    seq += 1
                    ws.send(json.dumps({"t": "input", "seq": seq,
                                        "ts": time.monotonic(),
                                        "axes": {"lx": 1.0}, "buttons": []}))
                    msg = json.loads(ws.recv(timeout=5.0))
                    if msg["t"] == "event" and msg["kind"] == "collision":
                        collided = msg["time"]
                assert collided is not None, "never hit the obstacle"
            deadline = time.time() + 5.0
            while st.server.session is None and time.time() < deadline:
                time.sleep(0.05)
        replayed = replay((tmp_path / "r1.inputs.jsonl").read_text())
        rep_coll = [e for e in replayed.log.events if e.kind == "collision"]
        assert rep_coll, "replay produced no collision"
        assert abs(rep_coll[0].time - collided) <= 0.02 + 1e-9


class TestDecode:
    def test_round_trip(self):
        raw = json.dumps({"t": "input", "seq": 3, "ts": 1.5,
                          "axes": {"lx": 0.5, "ry": -1.0}, "buttons": ["R1", "L2"]})
        cmd = decode_input(raw)
        assert cmd.seq == 3 and cmd.lx == 0.5 and cmd.ry == -1.0
        assert cmd.buttons == frozenset({"R1", "L2"})

    def test_wrong_type_rejected(self):
        with pytest.raises(ValueError):
            decode_input(json.dumps({"t": "state"}))
