"""HTTP client used by the command line.

By default each command boots the service in-process on a loopback port and
talks real HTTP to it; pointing FACTORSEG_SERVER or --server at a remote
instance switches to that without changing behavior.
"""
from __future__ import annotations

import json
import threading
import time
from contextlib import contextmanager

import httpx
import uvicorn


class ServiceError(RuntimeError):
    """Non-2xx response from the service, with its detail message."""


@contextmanager
def local_server():
    """Run the service on an ephemeral loopback port for the caller's lifetime."""
    from .service.app import app

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.monotonic() + 15
        while not server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("embedded service failed to start")
            time.sleep(0.01)
        port = server.servers[0].sockets[0].getsockname()[1]
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10)


class ServiceClient:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")
        self._http = httpx.Client(base_url=self.base_url, timeout=httpx.Timeout(None))

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        resp = self._http.post(path, json=payload)
        if resp.status_code != 200:
            raise ServiceError(_detail(resp))
        return resp.json()

    def health(self) -> dict:
        resp = self._http.get("/health")
        if resp.status_code != 200:
            raise ServiceError(_detail(resp))
        return resp.json()

    def rank(self, payload: dict) -> dict:
        return self._post("/rank", payload)

    def detect(self, payload: dict, on_progress=None) -> dict:
        """Stream the detection, forwarding progress lines as they arrive."""
        with self._http.stream("POST", "/detect/stream", json=payload) as resp:
            if resp.status_code != 200:
                resp.read()
                raise ServiceError(_detail(resp))
            for line in resp.iter_lines():
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["event"] == "progress":
                    if on_progress is not None:
                        on_progress(event["message"])
                elif event["event"] == "error":
                    raise ServiceError(event["detail"])
                else:
                    return event["payload"]
        raise ServiceError("stream ended without a result")

    def network(self, payload: dict) -> dict:
        return self._post("/network", payload)

    def simulate(self, payload: dict) -> dict:
        return self._post("/simulate", payload)

    def export(self, payload: dict) -> dict:
        return self._post("/export", payload)


def _detail(resp: httpx.Response) -> str:
    try:
        return str(resp.json().get("detail", resp.text))
    except Exception:
        return f"HTTP {resp.status_code}: {resp.text[:200]}"
