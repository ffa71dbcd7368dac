"""Client for the coevonet service, embedded or over the network.

By default the client drives the FastAPI application in-process through an
ASGI transport: no socket, no separate server, same request/response models
and error mapping as the real thing.  Handing it a base URL switches to
plain HTTP against a remote service instead.  The command-line tool is built
on this, so `coevonet run ...` works out of the box and gains a `--server`
flag for free.
"""

from __future__ import annotations

import asyncio

import httpx


class ServiceError(Exception):
    """A request the service answered with a 4xx/5xx status."""

    def __init__(self, status_code: int, detail):
        self.status_code = status_code
        self.detail = detail
        super().__init__(f"service returned {status_code}: {detail}")


def _extract_detail(response: httpx.Response):
    try:
        return response.json().get("detail", response.text)
    except ValueError:
        return response.text


class ServiceClient:
    """Synchronous facade over the service endpoints."""

    def __init__(self, server: str | None = None):
        self._remote = None
        self._app = None
        if server is not None:
            # sweeps and training can hold a request open for a long while
            self._remote = httpx.Client(base_url=server, timeout=None)
        else:
            from .service import app

            self._app = app

    def close(self) -> None:
        if self._remote is not None:
            self._remote.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    async def _embedded_request(self, method: str, path: str, payload):
        transport = httpx.ASGITransport(app=self._app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://coevonet", timeout=None
        ) as client:
            return await client.request(method, path, json=payload)

    def _request(self, method: str, path: str, payload=None) -> dict:
        if self._remote is not None:
            response = self._remote.request(method, path, json=payload)
        else:
            response = asyncio.run(self._embedded_request(method, path, payload))
        if response.status_code >= 400:
            raise ServiceError(response.status_code, _extract_detail(response))
        return response.json()

    def health(self) -> dict:
        return self._request("GET", "/health")

    def run(self, payload: dict) -> dict:
        return self._request("POST", "/run", payload)

    def sweep(self, payload: dict) -> dict:
        return self._request("POST", "/sweep", payload)

    def aggregate(self, payload: dict) -> dict:
        return self._request("POST", "/aggregate", payload)

    def fit(self, payload: dict) -> dict:
        return self._request("POST", "/fit", payload)

    def heatmap(self, payload: dict) -> dict:
        return self._request("POST", "/heatmap", payload)
