"""Chat-completion backend over HTTP JSON."""

from __future__ import annotations

import logging
import os
import time

import httpx

from .gateway import Completion, CompletionRequest, RoleConfig, TransportError, count_tokens

log = logging.getLogger(__name__)

_RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class HttpBackend:
    """POSTs ``{model, messages, n, temperature, seed, max_tokens}`` to the role endpoint.

    Providers that ignore ``n`` are topped up with extra requests until the
    requested sample count is reached.
    """

    def __init__(self, client: httpx.Client | None = None, backoff_s: float = 0.5, sleep=time.sleep):
        self.client = client or httpx.Client()
        self.backoff_s = backoff_s
        self._sleep = sleep

    def _post(self, config: RoleConfig, payload: dict) -> dict:
        if not config.endpoint:
            raise TransportError("role has no endpoint configured")
        headers = {"Content-Type": "application/json"}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        last: Exception | None = None
        for attempt in range(config.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self.client.post(
                    config.endpoint, json=payload, headers=headers, timeout=config.timeout_ms / 1000.0
                )
            except httpx.TransportError as exc:
                last = exc
                log.warning("transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in _RETRY_STATUS:
                last = TransportError(f"HTTP {resp.status_code}")
                log.warning("retryable status %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return resp.json()
        raise TransportError(f"retries exhausted after {config.max_retries + 1} attempts: {last}")

    def generate(self, request: CompletionRequest, config: RoleConfig) -> Completion:
        params = request.params
        messages = [
            {"role": "system", "content": request.system},
            {"role": "user", "content": request.prompt},
        ]
        texts: list[str] = []
        prompt_tokens = gen_tokens = 0
        seed = params.seed
        while len(texts) < params.n_samples:
            payload = {
                "model": request.model,
                "messages": messages,
                "n": params.n_samples - len(texts),
                "temperature": params.temperature,
                "seed": seed,
                "max_tokens": params.max_tokens,
            }
            data = self._post(config, payload)
            choices = data.get("choices") or []
            if not choices:
                raise TransportError("response has no choices")
            new = [(c.get("message") or {}).get("content") or "" for c in choices]
            texts.extend(new[: params.n_samples - len(texts)])
            usage = data.get("usage") or {}
            prompt_tokens += usage.get("prompt_tokens", count_tokens(request.system + " " + request.prompt))
            gen_tokens += usage.get("completion_tokens", sum(count_tokens(t) for t in new))
            seed += 1
        return Completion(texts, prompt_tokens, gen_tokens)
