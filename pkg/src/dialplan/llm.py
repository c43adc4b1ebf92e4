"""Chat-completion transport with retries, disk caching, and the LLM-backed oracle.

Completions are cached per (request, sample ordinal), so a run can be replayed
offline once its samples are on disk.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import requests

from .core import DialogueHistory, ReactionLabel, Speaker
from .oracle import OracleError, OracleInterface
from .task_p4g import P4GTask, match_act, match_reaction_label, parse_bracketed_label

log = logging.getLogger(__name__)

ALLOWED_ROLES = ("system", "user", "assistant")
API_KEY_ENV = "DIALPLAN_API_KEY"


class TransportError(OracleError):
    """Retry budget exhausted or the response body was malformed."""


class AuthError(Exception):
    """Credential rejected; not retryable."""


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: Tuple[Tuple[str, str], ...]  # (role, content) pairs
    temperature: float = 1.0
    sample_count: int = 1
    max_tokens: int = 256

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        for role, _ in self.messages:
            if role not in ALLOWED_ROLES:
                raise ValueError(f"invalid role {role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.sample_count < 1 or self.max_tokens < 1:
            raise ValueError("sample_count and max_tokens must be positive")

    @classmethod
    def from_messages(cls, model: str, messages: List[Dict[str, str]],
                      **kwargs) -> "ChatRequest":
        return cls(model=model,
                   messages=tuple((m["role"], m["content"]) for m in messages),
                   **kwargs)


def cache_key(request: ChatRequest, ordinal: int) -> str:
    """Stable content hash of the request identity plus the sample ordinal."""
    canonical = json.dumps(
        {
            "model": request.model,
            "messages": [[role, content] for role, content in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        },
        sort_keys=True, separators=(",", ":"), ensure_ascii=False,
    )
    digest = hashlib.sha256()
    digest.update(canonical.encode("utf-8"))
    digest.update(f"#{ordinal}".encode("ascii"))
    return digest.hexdigest()


class LLMClient:
    """OpenAI-compatible chat client with backoff and per-ordinal disk caching."""

    def __init__(self, endpoint: str, api_key: Optional[str] = None,
                 cache_dir: Optional[str] = None, timeout: float = 60.0,
                 max_retries: int = 5, backoff_base: float = 1.0,
                 max_concurrency: Optional[int] = None):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.cache_dir = cache_dir
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.request_count = 0
        self.cache_hit_count = 0
        self._limiter = threading.Semaphore(max_concurrency) if max_concurrency else None
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)

    # --- cache --------------------------------------------------------------

    def _cache_path(self, key: str) -> str:
        return os.path.join(self.cache_dir, f"{key}.json")

    def _cache_read(self, key: str) -> Optional[str]:
        if not self.cache_dir:
            return None
        path = self._cache_path(key)
        if not os.path.exists(path):
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)["content"]

    def _cache_write(self, key: str, content: str) -> None:
        if not self.cache_dir:
            return
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"content": content}, fh, ensure_ascii=False)
            os.replace(tmp, self._cache_path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # --- transport ----------------------------------------------------------

    def chat_complete(self, request: ChatRequest) -> List[str]:
        """Return sample_count completions, served from cache where possible."""
        results: List[Optional[str]] = []
        missing: List[int] = []
        for ordinal in range(request.sample_count):
            cached = self._cache_read(cache_key(request, ordinal))
            results.append(cached)
            if cached is None:
                missing.append(ordinal)
            else:
                self.cache_hit_count += 1
        if missing:
            fetched = self._fetch(request, len(missing))
            for ordinal, content in zip(missing, fetched):
                self._cache_write(cache_key(request, ordinal), content)
                results[ordinal] = content
        return [r for r in results if r is not None]

    def _fetch(self, request: ChatRequest, count: int) -> List[str]:
        body = {
            "model": request.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "n": count,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Optional[str] = None
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                delay = self.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay * (1.0 + 0.1 * random.random()))
            if self._limiter:
                self._limiter.acquire()
            try:
                self.request_count += 1
                response = requests.post(f"{self.endpoint}/chat/completions",
                                         json=body, headers=headers,
                                         timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = str(exc)
                log.warning("chat request failed (%s), attempt %d", exc, attempt + 1)
                continue
            finally:
                if self._limiter:
                    self._limiter.release()
            if response.status_code in (401, 403):
                raise AuthError(f"authentication failed: HTTP {response.status_code}")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                log.warning("transient HTTP %d, attempt %d", response.status_code, attempt + 1)
                continue
            if response.status_code != 200:
                raise TransportError(f"unexpected HTTP {response.status_code}: {response.text[:200]}")
            try:
                choices = response.json()["choices"]
                contents = [choice["message"]["content"] for choice in choices]
            except (ValueError, KeyError, TypeError) as exc:
                raise TransportError(f"malformed response body: {exc}") from exc
            if len(contents) != count:
                raise TransportError(
                    f"expected {count} completions, got {len(contents)}")
            return contents
        raise TransportError(f"retry budget exhausted: {last_error}")


@dataclass
class LLMOracle(OracleInterface):
    """Oracle backed by a chat LLM using the persuasion prompt templates."""

    client: LLMClient
    model: str
    task: P4GTask = field(default_factory=P4GTask.default)
    gen_temperature: float = 1.0
    max_tokens: int = 256
    parse_retries: int = 3

    def _complete(self, messages, temperature: float, count: int) -> List[str]:
        request = ChatRequest.from_messages(
            self.model, messages, temperature=temperature,
            sample_count=count, max_tokens=self.max_tokens)
        return self.client.chat_complete(request)

    def generate_system_utterance(self, history: DialogueHistory, act_id: int,
                                  rng: random.Random) -> str:
        space = self.task.action_space()
        messages = self.task.render_system_prompt(history, space[act_id])
        text = self._complete(messages, self.gen_temperature, 1)[0]
        return _strip_speaker(text) or text.strip()

    def generate_user_turn(self, history: DialogueHistory,
                           rng: random.Random) -> Tuple[ReactionLabel, str]:
        if not history.ends_with(Speaker.SYSTEM):
            raise ValueError("history must end with a system turn")
        messages = self.task.render_user_sim_prompt(history)
        text = ""
        for attempt in range(self.parse_retries + 1):
            # request one more sample each retry so the disk cache does not
            # replay the same unparseable completion
            text = self._complete(messages, self.gen_temperature, attempt + 1)[attempt]
            parsed = parse_bracketed_label(text)
            if parsed is not None:
                label = match_reaction_label(parsed[0])
                if label is not None:
                    return label, parsed[1]
            log.warning("unparseable user simulation %r (attempt %d)", text[:80], attempt + 1)
        log.warning("user simulation label parsing exhausted; substituting neutral")
        return ReactionLabel.NEUTRAL, _strip_speaker(text)

    def sample_prior_acts(self, history: DialogueHistory, m: int, temp: float,
                          rng: random.Random) -> List[int]:
        if m < 1:
            raise ValueError("m must be at least 1")
        space = self.task.action_space()
        messages = self.task.render_prior_prompt(history)
        acts: List[int] = []
        for text in self._complete(messages, temp, m):
            parsed = parse_bracketed_label(text)
            if parsed is None:
                log.warning("dropping unparseable prior sample %r", text[:80])
                continue
            act_id = match_act(space, parsed[0])
            if act_id is None:
                log.warning("dropping unknown act name %r", parsed[0])
                continue
            acts.append(act_id)
        return acts

    def sample_value_labels(self, history: DialogueHistory, l: int, temp: float,
                            rng: random.Random) -> List[ReactionLabel]:
        if l < 1:
            raise ValueError("l must be at least 1")
        if not history.ends_with(Speaker.USER):
            raise ValueError("history must end with a user turn")
        messages = self.task.render_value_prompt(history)
        labels = self._parse_labels(self._complete(messages, temp, l))
        requested = l
        budget = self.parse_retries
        while len(labels) < l and budget > 0:
            # extend the sample count so retries draw fresh ordinals
            requested += l - len(labels)
            texts = self._complete(messages, temp, requested)[requested - (l - len(labels)):]
            labels += self._parse_labels(texts)
            budget -= 1
        if len(labels) < l:
            log.warning("value label parsing exhausted; padding with neutral")
            labels += [ReactionLabel.NEUTRAL] * (l - len(labels))
        return labels[:l]

    def _parse_labels(self, texts: List[str]) -> List[ReactionLabel]:
        labels = []
        for text in texts:
            parsed = parse_bracketed_label(text)
            label = match_reaction_label(parsed[0]) if parsed else None
            if label is None:
                # some samples emit the bare label without brackets
                label = match_reaction_label(text)
            if label is not None:
                labels.append(label)
            else:
                log.warning("unparseable value sample %r", text[:80])
        return labels

    def label_user_text(self, history: DialogueHistory, text: str) -> ReactionLabel:
        """Label a live (human) user utterance by prompting the user simulator."""
        messages = self.task.render_user_sim_prompt(history)
        messages.append({
            "role": "user",
            "content": ("The Persuadee actually responded: " + text +
                        "\nRepeat this response with its action label in brackets."),
        })
        for attempt in range(self.parse_retries + 1):
            reply = self._complete(messages, self.gen_temperature, attempt + 1)[attempt]
            parsed = parse_bracketed_label(reply)
            if parsed is not None:
                label = match_reaction_label(parsed[0])
                if label is not None:
                    return label
        log.warning("could not label user text; defaulting to neutral")
        return ReactionLabel.NEUTRAL


def _strip_speaker(text: str) -> str:
    text = text.strip()
    for prefix in ("Persuader:", "Persuadee:"):
        if text.startswith(prefix):
            return text[len(prefix):].strip()
    return text
